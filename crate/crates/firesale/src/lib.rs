//! Fire-sale liquidation and repo-haircut clearing for a network of banks.
//!
//! Each bank must cover a cash shortfall by selling shares of one illiquid
//! asset, borrowing against the remainder in a collateralized repo, or both.
//! Sale prices come from an order-book density under one of two mechanisms
//! (a common volume-weighted average price, or a limit-order-book rule in
//! which smaller orders finish earlier and obtain better prices); collateral
//! values come from a haircut curve. Both decline with total liquidations,
//! so every bank's optimum depends on everyone else's sales: clearing means
//! a Nash equilibrium of liquidations whose implied haircut and prices
//! reproduce themselves.
//!
//! The crate provides:
//!
//! - [`model`]: domain types, the built-in curve families, and validators
//!   for the model's standing assumptions, per-bank solvency, and the
//!   sufficient uniqueness condition;
//! - [`pricing`]: VWAP and limit-order-book inverse demand plus the haircut;
//! - [`equilibrium`]: per-bank best responses and the unique inner Nash
//!   equilibrium at fixed prices;
//! - [`clearing`]: the outer fixed-point iteration producing maximal or
//!   minimal clearing solutions, with a brute-force Nash certificate;
//! - [`analytics`]: closed-form symmetric solutions, interest-rate
//!   sensitivities, and rate-sweep experiments;
//! - [`appshell`]: scenario files, balance-sheet calibration, CSV output,
//!   and the command-line interface.
//!
//! ```
//! use firesale::clearing::{picard_clearing, total_outcomes, ClearingConfig};
//! use firesale::model::{BankAccount, DensityCurve, HaircutCurve, MarketScenario, Mechanism};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let scenario = MarketScenario::new(
//!     vec![
//!         BankAccount::new("b1", 1.0, 0.3)?,
//!         BankAccount::new("b2", 2.0, 1.2)?,
//!     ],
//!     0.01,
//!     DensityCurve::linear(0.05, 3.0)?,
//!     HaircutCurve::linear(0.5, 0.05, 3.0)?,
//! )?;
//! let report = picard_clearing(&scenario, &ClearingConfig::maximal(Mechanism::Lob))?;
//! assert!(report.converged);
//! let outcomes = total_outcomes(&report);
//! assert!(outcomes.total_liquidation > 0.0 && report.prices.q() < 0.5);
//! # Ok(())
//! # }
//! ```

pub mod analytics;
pub mod appshell;
pub mod clearing;
pub mod equilibrium;
pub mod model;
pub mod pricing;

pub use model::{
    BankAccount, DensityCurve, Direction, EquilibriumReport, HaircutCurve, LiquidationVector,
    MarketScenario, Mechanism, PriceState, Regime,
};
