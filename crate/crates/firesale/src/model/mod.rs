//! Domain types for the fire-sale clearing model.
//!
//! A scenario is a set of banks, each holding shares of one illiquid asset
//! and facing a cash shortfall it must cover by selling shares, borrowing
//! against them in a collateralized repo, or both. Sale prices come from an
//! order-book density curve, collateral values from a haircut curve; both
//! decline with total liquidations. All types are immutable value objects
//! after construction and safe to share across threads.

mod curves;
mod validate;

pub use curves::{DensityCurve, HaircutCurve};
pub use validate::{
    fundamental_solvency, uniqueness_condition, validate_scenario, Finding, UniquenessCheck,
    ValidationReport,
};

use std::error::Error;
use std::fmt;

/// Errors from constructing or validating domain values.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InvalidBank { id: String, detail: String },
    InvalidCurve { detail: String },
    InvalidScenario { detail: String },
    InvalidPriceState { detail: String },
    InfeasibleLiquidation { bank: usize, value: f64, upper: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidBank { id, detail } => write!(f, "invalid bank '{id}': {detail}"),
            Self::InvalidCurve { detail } => write!(f, "invalid curve: {detail}"),
            Self::InvalidScenario { detail } => write!(f, "invalid scenario: {detail}"),
            Self::InvalidPriceState { detail } => write!(f, "invalid price state: {detail}"),
            Self::InfeasibleLiquidation { bank, value, upper } => write!(
                f,
                "liquidation {value} for bank #{bank} outside [0, {upper}]"
            ),
        }
    }
}

impl Error for ModelError {}

/// Pricing mechanism for asset sales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    /// Every seller receives the volume-weighted average price of the total.
    Vwap,
    /// Sellers consume the limit order book at equal speed; smaller orders
    /// finish earlier and receive better average prices.
    Lob,
}

impl Mechanism {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "vwap" => Some(Self::Vwap),
            "lob" => Some(Self::Lob),
            _ => None,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Vwap => write!(f, "vwap"),
            Self::Lob => write!(f, "lob"),
        }
    }
}

/// Which extremal clearing solution the outer iteration targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximal,
    Minimal,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Maximal => write!(f, "maximal"),
            Self::Minimal => write!(f, "minimal"),
        }
    }
}

/// Active branch of a bank's constrained best response at a clearing point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Forced full liquidation: the shortfall exceeds the value of all holdings.
    Insolvent,
    /// Liquidation-only: sells exactly enough to cover the shortfall.
    UpperBound,
    /// Maximal borrowing: sells the least the collateral constraint allows.
    LowerBound,
    /// Interior optimum of the sale-versus-borrow tradeoff.
    Interior,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Insolvent => write!(f, "I_a"),
            Self::UpperBound => write!(f, "I_U"),
            Self::LowerBound => write!(f, "I_L"),
            Self::Interior => write!(f, "I_0"),
        }
    }
}

/// One bank: shares held and the cash shortfall it must cover.
#[derive(Debug, Clone, PartialEq)]
pub struct BankAccount {
    id: String,
    assets: f64,
    shortfall: f64,
}

impl BankAccount {
    /// Both `assets` and `shortfall` must be strictly positive: banks without
    /// either never participate in a fire sale or the repo market.
    pub fn new(id: impl Into<String>, assets: f64, shortfall: f64) -> Result<Self, ModelError> {
        let id = id.into();
        if !assets.is_finite() || assets <= 0.0 {
            return Err(ModelError::InvalidBank {
                id,
                detail: format!("assets must be strictly positive, got {assets}"),
            });
        }
        if !shortfall.is_finite() || shortfall <= 0.0 {
            return Err(ModelError::InvalidBank {
                id,
                detail: format!("shortfall must be strictly positive, got {shortfall}"),
            });
        }
        Ok(Self {
            id,
            assets,
            shortfall,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn assets(&self) -> f64 {
        self.assets
    }

    pub fn shortfall(&self) -> f64 {
        self.shortfall
    }
}

/// A full problem instance: banks, repo rate, pricing curves, and market cap.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketScenario {
    banks: Vec<BankAccount>,
    repo_rate: f64,
    density: DensityCurve,
    haircut: HaircutCurve,
    market_cap: f64,
}

impl MarketScenario {
    /// The market cap is taken from the curve domains, which must agree.
    /// `market_cap >= total assets` is a validator finding, not a hard error.
    pub fn new(
        banks: Vec<BankAccount>,
        repo_rate: f64,
        density: DensityCurve,
        haircut: HaircutCurve,
    ) -> Result<Self, ModelError> {
        if banks.is_empty() {
            return Err(ModelError::InvalidScenario {
                detail: "at least one bank required".into(),
            });
        }
        if !repo_rate.is_finite() || repo_rate < 0.0 {
            return Err(ModelError::InvalidScenario {
                detail: format!("repo rate must be nonnegative, got {repo_rate}"),
            });
        }
        if density.cap() != haircut.cap() {
            return Err(ModelError::InvalidScenario {
                detail: format!(
                    "curve domains disagree: density cap {} vs haircut cap {}",
                    density.cap(),
                    haircut.cap()
                ),
            });
        }
        let market_cap = density.cap();
        Ok(Self {
            banks,
            repo_rate,
            density,
            haircut,
            market_cap,
        })
    }

    pub fn banks(&self) -> &[BankAccount] {
        &self.banks
    }

    pub fn bank(&self, i: usize) -> &BankAccount {
        &self.banks[i]
    }

    pub fn n(&self) -> usize {
        self.banks.len()
    }

    pub fn repo_rate(&self) -> f64 {
        self.repo_rate
    }

    pub fn density(&self) -> &DensityCurve {
        &self.density
    }

    pub fn haircut(&self) -> &HaircutCurve {
        &self.haircut
    }

    pub fn market_cap(&self) -> f64 {
        self.market_cap
    }

    pub fn total_assets(&self) -> f64 {
        self.banks.iter().map(|b| b.assets).sum()
    }

    /// Same scenario under a different repo rate (used by rate sweeps).
    pub fn with_rate(&self, repo_rate: f64) -> Result<Self, ModelError> {
        Self::new(
            self.banks.clone(),
            repo_rate,
            self.density.clone(),
            self.haircut.clone(),
        )
    }
}

/// A haircut `q` and per-bank prices `qbar`, the outer fixed-point variable.
/// Membership requires `0 < q < qbar_i <= 1` for every bank.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceState {
    q: f64,
    qbar: Vec<f64>,
}

impl PriceState {
    pub fn new(q: f64, qbar: Vec<f64>) -> Result<Self, ModelError> {
        if qbar.is_empty() {
            return Err(ModelError::InvalidPriceState {
                detail: "price vector is empty".into(),
            });
        }
        if !q.is_finite() || q <= 0.0 || q > 1.0 {
            return Err(ModelError::InvalidPriceState {
                detail: format!("haircut q must lie in (0, 1], got {q}"),
            });
        }
        for (i, &p) in qbar.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 || p > 1.0 {
                return Err(ModelError::InvalidPriceState {
                    detail: format!("price qbar[{i}] must lie in (0, 1], got {p}"),
                });
            }
            if q >= p {
                return Err(ModelError::InvalidPriceState {
                    detail: format!("haircut q={q} must stay below qbar[{i}]={p}"),
                });
            }
        }
        Ok(Self { q, qbar })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn qbar(&self) -> &[f64] {
        &self.qbar
    }

    pub fn n(&self) -> usize {
        self.qbar.len()
    }

    /// Sup-norm distance to another price state of the same dimension.
    pub fn distance(&self, other: &PriceState) -> f64 {
        let mut d = (self.q - other.q).abs();
        for (a, b) in self.qbar.iter().zip(other.qbar.iter()) {
            d = d.max((a - b).abs());
        }
        d
    }

    /// Componentwise `self <= other + tol`.
    pub fn le_within(&self, other: &PriceState, tol: f64) -> bool {
        self.q <= other.q + tol
            && self
                .qbar
                .iter()
                .zip(other.qbar.iter())
                .all(|(a, b)| *a <= *b + tol)
    }
}

/// Per-bank sale quantities, boxed into `[0, assets_i]` (no short selling).
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidationVector {
    s: Vec<f64>,
}

impl LiquidationVector {
    /// Values within `1e-9 * (1 + assets)` of the box are clamped onto it;
    /// anything further out is rejected.
    pub fn new(s: Vec<f64>, scenario: &MarketScenario) -> Result<Self, ModelError> {
        if s.len() != scenario.n() {
            return Err(ModelError::InvalidScenario {
                detail: format!(
                    "liquidation vector length {} does not match {} banks",
                    s.len(),
                    scenario.n()
                ),
            });
        }
        let mut out = Vec::with_capacity(s.len());
        for (i, &v) in s.iter().enumerate() {
            let a = scenario.bank(i).assets();
            let slack = 1e-9 * (1.0 + a);
            if !v.is_finite() || v < -slack || v > a + slack {
                return Err(ModelError::InfeasibleLiquidation {
                    bank: i,
                    value: v,
                    upper: a,
                });
            }
            out.push(v.clamp(0.0, a));
        }
        Ok(Self { s: out })
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn total(&self) -> f64 {
        self.s.iter().sum()
    }
}

/// A converged clearing solution with diagnostics.
///
/// Prices are the exact image of the liquidations under the price maps, so
/// `q = g(total)` and `qbar_i = fbar_i(s)` hold by construction; the
/// liquidations solve the inner game at these prices up to the outer
/// tolerance. Borrowing is nonnegative for every bank and covered by
/// collateral (`b_i <= (a_i - s_i) q`) for every solvent bank.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub liquidations: LiquidationVector,
    pub prices: PriceState,
    /// Cash borrowed per bank: `h_i - s_i * qbar_i`.
    pub borrowing: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub iterations: usize,
    pub converged: bool,
    pub direction: Direction,
    pub mechanism: Mechanism,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curves(alpha: f64, gamma: f64, cap: f64) -> (DensityCurve, HaircutCurve) {
        (
            DensityCurve::linear(alpha, cap).unwrap(),
            HaircutCurve::linear(gamma, alpha, cap).unwrap(),
        )
    }

    #[test]
    fn bank_requires_positive_fields() {
        assert!(BankAccount::new("b", 1.0, 0.5).is_ok());
        assert!(BankAccount::new("b", 0.0, 0.5).is_err());
        assert!(BankAccount::new("b", 1.0, 0.0).is_err());
        assert!(BankAccount::new("b", 1.0, f64::NAN).is_err());
    }

    #[test]
    fn scenario_rejects_empty_and_mismatched() {
        let (f, g) = curves(0.1, 0.7, 5.0);
        assert!(MarketScenario::new(vec![], 0.0, f.clone(), g.clone()).is_err());
        let banks = vec![BankAccount::new("b1", 1.0, 0.5).unwrap()];
        assert!(MarketScenario::new(banks.clone(), -0.1, f.clone(), g.clone()).is_err());
        let g_other = HaircutCurve::linear(0.7, 0.1, 4.0).unwrap();
        assert!(MarketScenario::new(banks, 0.0, f, g_other).is_err());
    }

    #[test]
    fn price_state_enforces_strict_order() {
        assert!(PriceState::new(0.5, vec![0.9, 0.8]).is_ok());
        assert!(PriceState::new(0.9, vec![0.9]).is_err());
        assert!(PriceState::new(0.0, vec![0.5]).is_err());
        assert!(PriceState::new(0.5, vec![1.1]).is_err());
    }

    #[test]
    fn liquidation_box_clamps_dust_and_rejects_violations() {
        let (f, g) = curves(0.1, 0.7, 5.0);
        let banks = vec![
            BankAccount::new("b1", 1.0, 0.5).unwrap(),
            BankAccount::new("b2", 2.0, 0.5).unwrap(),
        ];
        let sc = MarketScenario::new(banks, 0.0, f, g).unwrap();
        let v = LiquidationVector::new(vec![1.0 + 1e-12, -1e-12], &sc).unwrap();
        assert_eq!(v.values(), &[1.0, 0.0]);
        assert!(LiquidationVector::new(vec![1.5, 0.0], &sc).is_err());
        assert!(LiquidationVector::new(vec![1.0], &sc).is_err());
    }
}
