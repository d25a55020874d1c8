//! Outer clearing iteration and equilibrium certificates.
//!
//! A clearing solution is a price state that reproduces itself: the inner
//! equilibrium liquidations at `(q, qbar)` must map back to the same haircut
//! and prices. The iteration starts from the extreme attainable prices — the
//! image of zero sales for the maximal solution, the image of full
//! liquidation for the minimal one — and applies the price map until the
//! sup-norm change falls under the tolerance. Starting from the top yields
//! the greatest clearing solution, from the bottom the least; when the
//! uniqueness condition holds the two coincide.

use std::error::Error;
use std::fmt;

use crate::equilibrium::{classify_regimes, inner_equilibrium, EquilibriumError, ResponseBounds};
use crate::model::{
    Direction, EquilibriumReport, LiquidationVector, MarketScenario, Mechanism, ModelError,
    PriceState,
};
use crate::pricing::{haircut_value, mechanism_prices, PricingError};

/// Outer iteration parameters.
#[derive(Debug, Clone, Copy)]
pub struct ClearingConfig {
    pub direction: Direction,
    pub mechanism: Mechanism,
    /// Sup-norm tolerance on the `(q, qbar)` update.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl ClearingConfig {
    pub fn new(direction: Direction, mechanism: Mechanism) -> Self {
        Self {
            direction,
            mechanism,
            tolerance: 1e-12,
            max_iterations: 10_000,
        }
    }

    pub fn maximal(mechanism: Mechanism) -> Self {
        Self::new(Direction::Maximal, mechanism)
    }

    pub fn minimal(mechanism: Mechanism) -> Self {
        Self::new(Direction::Minimal, mechanism)
    }
}

#[derive(Debug)]
pub enum ClearingError {
    Inner(EquilibriumError),
    /// The outer loop hit its iteration cap; the last iterate is attached.
    IterationLimit {
        last: Box<EquilibriumReport>,
    },
    Pricing(PricingError),
    Model(ModelError),
}

impl fmt::Display for ClearingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Inner(e) => write!(f, "inner equilibrium failed: {e}"),
            Self::IterationLimit { last } => write!(
                f,
                "clearing iteration cap reached after {} iterations",
                last.iterations
            ),
            Self::Pricing(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl Error for ClearingError {}

impl From<EquilibriumError> for ClearingError {
    fn from(e: EquilibriumError) -> Self {
        Self::Inner(e)
    }
}

impl From<PricingError> for ClearingError {
    fn from(e: PricingError) -> Self {
        Self::Pricing(e)
    }
}

impl From<ModelError> for ClearingError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

fn price_image(
    s: &[f64],
    scenario: &MarketScenario,
    mechanism: Mechanism,
) -> Result<PriceState, ClearingError> {
    let total: f64 = s.iter().sum();
    let q = haircut_value(total.min(scenario.market_cap()), scenario.haircut())?;
    let qbar = mechanism_prices(s, mechanism, scenario.density())?;
    Ok(PriceState::new(q, qbar)?)
}

fn starting_prices(
    scenario: &MarketScenario,
    config: &ClearingConfig,
) -> Result<PriceState, ClearingError> {
    match config.direction {
        // Image of zero sales: the largest attainable haircut and prices.
        Direction::Maximal => price_image(&vec![0.0; scenario.n()], scenario, config.mechanism),
        // Image of full liquidation: the smallest attainable pair.
        Direction::Minimal => {
            let assets: Vec<f64> = scenario.banks().iter().map(|b| b.assets()).collect();
            price_image(&assets, scenario, config.mechanism)
        }
    }
}

fn build_report(
    s: LiquidationVector,
    prices: PriceState,
    scenario: &MarketScenario,
    config: &ClearingConfig,
    iterations: usize,
    converged: bool,
) -> EquilibriumReport {
    let regimes = classify_regimes(&s, &prices, scenario, config.mechanism);
    let borrowing = scenario
        .banks()
        .iter()
        .zip(s.values().iter().zip(prices.qbar()))
        .map(|(bank, (&si, &qi))| bank.shortfall() - si * qi)
        .collect();
    EquilibriumReport {
        liquidations: s,
        prices,
        borrowing,
        regimes,
        iterations,
        converged,
        direction: config.direction,
        mechanism: config.mechanism,
    }
}

/// Computes the maximal or minimal clearing solution by iterating the price
/// map from the corresponding extreme starting point.
pub fn picard_clearing(
    scenario: &MarketScenario,
    config: &ClearingConfig,
) -> Result<EquilibriumReport, ClearingError> {
    picard_clearing_with_trace(scenario, config).map(|(report, _)| report)
}

/// Same as [`picard_clearing`], also returning every price iterate
/// (starting point included) for monotonicity diagnostics.
pub fn picard_clearing_with_trace(
    scenario: &MarketScenario,
    config: &ClearingConfig,
) -> Result<(EquilibriumReport, Vec<PriceState>), ClearingError> {
    let mut prices = starting_prices(scenario, config)?;
    let mut trace = vec![prices.clone()];
    for iteration in 1..=config.max_iterations {
        let s = inner_equilibrium(&prices, scenario, config.mechanism)?;
        let next = price_image(s.values(), scenario, config.mechanism)?;
        let delta = prices.distance(&next);
        trace.push(next.clone());
        prices = next;
        if delta < config.tolerance {
            let report = build_report(s, prices, scenario, config, iteration, true);
            return Ok((report, trace));
        }
    }
    let s = inner_equilibrium(&prices, scenario, config.mechanism)?;
    let report = build_report(s, prices, scenario, config, config.max_iterations, false);
    Err(ClearingError::IterationLimit {
        last: Box::new(report),
    })
}

/// Aggregate liquidation and borrowing of a clearing solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcomes {
    pub total_liquidation: f64,
    pub total_borrowing: f64,
}

pub fn total_outcomes(report: &EquilibriumReport) -> Outcomes {
    Outcomes {
        total_liquidation: report.liquidations.total(),
        total_borrowing: report.borrowing.iter().sum(),
    }
}

/// Which game the deviation scan certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameForm {
    /// Constraints frozen at the report prices.
    PriceParametrized,
    /// Constraints re-evaluated through the pricing curves at each deviation.
    Original,
}

/// Result of a brute-force unilateral-deviation scan.
#[derive(Debug, Clone)]
pub struct NashCertificate {
    /// Largest objective improvement any bank can reach on the grid;
    /// at most the solver tolerance for a true equilibrium.
    pub max_improvement: f64,
    /// Bank attaining that improvement.
    pub worst_bank: String,
}

/// Scans a grid of unilateral deviations per bank and reports the largest
/// objective improvement found, holding the other banks' liquidations fixed.
pub fn nash_certificate(
    scenario: &MarketScenario,
    report: &EquilibriumReport,
    grid_points: usize,
    game: GameForm,
) -> Result<NashCertificate, ClearingError> {
    let s = report.liquidations.values();
    let r = scenario.repo_rate();
    let grid_points = grid_points.max(2);
    let mut max_improvement = f64::NEG_INFINITY;
    let mut worst_bank = scenario.bank(0).id().to_string();

    for (i, bank) in scenario.banks().iter().enumerate() {
        let objective = |x: f64| -> Result<(f64, f64, f64), ClearingError> {
            let mut profile = s.to_vec();
            profile[i] = x;
            let prices = mechanism_prices(&profile, report.mechanism, scenario.density())?;
            let total: f64 = profile.iter().sum();
            let haircut = haircut_value(total.min(scenario.market_cap()), scenario.haircut())?;
            let value = x * (1.0 - prices[i]) + r * (bank.shortfall() - x * prices[i]);
            Ok((value, prices[i], haircut))
        };

        let (value_at_solution, _, _) = objective(s[i])?;
        let bounds = ResponseBounds::new(bank, report.prices.q(), report.prices.qbar()[i]);

        let (lo, hi) = match game {
            GameForm::PriceParametrized => {
                if bounds.insolvent {
                    // Forced liquidation: no feasible deviation exists.
                    continue;
                }
                let upper = bounds.upper.min(bank.assets());
                (bounds.lower.min(upper), upper)
            }
            GameForm::Original => (0.0, bank.assets()),
        };
        if hi < lo {
            continue;
        }

        let mut best_feasible = value_at_solution;
        for k in 0..grid_points {
            let x = lo + (hi - lo) * k as f64 / (grid_points - 1) as f64;
            let (value, price, haircut) = objective(x)?;
            let feasible = match game {
                GameForm::PriceParametrized => true,
                GameForm::Original => {
                    let slack = 1e-9 * (1.0 + bank.shortfall());
                    let raised = x * price;
                    let covered = raised + (bank.assets() - x) * haircut;
                    raised <= bank.shortfall() + slack && covered >= bank.shortfall() - slack
                }
            };
            if feasible && value < best_feasible {
                best_feasible = value;
            }
        }
        let improvement = value_at_solution - best_feasible;
        if improvement > max_improvement {
            max_improvement = improvement;
            worst_bank = bank.id().to_string();
        }
    }

    if !max_improvement.is_finite() {
        max_improvement = 0.0;
    }
    Ok(NashCertificate {
        max_improvement,
        worst_bank,
    })
}
