//! Per-bank best responses and the inner Nash equilibrium at fixed prices.
//!
//! With the haircut `q` and prices `qbar` frozen, each solvent bank picks
//! sales in the interval between a collateral floor `(h - a q)/(qbar - q)`
//! (borrow as much as the remaining shares secure) and a liquidation cap
//! `h / qbar` (sell no more than the shortfall requires), minimizing
//! `s (1 - fbar) + r (h - s fbar)`. The objective is convex, so the optimum
//! is the first-order-condition point clamped to those bounds; an insolvent
//! bank (`h >= a * qbar`) is forced to sell everything. The game has a
//! unique equilibrium at any admissible price state, computed here without
//! iteration over strategy profiles: VWAP reduces to a scalar fixed point in
//! the aggregate sale, and the LOB reduces to one monotone piecewise-linear
//! equation for the shared interior sale level.

use std::error::Error;
use std::fmt;

use crate::model::{
    BankAccount, LiquidationVector, MarketScenario, Mechanism, ModelError, PriceState, Regime,
};
use crate::pricing::{book_depth_at, vwap_price, vwap_price_slope, PricingError};

/// Sup-norm tolerance on the best-response residual of an inner solution.
pub const INNER_TOLERANCE: f64 = 1e-12;
/// Iteration cap for the fallback best-response iteration.
pub const INNER_ITERATION_CAP: usize = 10_000;
/// Absolute slack when classifying which branch of the response is active.
const CLASSIFY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum EquilibriumError {
    /// Price state incompatible with the scenario (wrong dimension).
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// The iterative fallback failed to reach the residual tolerance.
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },
    Pricing(PricingError),
    Model(ModelError),
}

impl fmt::Display for EquilibriumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { expected, got } => {
                write!(f, "price state has {got} banks, scenario has {expected}")
            }
            Self::NoConvergence { iterations, residual, .. } => write!(
                f,
                "inner equilibrium not converged after {iterations} iterations (residual {residual:e})"
            ),
            Self::Pricing(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl Error for EquilibriumError {}

impl From<PricingError> for EquilibriumError {
    fn from(e: PricingError) -> Self {
        Self::Pricing(e)
    }
}

impl From<ModelError> for EquilibriumError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

/// Feasible sale interval of one bank at fixed prices.
#[derive(Debug, Clone, Copy)]
pub struct ResponseBounds {
    /// Collateral floor `max(0, (h - a q)/(qbar - q))`.
    pub lower: f64,
    /// Liquidation cap `h / qbar`; at most `a` whenever the bank is solvent.
    pub upper: f64,
    /// `h >= a * qbar`: covering the shortfall requires selling everything.
    pub insolvent: bool,
}

impl ResponseBounds {
    pub fn new(bank: &BankAccount, q: f64, qbar_i: f64) -> Self {
        let a = bank.assets();
        let h = bank.shortfall();
        let insolvent = h >= a * qbar_i;
        let lower = ((h - a * q) / (qbar_i - q)).max(0.0);
        let upper = h / qbar_i;
        Self {
            lower,
            upper,
            insolvent,
        }
    }

    /// Bounds intersected with the no-short-selling box `[0, a]`.
    fn boxed(&self, a: f64) -> (f64, f64) {
        let upper = self.upper.min(a);
        let lower = self.lower.min(upper);
        (lower, upper)
    }
}

fn check_dimensions(
    prices: &PriceState,
    scenario: &MarketScenario,
) -> Result<(), EquilibriumError> {
    if prices.n() != scenario.n() {
        return Err(EquilibriumError::DimensionMismatch {
            expected: scenario.n(),
            got: prices.n(),
        });
    }
    Ok(())
}

/// Derivative of bank `i`'s objective in its own sale `x`, others fixed.
/// Nondecreasing in `x` for both mechanisms, so a sign change brackets the
/// interior optimum.
fn objective_slope(x: f64, others: &[f64], scenario: &MarketScenario, mechanism: Mechanism) -> f64 {
    let r = scenario.repo_rate();
    let density = scenario.density();
    match mechanism {
        Mechanism::Vwap => {
            let total = x + others.iter().sum::<f64>();
            let avg = vwap_price(total.min(density.cap()), density).unwrap_or(0.0);
            let slope = vwap_price_slope(total, density);
            1.0 - (1.0 + r) * (avg + x * slope)
        }
        Mechanism::Lob => {
            let depth = book_depth_at(x, others, None).min(density.cap());
            1.0 - (1.0 + r) * density.value(depth)
        }
    }
}

/// Optimal sale of bank `i` against the other banks' liquidations at fixed
/// prices: `a_i` when insolvent, otherwise the convex objective's minimizer
/// over `[lower, upper]`.
pub fn best_response(
    i: usize,
    s_minus: &[f64],
    prices: &PriceState,
    scenario: &MarketScenario,
    mechanism: Mechanism,
) -> Result<f64, EquilibriumError> {
    check_dimensions(prices, scenario)?;
    if s_minus.len() + 1 != scenario.n() {
        return Err(EquilibriumError::DimensionMismatch {
            expected: scenario.n(),
            got: s_minus.len() + 1,
        });
    }
    let bank = scenario.bank(i);
    let bounds = ResponseBounds::new(bank, prices.q(), prices.qbar()[i]);
    if bounds.insolvent {
        return Ok(bank.assets());
    }
    let (lower, upper) = bounds.boxed(bank.assets());
    if upper - lower <= 0.0 {
        return Ok(lower);
    }
    if objective_slope(lower, s_minus, scenario, mechanism) >= 0.0 {
        return Ok(lower);
    }
    if objective_slope(upper, s_minus, scenario, mechanism) <= 0.0 {
        return Ok(upper);
    }
    // Interior optimum: bisect the monotone slope.
    let mut lo = lower;
    let mut hi = upper;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
            break;
        }
        if objective_slope(mid, s_minus, scenario, mechanism) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Unclamped interior VWAP sale candidate implied by the first-order
/// condition at an aggregate sale `total`; shared by every bank because the
/// average price depends only on the total. Negative when selling the first
/// share already loses money, infinite when selling stays profitable
/// throughout the book.
pub(crate) fn vwap_interior_raw(total: f64, scenario: &MarketScenario) -> f64 {
    let density = scenario.density();
    let r = scenario.repo_rate();
    let avg = vwap_price(total.min(density.cap()), density).unwrap_or(0.0);
    let slope = vwap_price_slope(total, density);
    if slope >= -1e-300 {
        return if 1.0 - (1.0 + r) * avg >= 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    (1.0 / (1.0 + r) - avg) / slope
}

fn vwap_interior_candidate(total: f64, scenario: &MarketScenario) -> f64 {
    vwap_interior_raw(total, scenario).max(0.0)
}

struct BankBox {
    lower: f64,
    upper: f64,
    assets: f64,
    insolvent: bool,
}

impl BankBox {
    fn clamp(&self, candidate: f64) -> f64 {
        if self.insolvent {
            self.assets
        } else {
            candidate.clamp(self.lower, self.upper)
        }
    }
}

fn bank_boxes(prices: &PriceState, scenario: &MarketScenario) -> Vec<BankBox> {
    scenario
        .banks()
        .iter()
        .zip(prices.qbar())
        .map(|(bank, &qbar_i)| {
            let b = ResponseBounds::new(bank, prices.q(), qbar_i);
            let (lower, upper) = b.boxed(bank.assets());
            BankBox {
                lower,
                upper,
                assets: bank.assets(),
                insolvent: b.insolvent,
            }
        })
        .collect()
}

/// First-order-condition sale level shared by every unconstrained bank.
///
/// Under VWAP the level is the root of the marginal-proceeds condition at a
/// given aggregate sale (every bank sees the same pooled average, so the
/// root is common); under the LOB rule it is the sale size whose finish
/// depth hits the point where the marginal book price equals `1/(1+r)`.
/// Clamped below at zero when selling the first share already loses money,
/// infinite when selling stays profitable through the whole book.
#[derive(Debug, Clone, Copy)]
pub struct InteriorTarget {
    pub mechanism: Mechanism,
    pub level: f64,
    /// Book depth at which the level executes (LOB only).
    pub target_depth: Option<f64>,
}

impl InteriorTarget {
    /// VWAP candidate at a fixed aggregate sale `total`.
    pub fn vwap_at_total(total: f64, scenario: &MarketScenario) -> Self {
        Self {
            mechanism: Mechanism::Vwap,
            level: vwap_interior_candidate(total, scenario),
            target_depth: None,
        }
    }

    /// LOB shared level at fixed prices, accounting for the bounded banks'
    /// contribution to the book depth.
    pub fn lob_at_prices(prices: &PriceState, scenario: &MarketScenario) -> Self {
        let caps: Vec<f64> = bank_boxes(prices, scenario)
            .iter()
            .map(|b| if b.insolvent { b.assets } else { b.upper })
            .collect();
        Self {
            mechanism: Mechanism::Lob,
            level: lob_shared_level(&caps, scenario),
            target_depth: scenario
                .density()
                .inverse(1.0 / (1.0 + scenario.repo_rate())),
        }
    }
}

/// Unique inner Nash equilibrium of the price-parametrized game.
///
/// VWAP route: the equilibrium aggregate solves `Phi(S) = S` where `Phi`
/// sums the per-bank clamps of the shared interior candidate at total `S`;
/// `Phi - id` is strictly decreasing, solved by damped iteration with a
/// bisection fallback. LOB route: interior banks share one sale level whose
/// finish depth must hit the level where the marginal price equals
/// `1/(1+r)`; the depth is monotone piecewise-linear in that level, solved
/// exactly by walking the sorted caps. Both routes finish with a
/// best-response residual check and fall back to damped iteration if it
/// fails.
pub fn inner_equilibrium(
    prices: &PriceState,
    scenario: &MarketScenario,
    mechanism: Mechanism,
) -> Result<LiquidationVector, EquilibriumError> {
    check_dimensions(prices, scenario)?;
    let boxes = bank_boxes(prices, scenario);
    let s = match mechanism {
        Mechanism::Vwap => vwap_inner(&boxes, scenario),
        Mechanism::Lob => lob_inner(&boxes, scenario),
    };

    let residual = response_residual(&s, prices, scenario, mechanism)?;
    if residual <= INNER_TOLERANCE {
        return Ok(LiquidationVector::new(s, scenario)?);
    }
    // Degenerate curves (flat or non-monotone segments) can defeat the
    // direct routes; polish with the damped iteration.
    let (s, _, residual) = best_response_iteration(
        &s,
        prices,
        scenario,
        mechanism,
        INNER_TOLERANCE,
        INNER_ITERATION_CAP,
    )?;
    if residual <= INNER_TOLERANCE {
        Ok(LiquidationVector::new(s, scenario)?)
    } else {
        Err(EquilibriumError::NoConvergence {
            iterations: INNER_ITERATION_CAP,
            residual,
            last: s,
        })
    }
}

fn vwap_inner(boxes: &[BankBox], scenario: &MarketScenario) -> Vec<f64> {
    let aggregate = |total: f64| -> f64 {
        let candidate = vwap_interior_candidate(total, scenario);
        boxes.iter().map(|b| b.clamp(candidate)).sum()
    };
    let total_assets: f64 = boxes.iter().map(|b| b.assets).sum();

    // Damped iteration on S; the step factor keeps the linear-density
    // worst case (aggregate slope down to -n) contractive.
    let n = boxes.len() as f64;
    let theta = 1.0 / (n + 1.0);
    let tol = 1e-14 * (1.0 + total_assets);
    let mut total = aggregate(0.0).clamp(0.0, total_assets);
    let mut solved = false;
    for _ in 0..200 {
        let next = total + theta * (aggregate(total) - total);
        let next = next.clamp(0.0, total_assets);
        if (next - total).abs() <= tol * theta {
            total = next;
            solved = (aggregate(total) - total).abs() <= 10.0 * tol;
            break;
        }
        total = next;
    }
    if !solved {
        // Bisection on the strictly decreasing Phi(S) - S.
        let mut lo = 0.0;
        let mut hi = total_assets;
        if aggregate(lo) - lo <= 0.0 {
            hi = lo;
        }
        for _ in 0..200 {
            if hi - lo <= f64::EPSILON * (1.0 + hi) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if aggregate(mid) - mid >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        total = 0.5 * (lo + hi);
    }

    let candidate = vwap_interior_candidate(total, scenario);
    boxes.iter().map(|b| b.clamp(candidate)).collect()
}

fn lob_inner(boxes: &[BankBox], scenario: &MarketScenario) -> Vec<f64> {
    let boxes_caps: Vec<f64> = boxes
        .iter()
        .map(|b| if b.insolvent { b.assets } else { b.upper })
        .collect();
    let shared = lob_shared_level(&boxes_caps, scenario);
    boxes.iter().map(|b| b.clamp(shared)).collect()
}

/// Sale level shared by every interior bank under the LOB rule: the point
/// where the depth consumed when those banks finish reaches the level at
/// which the marginal price equals `1/(1+r)`. Zero when selling is
/// unprofitable from the first share, infinite when the whole book clears
/// above that price.
pub(crate) fn lob_shared_level(caps: &[f64], scenario: &MarketScenario) -> f64 {
    let density = scenario.density();
    let r = scenario.repo_rate();
    let inv = 1.0 / (1.0 + r);
    let cap_sum: f64 = caps.iter().sum();

    if inv >= density.value(0.0) {
        // Marginal sales lose money from the first share: bounds only.
        0.0
    } else {
        match density.inverse(inv) {
            None => f64::INFINITY, // book never gets that cheap: sell the cap
            Some(target_depth) => {
                if target_depth >= cap_sum {
                    f64::INFINITY
                } else {
                    // Solve sum_j min(x, cap_j) = target_depth by walking the
                    // sorted caps; the left side strictly increases in x.
                    let mut sorted = caps.to_vec();
                    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let n = sorted.len();
                    let mut below = 0.0;
                    let mut level = 0.0;
                    for (k, &c) in sorted.iter().enumerate() {
                        let active = (n - k) as f64;
                        let depth_at_cap = below + active * c;
                        if depth_at_cap >= target_depth {
                            level = (target_depth - below) / active;
                            break;
                        }
                        below += c;
                        level = c;
                    }
                    level
                }
            }
        }
    }
}

/// Sup-norm distance between a profile and its best-response image.
pub fn response_residual(
    s: &[f64],
    prices: &PriceState,
    scenario: &MarketScenario,
    mechanism: Mechanism,
) -> Result<f64, EquilibriumError> {
    let mut residual = 0.0f64;
    for i in 0..scenario.n() {
        let others: Vec<f64> = s
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &v)| v)
            .collect();
        let br = best_response(i, &others, prices, scenario, mechanism)?;
        residual = residual.max((br - s[i]).abs());
    }
    Ok(residual)
}

/// Damped simultaneous best-response iteration from a given profile.
///
/// Returns the final profile, the number of sweeps, and the last residual.
/// Per-bank responses within a sweep are independent (evaluated against the
/// previous profile) and updated in ascending bank order.
pub fn best_response_iteration(
    start: &[f64],
    prices: &PriceState,
    scenario: &MarketScenario,
    mechanism: Mechanism,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize, f64), EquilibriumError> {
    check_dimensions(prices, scenario)?;
    let n = scenario.n();
    let theta = 2.0 / (n as f64 + 1.0);
    let mut s: Vec<f64> = start.to_vec();
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_iterations {
        let mut next = vec![0.0; n];
        residual = 0.0;
        for i in 0..n {
            let others: Vec<f64> = s
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &v)| v)
                .collect();
            let br = best_response(i, &others, prices, scenario, mechanism)?;
            residual = residual.max((br - s[i]).abs());
            next[i] = (1.0 - theta) * s[i] + theta * br;
        }
        if residual <= tolerance {
            return Ok((s, sweep, residual));
        }
        s = next;
    }
    Ok((s, max_iterations, residual))
}

/// Tags each bank with the active branch of its closed-form response.
/// Branch coincidences resolve with priority insolvent > lower > upper >
/// interior, so a bank at a coincident bound is tagged as bounded. A bank
/// strictly inside its bounds is interior: at an inner equilibrium that is
/// exactly the first-order-condition branch (the grid certificates check
/// this), and on a non-converged iterate it is still the only branch left.
pub fn classify_regimes(
    s: &LiquidationVector,
    prices: &PriceState,
    scenario: &MarketScenario,
    _mechanism: Mechanism,
) -> Vec<Regime> {
    let values = s.values();
    let mut regimes = Vec::with_capacity(scenario.n());
    for (i, bank) in scenario.banks().iter().enumerate() {
        let bounds = ResponseBounds::new(bank, prices.q(), prices.qbar()[i]);
        let tol = CLASSIFY_TOLERANCE * (1.0 + bank.assets());
        let regime = if bounds.insolvent {
            Regime::Insolvent
        } else {
            let (lower, upper) = bounds.boxed(bank.assets());
            if (values[i] - lower).abs() <= tol {
                Regime::LowerBound
            } else if (values[i] - upper).abs() <= tol {
                Regime::UpperBound
            } else {
                Regime::Interior
            }
        };
        regimes.push(regime);
    }
    regimes
}
