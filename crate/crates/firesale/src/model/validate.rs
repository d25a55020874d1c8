//! Scenario validators: standing assumptions on the curves, per-bank
//! fundamental solvency, and the sufficient condition for a unique clearing
//! solution.
//!
//! Malformed inputs (nonpositive holdings, slopes, caps) are construction
//! errors; everything here reports findings instead of failing hard, so a
//! deliberately broken scenario can still be inspected.

use crate::model::{DensityCurve, HaircutCurve, MarketScenario, Mechanism};
use crate::pricing::{lob_price_single, mechanism_prices, vwap_price};

/// Grid resolution for sampled checks along each axis and the diagonal.
const GRID_POINTS: usize = 1001;
/// Float-noise tolerance for strict monotonicity on sampled grids.
const MONOTONE_SLACK: f64 = 1e-10;

/// Outcome of one named validation check.
#[derive(Debug, Clone)]
pub struct Finding {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.findings.iter().all(|f| f.passed)
    }

    pub fn finding(&self, name: &str) -> Option<&Finding> {
        self.findings.iter().find(|f| f.name == name)
    }
}

fn push(findings: &mut Vec<Finding>, name: &'static str, passed: bool, detail: String) {
    findings.push(Finding {
        name,
        passed,
        detail,
    });
}

/// Checks the standing assumptions on a scenario.
///
/// Covered: the density anchors at 1, decreases strictly, and is convex with
/// a positive value at the cap; the haircut curve decreases strictly, is
/// convex, stays positive at the cap, and sits strictly below every sale
/// price (separation); per-bank cash raised plus collateral value is
/// strictly increasing in own sales; and the market cap covers total
/// holdings. Linear families are checked analytically, tabulated ones on
/// their knots and sampled grids.
pub fn validate_scenario(scenario: &MarketScenario) -> ValidationReport {
    let mut findings = Vec::new();
    let density = scenario.density();
    let haircut = scenario.haircut();
    let cap = scenario.market_cap();

    // Density anchor f(0) = 1.
    let f0 = density.value(0.0);
    push(
        &mut findings,
        "density.anchor",
        (f0 - 1.0).abs() <= 1e-12,
        format!("f(0) = {f0}"),
    );

    // Strict decrease of f.
    match density.tabulated_knots() {
        None => push(
            &mut findings,
            "density.decreasing",
            true,
            "linear density with positive slope".into(),
        ),
        Some(knots) => {
            let ok = knots.windows(2).all(|w| w[1].1 < w[0].1);
            push(
                &mut findings,
                "density.decreasing",
                ok,
                if ok {
                    "knot values strictly decreasing".into()
                } else {
                    "knot values are not strictly decreasing".into()
                },
            );
        }
    }

    // Convexity: f' nondecreasing.
    match density.tabulated_knots() {
        None => push(
            &mut findings,
            "density.convex",
            true,
            "linear density".into(),
        ),
        Some(knots) => {
            let slopes: Vec<f64> = knots
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                .collect();
            let ok = slopes.windows(2).all(|w| w[1] >= w[0] - 1e-12);
            push(
                &mut findings,
                "density.convex",
                ok,
                if ok {
                    "segment slopes nondecreasing".into()
                } else {
                    "segment slopes decrease somewhere".into()
                },
            );
        }
    }

    let f_cap = density.value(cap);
    push(
        &mut findings,
        "density.positive_at_cap",
        f_cap > 0.0,
        format!("f(cap) = {f_cap}"),
    );

    // Haircut curve shape.
    match haircut.tabulated_knots() {
        None => push(
            &mut findings,
            "haircut.decreasing",
            true,
            "linear haircut with positive slope".into(),
        ),
        Some(knots) => {
            let ok = knots.windows(2).all(|w| w[1].1 < w[0].1);
            push(
                &mut findings,
                "haircut.decreasing",
                ok,
                if ok {
                    "knot values strictly decreasing".into()
                } else {
                    "knot values are not strictly decreasing".into()
                },
            );
        }
    }
    match haircut.tabulated_knots() {
        None => push(
            &mut findings,
            "haircut.convex",
            true,
            "linear haircut".into(),
        ),
        Some(knots) => {
            let slopes: Vec<f64> = knots
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                .collect();
            let ok = slopes.windows(2).all(|w| w[1] >= w[0] - 1e-12);
            push(
                &mut findings,
                "haircut.convex",
                ok,
                if ok {
                    "segment slopes nondecreasing".into()
                } else {
                    "segment slopes decrease somewhere".into()
                },
            );
        }
    }
    let g_cap = haircut.value(cap);
    push(
        &mut findings,
        "haircut.positive_at_cap",
        g_cap > 0.0,
        format!("g(cap) = {g_cap}"),
    );

    // Separation: min_j price_j(s) - g(total) > 0 over the sale box.
    let (sep, sep_detail) = separation_margin(scenario);
    push(&mut findings, "separation", sep > 0.0, sep_detail);

    // Cash raised + collateral value strictly increasing in own sales.
    let (mono_ok, mono_detail) = cash_monotonicity(scenario);
    push(&mut findings, "cash_monotonicity", mono_ok, mono_detail);

    let total_assets = scenario.total_assets();
    push(
        &mut findings,
        "market_cap",
        cap + 1e-12 * cap.max(1.0) >= total_assets,
        format!("market cap {cap} vs total holdings {total_assets}"),
    );

    ValidationReport { findings }
}

fn both_linear_equal_slopes(density: &DensityCurve, haircut: &HaircutCurve) -> Option<f64> {
    match (density, haircut) {
        (
            DensityCurve::Linear { slope: a, .. },
            HaircutCurve::Linear {
                intercept,
                slope: ag,
                ..
            },
        ) if a == ag => Some(*intercept),
        _ => None,
    }
}

/// Smallest sampled (or analytic) gap between sale prices and the haircut.
///
/// For linear curves with a common slope the infimum over the whole box is
/// `1 - intercept`, attained at zero sales. Otherwise the gap is sampled on
/// the box diagonal and the per-bank axes; on those rays the lowest price
/// under either mechanism is the pooled VWAP of the single positive total,
/// so one evaluation covers both.
fn separation_margin(scenario: &MarketScenario) -> (f64, String) {
    let density = scenario.density();
    let haircut = scenario.haircut();
    if let Some(intercept) = both_linear_equal_slopes(density, haircut) {
        return (
            1.0 - intercept,
            format!("analytic gap 1 - intercept = {}", 1.0 - intercept),
        );
    }

    let assets: Vec<f64> = scenario.banks().iter().map(|b| b.assets()).collect();
    let total_assets: f64 = assets.iter().sum();
    let mut rays: Vec<(f64, String)> = vec![(total_assets, "diagonal".into())];
    for (i, &a) in assets.iter().enumerate() {
        rays.push((a, format!("axis bank {i}")));
    }

    let mut min_gap = f64::INFINITY;
    let mut at = String::new();
    for (reach, label) in rays {
        for k in 0..GRID_POINTS {
            let t = k as f64 / (GRID_POINTS - 1) as f64;
            let total = (t * reach).min(scenario.market_cap());
            let price = vwap_price(total, density).unwrap_or(f64::INFINITY);
            let gap = price - haircut.value(total);
            if gap < min_gap {
                min_gap = gap;
                at = format!("{label} at t={t}");
            }
        }
    }
    (min_gap, format!("sampled min gap {min_gap} ({at})"))
}

/// Sampled check that `s_i * price_i + (a_i - s_i) * g(total)` strictly
/// increases in `s_i`, with the other banks held at a few anchor points.
fn cash_monotonicity(scenario: &MarketScenario) -> (bool, String) {
    let n = scenario.n();
    let density = scenario.density();
    let haircut = scenario.haircut();
    for mechanism in [Mechanism::Vwap, Mechanism::Lob] {
        for i in 0..n {
            let a_i = scenario.bank(i).assets();
            for anchor in [0.0, 0.5, 1.0] {
                let mut others: Vec<f64> = scenario
                    .banks()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| anchor * b.assets())
                    .collect();
                others.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let others_total: f64 = others.iter().sum();
                let mut prev = f64::NEG_INFINITY;
                for k in 0..GRID_POINTS {
                    let t = k as f64 / (GRID_POINTS - 1) as f64;
                    let own = t * a_i;
                    let total = own + others_total;
                    if total > scenario.market_cap() {
                        break;
                    }
                    let price = match mechanism {
                        Mechanism::Vwap => match vwap_price(total, density) {
                            Ok(p) => p,
                            Err(_) => break,
                        },
                        Mechanism::Lob => lob_price_single(own, &others, density),
                    };
                    let value = own * price + (a_i - own) * haircut.value(total);
                    if value <= prev - MONOTONE_SLACK * a_i.max(1.0) {
                        return (
                            false,
                            format!(
                                "bank {i} under {mechanism}: value fell from {prev} to {value} at s_i={own}"
                            ),
                        );
                    }
                    prev = value;
                }
            }
        }
    }
    (true, "strictly increasing on all sampled rays".into())
}

/// One flag per bank: can it cover its shortfall by liquidation alone even
/// at the worst-case prices of a full system liquidation? Equality counts
/// as solvent.
pub fn fundamental_solvency(scenario: &MarketScenario, mechanism: Mechanism) -> Vec<bool> {
    let assets: Vec<f64> = scenario.banks().iter().map(|b| b.assets()).collect();
    let prices = mechanism_prices(&assets, mechanism, scenario.density())
        .unwrap_or_else(|_| vec![scenario.density().value(scenario.market_cap()); assets.len()]);
    scenario
        .banks()
        .iter()
        .zip(prices.iter())
        .map(|(bank, &price)| bank.shortfall() <= bank.assets() * price)
        .collect()
}

/// Result of the sufficient uniqueness check for clearing solutions.
#[derive(Debug, Clone)]
pub struct UniquenessCheck {
    /// True when `lhs < rhs`, which guarantees a unique clearing solution
    /// provided every bank is fundamentally solvent.
    pub holds: bool,
    /// Contraction bound `-c * cap * min(c1 * f'(0), g'(0))` with
    /// `(c, c1) = (3, 1/2)` for VWAP and `(n, n/2)` for LOB.
    pub lhs: f64,
    /// Worst-case gap between sale prices and the haircut over the sale box.
    pub rhs: f64,
    /// False when some bank fails fundamental solvency, in which case the
    /// check is reported with this caveat.
    pub all_fundamentally_solvent: bool,
}

/// Evaluates the sufficient condition for a unique clearing haircut and
/// price set under the given mechanism.
pub fn uniqueness_condition(scenario: &MarketScenario, mechanism: Mechanism) -> UniquenessCheck {
    let n = scenario.n() as f64;
    let (c, c1) = match mechanism {
        Mechanism::Vwap => (3.0, 0.5),
        Mechanism::Lob => (n, n / 2.0),
    };
    let f_prime0 = scenario.density().slope_at(0.0);
    let g_prime0 = scenario.haircut().slope_at(0.0);
    let lhs = -c * scenario.market_cap() * (c1 * f_prime0).min(g_prime0);
    let (rhs, _) = separation_margin(scenario);
    let solvent = fundamental_solvency(scenario, mechanism);
    UniquenessCheck {
        holds: lhs < rhs,
        lhs,
        rhs,
        all_fundamentally_solvent: solvent.iter().all(|&s| s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BankAccount, MarketScenario};

    fn scenario(
        banks: Vec<(f64, f64)>,
        rate: f64,
        alpha: f64,
        gamma: f64,
        gamma_slope: f64,
        cap: f64,
    ) -> MarketScenario {
        let banks = banks
            .into_iter()
            .enumerate()
            .map(|(i, (a, h))| BankAccount::new(format!("b{}", i + 1), a, h).unwrap())
            .collect();
        MarketScenario::new(
            banks,
            rate,
            DensityCurve::linear(alpha, cap).unwrap(),
            HaircutCurve::linear(gamma, gamma_slope, cap).unwrap(),
        )
        .unwrap()
    }

    fn eba_style(n: usize) -> MarketScenario {
        let banks: Vec<(f64, f64)> = (0..n).map(|i| (1.0 + i as f64 * 0.5, 0.05)).collect();
        let m: f64 = banks.iter().map(|b| b.0).sum();
        let alpha = 1.0 / (300.0 * m);
        scenario(banks, 0.01, alpha, 0.7, alpha, m)
    }

    #[test]
    fn eba_configuration_passes_all_checks() {
        let sc = eba_style(4);
        let report = validate_scenario(&sc);
        assert!(report.all_passed(), "{:?}", report.findings);
    }

    #[test]
    fn unit_intercept_fails_separation() {
        let sc = scenario(vec![(1.0, 0.5)], 0.0, 0.1, 1.0, 0.1, 2.0);
        let report = validate_scenario(&sc);
        let sep = report.finding("separation").unwrap();
        assert!(!sep.passed);
    }

    #[test]
    fn nonmonotone_tabulated_density_flagged() {
        let banks = vec![BankAccount::new("b1", 1.0, 0.5).unwrap()];
        let density = DensityCurve::tabulated(vec![(0.0, 1.0), (1.0, 0.9), (2.0, 0.95)]).unwrap();
        let haircut = HaircutCurve::linear(0.5, 0.1, 2.0).unwrap();
        let sc = MarketScenario::new(banks, 0.0, density, haircut).unwrap();
        let report = validate_scenario(&sc);
        assert!(!report.finding("density.decreasing").unwrap().passed);
        assert!(!report.all_passed());
    }

    #[test]
    fn market_cap_shortfall_flagged() {
        let sc = scenario(vec![(2.0, 0.5), (2.0, 0.5)], 0.0, 0.1, 0.7, 0.1, 3.0);
        let report = validate_scenario(&sc);
        assert!(!report.finding("market_cap").unwrap().passed);
    }

    #[test]
    fn solvency_examples() {
        // symmetric pair: common price at full liquidation is 0.9
        let sc = scenario(vec![(1.0, 0.5), (1.0, 0.5)], 0.0, 0.1, 0.7, 0.1, 2.0);
        assert_eq!(fundamental_solvency(&sc, Mechanism::Vwap), vec![true, true]);

        // boundary equality counts as solvent
        let sc = scenario(vec![(1.0, 0.9), (1.0, 0.9)], 0.0, 0.1, 0.7, 0.1, 2.0);
        assert_eq!(fundamental_solvency(&sc, Mechanism::Vwap), vec![true, true]);

        // full liquidation proceeds below the shortfall: insolvent pair
        let sc = scenario(vec![(1.0, 0.6), (1.0, 0.6)], 0.0, 0.5, 0.7, 0.25, 2.0);
        assert_eq!(
            fundamental_solvency(&sc, Mechanism::Vwap),
            vec![false, false]
        );
    }

    #[test]
    fn solvency_monotone_in_shortfall() {
        for &h in &[0.1, 0.3, 0.5, 0.7, 0.9, 1.1] {
            let sc = scenario(vec![(1.0, h), (1.0, 0.2)], 0.0, 0.3, 0.6, 0.3, 2.0);
            let flags = fundamental_solvency(&sc, Mechanism::Lob);
            let threshold = 1.0 * {
                let prices = mechanism_prices(&[1.0, 1.0], Mechanism::Lob, sc.density()).unwrap();
                prices[0]
            };
            assert_eq!(flags[0], h <= threshold);
        }
    }

    #[test]
    fn uniqueness_examples() {
        let sc = eba_style(4);
        let check = uniqueness_condition(&sc, Mechanism::Vwap);
        assert!(check.holds);
        assert!((check.lhs - 0.01).abs() < 1e-12);
        assert!((check.rhs - 0.3).abs() < 1e-12);
        assert!(check.all_fundamentally_solvent);

        // symmetric family with 3 n a alpha >= 1/2 violates the bound
        let n = 2.0;
        let a = 1.0;
        let alpha = 0.1;
        assert!(3.0 * n * a * alpha >= 0.5);
        let sym = scenario(vec![(1.0, 0.4), (1.0, 0.4)], 0.1, alpha, 0.5, alpha, 2.0);
        let check = uniqueness_condition(&sym, Mechanism::Vwap);
        assert!(!check.holds);
        assert!((check.lhs - 0.6).abs() < 1e-12);

        // vanishing price impact: lhs tends to zero and the condition holds
        let tiny = scenario(vec![(1.0, 0.4)], 0.0, 1e-9, 0.5, 1e-9, 2.0);
        let check = uniqueness_condition(&tiny, Mechanism::Vwap);
        assert!(check.holds);
        assert!(check.lhs < 1e-6);
    }

    #[test]
    fn lob_uniqueness_scales_with_bank_count() {
        let sc = eba_style(4);
        let check = uniqueness_condition(&sc, Mechanism::Lob);
        // lhs = n^2 * alpha * cap / 2 = 16/600
        assert!((check.lhs - 16.0 / 600.0).abs() < 1e-12);
        assert!(check.holds);
    }

    #[test]
    fn separation_holds_on_sampled_box() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(41);
        // one equal-slope and one mixed-slope configuration, both validated
        let scenarios = [
            scenario(vec![(1.0, 0.4), (2.0, 0.9)], 0.05, 0.1, 0.6, 0.05, 4.0),
            scenario(
                vec![(1.0, 0.4), (1.5, 0.7), (0.8, 0.2)],
                0.02,
                0.08,
                0.55,
                0.08,
                4.0,
            ),
        ];
        for sc in &scenarios {
            assert!(validate_scenario(sc).all_passed());
            // haircut stays strictly below every price at random box points
            for _ in 0..200 {
                let s: Vec<f64> = sc
                    .banks()
                    .iter()
                    .map(|b| rng.random_range(0.0..=b.assets()))
                    .collect();
                let total: f64 = s.iter().sum();
                let g = sc.haircut().value(total);
                for mechanism in [Mechanism::Vwap, Mechanism::Lob] {
                    let prices = mechanism_prices(&s, mechanism, sc.density()).unwrap();
                    for &p in &prices {
                        assert!(g < p, "{mechanism}: haircut {g} not below price {p}");
                    }
                }
            }
        }
    }
}
