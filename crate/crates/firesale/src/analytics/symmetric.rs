//! Closed-form clearing solutions for a system of identical banks.
//!
//! With `n` equal banks, a linear order-book density `f(x) = 1 - alpha x`,
//! and the haircut curve `g(x) = 1/2 - alpha x`, the clearing solution has
//! four branches selected by the size of the common shortfall `h`:
//!
//! - `H1`: the shortfall is small enough to cover by selling alone, so each
//!   bank sells exactly `h / qbar` and borrows nothing;
//! - `H2`: the interior tradeoff binds and each bank sells the mechanism's
//!   first-order-condition quantity;
//! - `H3`: borrowing is maxed out against the remaining collateral;
//! - `H4`: the shortfall exceeds the value of all holdings and every bank
//!   liquidates in full.
//!
//! The admissible slope window keeps all four branches realizable and the
//! solution unique; prices are continuous in `h` across the region cuts.

use crate::analytics::AnalyticsError;
use crate::model::{
    BankAccount, DensityCurve, HaircutCurve, MarketScenario, Mechanism, ModelError,
};

/// Haircut-curve intercept fixed by the symmetric family.
pub const SYMMETRIC_INTERCEPT: f64 = 0.5;

/// An instance of the identical-banks family.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricScenario {
    n: usize,
    assets: f64,
    shortfall: f64,
    rate: f64,
    alpha: f64,
}

impl SymmetricScenario {
    /// Requires `n >= 2`, positive holdings, a rate in `(0, 1/3)`, and a
    /// slope strictly inside `(2r / ((1+r)(n+1)a), 1 / (2na))`. The
    /// shortfall may be zero (a bank with nothing to cover sells nothing).
    pub fn new(
        n: usize,
        assets: f64,
        shortfall: f64,
        rate: f64,
        alpha: f64,
    ) -> Result<Self, AnalyticsError> {
        if n < 2 {
            return Err(AnalyticsError::ParameterWindow {
                detail: format!("need at least two banks, got {n}"),
            });
        }
        if !assets.is_finite() || assets <= 0.0 {
            return Err(AnalyticsError::ParameterWindow {
                detail: format!("assets must be positive, got {assets}"),
            });
        }
        if !shortfall.is_finite() || shortfall < 0.0 {
            return Err(AnalyticsError::ParameterWindow {
                detail: format!("shortfall must be nonnegative, got {shortfall}"),
            });
        }
        if !rate.is_finite() || rate <= 0.0 || rate >= 1.0 / 3.0 {
            return Err(AnalyticsError::ParameterWindow {
                detail: format!("rate must lie in (0, 1/3), got {rate}"),
            });
        }
        let (lo, hi) = slope_window(n, assets, rate);
        if !alpha.is_finite() || alpha <= lo || alpha >= hi {
            return Err(AnalyticsError::ParameterWindow {
                detail: format!("slope {alpha} outside the admissible window ({lo}, {hi})"),
            });
        }
        Ok(Self {
            n,
            assets,
            shortfall,
            rate,
            alpha,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn assets(&self) -> f64 {
        self.assets
    }

    pub fn shortfall(&self) -> f64 {
        self.shortfall
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The same instance as a general scenario (market cap `n * a`, linear
    /// curves with the common slope, haircut intercept 1/2). Requires a
    /// strictly positive shortfall.
    pub fn to_market_scenario(&self) -> Result<MarketScenario, ModelError> {
        let cap = self.n as f64 * self.assets;
        let banks = (0..self.n)
            .map(|i| BankAccount::new(format!("bank{}", i + 1), self.assets, self.shortfall))
            .collect::<Result<Vec<_>, _>>()?;
        MarketScenario::new(
            banks,
            self.rate,
            DensityCurve::linear(self.alpha, cap)?,
            HaircutCurve::linear(SYMMETRIC_INTERCEPT, self.alpha, cap)?,
        )
    }
}

/// Admissible open interval for the common slope.
pub fn slope_window(n: usize, assets: f64, rate: f64) -> (f64, f64) {
    let n_f = n as f64;
    (
        2.0 * rate / ((1.0 + rate) * (n_f + 1.0) * assets),
        1.0 / (2.0 * n_f * assets),
    )
}

/// Shortfall branch of the symmetric solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    H1,
    H2,
    H3,
    H4,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::H1 => write!(f, "H1"),
            Self::H2 => write!(f, "H2"),
            Self::H3 => write!(f, "H3"),
            Self::H4 => write!(f, "H4"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SymmetricSolution {
    pub q: f64,
    pub qbar: f64,
    /// Common per-bank liquidation.
    pub s: f64,
    pub region: Region,
}

/// Region cut points `[h12, h23, h34]` for the given mechanism: half-open
/// intervals `[0, h12)`, `[h12, h23)`, `[h23, h34)`, `[h34, inf)` select
/// `H1..H4`.
pub fn region_boundaries(sym: &SymmetricScenario, mechanism: Mechanism) -> [f64; 3] {
    let n = sym.n as f64;
    let a = sym.assets;
    let alpha = sym.alpha;
    let r = sym.rate;
    let rp = r / (1.0 + r);
    // Interior sale level and the H2 clearing prices.
    let (s2, qbar2, q2) = match mechanism {
        Mechanism::Vwap => (
            2.0 * rp / (alpha * (n + 1.0)),
            1.0 - n * rp / (n + 1.0),
            0.5 - 2.0 * n * rp / (n + 1.0),
        ),
        Mechanism::Lob => (rp / (alpha * n), 1.0 - rp / 2.0, 0.5 - rp),
    };
    let h12 = s2 * qbar2;
    let h23 = a * q2 + s2 * (qbar2 - q2);
    let h34 = a * (1.0 - alpha * n * a / 2.0);
    [h12, h23, h34]
}

/// Evaluates the four-branch closed form for the given mechanism.
pub fn symmetric_solve(sym: &SymmetricScenario, mechanism: Mechanism) -> SymmetricSolution {
    let n = sym.n as f64;
    let a = sym.assets;
    let h = sym.shortfall;
    let alpha = sym.alpha;
    let r = sym.rate;
    let rp = r / (1.0 + r);
    let [h12, h23, h34] = region_boundaries(sym, mechanism);

    if h < h12 {
        // Liquidation-only: s = h / qbar with qbar = 1 - alpha n s / 2.
        let root = (1.0 - 2.0 * alpha * n * h).sqrt();
        let qbar = (1.0 + root) / 2.0;
        SymmetricSolution {
            q: root - 0.5,
            qbar,
            s: h / qbar,
            region: Region::H1,
        }
    } else if h < h23 {
        let (s, qbar, q) = match mechanism {
            Mechanism::Vwap => (
                2.0 * rp / (alpha * (n + 1.0)),
                1.0 - n * rp / (n + 1.0),
                0.5 - 2.0 * n * rp / (n + 1.0),
            ),
            Mechanism::Lob => (rp / (alpha * n), 1.0 - rp / 2.0, 0.5 - rp),
        };
        SymmetricSolution {
            q,
            qbar,
            s,
            region: Region::H2,
        }
    } else if h < h34 {
        // Max-borrowing: s = (h - a q)/(qbar - q) at the implied prices.
        let root = (1.0 + 8.0 * alpha * n * (h - a) + 4.0 * (alpha * n * a).powi(2)).sqrt();
        let q = 1.0 - alpha * n * a - root / 2.0;
        let qbar = 1.25 - alpha * n * a / 2.0 - root / 4.0;
        SymmetricSolution {
            q,
            qbar,
            s: (h - a * q) / (qbar - q),
            region: Region::H3,
        }
    } else {
        SymmetricSolution {
            q: 0.5 - alpha * n * a,
            qbar: 1.0 - alpha * n * a / 2.0,
            s: a,
            region: Region::H4,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::{haircut_value, vwap_price};

    fn sym(n: usize, a: f64, h: f64, r: f64, alpha: f64) -> SymmetricScenario {
        SymmetricScenario::new(n, a, h, r, alpha).unwrap()
    }

    #[test]
    fn window_is_enforced() {
        assert!(SymmetricScenario::new(1, 1.0, 0.2, 0.1, 0.1).is_err());
        assert!(SymmetricScenario::new(2, 1.0, 0.2, 0.0, 0.1).is_err());
        assert!(SymmetricScenario::new(2, 1.0, 0.2, 0.4, 0.1).is_err());
        // slope outside (2r/((1+r)(n+1)a), 1/(2na))
        assert!(SymmetricScenario::new(2, 1.0, 0.2, 0.1, 0.3).is_err());
        assert!(SymmetricScenario::new(2, 1.0, 0.2, 0.1, 0.01).is_err());
        assert!(SymmetricScenario::new(2, 1.0, 0.2, 0.1, 0.1).is_ok());
    }

    #[test]
    fn forced_liquidation_branch() {
        // h = 1 >= a(1 - alpha n a / 2) = 0.9
        let s = symmetric_solve(&sym(2, 1.0, 1.0, 0.1, 0.1), Mechanism::Vwap);
        assert_eq!(s.region, Region::H4);
        assert!((s.qbar - 0.9).abs() < 1e-15);
        assert!((s.q - 0.3).abs() < 1e-15);
        assert_eq!(s.s, 1.0);
    }

    #[test]
    fn zero_shortfall_sells_nothing() {
        let s = symmetric_solve(&sym(2, 1.0, 0.0, 0.1, 0.1), Mechanism::Lob);
        assert_eq!(s.region, Region::H1);
        assert_eq!(s.qbar, 1.0);
        assert_eq!(s.q, 0.5);
        assert_eq!(s.s, 0.0);
    }

    #[test]
    fn interior_sales_order_strictly_between_mechanisms() {
        let sym = sym(4, 1.0, 0.35, 0.08, 0.08);
        let v = symmetric_solve(&sym, Mechanism::Vwap);
        let l = symmetric_solve(&sym, Mechanism::Lob);
        assert_eq!(v.region, Region::H2);
        assert_eq!(l.region, Region::H2);
        assert!(
            v.s > l.s,
            "interior sales must order strictly: {} vs {}",
            v.s,
            l.s
        );
        // borrowing orders the other way
        let borrow_v = sym.shortfall() - v.s * v.qbar;
        let borrow_l = sym.shortfall() - l.s * l.qbar;
        assert!(borrow_v < borrow_l);
    }

    #[test]
    fn prices_reproduce_the_curve_images() {
        for mech in [Mechanism::Vwap, Mechanism::Lob] {
            for &h in &[0.05, 0.2, 0.35, 0.55, 0.75, 0.95, 1.2] {
                let sym = sym(3, 1.0, h, 0.09, 0.1);
                let sol = symmetric_solve(&sym, mech);
                let sc = sym.to_market_scenario().ok();
                if let Some(sc) = sc {
                    let total = 3.0 * sol.s;
                    let qbar = vwap_price(total, sc.density()).unwrap();
                    let q = haircut_value(total, sc.haircut()).unwrap();
                    assert!((qbar - sol.qbar).abs() < 1e-12, "{mech} h={h}");
                    assert!((q - sol.q).abs() < 1e-12, "{mech} h={h}");
                }
            }
        }
    }

    #[test]
    fn middle_region_clears_with_every_bank_interior() {
        use crate::clearing::{picard_clearing, ClearingConfig};
        use crate::model::Regime;
        for mech in [Mechanism::Vwap, Mechanism::Lob] {
            let probe = sym(3, 1.0, 0.1, 0.08, 0.1);
            let [h12, h23, _] = region_boundaries(&probe, mech);
            let sym = sym(3, 1.0, 0.5 * (h12 + h23), 0.08, 0.1);
            assert_eq!(symmetric_solve(&sym, mech).region, Region::H2);
            let sc = sym.to_market_scenario().unwrap();
            let report = picard_clearing(&sc, &ClearingConfig::maximal(mech)).unwrap();
            assert!(
                report.regimes.iter().all(|&r| r == Regime::Interior),
                "{mech}: {:?}",
                report.regimes
            );
        }
    }

    #[test]
    fn continuous_across_region_cuts() {
        for mech in [Mechanism::Vwap, Mechanism::Lob] {
            let base = sym(3, 1.2, 0.1, 0.07, 0.09);
            let cuts = region_boundaries(&base, mech);
            for &h in cuts.iter() {
                let below = symmetric_solve(&sym(3, 1.2, h - 1e-13, 0.07, 0.09), mech);
                let at = symmetric_solve(&sym(3, 1.2, h, 0.07, 0.09), mech);
                assert!((below.q - at.q).abs() < 1e-10, "{mech}: q jumps at {h}");
                assert!(
                    (below.qbar - at.qbar).abs() < 1e-10,
                    "{mech}: qbar jumps at {h}"
                );
                assert!((below.s - at.s).abs() < 1e-9, "{mech}: s jumps at {h}");
            }
        }
    }
}
