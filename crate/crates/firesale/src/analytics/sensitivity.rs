//! Analytic sensitivity of a clearing solution to the repo rate.
//!
//! Differentiating the clearing fixed point in `r` while each bank's active
//! response branch stays fixed gives a small linear system. Insolvent banks
//! and banks pinned at a zero collateral floor contribute nothing; a
//! liquidation-capped bank moves only through its own price; an interior
//! bank moves with the first-order condition; a borrowing-constrained bank
//! moves with both the haircut and its own price. Under VWAP all banks share
//! one price, so everything collapses to a 2x2 system in `(dq, dqbar)`;
//! under the LOB rule each bank's price is its own unknown and the system is
//! `(n+1) x (n+1)`, solved densely.
//!
//! Branch coincidences make the equilibrium non-differentiable; they abort
//! with a directed error and leave one-sided behavior to the caller's
//! finite-difference fallback.

use crate::analytics::AnalyticsError;
use crate::equilibrium::{lob_shared_level, vwap_interior_raw, ResponseBounds};
use crate::model::{EquilibriumReport, MarketScenario, Mechanism, Regime};
use crate::pricing::{
    lob_prices, vwap_price, vwap_price_curvature, vwap_price_slope, LobSegmentation,
};

/// Absolute slack (scaled by `1 + assets`) under which two response
/// branches count as coincident.
const TIE_TOLERANCE: f64 = 1e-7;

/// Mechanism-specific intermediate quantities, kept for inspection.
#[derive(Debug, Clone)]
pub enum SensitivityDetail {
    Vwap {
        /// Feedback of one interior bank's sale into another's condition.
        c: f64,
        /// Direct rate response of an isolated interior bank.
        d: f64,
        c_tilde: f64,
        d_tilde: f64,
    },
    Lob {
        /// The assembled `(n+1) x (n+1)` system matrix.
        w: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub dq_dr: f64,
    /// Per-bank price sensitivities (a common value repeated under VWAP).
    pub dqbar_dr: Vec<f64>,
    pub ds_dr: Vec<f64>,
    pub dtotal_dr: f64,
    pub regimes: Vec<Regime>,
    pub detail: SensitivityDetail,
}

/// How each bank enters the differentiated system.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    /// Insolvent, capped-at-zero floor, or otherwise pinned: no response.
    Pinned,
    /// Liquidation cap `h / qbar` active.
    Capped,
    Interior,
    /// Collateral floor active with a strictly positive floor; carries the
    /// coefficients of `ds = a_coef * dq - b_coef * dqbar`.
    Floored {
        a_coef: f64,
        b_coef: f64,
    },
}

struct BankView {
    role: Role,
    sale: f64,
    qbar: f64,
}

fn classify_roles(
    scenario: &MarketScenario,
    report: &EquilibriumReport,
    interior_raw: f64,
) -> Result<Vec<BankView>, AnalyticsError> {
    let q = report.prices.q();
    let mut views = Vec::with_capacity(scenario.n());
    for (i, bank) in scenario.banks().iter().enumerate() {
        let qbar = report.prices.qbar()[i];
        let sale = report.liquidations.values()[i];
        let a = bank.assets();
        let h = bank.shortfall();
        let tol = TIE_TOLERANCE * (1.0 + a);

        if (h - a * qbar).abs() <= tol * qbar {
            return Err(AnalyticsError::RegimeTie {
                bank: bank.id().to_string(),
                detail: "shortfall sits on the insolvency boundary".into(),
            });
        }
        let bounds = ResponseBounds::new(bank, q, qbar);
        if bounds.insolvent {
            views.push(BankView {
                role: Role::Pinned,
                sale,
                qbar,
            });
            continue;
        }

        let lower_raw = (h - a * q) / (qbar - q);
        let lower_eff = lower_raw.max(0.0);
        let upper = bounds.upper;
        // Two distinct branches meeting at the solution value make the
        // response non-differentiable in the rate.
        let mut near = 0;
        for v in [lower_eff, upper, interior_raw] {
            if (v - sale).abs() <= tol {
                near += 1;
            }
        }
        if near >= 2 {
            return Err(AnalyticsError::RegimeTie {
                bank: bank.id().to_string(),
                detail: format!(
                    "branches coincide at s={sale} (floor {lower_eff}, cap {upper}, interior {interior_raw})"
                ),
            });
        }

        let role = match report.regimes[i] {
            Regime::Insolvent => Role::Pinned,
            Regime::UpperBound => Role::Capped,
            Regime::Interior => Role::Interior,
            Regime::LowerBound => {
                if lower_raw.abs() <= tol {
                    // The floor sits on its zero clamp; the branch flips
                    // between pinned and floored under a rate perturbation.
                    return Err(AnalyticsError::RegimeTie {
                        bank: bank.id().to_string(),
                        detail: format!("collateral floor {lower_raw} sits on its zero clamp"),
                    });
                }
                if lower_raw < 0.0 {
                    // The positive-part clamp is active; the floor itself
                    // moves but the response stays at zero.
                    Role::Pinned
                } else {
                    let gap = qbar - q;
                    Role::Floored {
                        a_coef: (h - a * qbar) / (gap * gap),
                        b_coef: (h - a * q) / (gap * gap),
                    }
                }
            }
        };
        views.push(BankView { role, sale, qbar });
    }
    Ok(views)
}

fn check_mechanism(report: &EquilibriumReport, expected: Mechanism) -> Result<(), AnalyticsError> {
    if report.mechanism != expected {
        return Err(AnalyticsError::MechanismMismatch {
            expected,
            got: report.mechanism,
        });
    }
    Ok(())
}

/// Rate sensitivity of a VWAP clearing solution.
///
/// The interior feedback constants come from the first and second
/// derivatives of the pooled average price at the equilibrium total; the
/// bounded banks' responses enter through two aggregates and the system for
/// `(dq, dqbar)` is 2x2.
pub fn sensitivity_vwap(
    scenario: &MarketScenario,
    report: &EquilibriumReport,
) -> Result<SensitivityReport, AnalyticsError> {
    check_mechanism(report, Mechanism::Vwap)?;
    let n = scenario.n();
    let total = report.liquidations.total();
    let interior_raw = vwap_interior_raw(total, scenario);
    let views = classify_roles(scenario, report, interior_raw)?;

    let density = scenario.density();
    let r = scenario.repo_rate();
    let qbar = report.prices.qbar()[0];
    let avg = vwap_price(total.min(density.cap()), density).map_err(|e| {
        AnalyticsError::SingularSystem {
            detail: e.to_string(),
        }
    })?;
    let slope = vwap_price_slope(total, density);
    let curvature = vwap_price_curvature(total, density);
    let g_slope = scenario.haircut().slope_at(total);

    let interior_count = views.iter().filter(|v| v.role == Role::Interior).count() as f64;

    let (c, d, c_tilde, d_tilde) = if interior_count > 0.0 {
        let s0 = views
            .iter()
            .find(|v| v.role == Role::Interior)
            .map(|v| v.sale)
            .unwrap();
        let denom = 2.0 * slope + s0 * curvature;
        if denom.abs() < 1e-300 {
            return Err(AnalyticsError::SingularSystem {
                detail: "degenerate interior curvature".into(),
            });
        }
        let c = (slope + s0 * curvature) / denom;
        let d = -(avg + s0 * slope) / ((1.0 + r) * denom);
        let share = 1.0 + c * (interior_count - 1.0);
        (c, d, (1.0 - c) / share, interior_count * d / share)
    } else {
        (0.0, 0.0, 1.0, 0.0)
    };

    // Bounded-bank aggregates: X = a_sum * dq - b_sum * dqbar collects the
    // non-interior responses.
    let mut a_sum = 0.0;
    let mut b_sum = 0.0;
    for (view, bank) in views.iter().zip(scenario.banks()) {
        match view.role {
            Role::Floored { a_coef, b_coef } => {
                a_sum += a_coef;
                b_sum += b_coef;
            }
            Role::Capped => {
                b_sum += bank.shortfall() / (qbar * qbar);
            }
            _ => {}
        }
    }

    // dq   = [d~ + c~ (A dq - B dqbar)] g'
    // dqbar= [d~ + c~ (A dq - B dqbar)] favg'
    let m11 = 1.0 - c_tilde * a_sum * g_slope;
    let m12 = c_tilde * b_sum * g_slope;
    let m21 = -c_tilde * a_sum * slope;
    let m22 = 1.0 + c_tilde * b_sum * slope;
    let det = m11 * m22 - m12 * m21;
    if det.abs() < 1e-14 {
        return Err(AnalyticsError::SingularSystem {
            detail: format!("2x2 price system nearly singular (det {det:e})"),
        });
    }
    let rhs1 = d_tilde * g_slope;
    let rhs2 = d_tilde * slope;
    let dq = (rhs1 * m22 - m12 * rhs2) / det;
    let dqbar = (m11 * rhs2 - m21 * rhs1) / det;

    let x = a_sum * dq - b_sum * dqbar;
    let interior_move = if interior_count > 0.0 {
        let share = 1.0 + c * (interior_count - 1.0);
        d / share - (c / share) * x
    } else {
        0.0
    };

    let mut ds_dr = Vec::with_capacity(n);
    for (view, bank) in views.iter().zip(scenario.banks()) {
        let v = match view.role {
            Role::Pinned => 0.0,
            Role::Capped => -(bank.shortfall() / (qbar * qbar)) * dqbar,
            Role::Interior => interior_move,
            Role::Floored { a_coef, b_coef } => a_coef * dq - b_coef * dqbar,
        };
        ds_dr.push(v);
    }
    let dtotal = if g_slope != 0.0 {
        dq / g_slope
    } else {
        ds_dr.iter().sum()
    };
    debug_assert!((ds_dr.iter().sum::<f64>() - dtotal).abs() < 1e-8 * (1.0 + dtotal.abs()));

    Ok(SensitivityReport {
        dq_dr: dq,
        dqbar_dr: vec![dqbar; n],
        ds_dr,
        dtotal_dr: dtotal,
        regimes: report.regimes.clone(),
        detail: SensitivityDetail::Vwap {
            c,
            d,
            c_tilde,
            d_tilde,
        },
    })
}

/// Partial derivatives of the LOB prices in each bank's sale, evaluated at
/// the profile `s`. Entry `[i][j]` is zero unless `s_j < s_i` strictly or
/// `j == i`; banks tied at one level move together, which the entries
/// reflect (tied cross terms vanish, own terms carry the group move).
fn lob_price_partials(s: &[f64], scenario: &MarketScenario) -> Vec<Vec<f64>> {
    let n = s.len();
    let density = scenario.density();
    let seg = LobSegmentation::new(s);
    let prices = lob_prices(s, density).expect("profile within the book domain");

    let f_at: Vec<f64> = seg
        .boundaries()
        .iter()
        .map(|&d| density.value(d.min(density.cap())))
        .collect();
    // cumw[k] = sum_{l<=k} (f(d_l) - f(d_{l-1})) / (n - (l-1))
    let mut cumw = vec![0.0; n + 1];
    for l in 1..=n {
        cumw[l] = cumw[l - 1] + (f_at[l] - f_at[l - 1]) / (n - (l - 1)) as f64;
    }

    let mut partials = vec![vec![0.0; n]; n];
    for i in 0..n {
        if s[i] <= 0.0 {
            continue;
        }
        let k_i = seg.rank(i);
        for j in 0..n {
            if j == i {
                partials[i][i] = (f_at[k_i] - prices[i]) / s[i];
            } else if s[j] < s[i] {
                let k_j = seg.rank(j);
                partials[i][j] = (cumw[k_i] - cumw[k_j]) / s[i];
            }
        }
    }
    partials
}

/// Rate sensitivity of an LOB clearing solution.
///
/// Builds the `(n+1) x (n+1)` system in `(dqbar_1..dqbar_n, dq)`: pinned and
/// capped banks get identity price rows (their prices see only banks below
/// them, all motionless), interior banks' prices move with the shared
/// first-order level, and floored banks couple through the price partials.
/// The final row balances the haircut against the total sale response.
pub fn sensitivity_lob(
    scenario: &MarketScenario,
    report: &EquilibriumReport,
) -> Result<SensitivityReport, AnalyticsError> {
    check_mechanism(report, Mechanism::Lob)?;
    let n = scenario.n();
    let s = report.liquidations.values();
    let density = scenario.density();
    let r = scenario.repo_rate();

    // Shared interior level (the would-be level even when no bank is
    // interior, for tie detection).
    let caps: Vec<f64> = scenario
        .banks()
        .iter()
        .enumerate()
        .map(|(i, bank)| {
            let b = ResponseBounds::new(bank, report.prices.q(), report.prices.qbar()[i]);
            if b.insolvent {
                bank.assets()
            } else {
                b.upper.min(bank.assets())
            }
        })
        .collect();
    let shared_level = lob_shared_level(&caps, scenario);
    let views = classify_roles(scenario, report, shared_level)?;

    // Order-statistics ties with a moving floored bank break the price
    // derivatives unless the tied banks respond identically (then the tie
    // group moves together and stays a group).
    for i in 0..n {
        if let Role::Floored { a_coef, b_coef } = views[i].role {
            for j in 0..n {
                let tol = TIE_TOLERANCE * (1.0 + scenario.bank(i).assets());
                if j == i || (s[i] - s[j]).abs() > tol {
                    continue;
                }
                let same_motion = match views[j].role {
                    Role::Floored {
                        a_coef: aj,
                        b_coef: bj,
                    } => {
                        (a_coef - aj).abs() <= tol
                            && (b_coef - bj).abs() <= tol
                            && (views[i].qbar - views[j].qbar).abs() <= tol
                    }
                    _ => false,
                };
                if !same_motion {
                    return Err(AnalyticsError::RegimeTie {
                        bank: scenario.bank(i).id().to_string(),
                        detail: format!(
                            "floored bank ties with bank {} at s={}",
                            scenario.bank(j).id(),
                            s[i]
                        ),
                    });
                }
            }
        }
    }

    let interior: Vec<usize> = (0..n)
        .filter(|&i| views[i].role == Role::Interior)
        .collect();
    let c_tilde = if interior.is_empty() {
        0.0
    } else {
        let i0 = interior[0];
        let level = s[i0];
        let tie_eps = 1e-12 * (1.0 + level.abs());
        let active = s.iter().filter(|&&v| v >= level - tie_eps).count() as f64;
        let depth = crate::pricing::lob_depth(i0, s).min(density.cap());
        let f_slope = density.slope_at(depth);
        if f_slope >= -1e-300 {
            return Err(AnalyticsError::SingularSystem {
                detail: "flat order book at the interior depth".into(),
            });
        }
        -density.value(depth) / ((1.0 + r) * f_slope * active)
    };

    let partials = lob_price_partials(s, scenario);
    let total = report.liquidations.total();
    let g_slope = scenario.haircut().slope_at(total);

    // Unknowns x = (dqbar_1, .., dqbar_n, dq).
    let dim = n + 1;
    let mut w = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for i in 0..n {
        w[i][i] = 1.0;
        match views[i].role {
            Role::Pinned | Role::Capped => {}
            Role::Interior => {
                b[i] = c_tilde * interior.iter().map(|&j| partials[i][j]).sum::<f64>();
            }
            Role::Floored { .. } => {
                b[i] = c_tilde * interior.iter().map(|&j| partials[i][j]).sum::<f64>();
                for j in 0..n {
                    if let Role::Floored { a_coef, b_coef } = views[j].role {
                        let p = partials[i][j];
                        if p != 0.0 || j == i {
                            w[i][j] += p * b_coef;
                            w[i][dim - 1] -= p * a_coef;
                        }
                    }
                }
            }
        }
    }
    // Haircut row: dq = g' (|interior| c~ + sum of floored responses).
    w[dim - 1][dim - 1] = 1.0;
    b[dim - 1] = g_slope * interior.len() as f64 * c_tilde;
    for j in 0..n {
        if let Role::Floored { a_coef, b_coef } = views[j].role {
            w[dim - 1][j] += g_slope * b_coef;
            w[dim - 1][dim - 1] -= g_slope * a_coef;
        }
    }

    let solution = solve_dense(&w, &b).ok_or_else(|| AnalyticsError::SingularSystem {
        detail: "price sensitivity system is singular".into(),
    })?;

    let dq = solution[dim - 1];
    let dqbar: Vec<f64> = solution[..n].to_vec();
    let mut ds_dr = Vec::with_capacity(n);
    for i in 0..n {
        let v = match views[i].role {
            Role::Pinned | Role::Capped => 0.0,
            Role::Interior => c_tilde,
            Role::Floored { a_coef, b_coef } => a_coef * dq - b_coef * dqbar[i],
        };
        ds_dr.push(v);
    }
    let dtotal = if g_slope != 0.0 {
        dq / g_slope
    } else {
        ds_dr.iter().sum()
    };
    debug_assert!((ds_dr.iter().sum::<f64>() - dtotal).abs() < 1e-8 * (1.0 + dtotal.abs()));

    Ok(SensitivityReport {
        dq_dr: dq,
        dqbar_dr: dqbar,
        ds_dr,
        dtotal_dr: dtotal,
        regimes: report.regimes.clone(),
        detail: SensitivityDetail::Lob { w, b },
    })
}

/// Gaussian elimination with partial pivoting; `None` on a vanishing pivot.
fn solve_dense(matrix: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut x: Vec<f64> = rhs.to_vec();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));

    for col in 0..n {
        let pivot_row =
            (col..n).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())?;
        if a[pivot_row][col].abs() <= 1e-14 * scale.max(1.0) {
            return None;
        }
        a.swap(col, pivot_row);
        x.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            let (pivot_rows, lower_rows) = a.split_at_mut(row);
            let pivot = &pivot_rows[col];
            for (entry, &p) in lower_rows[0][col..].iter_mut().zip(&pivot[col..]) {
                *entry -= factor * p;
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}
