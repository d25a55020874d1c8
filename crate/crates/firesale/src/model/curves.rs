//! Order-book density and haircut curve families.
//!
//! Two families are supported: closed-form linear curves and tabulated
//! curves interpolated piecewise-linearly on their knots. Accessors clamp
//! their argument into the curve domain `[0, cap]`; range validation with
//! diagnostics lives in the pricing operations and the scenario validator.

use std::fmt;

use super::ModelError;

/// Piecewise-linear interpolation backend shared by tabulated curves.
///
/// Knots are `(x, y)` pairs with strictly increasing `x` starting at 0.
/// The derivative inside a segment is the segment slope (right-continuous
/// at knots); the second derivative is taken as 0 inside segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
    /// Cumulative trapezoid integral of the curve up to each knot.
    cumulative: Vec<f64>,
}

impl PiecewiseLinear {
    fn new(knots: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if knots.len() < 2 {
            return Err(ModelError::InvalidCurve {
                detail: "tabulated curve needs at least two knots".into(),
            });
        }
        if knots[0].0 != 0.0 {
            return Err(ModelError::InvalidCurve {
                detail: format!("tabulated curve must start at 0, got {}", knots[0].0),
            });
        }
        for pair in knots.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(ModelError::InvalidCurve {
                    detail: format!(
                        "tabulated knots must be strictly increasing, got {} after {}",
                        pair[1].0, pair[0].0
                    ),
                });
            }
        }
        for &(x, y) in &knots {
            if !x.is_finite() || !y.is_finite() {
                return Err(ModelError::InvalidCurve {
                    detail: "tabulated knots must be finite".into(),
                });
            }
        }
        let mut cumulative = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for pair in knots.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            acc += 0.5 * (y0 + y1) * (x1 - x0);
            cumulative.push(acc);
        }
        Ok(Self { knots, cumulative })
    }

    fn cap(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    /// Index of the segment containing `x` (last segment at the cap).
    fn segment(&self, x: f64) -> usize {
        let mut lo = 0usize;
        let mut hi = self.knots.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid].0 <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.cap());
        let k = self.segment(x);
        let (x0, y0) = self.knots[k];
        let (x1, y1) = self.knots[k + 1];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    fn slope(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.cap());
        let k = if x >= self.cap() {
            self.knots.len() - 2
        } else {
            self.segment(x)
        };
        let (x0, y0) = self.knots[k];
        let (x1, y1) = self.knots[k + 1];
        (y1 - y0) / (x1 - x0)
    }

    fn integral(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.cap());
        let k = self.segment(x);
        let (x0, y0) = self.knots[k];
        self.cumulative[k] + 0.5 * (y0 + self.value(x)) * (x - x0)
    }

    /// Inverse of a strictly decreasing tabulated curve; `None` when the
    /// target lies outside the curve range or the knots are not decreasing.
    fn inverse_decreasing(&self, y: f64) -> Option<f64> {
        for pair in self.knots.windows(2) {
            if pair[1].1 >= pair[0].1 {
                return None;
            }
        }
        let top = self.knots[0].1;
        let bottom = self.knots[self.knots.len() - 1].1;
        if y > top || y < bottom {
            return None;
        }
        let mut k = 0;
        while self.knots[k + 1].1 > y {
            k += 1;
        }
        let (x0, y0) = self.knots[k];
        let (x1, y1) = self.knots[k + 1];
        Some(x0 + (y - y0) * (x1 - x0) / (y1 - y0))
    }

    fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }
}

/// Order-book density `f`: price of the next infinitesimal trade at a given
/// cumulative book depth. Integrating it prices finite orders.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityCurve {
    /// `f(x) = 1 - slope * x` on `[0, cap]`.
    Linear {
        slope: f64,
        cap: f64,
    },
    Tabulated(PiecewiseLinear),
}

impl DensityCurve {
    pub fn linear(slope: f64, cap: f64) -> Result<Self, ModelError> {
        if !slope.is_finite() || slope <= 0.0 {
            return Err(ModelError::InvalidCurve {
                detail: format!("density slope must be positive, got {slope}"),
            });
        }
        if !cap.is_finite() || cap <= 0.0 {
            return Err(ModelError::InvalidCurve {
                detail: format!("density cap must be positive, got {cap}"),
            });
        }
        Ok(Self::Linear { slope, cap })
    }

    /// Tabulated density from `(depth, price)` knots. Monotonicity and the
    /// unit anchor `f(0) = 1` are validator findings, not construction errors.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        Ok(Self::Tabulated(PiecewiseLinear::new(knots)?))
    }

    pub fn cap(&self) -> f64 {
        match self {
            Self::Linear { cap, .. } => *cap,
            Self::Tabulated(t) => t.cap(),
        }
    }

    /// `f(x)`, with the argument clamped into `[0, cap]`.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Linear { slope, cap } => 1.0 - slope * x.clamp(0.0, *cap),
            Self::Tabulated(t) => t.value(x),
        }
    }

    /// `f'(x)`; for tabulated curves the slope of the containing segment.
    pub fn slope_at(&self, x: f64) -> f64 {
        match self {
            Self::Linear { slope, .. } => -slope,
            Self::Tabulated(t) => t.slope(x),
        }
    }

    /// `f''(x)`; zero for both families (linear exactly, tabulated inside segments).
    pub fn curvature_at(&self, _x: f64) -> f64 {
        0.0
    }

    /// `F(x) = integral of f from 0 to x`, exact for both families.
    pub fn integral(&self, x: f64) -> f64 {
        match self {
            Self::Linear { slope, cap } => {
                let x = x.clamp(0.0, *cap);
                x - slope * x * x / 2.0
            }
            Self::Tabulated(t) => t.integral(x),
        }
    }

    /// Depth at which the marginal price reaches `p`; defined for
    /// `p` in `[f(cap), f(0)]`, `None` outside or when not invertible.
    pub fn inverse(&self, p: f64) -> Option<f64> {
        match self {
            Self::Linear { slope, cap } => {
                if p > 1.0 || p < self.value(*cap) {
                    None
                } else {
                    Some((1.0 - p) / slope)
                }
            }
            Self::Tabulated(t) => t.inverse_decreasing(p),
        }
    }

    pub(crate) fn tabulated_knots(&self) -> Option<&[(f64, f64)]> {
        match self {
            Self::Linear { .. } => None,
            Self::Tabulated(t) => Some(t.knots()),
        }
    }
}

impl fmt::Display for DensityCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { slope, cap } => write!(f, "linear density (alpha={slope}, cap={cap})"),
            Self::Tabulated(t) => write!(f, "tabulated density ({} knots)", t.knots().len()),
        }
    }
}

/// Collateral-value curve `g`: repo collateral price per share as a function
/// of total liquidations; `1 - g` is the conventional haircut percentage.
#[derive(Debug, Clone, PartialEq)]
pub enum HaircutCurve {
    /// `g(x) = intercept - slope * x` on `[0, cap]`.
    Linear {
        intercept: f64,
        slope: f64,
        cap: f64,
    },
    Tabulated(PiecewiseLinear),
}

impl HaircutCurve {
    pub fn linear(intercept: f64, slope: f64, cap: f64) -> Result<Self, ModelError> {
        if !intercept.is_finite() || intercept <= 0.0 {
            return Err(ModelError::InvalidCurve {
                detail: format!("haircut intercept must be positive, got {intercept}"),
            });
        }
        if !slope.is_finite() || slope <= 0.0 {
            return Err(ModelError::InvalidCurve {
                detail: format!("haircut slope must be positive, got {slope}"),
            });
        }
        if !cap.is_finite() || cap <= 0.0 {
            return Err(ModelError::InvalidCurve {
                detail: format!("haircut cap must be positive, got {cap}"),
            });
        }
        Ok(Self::Linear {
            intercept,
            slope,
            cap,
        })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        Ok(Self::Tabulated(PiecewiseLinear::new(knots)?))
    }

    pub fn cap(&self) -> f64 {
        match self {
            Self::Linear { cap, .. } => *cap,
            Self::Tabulated(t) => t.cap(),
        }
    }

    /// `g(x)`, with the argument clamped into `[0, cap]`.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Linear {
                intercept,
                slope,
                cap,
            } => intercept - slope * x.clamp(0.0, *cap),
            Self::Tabulated(t) => t.value(x),
        }
    }

    /// `g'(x)`.
    pub fn slope_at(&self, x: f64) -> f64 {
        match self {
            Self::Linear { slope, .. } => -slope,
            Self::Tabulated(t) => t.slope(x),
        }
    }

    pub(crate) fn tabulated_knots(&self) -> Option<&[(f64, f64)]> {
        match self {
            Self::Linear { .. } => None,
            Self::Tabulated(t) => Some(t.knots()),
        }
    }
}

impl fmt::Display for HaircutCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear {
                intercept,
                slope,
                cap,
            } => {
                write!(
                    f,
                    "linear haircut (gamma={intercept}, alpha={slope}, cap={cap})"
                )
            }
            Self::Tabulated(t) => write!(f, "tabulated haircut ({} knots)", t.knots().len()),
        }
    }
}
