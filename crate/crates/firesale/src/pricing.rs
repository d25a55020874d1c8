//! Inverse-demand evaluation for the two pricing mechanisms.
//!
//! VWAP gives every seller the common average price `F(S)/S` of the total
//! liquidation `S`. The LOB mechanism has all sellers consume the book at
//! equal speed: a bank selling `s_i` trades through a sequence of depth
//! segments determined by the order statistics of the sale vector, sharing
//! each segment's proceeds equally with every bank still active there. Both
//! are static consumption rules; there is no bid side and no event clock.

use std::error::Error;
use std::fmt;

use crate::model::{DensityCurve, HaircutCurve, Mechanism};

/// Relative slack accepted on domain boundaries before raising an error.
const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum PricingError {
    /// A total or book depth outside the curve domain `[0, cap]`.
    DomainExceeded { total: f64, cap: f64 },
}

impl fmt::Display for PricingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DomainExceeded { total, cap } => {
                write!(f, "total {total} outside the curve domain [0, {cap}]")
            }
        }
    }
}

impl Error for PricingError {}

fn check_domain(total: f64, cap: f64) -> Result<f64, PricingError> {
    let slack = DOMAIN_SLACK * (1.0 + cap);
    if !total.is_finite() || total < -slack || total > cap + slack {
        return Err(PricingError::DomainExceeded { total, cap });
    }
    Ok(total.clamp(0.0, cap))
}

/// Order-statistics segmentation of the limit order book for a sale vector.
///
/// Banks are sorted by sale size ascending; segment `j` is the slice of book
/// consumed between the `(j-1)`-th and `j`-th order statistic, shared by the
/// `n - (j-1)` banks still active. Boundary depths satisfy
/// `d_j = sum of the j smallest sales + (n - j) * s_[j]`, so tied sales give
/// zero-width segments and `d_n` telescopes to the total liquidation.
#[derive(Debug, Clone)]
pub struct LobSegmentation {
    /// Bank indices sorted by sale size ascending (ties by bank index).
    order: Vec<usize>,
    /// Depths `d_0..d_n` at segment boundaries.
    boundaries: Vec<f64>,
    /// 1-based rank per bank: minimal `k` with `s_[k] = s_i`.
    ranks: Vec<usize>,
}

impl LobSegmentation {
    pub fn new(s: &[f64]) -> Self {
        let n = s.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap().then(a.cmp(&b)));

        let mut boundaries = Vec::with_capacity(n + 1);
        boundaries.push(0.0);
        let mut prefix = 0.0;
        for (j, &bank) in order.iter().enumerate() {
            prefix += s[bank];
            boundaries.push(prefix + (n - (j + 1)) as f64 * s[bank]);
        }

        let mut ranks = vec![0usize; n];
        for (j, &bank) in order.iter().enumerate() {
            let prev = if j > 0 { Some(order[j - 1]) } else { None };
            ranks[bank] = match prev {
                Some(p) if s[p] == s[bank] => ranks[p],
                _ => j + 1,
            };
        }
        Self {
            order,
            boundaries,
            ranks,
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Depths `d_0..d_n`; `d_n` equals the total book depth consumed.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Minimal 1-based rank of bank `i` among the order statistics.
    pub fn rank(&self, i: usize) -> usize {
        self.ranks[i]
    }

    pub fn depth_consumed(&self) -> f64 {
        self.boundaries[self.boundaries.len() - 1]
    }

    /// Depth at which bank `i`'s marginal order executes (its tie group's
    /// final boundary); 0 for a bank selling nothing.
    pub fn finish_depth(&self, i: usize, s: &[f64]) -> f64 {
        let n = s.len();
        let below: f64 = s.iter().filter(|&&v| v < s[i]).sum();
        below + (n - (self.ranks[i] - 1)) as f64 * s[i]
    }
}

/// Common average price `F(total)/total` of a pooled sale; 1 for an empty sale.
pub fn vwap_price(total: f64, density: &DensityCurve) -> Result<f64, PricingError> {
    let total = check_domain(total, density.cap())?;
    if total == 0.0 {
        return Ok(1.0);
    }
    Ok(density.integral(total) / total)
}

/// Derivative of the VWAP price in the total, `(f(S) - F(S)/S) / S`,
/// extended by continuity to `f'(0)/2` at zero.
pub fn vwap_price_slope(total: f64, density: &DensityCurve) -> f64 {
    let total = total.clamp(0.0, density.cap());
    if total == 0.0 {
        return density.slope_at(0.0) / 2.0;
    }
    (density.value(total) - density.integral(total) / total) / total
}

/// Second derivative of the VWAP price in the total, extended to `f''(0)/3`
/// at zero.
pub fn vwap_price_curvature(total: f64, density: &DensityCurve) -> f64 {
    let total = total.clamp(0.0, density.cap());
    if total == 0.0 {
        return density.curvature_at(0.0) / 3.0;
    }
    (density.slope_at(total) - 2.0 * vwap_price_slope(total, density)) / total
}

/// Per-bank average sale prices under the limit-order-book mechanism.
///
/// A bank selling nothing is priced at 1 by convention. Prices are
/// non-increasing in a bank's own rank, and the per-bank proceeds partition
/// the book exactly: `sum_i s_i * price_i = F(total)`.
pub fn lob_prices(s: &[f64], density: &DensityCurve) -> Result<Vec<f64>, PricingError> {
    let n = s.len();
    let seg = LobSegmentation::new(s);
    check_domain(seg.depth_consumed(), density.cap())?;

    // Shared proceeds accumulated per rank: sum over segments l <= k of
    // (F(d_l) - F(d_{l-1})) / (n - (l-1)).
    let mut shared = Vec::with_capacity(n + 1);
    shared.push(0.0);
    let mut acc = 0.0;
    let mut integral_prev = 0.0;
    for l in 1..=n {
        let d = seg.boundaries()[l].min(density.cap());
        let integral = density.integral(d);
        acc += (integral - integral_prev) / (n - (l - 1)) as f64;
        integral_prev = integral;
        shared.push(acc);
    }

    let mut prices = vec![1.0; n];
    for i in 0..n {
        if s[i] > 0.0 {
            prices[i] = shared[seg.rank(i)] / s[i];
        }
    }
    Ok(prices)
}

/// Average LOB price for one order of size `own` against other banks'
/// sales, given pre-sorted ascending `others`. Matches the corresponding
/// component of [`lob_prices`] without building the full segmentation.
pub fn lob_price_single(own: f64, sorted_others: &[f64], density: &DensityCurve) -> f64 {
    if own <= 0.0 {
        return 1.0;
    }
    let n = sorted_others.len() + 1;
    let cap = density.cap();
    let mut proceeds = 0.0;
    let mut depth_prev = 0.0;
    let mut integral_prev = 0.0;
    let mut prefix = 0.0;
    let mut consumed = 0;
    for &other in sorted_others.iter().take_while(|&&o| o < own) {
        prefix += other;
        let depth = prefix + (n - consumed - 1) as f64 * other;
        if depth > depth_prev {
            let integral = density.integral(depth.min(cap));
            proceeds += (integral - integral_prev) / (n - consumed) as f64;
            integral_prev = integral;
            depth_prev = depth;
        }
        consumed += 1;
    }
    let finish = prefix + (n - consumed) as f64 * own;
    let integral = density.integral(finish.min(cap));
    proceeds += (integral - integral_prev) / (n - consumed) as f64;
    proceeds / own
}

/// Collateral price of the asset at a given total liquidation.
pub fn haircut_value(total: f64, haircut: &HaircutCurve) -> Result<f64, PricingError> {
    let total = check_domain(total, haircut.cap())?;
    Ok(haircut.value(total))
}

/// Book depth at which bank `i`'s marginal order executes under the LOB rule:
/// everything sold by strictly smaller orders plus the slice consumed, at
/// equal speed, by bank `i` and every bank at or above its size.
pub fn lob_depth(i: usize, s: &[f64]) -> f64 {
    book_depth_at(s[i], s, Some(i))
}

/// Depth consumed when an order of size `own` finishes against the sales in
/// `s` (skipping index `skip`, used when `own` replaces that bank's entry).
pub(crate) fn book_depth_at(own: f64, s: &[f64], skip: Option<usize>) -> f64 {
    let mut below = 0.0;
    let mut active = 1usize;
    for (j, &v) in s.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        if v < own {
            below += v;
        } else {
            active += 1;
        }
    }
    below + active as f64 * own
}

/// Prices for a sale vector under either mechanism, as a per-bank vector.
pub fn mechanism_prices(
    s: &[f64],
    mechanism: Mechanism,
    density: &DensityCurve,
) -> Result<Vec<f64>, PricingError> {
    match mechanism {
        Mechanism::Vwap => {
            let total: f64 = s.iter().sum();
            let p = vwap_price(total, density)?;
            Ok(vec![p; s.len()])
        }
        Mechanism::Lob => lob_prices(s, density),
    }
}
