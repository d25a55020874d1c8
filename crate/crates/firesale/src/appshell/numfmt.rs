//! Numeric rendering for CSV and report output: 12 significant digits,
//! '.' decimal separator, no grouping.

/// Formats with 12 significant digits, switching to scientific notation
/// outside a comfortable fixed-point range.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..=14).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}
