//! Rate-sweep experiment driver: one maximal clearing run per grid point
//! and mechanism, with per-row failure capture instead of aborting.

use crate::clearing::{picard_clearing, total_outcomes, ClearingConfig, ClearingError};
use crate::model::{EquilibriumReport, MarketScenario, Mechanism};

/// One row of the sweep table, in the fixed CSV column order.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub r: f64,
    pub mechanism: Mechanism,
    pub total_liquidation: f64,
    pub total_borrowing: f64,
    pub q: f64,
    pub min_qbar: f64,
    pub converged: bool,
}

fn row_from_report(r: f64, mechanism: Mechanism, report: &EquilibriumReport) -> SweepRow {
    let outcomes = total_outcomes(report);
    let min_qbar = report
        .prices
        .qbar()
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    SweepRow {
        r,
        mechanism,
        total_liquidation: outcomes.total_liquidation,
        total_borrowing: outcomes.total_borrowing,
        q: report.prices.q(),
        min_qbar,
        converged: report.converged,
    }
}

/// Runs a maximal-direction clearing for every `(rate, mechanism)` pair, in
/// grid order with mechanisms cycled inside each rate. Convergence failures
/// are recorded in-row (from the last iterate when available) rather than
/// propagated.
pub fn rate_sweep(
    scenario: &MarketScenario,
    rates: &[f64],
    mechanisms: &[Mechanism],
) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(rates.len() * mechanisms.len());
    for &r in rates {
        for &mechanism in mechanisms {
            let row = match scenario.with_rate(r) {
                Err(_) => SweepRow {
                    r,
                    mechanism,
                    total_liquidation: f64::NAN,
                    total_borrowing: f64::NAN,
                    q: f64::NAN,
                    min_qbar: f64::NAN,
                    converged: false,
                },
                Ok(sc) => match picard_clearing(&sc, &ClearingConfig::maximal(mechanism)) {
                    Ok(report) => row_from_report(r, mechanism, &report),
                    Err(ClearingError::IterationLimit { last }) => {
                        row_from_report(r, mechanism, &last)
                    }
                    Err(_) => SweepRow {
                        r,
                        mechanism,
                        total_liquidation: f64::NAN,
                        total_borrowing: f64::NAN,
                        q: f64::NAN,
                        min_qbar: f64::NAN,
                        converged: false,
                    },
                },
            };
            rows.push(row);
        }
    }
    rows
}
