//! Balance-sheet ingestion and calibration to a market scenario.
//!
//! Records carry each bank's total assets, capital, and tier-1 capital
//! ratio. Calibration splits total assets into cash and illiquid holdings
//! by the tier-1 ratio, takes external liabilities as assets minus capital,
//! and sets the shortfall as a policy fraction of those liabilities (the
//! balance sheets themselves carry no shortfall figure, so the fraction is
//! an explicit knob). Curves default to the linear family with a 0.7
//! haircut intercept and a slope of `1/(300 M)` on a market cap equal to
//! the total illiquid holdings.

use std::error::Error;
use std::fmt;

use crate::model::{validate_scenario, BankAccount, DensityCurve, HaircutCurve, MarketScenario};

#[derive(Debug, Clone)]
pub enum EbaError {
    Parse {
        line: usize,
        message: String,
    },
    InvalidRecord {
        bank_id: String,
        message: String,
    },
    /// No usable banks remain after dropping degenerate records.
    Empty,
    /// The calibrated scenario failed validation.
    PolicyProducesInvalid {
        detail: String,
    },
}

impl fmt::Display for EbaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { line, message } => write!(f, "balance sheet line {line}: {message}"),
            Self::InvalidRecord { bank_id, message } => {
                write!(f, "record '{bank_id}': {message}")
            }
            Self::Empty => write!(f, "no usable balance-sheet records"),
            Self::PolicyProducesInvalid { detail } => {
                write!(f, "calibration produced an invalid scenario: {detail}")
            }
        }
    }
}

impl Error for EbaError {}

/// One bank's stylized balance sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSheetRecord {
    pub bank_id: String,
    pub total_assets: f64,
    pub capital: f64,
    pub tier1_ratio: f64,
}

impl BalanceSheetRecord {
    /// Requires positive totals, capital strictly inside `(0, total)`, and a
    /// ratio in `(0, 1]`. A ratio of exactly 1 leaves no illiquid holdings;
    /// such banks are dropped (with a warning) at calibration time.
    pub fn new(
        bank_id: impl Into<String>,
        total_assets: f64,
        capital: f64,
        tier1_ratio: f64,
    ) -> Result<Self, EbaError> {
        let bank_id = bank_id.into();
        let fail = |message: String| EbaError::InvalidRecord {
            bank_id: bank_id.clone(),
            message,
        };
        if !total_assets.is_finite() || total_assets <= 0.0 {
            return Err(fail(format!(
                "total assets must be positive, got {total_assets}"
            )));
        }
        if !capital.is_finite() || capital <= 0.0 || capital >= total_assets {
            return Err(fail(format!(
                "capital must lie strictly between 0 and total assets, got {capital}"
            )));
        }
        if !tier1_ratio.is_finite() || tier1_ratio <= 0.0 || tier1_ratio > 1.0 {
            return Err(fail(format!(
                "tier-1 ratio must lie in (0, 1], got {tier1_ratio}"
            )));
        }
        Ok(Self {
            bank_id,
            total_assets,
            capital,
            tier1_ratio,
        })
    }
}

/// Calibration knobs; `None` selects the default rule.
#[derive(Debug, Clone)]
pub struct CalibrationPolicy {
    /// Shortfall as a fraction of external liabilities.
    pub shortfall_fraction: f64,
    pub haircut_intercept: f64,
    /// Common curve slope; default `1 / (300 * market_cap)`.
    pub alpha: Option<f64>,
    /// Market cap; default is the total illiquid holdings.
    pub market_cap: Option<f64>,
    pub repo_rate: f64,
}

impl Default for CalibrationPolicy {
    fn default() -> Self {
        Self {
            shortfall_fraction: 0.05,
            haircut_intercept: 0.7,
            alpha: None,
            market_cap: None,
            repo_rate: 0.0,
        }
    }
}

/// A calibrated scenario plus warnings for any dropped records.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub scenario: MarketScenario,
    pub warnings: Vec<String>,
}

/// Builds a scenario from balance sheets: cash `R*T`, illiquid holdings
/// `(1-R)*T`, external liabilities `T - C`, shortfall `fraction * (T - C)`.
/// Banks left without holdings or a positive shortfall are dropped with a
/// warning. The result must pass scenario validation.
pub fn calibrate_eba(
    records: &[BalanceSheetRecord],
    policy: &CalibrationPolicy,
) -> Result<Calibration, EbaError> {
    if records.is_empty() {
        return Err(EbaError::Empty);
    }
    if !policy.shortfall_fraction.is_finite()
        || policy.shortfall_fraction <= 0.0
        || policy.shortfall_fraction > 1.0
    {
        return Err(EbaError::PolicyProducesInvalid {
            detail: format!(
                "shortfall fraction must lie in (0, 1], got {}",
                policy.shortfall_fraction
            ),
        });
    }

    let mut banks = Vec::new();
    let mut warnings = Vec::new();
    for record in records {
        let illiquid = (1.0 - record.tier1_ratio) * record.total_assets;
        let liabilities = record.total_assets - record.capital;
        let shortfall = policy.shortfall_fraction * liabilities;
        if illiquid <= 0.0 || shortfall <= 0.0 {
            warnings.push(format!(
                "dropped '{}': illiquid holdings {illiquid}, shortfall {shortfall}",
                record.bank_id
            ));
            continue;
        }
        banks.push(
            BankAccount::new(record.bank_id.clone(), illiquid, shortfall).map_err(|e| {
                EbaError::InvalidRecord {
                    bank_id: record.bank_id.clone(),
                    message: e.to_string(),
                }
            })?,
        );
    }
    if banks.is_empty() {
        return Err(EbaError::Empty);
    }

    let holdings: f64 = banks.iter().map(|b| b.assets()).sum();
    let market_cap = policy.market_cap.unwrap_or(holdings);
    let alpha = policy.alpha.unwrap_or(1.0 / (300.0 * market_cap));
    let density =
        DensityCurve::linear(alpha, market_cap).map_err(|e| EbaError::PolicyProducesInvalid {
            detail: e.to_string(),
        })?;
    let haircut =
        HaircutCurve::linear(policy.haircut_intercept, alpha, market_cap).map_err(|e| {
            EbaError::PolicyProducesInvalid {
                detail: e.to_string(),
            }
        })?;
    let scenario = MarketScenario::new(banks, policy.repo_rate, density, haircut).map_err(|e| {
        EbaError::PolicyProducesInvalid {
            detail: e.to_string(),
        }
    })?;

    let report = validate_scenario(&scenario);
    if !report.all_passed() {
        let failed: Vec<&str> = report
            .findings
            .iter()
            .filter(|f| !f.passed)
            .map(|f| f.name)
            .collect();
        return Err(EbaError::PolicyProducesInvalid {
            detail: format!("failed checks: {}", failed.join(", ")),
        });
    }
    Ok(Calibration { scenario, warnings })
}

/// Parses a headered CSV with columns `bank_id,total_assets,capital,tier1_ratio`.
pub fn parse_balance_sheet_csv(text: &str) -> Result<Vec<BalanceSheetRecord>, EbaError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => {
                return Err(EbaError::Parse {
                    line: 0,
                    message: "empty file".into(),
                })
            }
            Some((idx, raw)) => {
                let trimmed = raw.trim();
                if !trimmed.is_empty() {
                    break (idx + 1, trimmed);
                }
            }
        }
    };
    if header.1 != "bank_id,total_assets,capital,tier1_ratio" {
        return Err(EbaError::Parse {
            line: header.0,
            message: format!(
                "expected header 'bank_id,total_assets,capital,tier1_ratio', got '{}'",
                header.1
            ),
        });
    }

    let mut records = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(EbaError::Parse {
                line,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let number = |name: &str, token: &str| -> Result<f64, EbaError> {
            token.trim().parse::<f64>().map_err(|_| EbaError::Parse {
                line,
                message: format!("field '{name}' is not a number: '{token}'"),
            })
        };
        records.push(
            BalanceSheetRecord::new(
                fields[0].trim(),
                number("total_assets", fields[1])?,
                number("capital", fields[2])?,
                number("tier1_ratio", fields[3])?,
            )
            .map_err(|e| EbaError::Parse {
                line,
                message: e.to_string(),
            })?,
        );
    }
    Ok(records)
}
