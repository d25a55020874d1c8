//! Line-oriented scenario files with positioned diagnostics.
//!
//! ```text
//! # heterogeneous two-bank example
//! rate 0.01
//! market_cap 3
//! density linear alpha=0.05
//! haircut linear intercept=0.5 alpha=0.05
//! bank b1 assets=1 shortfall=0.3
//! bank b2 assets=2 shortfall=1.2
//! ```
//!
//! Tabulated curves list `depth:value` knots instead of parameters, e.g.
//! `density tabulated 0:1 1:0.97 3:0.9`. Parsing and emitting round-trip
//! losslessly at the value level; emitted numbers use the shortest exact
//! decimal form.

use std::error::Error;
use std::fmt;

use crate::model::{BankAccount, DensityCurve, HaircutCurve, MarketScenario, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParseError {
    /// 1-based line of the offending token; 0 for file-level problems.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ScenarioParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "scenario: {}", self.message)
        } else {
            write!(f, "scenario line {}: {}", self.line, self.message)
        }
    }
}

impl Error for ScenarioParseError {}

fn err(line: usize, message: impl Into<String>) -> ScenarioParseError {
    ScenarioParseError {
        line,
        message: message.into(),
    }
}

fn parse_number(line: usize, field: &str, token: &str) -> Result<f64, ScenarioParseError> {
    token
        .parse::<f64>()
        .map_err(|_| err(line, format!("field '{field}' is not a number: '{token}'")))
}

/// Splits `key=value` with a diagnostic naming the expected key.
fn keyed(line: usize, token: &str, key: &str) -> Result<f64, ScenarioParseError> {
    match token.split_once('=') {
        Some((k, v)) if k == key => parse_number(line, key, v),
        Some((k, _)) => Err(err(line, format!("expected '{key}=...', found '{k}=...'"))),
        None => Err(err(line, format!("expected '{key}=...', found '{token}'"))),
    }
}

fn parse_knots(line: usize, tokens: &[&str]) -> Result<Vec<(f64, f64)>, ScenarioParseError> {
    if tokens.is_empty() {
        return Err(err(line, "tabulated curve needs 'depth:value' knots"));
    }
    tokens
        .iter()
        .map(|t| {
            let (x, y) = t
                .split_once(':')
                .ok_or_else(|| err(line, format!("knot '{t}' is not 'depth:value'")))?;
            Ok((
                parse_number(line, "knot depth", x)?,
                parse_number(line, "knot value", y)?,
            ))
        })
        .collect()
}

enum CurveSpec {
    Linear(Vec<f64>),
    Tabulated(Vec<(f64, f64)>),
}

fn parse_curve(
    line: usize,
    tokens: &[&str],
    keys: &[&str],
) -> Result<CurveSpec, ScenarioParseError> {
    match tokens.first() {
        Some(&"linear") => {
            if tokens.len() != keys.len() + 1 {
                return Err(err(
                    line,
                    format!("linear curve takes exactly {} parameter(s)", keys.len()),
                ));
            }
            let mut values = Vec::new();
            for (token, key) in tokens[1..].iter().zip(keys) {
                values.push(keyed(line, token, key)?);
            }
            Ok(CurveSpec::Linear(values))
        }
        Some(&"tabulated") => Ok(CurveSpec::Tabulated(parse_knots(line, &tokens[1..])?)),
        Some(other) => Err(err(line, format!("unknown curve family '{other}'"))),
        None => Err(err(line, "missing curve family")),
    }
}

fn model_err(line: usize, e: ModelError) -> ScenarioParseError {
    err(line, e.to_string())
}

/// Parses a scenario file; every diagnostic carries the offending line.
pub fn parse_scenario(text: &str) -> Result<MarketScenario, ScenarioParseError> {
    let mut rate: Option<(usize, f64)> = None;
    let mut market_cap: Option<(usize, f64)> = None;
    let mut density: Option<(usize, CurveSpec)> = None;
    let mut haircut: Option<(usize, CurveSpec)> = None;
    let mut banks: Vec<(usize, String, f64, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "rate" => {
                if rate.is_some() {
                    return Err(err(line, "duplicate 'rate'"));
                }
                if tokens.len() != 2 {
                    return Err(err(line, "usage: rate <number>"));
                }
                rate = Some((line, parse_number(line, "rate", tokens[1])?));
            }
            "market_cap" => {
                if market_cap.is_some() {
                    return Err(err(line, "duplicate 'market_cap'"));
                }
                if tokens.len() != 2 {
                    return Err(err(line, "usage: market_cap <number>"));
                }
                market_cap = Some((line, parse_number(line, "market_cap", tokens[1])?));
            }
            "density" => {
                if density.is_some() {
                    return Err(err(line, "duplicate 'density'"));
                }
                density = Some((line, parse_curve(line, &tokens[1..], &["alpha"])?));
            }
            "haircut" => {
                if haircut.is_some() {
                    return Err(err(line, "duplicate 'haircut'"));
                }
                haircut = Some((
                    line,
                    parse_curve(line, &tokens[1..], &["intercept", "alpha"])?,
                ));
            }
            "bank" => {
                if tokens.len() != 4 {
                    return Err(err(line, "usage: bank <id> assets=<v> shortfall=<v>"));
                }
                let id = tokens[1].to_string();
                if banks.iter().any(|(_, existing, _, _)| *existing == id) {
                    return Err(err(line, format!("duplicate bank id '{id}'")));
                }
                if id.contains(',') {
                    return Err(err(line, "bank ids must not contain commas"));
                }
                let assets = keyed(line, tokens[2], "assets")?;
                let shortfall = keyed(line, tokens[3], "shortfall")?;
                banks.push((line, id, assets, shortfall));
            }
            other => return Err(err(line, format!("unknown directive '{other}'"))),
        }
    }

    let (rate_line, rate) = rate.ok_or_else(|| err(0, "missing 'rate'"))?;
    let (_, cap) = market_cap.ok_or_else(|| err(0, "missing 'market_cap'"))?;
    let (density_line, density_spec) = density.ok_or_else(|| err(0, "missing 'density'"))?;
    let (haircut_line, haircut_spec) = haircut.ok_or_else(|| err(0, "missing 'haircut'"))?;
    if banks.is_empty() {
        return Err(err(0, "at least one bank required"));
    }

    let density = match density_spec {
        CurveSpec::Linear(values) => {
            DensityCurve::linear(values[0], cap).map_err(|e| model_err(density_line, e))?
        }
        CurveSpec::Tabulated(knots) => {
            let curve = DensityCurve::tabulated(knots).map_err(|e| model_err(density_line, e))?;
            if curve.cap() != cap {
                return Err(err(
                    density_line,
                    format!(
                        "tabulated density ends at {}, market_cap is {cap}",
                        curve.cap()
                    ),
                ));
            }
            curve
        }
    };
    let haircut = match haircut_spec {
        CurveSpec::Linear(values) => HaircutCurve::linear(values[0], values[1], cap)
            .map_err(|e| model_err(haircut_line, e))?,
        CurveSpec::Tabulated(knots) => {
            let curve = HaircutCurve::tabulated(knots).map_err(|e| model_err(haircut_line, e))?;
            if curve.cap() != cap {
                return Err(err(
                    haircut_line,
                    format!(
                        "tabulated haircut ends at {}, market_cap is {cap}",
                        curve.cap()
                    ),
                ));
            }
            curve
        }
    };

    let banks = banks
        .into_iter()
        .map(|(line, id, assets, shortfall)| {
            BankAccount::new(id, assets, shortfall).map_err(|e| model_err(line, e))
        })
        .collect::<Result<Vec<_>, _>>()?;

    MarketScenario::new(banks, rate, density, haircut).map_err(|e| model_err(rate_line, e))
}

/// Canonical text form; `parse_scenario(emit_scenario(x))` reproduces `x`.
pub fn emit_scenario(scenario: &MarketScenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("rate {}\n", scenario.repo_rate()));
    out.push_str(&format!("market_cap {}\n", scenario.market_cap()));
    match scenario.density() {
        DensityCurve::Linear { slope, .. } => {
            out.push_str(&format!("density linear alpha={slope}\n"));
        }
        curve @ DensityCurve::Tabulated(_) => {
            out.push_str("density tabulated");
            for &(x, y) in curve.tabulated_knots().unwrap() {
                out.push_str(&format!(" {x}:{y}"));
            }
            out.push('\n');
        }
    }
    match scenario.haircut() {
        HaircutCurve::Linear {
            intercept, slope, ..
        } => {
            out.push_str(&format!(
                "haircut linear intercept={intercept} alpha={slope}\n"
            ));
        }
        curve @ HaircutCurve::Tabulated(_) => {
            out.push_str("haircut tabulated");
            for &(x, y) in curve.tabulated_knots().unwrap() {
                out.push_str(&format!(" {x}:{y}"));
            }
            out.push('\n');
        }
    }
    for bank in scenario.banks() {
        out.push_str(&format!(
            "bank {} assets={} shortfall={}\n",
            bank.id(),
            bank.assets(),
            bank.shortfall()
        ));
    }
    out
}
