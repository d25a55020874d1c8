//! Command-line interface.
//!
//! Subcommands: `solve`, `sweep`, `sensitivity`, `validate`, `symmetric`,
//! `calibrate`. Exit status 0 on success, 1 on usage/input errors (and on
//! failed validation checks), 2 on convergence failure. Diagnostics go to
//! stderr; files are written atomically (write to a temp path, then rename).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::analytics::{
    rate_sweep, sensitivity_lob, sensitivity_vwap, symmetric_solve, SensitivityReport, SweepRow,
    SymmetricScenario,
};
use crate::appshell::eba::{calibrate_eba, parse_balance_sheet_csv, CalibrationPolicy};
use crate::appshell::numfmt::sig12;
use crate::appshell::scenario_text::{emit_scenario, parse_scenario};
use crate::clearing::{picard_clearing, total_outcomes, ClearingConfig, ClearingError};
use crate::model::{
    fundamental_solvency, uniqueness_condition, validate_scenario, Direction, EquilibriumReport,
    MarketScenario, Mechanism,
};

const USAGE: &str = "\
usage: firesale <command> [flags]

commands:
  solve       --scenario PATH --mechanism vwap|lob [--direction maximal|minimal] [--out PATH]
  sweep       --scenario PATH --mechanisms vwap,lob --r-from F --r-to F --r-steps N [--out PATH]
  sensitivity --scenario PATH --mechanism vwap|lob [--fd-check]
  validate    --scenario PATH
  symmetric   --n N --a F --h F --r F --alpha F --mechanism vwap|lob
  calibrate   --eba-csv PATH [--omega F] [--gamma F] [--rate F] [--out PATH]
";

/// Exit status for usage and input errors.
const EXIT_USAGE: i32 = 1;
/// Exit status for convergence failures.
const EXIT_NO_CONVERGENCE: i32 = 2;

struct Flags {
    values: HashMap<String, String>,
    switches: Vec<String>,
}

impl Flags {
    fn parse(args: &[String], switch_names: &[&str]) -> Result<Self, String> {
        let mut values = HashMap::new();
        let mut switches = Vec::new();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let name = arg
                .strip_prefix("--")
                .ok_or_else(|| format!("unexpected argument '{arg}'"))?;
            if switch_names.contains(&name) {
                switches.push(name.to_string());
                continue;
            }
            let value = it
                .next()
                .ok_or_else(|| format!("flag '--{name}' needs a value"))?;
            if values.insert(name.to_string(), value.clone()).is_some() {
                return Err(format!("flag '--{name}' given twice"));
            }
        }
        Ok(Self { values, switches })
    }

    fn required(&self, name: &str) -> Result<&str, String> {
        self.values
            .get(name)
            .map(|s| s.as_str())
            .ok_or_else(|| format!("missing required flag '--{name}'"))
    }

    fn optional(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    fn has_switch(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }

    fn number(&self, name: &str) -> Result<f64, String> {
        let raw = self.required(name)?;
        raw.parse::<f64>()
            .map_err(|_| format!("flag '--{name}' is not a number: '{raw}'"))
    }

    fn integer(&self, name: &str) -> Result<usize, String> {
        let raw = self.required(name)?;
        raw.parse::<usize>()
            .map_err(|_| format!("flag '--{name}' is not a count: '{raw}'"))
    }
}

fn parse_mechanism(raw: &str) -> Result<Mechanism, String> {
    Mechanism::parse(raw).ok_or_else(|| format!("unknown mechanism '{raw}' (vwap or lob)"))
}

fn load_scenario(path: &str) -> Result<MarketScenario, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read '{path}': {e}"))?;
    parse_scenario(&text).map_err(|e| e.to_string())
}

fn write_atomic(path: &Path, content: &str) -> Result<(), String> {
    let mut tmp: PathBuf = path.to_path_buf();
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .ok_or_else(|| format!("invalid output path '{}'", path.display()))?;
    name.push(".tmp");
    tmp.set_file_name(name);
    let mut file =
        fs::File::create(&tmp).map_err(|e| format!("cannot write '{}': {e}", tmp.display()))?;
    file.write_all(content.as_bytes())
        .and_then(|_| file.sync_all())
        .map_err(|e| format!("cannot write '{}': {e}", tmp.display()))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| format!("cannot move into '{}': {e}", path.display()))
}

fn per_bank_csv(scenario: &MarketScenario, report: &EquilibriumReport) -> String {
    let mut out = String::from("bank_id,s,qbar,borrowing,regime\n");
    for (i, bank) in scenario.banks().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            bank.id(),
            sig12(report.liquidations.values()[i]),
            sig12(report.prices.qbar()[i]),
            sig12(report.borrowing[i]),
            report.regimes[i]
        ));
    }
    out
}

fn report_text(scenario: &MarketScenario, report: &EquilibriumReport) -> String {
    let outcomes = total_outcomes(report);
    let mut out = String::new();
    out.push_str(&format!("mechanism: {}\n", report.mechanism));
    out.push_str(&format!("direction: {}\n", report.direction));
    out.push_str(&format!("converged: {}\n", report.converged));
    out.push_str(&format!("iterations: {}\n", report.iterations));
    out.push_str(&format!("q: {}\n", sig12(report.prices.q())));
    out.push_str(&format!(
        "total_liquidation: {}\n",
        sig12(outcomes.total_liquidation)
    ));
    out.push_str(&format!(
        "total_borrowing: {}\n",
        sig12(outcomes.total_borrowing)
    ));
    for (i, bank) in scenario.banks().iter().enumerate() {
        out.push_str(&format!(
            "bank {}: s={} qbar={} borrowing={} regime={}\n",
            bank.id(),
            sig12(report.liquidations.values()[i]),
            sig12(report.prices.qbar()[i]),
            sig12(report.borrowing[i]),
            report.regimes[i]
        ));
    }
    out
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("r,mechanism,total_liquidation,total_borrowing,q,min_qbar,converged\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sig12(row.r),
            row.mechanism,
            sig12(row.total_liquidation),
            sig12(row.total_borrowing),
            sig12(row.q),
            sig12(row.min_qbar),
            row.converged
        ));
    }
    out
}

fn cmd_solve(flags: &Flags) -> Result<i32, String> {
    let scenario = load_scenario(flags.required("scenario")?)?;
    let mechanism = parse_mechanism(flags.required("mechanism")?)?;
    let direction = match flags.optional("direction").unwrap_or("maximal") {
        "maximal" => Direction::Maximal,
        "minimal" => Direction::Minimal,
        other => return Err(format!("unknown direction '{other}'")),
    };
    let config = ClearingConfig::new(direction, mechanism);
    match picard_clearing(&scenario, &config) {
        Ok(report) => {
            print!("{}", report_text(&scenario, &report));
            if let Some(path) = flags.optional("out") {
                write_atomic(Path::new(path), &per_bank_csv(&scenario, &report))?;
            }
            Ok(0)
        }
        Err(ClearingError::IterationLimit { last }) => {
            eprintln!("did not converge within the iteration cap");
            eprint!("{}", report_text(&scenario, &last));
            Ok(EXIT_NO_CONVERGENCE)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_sweep(flags: &Flags) -> Result<i32, String> {
    let scenario = load_scenario(flags.required("scenario")?)?;
    let mechanisms = flags
        .required("mechanisms")?
        .split(',')
        .map(parse_mechanism)
        .collect::<Result<Vec<_>, _>>()?;
    if mechanisms.is_empty() {
        return Err("no mechanisms given".into());
    }
    let from = flags.number("r-from")?;
    let to = flags.number("r-to")?;
    let steps = flags.integer("r-steps")?;
    if steps == 0 {
        return Err("'--r-steps' must be at least 1".into());
    }
    if from < 0.0 || to < from {
        return Err("need 0 <= r-from <= r-to".into());
    }
    let rates: Vec<f64> = if steps == 1 {
        vec![from]
    } else {
        (0..steps)
            .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
            .collect()
    };
    let rows = rate_sweep(&scenario, &rates, &mechanisms);
    let csv = sweep_csv(&rows);
    match flags.optional("out") {
        Some(path) => write_atomic(Path::new(path), &csv)?,
        None => print!("{csv}"),
    }
    if rows.iter().all(|r| r.converged) {
        Ok(0)
    } else {
        eprintln!("some sweep rows did not converge");
        Ok(EXIT_NO_CONVERGENCE)
    }
}

fn print_sensitivity(report: &SensitivityReport) {
    println!("dq_dr: {}", sig12(report.dq_dr));
    println!(
        "dqbar_dr: {}",
        report
            .dqbar_dr
            .iter()
            .map(|v| sig12(*v))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!(
        "ds_dr: {}",
        report
            .ds_dr
            .iter()
            .map(|v| sig12(*v))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("dtotal_dr: {}", sig12(report.dtotal_dr));
    println!(
        "regimes: {}",
        report
            .regimes
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
}

fn cmd_sensitivity(flags: &Flags) -> Result<i32, String> {
    let scenario = load_scenario(flags.required("scenario")?)?;
    let mechanism = parse_mechanism(flags.required("mechanism")?)?;
    let config = ClearingConfig::maximal(mechanism);
    let report = match picard_clearing(&scenario, &config) {
        Ok(report) => report,
        Err(ClearingError::IterationLimit { .. }) => {
            eprintln!("clearing did not converge; no sensitivity available");
            return Ok(EXIT_NO_CONVERGENCE);
        }
        Err(e) => return Err(e.to_string()),
    };
    let sensitivity = match mechanism {
        Mechanism::Vwap => sensitivity_vwap(&scenario, &report),
        Mechanism::Lob => sensitivity_lob(&scenario, &report),
    }
    .map_err(|e| e.to_string())?;
    println!("mechanism: {mechanism}");
    print_sensitivity(&sensitivity);

    if flags.has_switch("fd-check") {
        let dr = 1e-6;
        let run = |rate: f64| -> Result<EquilibriumReport, String> {
            let sc = scenario.with_rate(rate).map_err(|e| e.to_string())?;
            picard_clearing(&sc, &config).map_err(|e| e.to_string())
        };
        let lo_rate = (scenario.repo_rate() - dr).max(0.0);
        let up = run(scenario.repo_rate() + dr)?;
        let dn = run(lo_rate)?;
        let width = scenario.repo_rate() + dr - lo_rate;
        let fd_q = (up.prices.q() - dn.prices.q()) / width;
        let fd_total = (up.liquidations.total() - dn.liquidations.total()) / width;
        println!("fd_dq_dr: {}", sig12(fd_q));
        println!("fd_dtotal_dr: {}", sig12(fd_total));
        println!(
            "fd_dqbar_dr: {}",
            up.prices
                .qbar()
                .iter()
                .zip(dn.prices.qbar())
                .map(|(a, b)| sig12((a - b) / width))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    Ok(0)
}

fn cmd_validate(flags: &Flags) -> Result<i32, String> {
    let scenario = load_scenario(flags.required("scenario")?)?;
    let report = validate_scenario(&scenario);
    for finding in &report.findings {
        println!(
            "check {}: {} ({})",
            finding.name,
            if finding.passed { "PASS" } else { "FAIL" },
            finding.detail
        );
    }
    for mechanism in [Mechanism::Vwap, Mechanism::Lob] {
        let solvency = fundamental_solvency(&scenario, mechanism);
        let rendered: Vec<String> = scenario
            .banks()
            .iter()
            .zip(&solvency)
            .map(|(bank, ok)| format!("{}={}", bank.id(), ok))
            .collect();
        println!("fundamental_solvency[{mechanism}]: {}", rendered.join(" "));
        let check = uniqueness_condition(&scenario, mechanism);
        println!(
            "uniqueness[{mechanism}]: holds={} lhs={} rhs={} all_solvent={}",
            check.holds,
            sig12(check.lhs),
            sig12(check.rhs),
            check.all_fundamentally_solvent
        );
    }
    Ok(if report.all_passed() { 0 } else { EXIT_USAGE })
}

fn cmd_symmetric(flags: &Flags) -> Result<i32, String> {
    let n = flags.integer("n")?;
    let assets = flags.number("a")?;
    let shortfall = flags.number("h")?;
    let rate = flags.number("r")?;
    let alpha = flags.number("alpha")?;
    let mechanism = parse_mechanism(flags.required("mechanism")?)?;
    let sym =
        SymmetricScenario::new(n, assets, shortfall, rate, alpha).map_err(|e| e.to_string())?;
    let solution = symmetric_solve(&sym, mechanism);
    println!("region: {}", solution.region);
    println!("q: {}", sig12(solution.q));
    println!("qbar: {}", sig12(solution.qbar));
    println!("s: {}", sig12(solution.s));
    println!(
        "borrowing_per_bank: {}",
        sig12(shortfall - solution.s * solution.qbar)
    );
    Ok(0)
}

fn cmd_calibrate(flags: &Flags) -> Result<i32, String> {
    let path = flags.required("eba-csv")?;
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read '{path}': {e}"))?;
    let records = parse_balance_sheet_csv(&text).map_err(|e| e.to_string())?;
    let mut policy = CalibrationPolicy::default();
    if let Some(omega) = flags.optional("omega") {
        policy.shortfall_fraction = omega
            .parse()
            .map_err(|_| format!("flag '--omega' is not a number: '{omega}'"))?;
    }
    if let Some(gamma) = flags.optional("gamma") {
        policy.haircut_intercept = gamma
            .parse()
            .map_err(|_| format!("flag '--gamma' is not a number: '{gamma}'"))?;
    }
    if let Some(rate) = flags.optional("rate") {
        policy.repo_rate = rate
            .parse()
            .map_err(|_| format!("flag '--rate' is not a number: '{rate}'"))?;
    }
    let calibration = calibrate_eba(&records, &policy).map_err(|e| e.to_string())?;
    for warning in &calibration.warnings {
        eprintln!("warning: {warning}");
    }
    let text = emit_scenario(&calibration.scenario);
    match flags.optional("out") {
        Some(path) => write_atomic(Path::new(path), &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

/// Runs the CLI; returns the process exit status.
pub fn run(args: &[String]) -> i32 {
    let Some(command) = args.first() else {
        eprint!("{USAGE}");
        return EXIT_USAGE;
    };
    let flag_args = &args[1..];
    let parsed = match command.as_str() {
        "sensitivity" => Flags::parse(flag_args, &["fd-check"]),
        _ => Flags::parse(flag_args, &[]),
    };
    let flags = match parsed {
        Ok(flags) => flags,
        Err(message) => {
            eprintln!("error: {message}");
            eprint!("{USAGE}");
            return EXIT_USAGE;
        }
    };
    let outcome = match command.as_str() {
        "solve" => cmd_solve(&flags),
        "sweep" => cmd_sweep(&flags),
        "sensitivity" => cmd_sensitivity(&flags),
        "validate" => cmd_validate(&flags),
        "symmetric" => cmd_symmetric(&flags),
        "calibrate" => cmd_calibrate(&flags),
        other => {
            eprintln!("error: unknown command '{other}'");
            eprint!("{USAGE}");
            return EXIT_USAGE;
        }
    };
    match outcome {
        Ok(status) => status,
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
    }
}
