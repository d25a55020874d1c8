//! Scenario files, balance-sheet calibration, output formatting, and the CLI.

pub mod cli;
pub mod eba;
pub mod numfmt;
pub mod scenario_text;
