//! `coexfair`: solve, tune and simulate Wi-Fi / LAA coexistence scenarios.
//!
//! Exit status: 0 on success, 1 for configuration or usage errors, 2 for
//! numerical failures (the offending scenario is echoed on stderr).

mod config;
mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coexfair_core::{
    fairness, simulate_with_log, solve_coexistence, throughput_report, Error, FairnessMode,
    LaaParams, PriorityClass, Scenario, SimConfig,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::Overrides;
use crate::output::{flatten, Format, Row, Table};

#[derive(Parser, Debug)]
#[command(name = "coexfair", version, about = "Wi-Fi / LTE-LAA coexistence throughput and fairness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML with [scenario], [wifi], [laa], [solver]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; a directory for `reproduce-figure`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Simulator seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Restrict TXOP searches to multiples of the 0.5 ms LTE slot.
    #[arg(long, global = true)]
    snap_txop_grid: bool,
    /// Keep the tabulated 25 us DL defer period for classes 1 and 2.
    #[arg(long, global = true)]
    raw_table_td: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the coupled access/collision probabilities.
    Solve,
    /// Throughput of both networks and the Wi-Fi-only baseline.
    Throughput,
    /// Tune the LAA TXOP or retransmission stage for a fairness notion.
    Fairness {
        #[arg(long, value_parser = parse_mode)]
        mode: FairnessMode,
    },
    /// Slot-level Monte Carlo simulation.
    Simulate {
        #[command(flatten)]
        horizon: HorizonArgs,
        /// Also write one line per event to this file.
        #[arg(long)]
        event_log: Option<PathBuf>,
    },
    /// Run a command over a range of one scenario variable.
    Sweep {
        #[arg(long, value_enum)]
        var: Axis,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        #[arg(long, value_enum, default_value_t = What::Solve)]
        what: What,
        /// Fairness mode when `--what fairness`.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<FairnessMode>,
        #[command(flatten)]
        horizon: HorizonArgs,
    },
    /// Write the data behind one figure, one CSV per curve.
    ReproduceFigure { figure: u32 },
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct HorizonArgs {
    /// Horizon in virtual slots after warmup.
    #[arg(long, default_value_t = 1_000_000)]
    slots: u64,
    /// Horizon in busy events instead of slots.
    #[arg(long)]
    events: Option<u64>,
    #[arg(long, default_value_t = 100)]
    warmup_events: u64,
}

impl HorizonArgs {
    fn config(self, scenario: Scenario, seed: u64) -> SimConfig {
        let mut c = match self.events {
            Some(e) => SimConfig::events(scenario, e, seed),
            None => SimConfig::slots(scenario, self.slots, seed),
        };
        c.warmup_events = self.warmup_events;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Axis {
    NPairs,
    TxopUs,
    MLaa,
    PriorityClass,
    RateW,
    RateL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum What {
    Solve,
    Throughput,
    Fairness,
    Simulate,
}

fn parse_mode(s: &str) -> Result<FairnessMode, String> {
    s.parse()
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical { error: Error, scenario: Box<Scenario> },
    Io(anyhow::Error),
}

impl Failure {
    fn numerical(error: Error, scenario: &Scenario) -> Self {
        match config::key_error(&error) {
            Some(c) => Failure::Config(c.to_string()),
            None => Failure::Numerical {
                error,
                scenario: Box::new(scenario.clone()),
            },
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::NPairs => "n_pairs",
            Axis::TxopUs => "txop_us",
            Axis::MLaa => "m_laa",
            Axis::PriorityClass => "priority_class",
            Axis::RateW => "rate_w",
            Axis::RateL => "rate_l",
        }
    }

    fn integral(self) -> bool {
        matches!(self, Axis::NPairs | Axis::MLaa | Axis::PriorityClass)
    }

    /// Scenario with this variable set to `v`.
    fn apply(self, base: &Scenario, v: f64, raw_table_td: bool) -> Result<Scenario, Failure> {
        let mut s = base.clone();
        match self {
            Axis::NPairs => {
                s.n_w = v as u32;
                s.n_l = v as u32;
                s.baseline_n = s.n_w + s.n_l;
            }
            Axis::TxopUs => s.laa.txop_us = v,
            Axis::MLaa => s.laa.m = v as u32,
            Axis::PriorityClass => {
                let pc = PriorityClass::new(v as u8, base.laa.priority_class.direction)
                    .map_err(|e| Failure::Config(format!("--from/--to: {e}")))?;
                s.laa = LaaParams {
                    e_l: base.laa.e_l,
                    d_lte_us: base.laa.d_lte_us,
                    control_symbols: base.laa.control_symbols,
                    ..LaaParams::for_class(pc, base.laa.rate_mbps, raw_table_td)
                };
            }
            Axis::RateW => s.wifi.rate_data_mbps = v,
            Axis::RateL => s.laa.rate_mbps = v,
        }
        s.validate().map_err(|e| Failure::numerical(e, &s))?;
        Ok(s)
    }

    fn key(self, v: f64) -> Value {
        if self.integral() {
            json!(v as u64)
        } else {
            json!(v)
        }
    }
}

fn sweep_values(axis: Axis, from: f64, to: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Failure::Config("--step must be positive".into()));
    }
    if !(from.is_finite() && to.is_finite() && from <= to) {
        return Err(Failure::Config("--from must not exceed --to".into()));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    let values: Vec<f64> = (0..=n).map(|i| from + i as f64 * step).collect();
    if axis.integral() && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return Err(Failure::Config(format!("{} takes non-negative whole numbers", axis.name())));
    }
    Ok(values)
}

/// Outputs of one command at one scenario.
fn evaluate(
    what: What,
    mode: Option<FairnessMode>,
    s: &Scenario,
    horizon: HorizonArgs,
    seed: u64,
) -> Result<Map<String, Value>, Failure> {
    let num = |e: Error| Failure::numerical(e, s);
    Ok(match what {
        What::Solve => flatten(&solve_coexistence(s).map_err(num)?),
        What::Throughput => flatten(&throughput_report(s).map_err(num)?),
        What::Fairness => {
            let mode = mode.ok_or_else(|| Failure::Config("--mode is required".into()))?;
            flatten(&fairness(s, mode).map_err(num)?)
        }
        What::Simulate => {
            let stats = coexfair_core::simulate(&horizon.config(s.clone(), seed)).map_err(num)?;
            flatten(&stats)
        }
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => config::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => config::ConfigFile::default(),
    };
    let ov = Overrides {
        raw_table_td: cli.raw_table_td,
        snap_txop_grid: cli.snap_txop_grid,
    };
    let base = config::resolve(&file, ov).map_err(|e| Failure::Config(e.to_string()))?;
    let out = cli.out.as_deref();
    let no_horizon = HorizonArgs {
        slots: 0,
        events: None,
        warmup_events: 0,
    };

    match cli.command {
        Command::Solve | Command::Throughput | Command::Fairness { .. } => {
            let (name, what, mode) = match cli.command {
                Command::Solve => ("solve".to_string(), What::Solve, None),
                Command::Throughput => ("throughput".to_string(), What::Throughput, None),
                Command::Fairness { mode } => (format!("fairness --mode {mode}"), What::Fairness, Some(mode)),
                _ => unreachable!(),
            };
            let values = evaluate(what, mode, &base, no_horizon, cli.seed)?;
            Table::single(&name, &base, values).emit(cli.format, out)?;
        }
        Command::Simulate { horizon, event_log } => {
            let cfg = horizon.config(base.clone(), cli.seed);
            let stats = match &event_log {
                Some(path) => {
                    let mut buf = Vec::new();
                    let stats = simulate_with_log(&cfg, &mut buf).map_err(|e| Failure::numerical(e, &base))?;
                    output::write_file(path, &String::from_utf8(buf).expect("log is ASCII"))?;
                    stats
                }
                None => coexfair_core::simulate(&cfg).map_err(|e| Failure::numerical(e, &base))?,
            };
            let mut t = Table::single(&format!("simulate --seed {}", cli.seed), &base, flatten(&stats));
            t.notes.push(format!("horizon: {:?}, warmup events: {}", cfg.horizon, cfg.warmup_events));
            t.emit(cli.format, out)?;
        }
        Command::Sweep { var, from, to, step, what, mode, horizon } => {
            if what == What::Fairness && mode.is_none() {
                return Err(Failure::Config("--mode is required with --what fairness".into()));
            }
            let values = sweep_values(var, from, to, step)?;
            let mut rows: Vec<(f64, Row)> = values
                .par_iter()
                .map(|&v| {
                    let s = var.apply(&base, v, cli.raw_table_td)?;
                    let values = evaluate(what, mode, &s, horizon, cli.seed)?;
                    Ok((v, Row { key: Some(var.key(v)), values }))
                })
                .collect::<Result<_, Failure>>()?;
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut command = format!("sweep --var {} --from {from} --to {to} --step {step} --what {what:?}", var.name());
            if let Some(m) = mode {
                command.push_str(&format!(" --mode {m}"));
            }
            let t = Table {
                command: command.to_lowercase(),
                notes: vec![format!("{} varies by row; the scenario below shows the base values", var.name())],
                scenario: base,
                sweep: Some(var.name().to_string()),
                rows: rows.into_iter().map(|(_, r)| r).collect(),
            };
            t.emit(cli.format, out)?;
        }
        Command::ReproduceFigure { figure } => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("fig{figure}")));
            let written = figures::reproduce(figure, &base, cli.raw_table_td, cli.format, &dir)?;
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical { error, scenario }) => {
            eprintln!("numerical failure: {error}");
            eprintln!("scenario:");
            eprint!("{}", config::echo_toml(&scenario));
            ExitCode::from(2)
        }
    }
}
