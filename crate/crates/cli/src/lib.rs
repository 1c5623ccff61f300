//! `pnss` scenario runner: TOML in, CSV and JSON out.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod tables;

use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, CsvKind, LoadedConfig, ScenarioConfig, SweepConfig};
use crate::output::{write_csv, write_json, Table};
use crate::pipeline::{
    receive, send, transfer_report, PipelineError, ReceiveRun, ReceiverSummary, RunReport,
    Scenario, SendRun,
};
use crate::tables::{
    photonics_table, receiver_table, sender_table, summary_row, summary_table, SUMMARY_COLUMNS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_REGIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pnss", version, about = "Photon-number superposition transfer scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML). Built-in reference scenario when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding outputs.directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Exit with status 3 if any regime inequality fails.
    #[arg(long)]
    pub strict: bool,
    /// Pulse-area tolerance, overriding pulse2.tol.
    #[arg(long, value_name = "FLOAT")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dotted path of a scalar config field, or initial_state.pop_m1.
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sending node: atomic trajectory and photon observables.
    Send(CommonArgs),
    /// Receiving node driven by the sender's photons.
    Receive(CommonArgs),
    /// Full protocol with channel budget and JSON report.
    Transfer(CommonArgs),
    /// One transfer per value of a config field.
    Sweep(SweepArgs),
}

#[derive(Debug, Error)]
pub enum Failure {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("model error: {0}")]
    Model(#[from] pnss_core::ModelError),
    #[error("{0}")]
    NotConverged(String),
    #[error("regime check failed: {0}")]
    Regime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } | Self::Model(_) => EXIT_CONFIG,
            Self::NotConverged(_) => EXIT_NOT_CONVERGED,
            Self::Regime(_) => EXIT_REGIME,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(c) => Self::Config(c),
            PipelineError::Model(m) => Self::Model(m),
            e @ PipelineError::NotConverged(_) => Self::NotConverged(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |source| Failure::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads the config (or the defaults), applies `--tol`.
pub fn load_config(args: &CommonArgs) -> Result<LoadedConfig, Failure> {
    let mut loaded = match &args.config {
        Some(path) => config::load(path)?,
        None => LoadedConfig {
            config: config::parse("")?,
            sha256: config::sha256_hex(b""),
        },
    };
    if let Some(tol) = args.tol {
        loaded.config.pulse2.tol = tol;
    }
    Ok(loaded)
}

fn prepare(args: &CommonArgs) -> Result<(Scenario, PathBuf), Failure> {
    let loaded = load_config(args)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| loaded.config.outputs.directory.clone());
    let scenario = Scenario::new(loaded.config, loaded.sha256)?;
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    let failures: Vec<String> = scenario
        .regime
        .failures()
        .map(|c| format!("{} ({}): ratio {:.3} < {}", c.name, c.relation, c.ratio, c.min_ratio))
        .collect();
    for f in &failures {
        eprintln!("regime: {f}");
    }
    if args.strict && !failures.is_empty() {
        return Err(Failure::Regime(failures.join("; ")));
    }
    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    Ok((scenario, out))
}

fn wants(s: &Scenario, kind: CsvKind) -> bool {
    s.config.outputs.csv.contains(&kind)
}

fn emit(dir: &Path, name: &str, table: &Table, sha: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    write_csv(&path, table, sha).map_err(io_err(&path))
}

fn emit_sender(s: &Scenario, run: &SendRun, dir: &Path) -> Result<(), Failure> {
    if wants(s, CsvKind::Sender) {
        emit(dir, "sender.csv", &sender_table(s, run), &s.sha256)?;
    }
    if wants(s, CsvKind::Photonics) {
        emit(dir, "photonics.csv", &photonics_table(s, run), &s.sha256)?;
    }
    Ok(())
}

pub fn cmd_send(args: &CommonArgs) -> Result<SendRun, Failure> {
    let (s, dir) = prepare(args)?;
    let run = send(&s)?;
    emit_sender(&s, &run, &dir)?;
    let ph = &run.photons;
    let last = ph.grid.len() - 1;
    println!(
        "theta_final={:.6} P1={:.6} P2={:.6} n_out={:.6} ode_dev={:.3e}",
        run.trajectory.theta_final(),
        ph.p1[last],
        ph.p2[last],
        ph.n_out.last(),
        run.ode_deviation
    );
    Ok(run)
}

pub fn cmd_receive(args: &CommonArgs) -> Result<ReceiveRun, Failure> {
    let (s, dir) = prepare(args)?;
    let run = send(&s)?;
    let recv = receive(&s, &run)?;
    if wants(&s, CsvKind::Receiver) {
        emit(&dir, "receiver.csv", &receiver_table(&s, &recv), &s.sha256)?;
    }
    print_receiver(&recv);
    Ok(recv)
}

fn print_receiver(recv: &ReceiveRun) {
    let v = &recv.solve;
    println!(
        "T2={:.6} us t0={:.6} us omega2={:.6} MHz fidelity={:.9} leakage={:.3e}{}",
        v.t2_us,
        v.t0_us,
        v.omega2_mhz,
        recv.final_state.fidelity,
        recv.final_state.leakage,
        if v.used_fallback { " (fallback solve)" } else { "" }
    );
}

/// Result of `transfer`: the report is complete when the solve converged.
#[derive(Debug)]
pub struct TransferRun {
    pub report: RunReport,
    pub out_dir: PathBuf,
}

pub fn cmd_transfer(args: &CommonArgs) -> Result<TransferRun, Failure> {
    let (s, dir) = prepare(args)?;
    let run = send(&s)?;
    emit_sender(&s, &run, &dir)?;
    let mut report = RunReport::new("transfer", &s, &run);
    let report_path = dir.join("report.json");
    let recv = match receive(&s, &run) {
        Ok(r) => r,
        Err(PipelineError::NotConverged(summary)) => {
            let msg = summary.message.clone().unwrap_or_default();
            report.solve = Some(*summary);
            write_json(&report_path, &report).map_err(io_err(&report_path))?;
            return Err(Failure::NotConverged(msg));
        }
        Err(e) => return Err(e.into()),
    };
    if wants(&s, CsvKind::Receiver) {
        emit(&dir, "receiver.csv", &receiver_table(&s, &recv), &s.sha256)?;
    }
    let transfer = transfer_report(&s, &run, &recv)?;
    if wants(&s, CsvKind::Summary) {
        let row = summary_row(&s, &run, Some(&recv), Some(&transfer), &transfer.link);
        emit(&dir, "summary.csv", &summary_table(row), &s.sha256)?;
    }
    report.solve = Some(recv.solve.clone());
    report.receiver = Some(ReceiverSummary::new(&recv));
    report.transfer = Some(transfer);
    write_json(&report_path, &report).map_err(io_err(&report_path))?;
    print_receiver(&recv);
    println!(
        "weighted_success={:.6} end_to_end={:.6} phase_drift={:.3} rad",
        transfer.link.weighted_success, transfer.end_to_end_success, transfer.link.phase_drift_rad
    );
    Ok(TransferRun {
        report,
        out_dir: dir,
    })
}

fn sweep_spec(args: &SweepArgs, config: &ScenarioConfig) -> Result<SweepConfig, Failure> {
    let base = config.sweep.clone();
    let missing = |what: &str| {
        Failure::Config(ConfigError::Invalid {
            field: "sweep".into(),
            reason: format!("{what} not given on the command line or in [sweep]"),
        })
    };
    let spec = SweepConfig {
        axis: args
            .axis
            .clone()
            .or_else(|| base.as_ref().map(|b| b.axis.clone()))
            .ok_or_else(|| missing("axis"))?,
        from: args.from.or(base.as_ref().map(|b| b.from)).ok_or_else(|| missing("from"))?,
        to: args.to.or(base.as_ref().map(|b| b.to)).ok_or_else(|| missing("to"))?,
        points: args
            .points
            .or(base.as_ref().map(|b| b.points))
            .ok_or_else(|| missing("points"))?,
    };
    if spec.points == 0 || !spec.from.is_finite() || !spec.to.is_finite() {
        return Err(Failure::Config(ConfigError::Invalid {
            field: "sweep".into(),
            reason: "points must be >= 1 and bounds finite".into(),
        }));
    }
    Ok(spec)
}

pub fn sweep_values(spec: &SweepConfig) -> Vec<f64> {
    if spec.points == 1 {
        return vec![spec.from];
    }
    let n = spec.points - 1;
    (0..=n)
        .map(|i| spec.from + (spec.to - spec.from) * i as f64 / n as f64)
        .collect()
}

type Row = (Vec<f64>, bool);

fn sweep_point(base: &Scenario, run: Option<&(SendRun, Option<ReceiveRun>)>, cfg: ScenarioConfig) -> Result<Row, Failure> {
    let s = Scenario::new(cfg, base.sha256.clone())?;
    let owned;
    let (send_run, recv) = match run {
        Some((a, b)) => (a, b.as_ref()),
        None => {
            let a = send(&s)?;
            let b = match receive(&s, &a) {
                Ok(r) => Some(r),
                Err(PipelineError::NotConverged(_)) => None,
                Err(e) => return Err(e.into()),
            };
            owned = (a, b);
            (&owned.0, owned.1.as_ref())
        }
    };
    let link = pnss_core::link_budget(
        &s.config.channel_model()?,
        &s.config.node_efficiencies()?,
        &s.state,
        s.config.channel.phase_warning_rad,
    );
    let report = recv.map(|r| transfer_report(&s, send_run, r)).transpose()?;
    Ok((summary_row(&s, send_run, recv, report.as_ref(), &link), recv.is_some()))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Table, Failure> {
    let (s, dir) = prepare(&args.common)?;
    let spec = sweep_spec(args, &s.config)?;
    let values = sweep_values(&spec);
    let configs: Vec<ScenarioConfig> = values
        .iter()
        .map(|&v| s.config.with_scalar(&spec.axis, v))
        .collect::<Result<_, _>>()?;
    let shared = if ScenarioConfig::is_channel_axis(&spec.axis) {
        let a = send(&s)?;
        let b = match receive(&s, &a) {
            Ok(r) => Some(r),
            Err(PipelineError::NotConverged(_)) => None,
            Err(e) => return Err(e.into()),
        };
        Some((a, b))
    } else {
        None
    };
    let rows: Vec<Row> = configs
        .into_par_iter()
        .map(|cfg| sweep_point(&s, shared.as_ref(), cfg))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new();
    table.push(spec.axis.clone(), values);
    for (j, name) in SUMMARY_COLUMNS.iter().enumerate() {
        table.push(*name, rows.iter().map(|(r, _)| r[j]).collect());
    }
    emit(&dir, "sweep.csv", &table, &s.sha256)?;
    let failed = rows.iter().filter(|(_, ok)| !ok).count();
    println!("{} points, {} unconverged", rows.len(), failed);
    if failed > 0 {
        return Err(Failure::NotConverged(format!(
            "{failed} of {} sweep points did not converge",
            rows.len()
        )));
    }
    Ok(table)
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Send(a) => cmd_send(a).map(drop),
        Command::Receive(a) => cmd_receive(a).map(drop),
        Command::Transfer(a) => cmd_transfer(a).map(drop),
        Command::Sweep(a) => cmd_sweep(a).map(drop),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
