//! The `meson-bell` command line: thresholds, scans, maximization, verdicts,
//! and pseudo-experiments with machine-readable output.
//!
//! Reports go to standard output (or `--output`) as JSON, except `scan` which
//! emits CSV rows by default and `simulate --format csv` which dumps the raw
//! event list. Identical invocations produce byte-identical output; floats are
//! serialized with 9 significant digits. JSON layouts are documented by the
//! schemas in the repository's `schema/` directory.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::chsh::{
    chsh_value, find_threshold, maximize_chsh, scan_x, verdict, ChshSettings, MaxResult,
    OptimizerOptions, VIOLATION_MARGIN,
};
use crate::correlation::{correlation, CorrelationKind};
use crate::error::Error;
use crate::model::{builtin_systems, find_system, BuiltinSystem};
use crate::montecarlo::{combine_chsh, estimate_per_setting, sample_events, SettingIndex};

/// Published reference threshold for the unitary correlation.
pub const REFERENCE_N_I: f64 = 2.6;
/// Published reference threshold for the non-unitary correlation.
pub const REFERENCE_N_II: f64 = 2.0;

#[derive(Parser)]
#[command(
    name = "meson-bell",
    version,
    about = "CHSH inequality analysis for oscillating neutral-meson pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Clone)]
struct GlobalArgs {
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Report format; csv is available for scan rows and simulate event dumps.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Upper edge of the settings search box, in mean lifetimes.
    #[arg(long = "t-max", global = true, default_value_t = 8.0)]
    t_max: f64,
    /// Optimizer seeding grid points per axis.
    #[arg(long, global = true, default_value_t = 13)]
    grid_points: usize,
    /// Bisection tolerance on x for threshold searches.
    #[arg(long, global = true, default_value_t = 1e-3)]
    tolerance: f64,
    /// Seed for pseudo-experiment generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

impl GlobalArgs {
    fn optimizer(&self) -> OptimizerOptions {
        OptimizerOptions {
            t_max: self.t_max,
            grid_points: self.grid_points,
            ..OptimizerOptions::default()
        }
    }

}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Nonunitary,
    Unitary,
    Renormalized,
}

impl From<KindArg> for CorrelationKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Nonunitary => CorrelationKind::NonUnitary,
            KindArg::Unitary => CorrelationKind::Unitary,
            KindArg::Renormalized => CorrelationKind::Renormalized,
        }
    }
}

/// Kinds that decay toward the classical bound and therefore have a threshold.
#[derive(Clone, Copy, ValueEnum)]
enum DecayingKindArg {
    Nonunitary,
    Unitary,
}

impl From<DecayingKindArg> for CorrelationKind {
    fn from(k: DecayingKindArg) -> Self {
        match k {
            DecayingKindArg::Nonunitary => CorrelationKind::NonUnitary,
            DecayingKindArg::Unitary => CorrelationKind::Unitary,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Locate the critical x where the maximized S first exceeds 2.
    Threshold {
        #[arg(long, value_enum)]
        kind: DecayingKindArg,
        /// Width asymmetry of the system.
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        /// Include the published reference values in the report.
        #[arg(long)]
        quote_paper: bool,
    },
    /// Maximize S over an inclusive, evenly spaced grid of x values.
    Scan {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        #[arg(long)]
        x_from: f64,
        #[arg(long)]
        x_to: f64,
        /// Number of grid points including both endpoints.
        #[arg(long)]
        x_steps: usize,
    },
    /// Maximize S for one parameter point or catalogued system.
    Maximize {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Mixing parameter; mutually exclusive with --system.
        #[arg(long, conflicts_with = "system")]
        x: Option<f64>,
        /// Width asymmetry; defaults to 0 when --x is given.
        #[arg(long, conflicts_with = "system")]
        y: Option<f64>,
        /// Catalogued system name: B0, K0, D0, or Bs.
        #[arg(long)]
        system: Option<String>,
    },
    /// Violation verdicts for catalogued systems (non-unitary and unitary kinds).
    Verdict {
        /// System name (B0, K0, D0, Bs) or "all".
        #[arg(default_value = "all")]
        system: String,
        /// Include the published reference values in the report.
        #[arg(long)]
        quote_paper: bool,
    },
    /// Draw a pseudo-experiment and estimate the correlations and S.
    Simulate {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Mixing parameter; mutually exclusive with --system.
        #[arg(long, conflicts_with = "system")]
        x: Option<f64>,
        /// Width asymmetry; defaults to 0 when --x is given.
        #[arg(long, conflicts_with = "system")]
        y: Option<f64>,
        /// Catalogued system name: B0, K0, D0, or Bs.
        #[arg(long)]
        system: Option<String>,
        /// Events generated per setting.
        #[arg(long, default_value_t = 100_000)]
        n_events: usize,
        #[arg(long)]
        tau_a: f64,
        #[arg(long)]
        tau_a_prime: f64,
        #[arg(long)]
        tau_b: f64,
        #[arg(long)]
        tau_b_prime: f64,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("cannot write {path}: {source} (--output)")]
    Output {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown system {name:?}: expected B0, K0, D0, Bs{or_all} ({flag})")]
    UnknownSystem {
        name: String,
        or_all: &'static str,
        flag: &'static str,
    },
    #[error("{0}")]
    Usage(String),
}

/// Binary entry point; prints errors to the error stream and maps them to a
/// nonzero exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let global = cli.global;
    match cli.command {
        Command::Threshold {
            kind,
            y,
            quote_paper,
        } => run_threshold(&global, kind.into(), y, quote_paper),
        Command::Scan {
            kind,
            y,
            x_from,
            x_to,
            x_steps,
        } => run_scan(&global, kind.into(), y, x_from, x_to, x_steps),
        Command::Maximize { kind, x, y, system } => {
            run_maximize(&global, kind.into(), x, y, system)
        }
        Command::Verdict {
            system,
            quote_paper,
        } => run_verdict(&global, &system, quote_paper),
        Command::Simulate {
            kind,
            x,
            y,
            system,
            n_events,
            tau_a,
            tau_a_prime,
            tau_b,
            tau_b_prime,
        } => run_simulate(
            &global,
            kind.into(),
            x,
            y,
            system,
            n_events,
            ChshSettings::new(tau_a, tau_a_prime, tau_b, tau_b_prime).map_err(CliError::Core)?,
        ),
    }
}

/// Either an explicit parameter point or a catalogued system.
fn resolve_target(
    x: Option<f64>,
    y: Option<f64>,
    system: Option<String>,
) -> Result<(f64, f64, Option<BuiltinSystem>), CliError> {
    match (x, system) {
        (Some(x), None) => Ok((x, y.unwrap_or(0.0), None)),
        (None, Some(name)) => {
            let found = find_system(&name).ok_or(CliError::UnknownSystem {
                name,
                or_all: "",
                flag: "--system",
            })?;
            Ok((found.system.x, found.system.y, Some(found)))
        }
        (None, None) => Err(CliError::Usage(
            "provide either --x (optionally --y) or --system".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    }
}

fn run_threshold(
    global: &GlobalArgs,
    kind: CorrelationKind,
    y: f64,
    quote_paper: bool,
) -> Result<(), CliError> {
    require_json(global, "threshold")?;
    let r = find_threshold(kind, y, global.tolerance, global.optimizer())?;
    let mut report = json!({
        "kind": kind.label(),
        "y": y,
        "tolerance": global.tolerance,
        "t_max": global.t_max,
        "grid_points": global.grid_points,
        "critical_x": r.critical_x,
        "bracket": { "x_lo": r.bracket.0, "x_hi": r.bracket.1 },
        "s_at_critical": r.s_at_critical,
        "iterations": r.iterations,
    });
    if quote_paper {
        report["reference"] = json!({ "N_I": REFERENCE_N_I, "N_II": REFERENCE_N_II });
    }
    emit_json(global, report)
}

fn scan_grid(x_from: f64, x_to: f64, x_steps: usize) -> Result<Vec<f64>, CliError> {
    if x_steps == 0 {
        return Err(CliError::Usage("--x-steps must be at least 1".into()));
    }
    if x_steps == 1 {
        return Ok(vec![x_from]);
    }
    Ok((0..x_steps)
        .map(|i| x_from + (x_to - x_from) * i as f64 / (x_steps - 1) as f64)
        .collect())
}

fn run_scan(
    global: &GlobalArgs,
    kind: CorrelationKind,
    y: f64,
    x_from: f64,
    x_to: f64,
    x_steps: usize,
) -> Result<(), CliError> {
    let grid = scan_grid(x_from, x_to, x_steps)?;
    let rows = scan_x(kind, y, &grid, global.optimizer())?;
    match global.format {
        Some(OutputFormat::Json) => {
            let rows: Vec<Value> = rows.iter().map(|(x, r)| scan_row_json(*x, r)).collect();
            emit_json(global, Value::Array(rows))
        }
        _ => {
            let mut out = String::from("x,s_max,tau_a,tau_a_prime,tau_b,tau_b_prime,converged\n");
            for (x, r) in &rows {
                let s = r.settings;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    fmt_f64(*x),
                    fmt_f64(r.s_max),
                    fmt_f64(s.tau_a),
                    fmt_f64(s.tau_a_prime),
                    fmt_f64(s.tau_b),
                    fmt_f64(s.tau_b_prime),
                    r.converged
                ));
            }
            emit_text(global, out)
        }
    }
}

fn scan_row_json(x: f64, r: &MaxResult) -> Value {
    json!({
        "x": x,
        "s_max": r.s_max,
        "settings": r.settings,
        "evaluations": r.evaluations,
        "converged": r.converged,
    })
}

fn run_maximize(
    global: &GlobalArgs,
    kind: CorrelationKind,
    x: Option<f64>,
    y: Option<f64>,
    system: Option<String>,
) -> Result<(), CliError> {
    require_json(global, "maximize")?;
    let (x, y, found) = resolve_target(x, y, system)?;
    let r = maximize_chsh(kind, x, y, global.optimizer())?;
    let mut report = json!({
        "kind": kind.label(),
        "x": x,
        "y": y,
        "t_max": global.t_max,
        "grid_points": global.grid_points,
        "s_max": r.s_max,
        "settings": r.settings,
        "evaluations": r.evaluations,
        "converged": r.converged,
    });
    if let Some(sys) = found {
        report["system"] = json!(sys.name);
    }
    emit_json(global, report)
}

fn run_verdict(global: &GlobalArgs, system: &str, quote_paper: bool) -> Result<(), CliError> {
    require_json(global, "verdict")?;
    let selected: Vec<BuiltinSystem> = if system.eq_ignore_ascii_case("all") {
        builtin_systems()
    } else {
        vec![find_system(system).ok_or(CliError::UnknownSystem {
            name: system.to_string(),
            or_all: ", or all",
            flag: "SYSTEM",
        })?]
    };

    let kinds = [CorrelationKind::NonUnitary, CorrelationKind::Unitary];
    let mut systems = Vec::new();
    for sys in &selected {
        let results = verdict(sys.system, sys.bound, &kinds, global.optimizer())?;
        systems.push(json!({
            "name": sys.name,
            "x": sys.system.x,
            "y": sys.system.y,
            "bound": sys.bound,
            "results": results,
        }));
    }
    let mut report = json!({
        "margin": VIOLATION_MARGIN,
        "t_max": global.t_max,
        "grid_points": global.grid_points,
        "systems": systems,
    });
    if quote_paper {
        report["reference"] = reference_table();
    }
    emit_json(global, report)
}

/// The published threshold values and x table quoted next to computed results.
fn reference_table() -> Value {
    let rows: Vec<Value> = builtin_systems()
        .iter()
        .map(|s| {
            json!({
                "name": s.name,
                "x": s.system.x,
                "bound": s.bound,
            })
        })
        .collect();
    json!({
        "N_I": REFERENCE_N_I,
        "N_II": REFERENCE_N_II,
        "x_values": rows,
    })
}

fn run_simulate(
    global: &GlobalArgs,
    kind: CorrelationKind,
    x: Option<f64>,
    y: Option<f64>,
    system: Option<String>,
    n_events: usize,
    settings: ChshSettings,
) -> Result<(), CliError> {
    let (x, y, found) = resolve_target(x, y, system)?;
    let events = sample_events(x, y, settings, n_events, global.seed)?;

    if global.format == Some(OutputFormat::Csv) {
        // Raw event dump for external analysis.
        let mut out = String::from("setting_index,left_outcome,right_outcome\n");
        for e in &events {
            out.push_str(&format!(
                "{},{},{}\n",
                e.setting_index.label(),
                e.left_outcome.label(),
                e.right_outcome.label()
            ));
        }
        return emit_text(global, out);
    }

    let per_setting = estimate_per_setting(&events, kind)?;
    let chsh_estimate = combine_chsh(&per_setting);
    let closed_chsh = chsh_value(kind, x, y, settings)?;

    let pairs = settings.time_pairs();
    let correlations: Vec<Value> = SettingIndex::ALL
        .iter()
        .zip(per_setting.iter())
        .zip(pairs.iter())
        .map(|((setting, est), times)| {
            let closed = correlation(kind, x, y, *times)?;
            Ok(json!({
                "setting": setting.label(),
                "value": est.value,
                "std_error": est.std_error,
                "n_used": est.n_used,
                "n_total": est.n_total,
                "closed_form": closed,
            }))
        })
        .collect::<Result<_, Error>>()?;

    let mut report = json!({
        "kind": kind.label(),
        "x": x,
        "y": y,
        "settings": settings,
        "n_per_setting": n_events,
        "seed": global.seed,
        "correlations": correlations,
        "chsh": {
            "value": chsh_estimate.value,
            "std_error": chsh_estimate.std_error,
            "n_used": chsh_estimate.n_used,
            "n_total": chsh_estimate.n_total,
            "near_zero": chsh_estimate.near_zero,
            "closed_form": closed_chsh,
        },
        // Statistical reading: the estimate exceeds 2 by more than 3 sigma.
        "violates": chsh_estimate.value - 2.0 > 3.0 * chsh_estimate.std_error,
    });
    if let Some(sys) = found {
        report["system"] = json!(sys.name);
    }
    emit_json(global, report)
}

fn require_json(global: &GlobalArgs, command: &str) -> Result<(), CliError> {
    if global.format == Some(OutputFormat::Csv) {
        return Err(CliError::Usage(format!(
            "csv output is not available for {command} (--format)"
        )));
    }
    Ok(())
}

/// Rounds to 9 significant digits; the parse back is exact for the printed
/// form, so serialization stays stable.
fn sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        v
    } else {
        format!("{v:.8e}").parse().expect("round-trip of finite float")
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{}", sig9(v))
}

fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(sig9(f)) {
                        *value = Value::Number(rounded);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn emit_json(global: &GlobalArgs, mut report: Value) -> Result<(), CliError> {
    round_numbers(&mut report);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    emit_text(global, text + "\n")
}

fn emit_text(global: &GlobalArgs, text: String) -> Result<(), CliError> {
    match &global.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| CliError::Output {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
