//! Command-line driver: scenario runs, parameter sweeps, bound reports and
//! self-verification.
//!
//! Exit codes: 0 success, 1 verification failed, 2 configuration error,
//! 3 numerical failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use stirap::bounds::{
    dyson_bound_with, dyson_truncation_order, eqtrans_total_bound_with, first_order_bound_with,
    sequence_bound, BoundReport,
};
use stirap::config::{check_tol, Scenario, SweepAxis};
use stirap::io::{push_packet_row, save_structured, trajectory_table, Cell, Table, TRAJECTORY_COLUMNS};
use stirap::model::{GaussianPacket, MomentumGrid, StirapStep};
use stirap::propagator::{ensemble_efficiencies, oracle_packet, slice_run, IntegrationFrame, OraclePacket};
use stirap::verify::{run_checks, CHECKS};
use stirap::wavepacket::run_sequence;
use stirap::{Error, ErrorCategory};

/// Default output directory when neither `--out`, `STIRAP_OUT_DIR` nor the
/// scenario names one.
const DEFAULT_OUT_DIR: &str = "stirap-out";

// ============================================================================
// Arguments
// ============================================================================

#[derive(Debug, Parser)]
#[command(name = "stirap", version, about = "STIRAP deceleration/acceleration of Gaussian wave packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = "STIRAP_OUT_DIR")]
    out: Option<PathBuf>,
    /// Integrator tolerance, overriding the scenario.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Run even if the scenario fails physical validation.
    #[arg(long, global = true)]
    force: bool,
    /// Integration frame(s).
    #[arg(long, global = true, value_enum)]
    frames: Option<Frames>,
    /// Seed of randomized checks, overriding the scenario.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Frames {
    Rotating,
    Adiabatic,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate the packet through the plan: closed form and grid oracle.
    Run,
    /// Sweep one parameter of the first step and tabulate bounds and deviations.
    Sweep {
        /// Swept quantity, overriding the scenario.
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        /// Ladder values, overriding the scenario.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Evaluate every bound for every step.
    Bounds,
    /// Run the named self-checks; exit 1 if any fails.
    Verify {
        /// Print the check names and exit.
        #[arg(long)]
        list: bool,
        /// Run only these checks (repeatable).
        #[arg(long = "check", value_name = "NAME")]
        checks: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Dpm,
    OmegaScale,
    Duration,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Dpm => SweepAxis::Dpm,
            Axis::OmegaScale => SweepAxis::OmegaScale,
            Axis::Duration => SweepAxis::Duration,
        }
    }
}

// ============================================================================
// Failure mapping
// ============================================================================

/// A command failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.category() {
            ErrorCategory::Config | ErrorCategory::Io => 2,
            ErrorCategory::Numerical => 3,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let kind = if f.code == 3 { "numerical failure" } else { "config error" };
            eprintln!("stirap: {kind}: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> CmdResult {
    if let Command::Verify { list: true, .. } = cli.command {
        for c in CHECKS {
            println!("{:<20} {}", c.name, c.description);
        }
        return Ok(0);
    }
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    let scenario = load(&cli.common)?;
    if !cli.common.force {
        let report = scenario.validate();
        if !report.is_empty() {
            return Err(Failure::config(format!(
                "scenario failed validation (use --force to run anyway):\n{}",
                report.to_string().trim_end()
            )));
        }
    }
    let out = out_dir(&cli.common, &scenario);
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::config(format!("cannot create {}: {e}", out.display())))?;
    let frames = frame_list(cli.common.frames, scenario.frame);
    match &cli.command {
        Command::Run => cmd_run(&scenario, &out, &frames),
        Command::Sweep { axis, values } => {
            let axis = axis.map(SweepAxis::from).unwrap_or(scenario.config.sweep.axis);
            let values = values.clone().unwrap_or_else(|| scenario.config.sweep.values.clone());
            cmd_sweep(&scenario, &out, axis, &values)
        }
        Command::Bounds => cmd_bounds(&scenario, &out),
        Command::Verify { checks, .. } => cmd_verify(&scenario, &out, checks),
    }
}

fn load(common: &Common) -> std::result::Result<Scenario, Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::config("--config PATH is required"))?;
    let mut scenario = Scenario::load(path)?;
    if let Some(tol) = common.tol {
        check_tol(tol)?;
        scenario = scenario.with_tol(tol)?;
    }
    if let Some(seed) = common.seed {
        scenario.config.seed = seed;
    }
    Ok(scenario)
}

fn out_dir(common: &Common, scenario: &Scenario) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| scenario.config.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn frame_list(flag: Option<Frames>, default: IntegrationFrame) -> Vec<IntegrationFrame> {
    match flag {
        None => vec![default],
        Some(Frames::Rotating) => vec![IntegrationFrame::Rotating],
        Some(Frames::Adiabatic) => vec![IntegrationFrame::Adiabatic],
        Some(Frames::Both) => vec![IntegrationFrame::Rotating, IntegrationFrame::Adiabatic],
    }
}

fn frame_name(f: IntegrationFrame) -> &'static str {
    match f {
        IntegrationFrame::Rotating => "rotating",
        IntegrationFrame::Adiabatic => "adiabatic",
    }
}

// ============================================================================
// run
// ============================================================================

#[derive(Debug, serde::Serialize)]
struct FrameSummary {
    frame: String,
    ensemble_efficiency: f64,
    oracle_final: GaussianPacket,
}

#[derive(Debug, serde::Serialize)]
struct RunSummary {
    scenario: String,
    steps: usize,
    slices: usize,
    tol: f64,
    initial: GaussianPacket,
    closed_form_final: GaussianPacket,
    closed_form_final_state: String,
    total_momentum_change: f64,
    frames: Vec<FrameSummary>,
    max_frame_efficiency_difference: f64,
}

fn ensemble(oracle: &OraclePacket, grid: &MomentumGrid) -> f64 {
    let total = grid.total_weight();
    grid.points
        .iter()
        .zip(&oracle.slices)
        .map(|(g, s)| g.weight * s.amplitude.norm_sqr())
        .sum::<f64>()
        / total
}

fn cmd_run(s: &Scenario, out: &Path, frames: &[IntegrationFrame]) -> CmdResult {
    let m = s.atom.mass;
    let traj = run_sequence(&s.packet, s.state, &s.plan, &s.atom, &s.flights)?;
    trajectory_table("trajectory", &traj, m).save(&out.join("trajectory.csv"))?;

    let oracles: Vec<OraclePacket> = frames
        .iter()
        .map(|&f| oracle_packet(&s.plan, &s.atom, &s.packet, &s.grid, s.tol, f))
        .collect::<stirap::Result<_>>()?;

    let mut oracle_traj = Table::new("trajectory_oracle", &TRAJECTORY_COLUMNS);
    push_packet_row(&mut oracle_traj, traj.entries[0].t, &s.packet, s.state, m);
    for (k, step) in s.plan.steps.iter().enumerate() {
        let state = step.role.final_state();
        push_packet_row(&mut oracle_traj, step.end(), &oracles[0].fitted_steps[k], state, m);
    }
    oracle_traj.save(&out.join("trajectory_oracle.csv"))?;

    let mut columns: Vec<(String, &str)> =
        vec![("p".into(), "momentum"), ("weight".into(), "-"), ("p_final".into(), "momentum")];
    for &f in frames {
        columns.push((format!("efficiency_{}", frame_name(f)), "-"));
    }
    let col_refs: Vec<(&str, &str)> = columns.iter().map(|(n, u)| (n.as_str(), *u)).collect();
    let mut eff = Table::new("slice_efficiency", &col_refs);
    let mut max_diff: f64 = 0.0;
    for (i, g) in s.grid.points.iter().enumerate() {
        let mut row: Vec<Cell> = vec![g.momentum.into(), g.weight.into(), oracles[0].slices[i].p_final.into()];
        let values: Vec<f64> = oracles.iter().map(|o| o.slices[i].amplitude.norm_sqr()).collect();
        if values.len() == 2 {
            max_diff = max_diff.max((values[0] - values[1]).abs());
        }
        row.extend(values.into_iter().map(Cell::from));
        eff.push(row);
    }
    eff.save(&out.join("slice_efficiency.csv"))?;

    let summary = RunSummary {
        scenario: s.config.name.clone().unwrap_or_default(),
        steps: s.plan.steps.len(),
        slices: s.grid.points.len(),
        tol: s.tol,
        initial: s.packet,
        closed_form_final: traj.last().packet,
        closed_form_final_state: traj.last().state.label().to_string(),
        total_momentum_change: s.plan.total_momentum_change(),
        frames: frames
            .iter()
            .zip(&oracles)
            .map(|(&f, o)| FrameSummary {
                frame: frame_name(f).to_string(),
                ensemble_efficiency: ensemble(o, &s.grid),
                oracle_final: o.fitted,
            })
            .collect(),
        max_frame_efficiency_difference: max_diff,
    };
    save_structured(&out.join("run_summary.toml"), "run-summary", &summary)?;
    for f in &summary.frames {
        println!("{:<10} ensemble efficiency {:.9}", f.frame, f.ensemble_efficiency);
    }
    if frames.len() == 2 {
        println!("max per-slice efficiency difference between frames {max_diff:e}");
    }
    println!("outputs written to {}", out.display());
    Ok(0)
}

// ============================================================================
// sweep
// ============================================================================

fn sweep_point(s: &Scenario, axis: SweepAxis, value: f64) -> stirap::Result<(StirapStep, MomentumGrid, f64)> {
    let base = &s.plan.steps[0];
    let n = s.config.sweep.points;
    let grid_with = |bandwidth: f64| {
        if bandwidth > 0.0 {
            MomentumGrid::new(&s.packet, bandwidth, n)
        } else {
            Ok(MomentumGrid::single(s.packet.momentum))
        }
    };
    match axis {
        SweepAxis::Dpm => {
            if !(value >= 0.0) {
                return Err(Error::Config(format!("dpm sweep value {value} is negative")));
            }
            Ok((base.clone(), grid_with(value)?, value))
        }
        SweepAxis::OmegaScale | SweepAxis::Duration => {
            if !(value > 0.0) {
                return Err(Error::Config(format!("{} sweep value {value} is not positive", axis.name())));
            }
            let step = if axis == SweepAxis::OmegaScale { base.with_rabi_scale(value) } else { base.stretched(value) };
            Ok((step, grid_with(s.grid.bandwidth())?, s.dpm))
        }
    }
}

fn cmd_sweep(s: &Scenario, out: &Path, axis: SweepAxis, values: &[f64]) -> CmdResult {
    if s.plan.steps.is_empty() {
        return Err(Failure::config("sweep needs at least one step"));
    }
    let mut table = Table::new(
        "sweep",
        &[
            (axis.name(), if axis == SweepAxis::Dpm { "momentum" } else { "-" }),
            ("ensemble_efficiency", "-"),
            ("dyson_bound", "-"),
            ("eqtrans_bound", "-"),
            ("measured_sup_deviation", "-"),
        ],
    );
    for &v in values {
        let (step, grid, dpm) = sweep_point(s, axis, v)?;
        let effs = ensemble_efficiencies(&step, &s.atom, &grid, s.tol, s.frame)?;
        let total = grid.total_weight();
        let efficiency = grid.points.iter().zip(&effs).map(|(g, e)| g.weight * e).sum::<f64>() / total;
        let dyson = dyson_bound_with(&step, &s.atom, dpm, &s.bound_options)?.value;
        let eqtrans = eqtrans_total_bound_with(&step, &s.atom, &grid, &s.bound_options)?.value;
        let measured = grid
            .points
            .iter()
            .map(|g| slice_run(&step, &s.atom, step.slice_label(g.momentum), s.tol).map(|r| r.max_deviation.1))
            .collect::<stirap::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        table.push(vec![v.into(), efficiency.into(), dyson.into(), eqtrans.into(), measured.into()]);
        println!(
            "{}={v}: efficiency {efficiency:.9} dyson {dyson:.4e} eqtrans {eqtrans:.4e} measured {measured:.4e}",
            axis.name()
        );
    }
    table.save(&out.join(format!("sweep_{}.csv", axis.name())))?;
    println!("outputs written to {}", out.display());
    Ok(0)
}

// ============================================================================
// bounds
// ============================================================================

#[derive(Debug, serde::Serialize)]
struct StepBounds {
    step: usize,
    truncation_order: usize,
    first_order: BoundReport,
    dyson: BoundReport,
    eqtrans_total: BoundReport,
}

#[derive(Debug, serde::Serialize)]
struct BoundsDocument {
    scenario: String,
    dpm: f64,
    sequence_bound: f64,
    steps: Vec<StepBounds>,
}

fn cmd_bounds(s: &Scenario, out: &Path) -> CmdResult {
    let mut steps = Vec::with_capacity(s.plan.steps.len());
    let mut table = Table::new(
        "bounds",
        &[
            ("step", "-"),
            ("kind", "-"),
            ("value", "-"),
            ("sup_p", "momentum"),
            ("sup_t", "time"),
            ("epsilon_target", "-"),
            ("satisfied", "-"),
        ],
    );
    let mut p_mean = s.packet.momentum;
    for (k, step) in s.plan.steps.iter().enumerate() {
        let grid = MomentumGrid::new(&GaussianPacket { momentum: p_mean, ..s.packet }, s.grid.bandwidth(), s.config.sweep.points)?;
        let entry = StepBounds {
            step: k,
            truncation_order: dyson_truncation_order(step, &s.atom, s.dpm, s.bound_options.epsilon_target)?,
            first_order: first_order_bound_with(step, &s.atom, s.dpm, &s.bound_options)?,
            dyson: dyson_bound_with(step, &s.atom, s.dpm, &s.bound_options)?,
            eqtrans_total: eqtrans_total_bound_with(step, &s.atom, &grid, &s.bound_options)?,
        };
        for r in [&entry.first_order, &entry.dyson, &entry.eqtrans_total] {
            table.push(vec![
                k.into(),
                r.kind.name().into(),
                r.value.into(),
                r.sup_p.into(),
                r.sup_t.into(),
                r.epsilon_target.into(),
                (if r.satisfied { "true" } else { "false" }).into(),
            ]);
            println!(
                "step {k} {:<14} {:.6e}  (ε_r {:e}, {})",
                r.kind.name(),
                r.value,
                r.epsilon_target,
                if r.satisfied { "satisfied" } else { "not satisfied" }
            );
        }
        steps.push(entry);
        p_mean += step.momentum_change();
    }
    let doc = BoundsDocument {
        scenario: s.config.name.clone().unwrap_or_default(),
        dpm: s.dpm,
        sequence_bound: sequence_bound(&s.plan, &s.atom, s.dpm)?,
        steps,
    };
    println!("sequence (sum of Dyson bounds) {:.6e}", doc.sequence_bound);
    table.save(&out.join("bounds.csv"))?;
    save_structured(&out.join("bounds_report.toml"), "bound-report", &doc)?;
    println!("outputs written to {}", out.display());
    Ok(0)
}

// ============================================================================
// verify
// ============================================================================

fn cmd_verify(s: &Scenario, out: &Path, checks: &[String]) -> CmdResult {
    let only = if checks.is_empty() { None } else { Some(checks) };
    let report = run_checks(s, only);
    for c in &report.checks {
        println!(
            "{} {:<20} value {:.3e} threshold {:.3e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold,
            c.detail
        );
    }
    save_structured(&out.join("verify_report.toml"), "verify-report", &report)?;
    Ok(if report.passed { 0 } else { 1 })
}
