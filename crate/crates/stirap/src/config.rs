//! Versioned TOML scenario files.
//!
//! A scenario bundles the atom, the packet, its momentum grid, a pulse train
//! (designed from a [`PulseDesign`] or listed step by step), free-flight
//! durations, bound settings, integrator settings, output settings and a
//! sweep ladder. The file layout and units are documented in
//! `docs/config-schema.md`; [`ScenarioConfig`] mirrors it field by field.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::bounds::BoundOptions;
use crate::design::{design_plan, PulseDesign};
use crate::error::{Error, Result};
use crate::model::{
    validate_scenario_with, AtomSpec, GaussianPacket, GroundState, MomentumGrid, SequencePlan,
    StirapStep, ValidationOptions, ValidationReport,
};
use crate::propagator::IntegrationFrame;
use crate::units::UnitSystem;

/// Schema version understood by this build.
pub const CONFIG_VERSION: u32 = 1;

/// Default seed of randomized checks.
pub const DEFAULT_SEED: u64 = 20_240_601;

// ============================================================================
// File schema
// ============================================================================

/// Root of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Schema version; must equal [`CONFIG_VERSION`].
    pub version: u32,
    /// Free-form scenario name.
    #[serde(default)]
    pub name: Option<String>,
    /// Seed of randomized checks.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Unit-system parameters.
    #[serde(default)]
    pub units: UnitsConfig,
    /// Atomic level structure.
    pub atom: AtomConfig,
    /// Initial packet.
    pub packet: PacketConfig,
    /// Momentum grid.
    #[serde(default)]
    pub grid: GridConfig,
    /// Pulse train.
    pub plan: PlanConfig,
    /// Free-flight durations between steps; defaults to the plan's gaps.
    #[serde(default)]
    pub flights: Option<Vec<f64>>,
    /// Bound settings.
    #[serde(default)]
    pub bounds: BoundsConfig,
    /// Integrator settings.
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Output settings.
    #[serde(default)]
    pub output: OutputConfig,
    /// Sweep ladder.
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Verification settings.
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// `[units]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsConfig {
    /// Speed of light [length/time].
    pub speed_of_light: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self { speed_of_light: UnitSystem::default().speed_of_light }
    }
}

/// `[atom]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// Mass M [mass].
    pub mass: f64,
    /// Energy of |g₀⟩ [energy].
    pub e0: f64,
    /// Energy of |g₁⟩ [energy].
    pub e1: f64,
    /// Energy of |e⟩ [energy].
    pub e2: f64,
}

/// `[packet]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    /// Center z [length].
    #[serde(default)]
    pub center: f64,
    /// Mean momentum p [momentum].
    pub momentum: f64,
    /// (Δx)² [length²].
    pub dx2: f64,
    /// Accumulated free-spreading time [time].
    #[serde(default)]
    pub age: f64,
    /// Global phase [rad].
    #[serde(default)]
    pub phase: f64,
    /// Internal state before the first step.
    #[serde(default = "default_state")]
    pub state: GroundState,
}

fn default_state() -> GroundState {
    GroundState::G0
}

/// `[grid]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Number of momentum slices.
    pub points: usize,
    /// Truncation parameter y_M of the default bandwidth.
    pub y_m: f64,
    /// Explicit bandwidth ΔP_M [momentum]; overrides `y_m`.
    pub bandwidth: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { points: 401, y_m: 3.0, bandwidth: None }
    }
}

/// `[plan]`: either a design with step counts, or explicit `[[plan.steps]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    /// Start time of the first designed step [time].
    #[serde(default)]
    pub start: f64,
    /// Number of designed decelerating steps n_d.
    #[serde(default)]
    pub decelerating_steps: usize,
    /// Number of designed accelerating steps n_a, following the decelerating ones.
    #[serde(default)]
    pub accelerating_steps: usize,
    /// Pulse design of the designed steps.
    #[serde(default)]
    pub design: Option<PulseDesign>,
    /// Explicit steps; excludes the design fields.
    #[serde(default)]
    pub steps: Option<Vec<StirapStep>>,
}

/// `[bounds]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// Target deviation ε_r.
    pub epsilon_target: f64,
    /// Uniform mesh intervals per step.
    pub mesh_intervals: usize,
    /// Ratio below which a term counts as negligible.
    pub negligible_ratio: f64,
    /// Bandwidth ΔP_M fed to the Dyson family [momentum]; defaults to the grid's.
    pub bandwidth: Option<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        let o = BoundOptions::default();
        Self {
            epsilon_target: o.epsilon_target,
            mesh_intervals: o.mesh_intervals,
            negligible_ratio: o.negligible_ratio,
            bandwidth: None,
        }
    }
}

/// `[integrator]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Local error tolerance, in `[1e-14, 1e-6]`.
    pub tol: f64,
    /// Integration frame.
    pub frame: IntegrationFrame,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { tol: 1e-10, frame: IntegrationFrame::Rotating }
    }
}

/// `[output]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; the CLI's `--out` and `STIRAP_OUT_DIR` take precedence.
    pub directory: Option<PathBuf>,
}

/// `[verify]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Slices of the reduced oracle grid used by the packet checks.
    pub slices: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { slices: 41 }
    }
}

/// Quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Bandwidth ΔP_M [momentum].
    Dpm,
    /// Global Rabi-frequency scale factor.
    OmegaScale,
    /// Step-duration scale factor (pulse shapes stretched).
    Duration,
}

impl SweepAxis {
    /// Snake-case name.
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Dpm => "dpm",
            SweepAxis::OmegaScale => "omega_scale",
            SweepAxis::Duration => "duration",
        }
    }
}

/// `[sweep]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Swept quantity.
    pub axis: SweepAxis,
    /// Ladder values.
    pub values: Vec<f64>,
    /// Slices per ladder point.
    pub points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { axis: SweepAxis::OmegaScale, values: vec![1.0, 2.0, 4.0, 8.0], points: 21 }
    }
}

// ============================================================================
// Resolved scenario
// ============================================================================

/// A scenario with every derived object built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Parsed file.
    pub config: ScenarioConfig,
    /// Unit system.
    pub units: UnitSystem,
    /// Atom.
    pub atom: AtomSpec,
    /// Initial packet.
    pub packet: GaussianPacket,
    /// Initial internal state.
    pub state: GroundState,
    /// Momentum grid.
    pub grid: MomentumGrid,
    /// Pulse train.
    pub plan: SequencePlan,
    /// Free-flight durations between steps.
    pub flights: Vec<f64>,
    /// Bound options.
    pub bound_options: BoundOptions,
    /// Bandwidth ΔP_M of the Dyson family [momentum].
    pub dpm: f64,
    /// Integrator tolerance.
    pub tol: f64,
    /// Integration frame.
    pub frame: IntegrationFrame,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Scenario {
    /// Parses and resolves TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        Self::from_config(config)
    }

    /// Reads and resolves a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Resolves a parsed file.
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        if config.version != CONFIG_VERSION {
            return Err(config_err(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                config.version
            )));
        }
        let units = UnitSystem::new(config.units.speed_of_light);
        if !(units.speed_of_light > 0.0) {
            return Err(config_err("units.speed_of_light must be positive"));
        }
        let a = config.atom;
        let atom = AtomSpec::new(a.mass, a.e0, a.e1, a.e2)?;
        let p = config.packet;
        let packet = GaussianPacket::new(p.center, p.momentum, p.dx2, p.age, p.phase)?;

        let g = config.grid;
        let bandwidth = match g.bandwidth {
            Some(b) => b,
            None => MomentumGrid::default_bandwidth(&packet, g.y_m),
        };
        let grid = MomentumGrid::new(&packet, bandwidth, g.points)?;

        let plan = resolve_plan(&config.plan, &atom, &units, &packet, p.state)?;
        let flights = match &config.flights {
            Some(f) => {
                if f.len() != plan.gaps().len() {
                    return Err(config_err(format!(
                        "flights has {} entries but the plan has {} gaps",
                        f.len(),
                        plan.gaps().len()
                    )));
                }
                f.clone()
            }
            None => plan.gaps(),
        };

        let b = config.bounds;
        if !(b.epsilon_target > 0.0 && b.epsilon_target < 1.0) {
            return Err(config_err("bounds.epsilon_target must lie in (0, 1)"));
        }
        if b.mesh_intervals < 8 {
            return Err(config_err("bounds.mesh_intervals must be at least 8"));
        }
        if !(b.negligible_ratio > 0.0 && b.negligible_ratio < 1.0) {
            return Err(config_err("bounds.negligible_ratio must lie in (0, 1)"));
        }
        let dpm = b.bandwidth.unwrap_or(grid.bandwidth());
        if !(dpm >= 0.0) {
            return Err(config_err("bounds.bandwidth must be non-negative"));
        }
        let bound_options = BoundOptions {
            mesh_intervals: b.mesh_intervals,
            negligible_ratio: b.negligible_ratio,
            epsilon_target: b.epsilon_target,
        };
        let tol = config.integrator.tol;
        check_tol(tol)?;
        if config.verify.slices < 5 {
            return Err(config_err("verify.slices must be at least 5"));
        }
        if config.sweep.values.is_empty() || config.sweep.points < 2 {
            return Err(config_err("sweep needs at least one value and two points"));
        }
        Ok(Self {
            units,
            atom,
            packet,
            state: p.state,
            grid,
            plan,
            flights,
            bound_options,
            dpm,
            tol,
            frame: config.integrator.frame,
            config,
        })
    }

    /// Physical validation of the resolved scenario.
    pub fn validate(&self) -> ValidationReport {
        let options = ValidationOptions { units: Some(self.units), ..ValidationOptions::default() };
        validate_scenario_with(&self.atom, &self.plan, &self.packet, &self.grid, &options)
    }

    /// Copy with a different integrator tolerance.
    pub fn with_tol(&self, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        Ok(Self { tol, ..self.clone() })
    }
}

/// Accepted integrator tolerances.
pub fn check_tol(tol: f64) -> Result<()> {
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(config_err(format!("integrator tolerance {tol:e} outside [1e-14, 1e-6]")));
    }
    Ok(())
}

fn resolve_plan(
    cfg: &PlanConfig,
    atom: &AtomSpec,
    units: &UnitSystem,
    packet: &GaussianPacket,
    state: GroundState,
) -> Result<SequencePlan> {
    if let Some(steps) = &cfg.steps {
        if cfg.design.is_some() || cfg.decelerating_steps + cfg.accelerating_steps > 0 {
            return Err(config_err("plan.steps excludes plan.design and step counts"));
        }
        return Ok(SequencePlan::new(steps.clone()));
    }
    let design = cfg.design.unwrap_or_default();
    let decel = design_plan(atom, units, true, state, packet.momentum, cfg.decelerating_steps, cfg.start, &design)?;
    let n_d = cfg.decelerating_steps;
    let p_after = packet.momentum + decel.total_momentum_change();
    let state_after = if n_d % 2 == 0 { state } else { state.other() };
    let start_after = decel.end().map_or(cfg.start, |e| e + design.gap);
    let accel = design_plan(
        atom,
        units,
        false,
        state_after,
        p_after,
        cfg.accelerating_steps,
        start_after,
        &design,
    )?;
    Ok(decel.concat(&accel))
}
