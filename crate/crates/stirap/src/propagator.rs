//! Brute-force propagation of single momentum slices.
//!
//! A slice is a plane-wave component of the packet; its three coupled bare
//! states evolve under the rotating-frame Hamiltonian exactly, so integrating
//! the 3×3 Schrödinger equation per slice is the reference against which the
//! closed-form packet algebra and the analytic bounds are checked.
//!
//! Four amplitude frames are supported:
//!
//! * bare `A` — Schrödinger-picture amplitudes of `|1⟩, |2⟩, |3⟩`;
//! * rotating `Ā_k = e^{iε_k t}A_k`, with `ε_k` the bare slice energies;
//! * adiabatic `a`, defined by `Ā = a₀g⁰ + a₊g⁺e^{iΛ} + a₋g⁻e^{−iΛ}`, `Λ = ∫Ω`;
//! * interaction `b₀ = a₀e^{i∫ω₀}`, `b± = a±e^{i∫ω₊}`, in which the ideal
//!   adiabatic solution is constant and `i·db/dt = M(P, t)·b`.
//!
//! All phase integrals start at the step's start time.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    adiabatic_coupling, closed_form_applicable, coefficient_set_with, eigensystem_from,
    hamiltonian_with, mixing_angle_or_limit, phases_with, StepConstants,
};
use crate::model::{AtomSpec, GaussianPacket, GroundState, MomentumGrid, SequencePlan, StirapStep};
use crate::numerics::magnus::{self, Mat3, MagnusSolution, Vec3};
use crate::numerics::quad::CumulativeIntegral;
use crate::numerics::scalar::golden_section_max;
use crate::wavepacket::{fit_momentum_amplitudes, momentum_amplitude};

/// Number of Gauss–Legendre panels in every phase-integral table.
pub const PHASE_PANELS: usize = 2048;

/// Default number of uniform deviation samples per step.
pub const DEVIATION_SAMPLES: usize = 512;

// ============================================================================
// Frames and amplitudes
// ============================================================================

/// Amplitude frame tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Schrödinger-picture bare amplitudes `A`.
    BareA,
    /// Rotating-frame amplitudes `Ā`.
    RotatingAbar,
    /// Adiabatic amplitudes `a`.
    AdiabaticA,
    /// Interaction-picture adiabatic amplitudes `b`.
    AdiabaticB,
}

/// Three amplitudes of one slice at one time, tagged with their frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeStateAmplitudes {
    /// Frame of `values`.
    pub frame: Frame,
    /// Amplitudes.
    pub values: Vec3,
    /// Slice label P.
    pub p: f64,
    /// Time.
    pub t: f64,
}

impl ThreeStateAmplitudes {
    /// Amplitudes from components.
    pub fn new(frame: Frame, values: [Complex64; 3], p: f64, t: f64) -> Self {
        Self { frame, values: Vec3::new(values[0], values[1], values[2]), p, t }
    }

    /// Squared norm `Σ|v_k|²`.
    pub fn norm_squared(&self) -> f64 {
        self.values.norm_squared()
    }

    /// Populations `|v_k|²`.
    pub fn populations(&self) -> [f64; 3] {
        [self.values[0].norm_sqr(), self.values[1].norm_sqr(), self.values[2].norm_sqr()]
    }
}

// ============================================================================
// Slice context: phase integrals and generators
// ============================================================================

/// Everything needed to evaluate generators and frame changes of one slice.
#[derive(Debug, Clone)]
pub struct SliceContext {
    step: StirapStep,
    consts: StepConstants,
    closed: bool,
    p: f64,
    integrals: CumulativeIntegral<3>,
}

impl SliceContext {
    /// Builds the context of slice `p_label`, tabulating `∫Ω`, `∫ω₀`, `∫ω₊`.
    pub fn new(step: &StirapStep, atom: &AtomSpec, p_label: f64) -> Self {
        let consts = StepConstants::new(step, atom);
        let closed = closed_form_applicable(&consts, step);
        let rates = |t: f64| {
            let c = coefficient_set_with(&consts, closed, step, p_label, t);
            [c.omega, c.rate_zero, c.rate_pm]
        };
        let integrals = CumulativeIntegral::new(&rates, step.start, step.end(), PHASE_PANELS);
        Self { step: step.clone(), consts, closed, p: p_label, integrals }
    }

    /// The step.
    pub fn step(&self) -> &StirapStep {
        &self.step
    }

    /// Slice label.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Per-step constants.
    pub fn constants(&self) -> &StepConstants {
        &self.consts
    }

    /// Whether the closed linear-in-ΔP coefficient forms are in use.
    pub fn closed_form(&self) -> bool {
        self.closed
    }

    fn rates(&self, t: f64) -> [f64; 3] {
        let c = coefficient_set_with(&self.consts, self.closed, &self.step, self.p, t);
        [c.omega, c.rate_zero, c.rate_pm]
    }

    /// `[Λ, ∫ω₀, ∫ω₊]` from the step start to `t`.
    pub fn phase_integrals(&self, t: f64) -> Result<[f64; 3]> {
        if !self.integrals.contains(t) {
            return Err(Error::MissingPhaseData { t });
        }
        Ok(self.integrals.value(&|s| self.rates(s), t))
    }

    /// Rotating-frame Hamiltonian at `t`.
    pub fn hamiltonian(&self, t: f64) -> Mat3 {
        hamiltonian_with(&self.consts, &self.step, self.p, t)
    }

    /// Adiabatic-frame coupling matrix `M(P, t)`.
    pub fn coupling(&self, t: f64) -> Mat3 {
        let coef = coefficient_set_with(&self.consts, self.closed, &self.step, self.p, t);
        let [lambda, i0, ip] = self.integrals.value(&|s| self.rates(s), t);
        adiabatic_coupling(&coef, lambda, i0 - ip)
    }

    /// Bare slice energies `(ε₀, ε₁, ε₂)`.
    pub fn bare_energies(&self) -> [f64; 3] {
        self.consts.bare_energies(self.p)
    }

    fn generator(&self, frame: Frame) -> impl Fn(f64) -> Mat3 + '_ {
        move |t| match frame {
            Frame::AdiabaticB => self.coupling(t),
            _ => self.hamiltonian(t),
        }
    }
}

// ============================================================================
// Frame transformations
// ============================================================================

fn to_rotating(x: &ThreeStateAmplitudes, ctx: &SliceContext) -> Result<Vec3> {
    let t = x.t;
    let v = x.values;
    match x.frame {
        Frame::RotatingAbar => Ok(v),
        Frame::BareA => {
            let e = ctx.bare_energies();
            Ok(Vec3::new(
                v[0] * Complex64::from_polar(1.0, e[0] * t),
                v[1] * Complex64::from_polar(1.0, e[1] * t),
                v[2] * Complex64::from_polar(1.0, e[2] * t),
            ))
        }
        Frame::AdiabaticA | Frame::AdiabaticB => {
            let [lambda, i0, ip] = ctx.phase_integrals(t)?;
            let a = if x.frame == Frame::AdiabaticB {
                Vec3::new(
                    v[0] * Complex64::from_polar(1.0, -i0),
                    v[1] * Complex64::from_polar(1.0, -ip),
                    v[2] * Complex64::from_polar(1.0, -ip),
                )
            } else {
                v
            };
            let eig = eigensystem_from(
                &mixing_angle_or_limit(&ctx.step, t),
                &phases_with(&ctx.consts, &ctx.step, ctx.p, t),
            );
            Ok(eig.g0 * a[0]
                + eig.g_plus * (a[1] * Complex64::from_polar(1.0, lambda))
                + eig.g_minus * (a[2] * Complex64::from_polar(1.0, -lambda)))
        }
    }
}

fn from_rotating(abar: Vec3, target: Frame, t: f64, ctx: &SliceContext) -> Result<Vec3> {
    match target {
        Frame::RotatingAbar => Ok(abar),
        Frame::BareA => {
            let e = ctx.bare_energies();
            Ok(Vec3::new(
                abar[0] * Complex64::from_polar(1.0, -e[0] * t),
                abar[1] * Complex64::from_polar(1.0, -e[1] * t),
                abar[2] * Complex64::from_polar(1.0, -e[2] * t),
            ))
        }
        Frame::AdiabaticA | Frame::AdiabaticB => {
            let [lambda, i0, ip] = ctx.phase_integrals(t)?;
            let eig = eigensystem_from(
                &mixing_angle_or_limit(&ctx.step, t),
                &phases_with(&ctx.consts, &ctx.step, ctx.p, t),
            );
            let a = Vec3::new(
                eig.g0.dotc(&abar),
                eig.g_plus.dotc(&abar) * Complex64::from_polar(1.0, -lambda),
                eig.g_minus.dotc(&abar) * Complex64::from_polar(1.0, lambda),
            );
            if target == Frame::AdiabaticA {
                Ok(a)
            } else {
                Ok(Vec3::new(
                    a[0] * Complex64::from_polar(1.0, i0),
                    a[1] * Complex64::from_polar(1.0, ip),
                    a[2] * Complex64::from_polar(1.0, ip),
                ))
            }
        }
    }
}

/// Re-expresses `x` in `target`, using the slice context for all phase data.
///
/// Fails with [`Error::MissingPhaseData`] when `x.t` is outside the step or
/// the context belongs to a different slice.
pub fn frame_transform(
    x: &ThreeStateAmplitudes,
    target: Frame,
    ctx: &SliceContext,
) -> Result<ThreeStateAmplitudes> {
    if x.frame == target {
        return Ok(*x);
    }
    if (x.p - ctx.p).abs() > 1e-12 * ctx.p.abs().max(1.0) {
        return Err(Error::MissingPhaseData { t: x.t });
    }
    let abar = to_rotating(x, ctx)?;
    let values = from_rotating(abar, target, x.t, ctx)?;
    Ok(ThreeStateAmplitudes { frame: target, values, p: x.p, t: x.t })
}

// ============================================================================
// Integration
// ============================================================================

/// Accepted integration steps of one slice in one frame.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Frame of every state.
    pub frame: Frame,
    /// State at every accepted step boundary.
    pub states: Vec<ThreeStateAmplitudes>,
    /// Rejected trial steps.
    pub rejected_steps: usize,
    /// Largest `|‖ψ(t)‖² − ‖ψ(t₀)‖²|` over accepted steps.
    pub max_norm_drift: f64,
    solution: MagnusSolution,
}

impl Trajectory {
    /// Final state.
    pub fn last(&self) -> &ThreeStateAmplitudes {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Dense output at any `t` inside the step.
    pub fn dense(&self, ctx: &SliceContext, t: f64) -> ThreeStateAmplitudes {
        let g = ctx.generator(self.frame);
        ThreeStateAmplitudes { frame: self.frame, values: self.solution.dense(&g, t), p: ctx.p, t }
    }
}

fn check_integration_inputs(init: &ThreeStateAmplitudes, frame: Frame, step: &StirapStep, tol: f64) -> Result<()> {
    if init.frame != frame {
        return Err(Error::invalid("integrate", format!("initial state must be in frame {frame:?}")));
    }
    if (init.norm_squared() - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("integrate", "initial state must be normalized"));
    }
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(Error::invalid("integrate", "tol must lie in [1e-14, 1e-6]"));
    }
    if (init.t - step.start).abs() > 1e-12 * step.duration.max(step.start.abs()) {
        return Err(Error::invalid("integrate", "initial state must be given at the step start"));
    }
    Ok(())
}

fn integrate_in(ctx: &SliceContext, init: &ThreeStateAmplitudes, frame: Frame, tol: f64) -> Result<Trajectory> {
    check_integration_inputs(init, frame, &ctx.step, tol)?;
    let g = ctx.generator(frame);
    let sol = magnus::integrate(&g, ctx.step.start, ctx.step.end(), init.values, tol)?;
    let states = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, &v)| ThreeStateAmplitudes { frame, values: v, p: ctx.p, t })
        .collect();
    Ok(Trajectory {
        frame,
        states,
        rejected_steps: sol.rejected,
        max_norm_drift: sol.max_norm_drift,
        solution: sol,
    })
}

/// Integrates `i·dĀ/dt = H(P, t)·Ā` over the step from a rotating-frame state.
pub fn integrate_rotating(
    step: &StirapStep,
    atom: &AtomSpec,
    p_label: f64,
    init: &ThreeStateAmplitudes,
    tol: f64,
) -> Result<Trajectory> {
    integrate_in(&SliceContext::new(step, atom, p_label), init, Frame::RotatingAbar, tol)
}

/// Integrates `i·db/dt = M(P, t)·b` over the step from an interaction-frame state.
pub fn integrate_adiabatic_frame(
    step: &StirapStep,
    atom: &AtomSpec,
    p_label: f64,
    init: &ThreeStateAmplitudes,
    tol: f64,
) -> Result<Trajectory> {
    integrate_in(&SliceContext::new(step, atom, p_label), init, Frame::AdiabaticB, tol)
}

/// [`integrate_rotating`] / [`integrate_adiabatic_frame`] with a prepared context.
pub fn integrate_with(ctx: &SliceContext, init: &ThreeStateAmplitudes, tol: f64) -> Result<Trajectory> {
    integrate_in(ctx, init, init.frame, tol)
}

// ============================================================================
// Slice runs
// ============================================================================

/// Frame in which a slice is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationFrame {
    /// Rotating frame `Ā`.
    Rotating,
    /// Interaction-picture adiabatic frame `b`.
    Adiabatic,
}

/// Options of [`slice_run_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOptions {
    /// Integration frame.
    pub frame: IntegrationFrame,
    /// Uniform deviation samples (accepted-step endpoints are always added).
    pub samples: usize,
    /// Refine the sampled maximum by golden-section search.
    pub refine_peak: bool,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self { frame: IntegrationFrame::Rotating, samples: DEVIATION_SAMPLES, refine_peak: true }
    }
}

/// Outcome of integrating one slice through one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceResult {
    /// Slice label P.
    pub p: f64,
    /// Final bare-frame amplitudes.
    pub final_state: ThreeStateAmplitudes,
    /// Sampled `(t, ‖b(t) − b(t₀)‖)` in time order.
    pub deviation_history: Vec<(f64, f64)>,
    /// Largest deviation (after refinement) and where it occurs.
    pub max_deviation: (f64, f64),
    /// Transfer efficiency `|A₂(t_f)|²`.
    pub efficiency: f64,
    /// Largest sampled intermediate-state population `|Ā₁|²`.
    pub max_excited_population: f64,
    /// Largest norm drift over accepted steps.
    pub max_norm_drift: f64,
}

/// Initial bare state `|1⟩` at the step start.
pub fn initial_bare_state(step: &StirapStep, p_label: f64) -> ThreeStateAmplitudes {
    ThreeStateAmplitudes::new(
        Frame::BareA,
        [Complex64::from(1.0), Complex64::from(0.0), Complex64::from(0.0)],
        p_label,
        step.start,
    )
}

/// Runs one slice in the rotating frame with default sampling.
pub fn slice_run(step: &StirapStep, atom: &AtomSpec, p_label: f64, tol: f64) -> Result<SliceResult> {
    slice_run_with(step, atom, p_label, tol, &SliceOptions::default())
}

/// Integrates slice `p_label` from `|1⟩`, recording transfer efficiency and
/// the deviation `‖b(t) − b(t₀)‖` from the ideal adiabatic solution.
pub fn slice_run_with(
    step: &StirapStep,
    atom: &AtomSpec,
    p_label: f64,
    tol: f64,
    options: &SliceOptions,
) -> Result<SliceResult> {
    let ctx = SliceContext::new(step, atom, p_label);
    let frame = match options.frame {
        IntegrationFrame::Rotating => Frame::RotatingAbar,
        IntegrationFrame::Adiabatic => Frame::AdiabaticB,
    };
    let init = frame_transform(&initial_bare_state(step, p_label), frame, &ctx)?;
    let traj = integrate_with(&ctx, &init, tol)?;
    let b0 = frame_transform(&init, Frame::AdiabaticB, &ctx)?.values;

    let observe = |x: &ThreeStateAmplitudes| -> Result<(f64, f64)> {
        let b = frame_transform(x, Frame::AdiabaticB, &ctx)?;
        let abar = frame_transform(x, Frame::RotatingAbar, &ctx)?;
        Ok(((b.values - b0).norm(), abar.values[1].norm_sqr()))
    };

    let n = options.samples.max(2);
    let mut times: Vec<f64> = (0..=n)
        .map(|i| step.start + step.duration * i as f64 / n as f64)
        .collect();
    times.extend(traj.states.iter().map(|s| s.t));
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * step.duration);
    let mut history = Vec::with_capacity(times.len());
    let mut max_excited: f64 = 0.0;
    for &t in &times {
        let (dev, pop) = observe(&traj.dense(&ctx, t))?;
        history.push((t, dev));
        max_excited = max_excited.max(pop);
    }
    let (imax, &(tmax, dmax)) = history
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("history is non-empty");
    let mut max_deviation = (tmax, dmax);
    if options.refine_peak && history.len() > 2 {
        let lo = history[imax.saturating_sub(1)].0;
        let hi = history[(imax + 1).min(history.len() - 1)].0;
        let f = |t: f64| observe(&traj.dense(&ctx, t)).map(|v| v.0).unwrap_or(0.0);
        let (t_ref, d_ref) = golden_section_max(f, lo, hi, 1e-9 * step.duration);
        if d_ref > dmax {
            max_deviation = (t_ref, d_ref);
        }
    }
    let final_state = frame_transform(traj.last(), Frame::BareA, &ctx)?;
    Ok(SliceResult {
        p: p_label,
        efficiency: final_state.values[2].norm_sqr(),
        final_state,
        deviation_history: history,
        max_deviation,
        max_excited_population: max_excited,
        max_norm_drift: traj.max_norm_drift,
    })
}

/// Final bare amplitudes of slice `p_label` started in `|1⟩`, without
/// deviation sampling.
pub fn slice_final_state(
    step: &StirapStep,
    atom: &AtomSpec,
    p_label: f64,
    tol: f64,
    frame: IntegrationFrame,
) -> Result<ThreeStateAmplitudes> {
    let ctx = SliceContext::new(step, atom, p_label);
    let target = match frame {
        IntegrationFrame::Rotating => Frame::RotatingAbar,
        IntegrationFrame::Adiabatic => Frame::AdiabaticB,
    };
    let init = frame_transform(&initial_bare_state(step, p_label), target, &ctx)?;
    let traj = integrate_with(&ctx, &init, tol)?;
    frame_transform(traj.last(), Frame::BareA, &ctx)
}

/// Weighted transfer efficiency `Σ w(p)·|A₂(p, t_f)|²` of one step over a
/// grid of packet momenta. Slices run in parallel; the sum is taken in grid
/// order so the result is deterministic.
pub fn ensemble_efficiency(step: &StirapStep, atom: &AtomSpec, grid: &MomentumGrid, tol: f64) -> Result<f64> {
    let effs = ensemble_efficiencies(step, atom, grid, tol, IntegrationFrame::Rotating)?;
    Ok(grid.points.iter().zip(&effs).map(|(g, e)| g.weight * e).sum())
}

/// Per-slice efficiencies of one step in grid order.
pub fn ensemble_efficiencies(
    step: &StirapStep,
    atom: &AtomSpec,
    grid: &MomentumGrid,
    tol: f64,
    frame: IntegrationFrame,
) -> Result<Vec<f64>> {
    grid.points
        .par_iter()
        .map(|g| {
            slice_final_state(step, atom, step.slice_label(g.momentum), tol, frame)
                .map(|s| s.values[2].norm_sqr())
        })
        .collect()
}

// ============================================================================
// Multi-step slices
// ============================================================================

/// Main-channel amplitude of one packet momentum through a whole plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSliceResult {
    /// Initial packet momentum.
    pub p_initial: f64,
    /// Final packet momentum of the main channel.
    pub p_final: f64,
    /// Schrödinger-picture amplitude of the main channel at the plan end,
    /// including free-flight phases between steps.
    pub amplitude: Complex64,
    /// Efficiency of each step.
    pub step_efficiencies: Vec<f64>,
    /// `(momentum, amplitude)` of the main channel after each step.
    pub chain: Vec<(f64, Complex64)>,
    /// Internal state at the end.
    pub final_state: GroundState,
}

/// Chains the target amplitude of every step for packet momentum `p`.
///
/// Population left outside the main channel carries different momenta and is
/// not coupled back by later steps; it is dropped from the chain.
pub fn plan_slice_run(
    plan: &SequencePlan,
    atom: &AtomSpec,
    p: f64,
    tol: f64,
    frame: IntegrationFrame,
) -> Result<PlanSliceResult> {
    let mut amp = Complex64::from(1.0);
    let mut momentum = p;
    let mut effs = Vec::with_capacity(plan.steps.len());
    let mut chain = Vec::with_capacity(plan.steps.len());
    let mut state = plan.steps.first().map(|s| s.role.initial_state()).unwrap_or(GroundState::G0);
    for (i, step) in plan.steps.iter().enumerate() {
        if i > 0 {
            let gap = step.start - plan.steps[i - 1].end();
            let energy = momentum * momentum / (2.0 * atom.mass) + atom.ground_energy(state);
            amp *= Complex64::from_polar(1.0, -energy * gap / crate::units::HBAR);
        }
        let fin = slice_final_state(step, atom, step.slice_label(momentum), tol, frame)?;
        amp *= fin.values[2];
        effs.push(fin.values[2].norm_sqr());
        momentum += step.momentum_change();
        state = step.role.final_state();
        chain.push((momentum, amp));
    }
    Ok(PlanSliceResult {
        p_initial: p,
        p_final: momentum,
        amplitude: amp,
        step_efficiencies: effs,
        chain,
        final_state: state,
    })
}

/// Packet synthesized from main-channel amplitudes on a momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePacket {
    /// Per-slice plan results, in grid order.
    pub slices: Vec<PlanSliceResult>,
    /// Final momenta.
    pub momenta: Vec<f64>,
    /// Final momentum amplitudes `ρ_f(p_f) = ρ(p)·A(p)`.
    pub amplitudes: Vec<Complex64>,
    /// Gaussian fitted to the amplitudes after each step.
    pub fitted_steps: Vec<GaussianPacket>,
    /// Gaussian fitted to the final amplitudes (the initial packet for an
    /// empty plan).
    pub fitted: GaussianPacket,
}

/// Propagates every grid slice of `packet` through `plan` and fits the
/// resulting momentum amplitudes. Slices run in parallel; results keep grid
/// order.
pub fn oracle_packet(
    plan: &SequencePlan,
    atom: &AtomSpec,
    packet: &GaussianPacket,
    grid: &MomentumGrid,
    tol: f64,
    frame: IntegrationFrame,
) -> Result<OraclePacket> {
    let slices: Vec<PlanSliceResult> = grid
        .points
        .par_iter()
        .map(|g| plan_slice_run(plan, atom, g.momentum, tol, frame))
        .collect::<Result<_>>()?;
    let momenta: Vec<f64> = slices.iter().map(|s| s.p_final).collect();
    let amplitudes: Vec<Complex64> = slices
        .iter()
        .map(|s| momentum_amplitude(packet, atom.mass, s.p_initial) * s.amplitude)
        .collect();
    let mut fitted_steps = Vec::with_capacity(plan.steps.len());
    for k in 0..plan.steps.len() {
        let (pk, ak): (Vec<f64>, Vec<Complex64>) = slices
            .iter()
            .map(|s| (s.chain[k].0, momentum_amplitude(packet, atom.mass, s.p_initial) * s.chain[k].1))
            .unzip();
        fitted_steps.push(fit_momentum_amplitudes(&pk, &ak, atom.mass)?);
    }
    let fitted = fitted_steps.last().copied().unwrap_or(*packet);
    Ok(OraclePacket { slices, momenta, amplitudes, fitted_steps, fitted })
}
