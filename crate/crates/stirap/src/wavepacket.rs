//! Closed-form Gaussian-packet transport.
//!
//! A packet is stored through its centre `z`, mean momentum `p`, complex
//! linewidth `W = (Δx)² + iħ·T_acc/(2M)` and global phase `φ`, with position
//! and momentum amplitudes
//!
//! ```text
//! Ψ(x) = e^{iφ} [(Δx)²/2π]^{1/4} W^{-1/2} exp[−(x−z)²/(4W)] e^{ipx/ħ}
//! ρ(p') = e^{iφ} [2(Δx)²/π]^{1/4} exp[−q²W] e^{−iqz},   q = (p' − p)/ħ.
//! ```
//!
//! Ideal adiabatic STIRAP steps and free flight map this family onto itself,
//! which gives exact recursions for whole pulse trains and for the spacing of
//! successive packets fed through the same train.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hamiltonian::{mixing_angle_or_limit, StepConstants};
use crate::model::{AtomSpec, GaussianPacket, GroundState, SequencePlan, StirapStep};
use crate::numerics::quad;
use crate::units::HBAR;

/// Absolute tolerance of the pulse-area quadratures.
const QUAD_TOL: f64 = 1e-12;

// ============================================================================
// Amplitudes and truncation
// ============================================================================

/// Momentum-space amplitude `ρ(p')`, normalized per unit wave number.
pub fn momentum_amplitude(packet: &GaussianPacket, mass: f64, p: f64) -> Complex64 {
    let q = (p - packet.momentum) / HBAR;
    let w = packet.linewidth(mass);
    let norm = (2.0 * packet.dx2 / PI).powf(0.25);
    norm * (Complex64::i() * (packet.phase - q * packet.center) - q * q * w).exp()
}

/// Position-space amplitude `Ψ(x)`.
pub fn position_amplitude(packet: &GaussianPacket, mass: f64, x: f64) -> Complex64 {
    let w = packet.linewidth(mass);
    let d = x - packet.center;
    let norm = (packet.dx2 / (2.0 * PI)).powf(0.25);
    norm / w.sqrt()
        * (Complex64::i() * (packet.phase + packet.momentum * x / HBAR) - d * d / (4.0 * w)).exp()
}

/// Probability outside a momentum band and its two-sided analytic bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationProbability {
    /// Band edge in reduced units, `y_M = ΔP_M·Δx/(√2·ħ)`.
    pub y_m: f64,
    /// `erfc(y_M)`.
    pub exact: f64,
    /// `(2/√π)·e^{−y²}/(y + √(y² + 2))`.
    pub lower: f64,
    /// `(2/√π)·e^{−y²}/(y + √(y² + 4/π))`.
    pub upper: f64,
}

/// Probability carried by momenta outside `|p' − p| ≤ dpm/2`.
pub fn truncation_probability(packet: &GaussianPacket, dpm: f64) -> Result<TruncationProbability> {
    if !(dpm >= 0.0) {
        return Err(Error::invalid("truncation_probability", "dpm must be non-negative"));
    }
    let y = dpm * packet.dx2.sqrt() / (2f64.sqrt() * HBAR);
    let pre = 2.0 / PI.sqrt() * (-y * y).exp();
    Ok(TruncationProbability {
        y_m: y,
        exact: erfc(y),
        lower: pre / (y + (y * y + 2.0).sqrt()),
        upper: pre / (y + (y * y + 4.0 / PI).sqrt()),
    })
}

/// Gaussian packet whose momentum amplitude best matches samples `(p, ρ(p))`.
///
/// `ln ρ` is fitted by a quadratic in `q` (real and imaginary parts
/// separately, phase unwrapped along the samples), weighted by `|ρ|²`; the
/// coefficients give `W`, the mean momentum, the centre and the phase.
pub fn fit_momentum_amplitudes(momenta: &[f64], amplitudes: &[Complex64], mass: f64) -> Result<GaussianPacket> {
    let n = momenta.len();
    if n < 3 || amplitudes.len() != n {
        return Err(Error::invalid("fit_momentum_amplitudes", "need at least three matching samples"));
    }
    if momenta.windows(2).any(|w| w[1] <= w[0]) || amplitudes.iter().any(|a| a.norm() == 0.0) {
        return Err(Error::invalid("fit_momentum_amplitudes", "momenta must increase and amplitudes be non-zero"));
    }
    let weights: Vec<f64> = amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = weights.iter().sum();
    let p_c = momenta.iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>() / total;
    let mut phase = Vec::with_capacity(n);
    let mut last = amplitudes[0].arg();
    phase.push(last);
    for a in &amplitudes[1..] {
        let mut v = a.arg();
        v += 2.0 * PI * ((last - v) / (2.0 * PI)).round();
        phase.push(v);
        last = v;
    }
    let mut normal = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs_re = nalgebra::Vector3::<f64>::zeros();
    let mut rhs_im = nalgebra::Vector3::<f64>::zeros();
    for i in 0..n {
        let q = (momenta[i] - p_c) / HBAR;
        let basis = nalgebra::Vector3::new(1.0, q, q * q);
        let w = weights[i] / total;
        normal += basis * basis.transpose() * w;
        rhs_re += basis * (w * amplitudes[i].norm().ln());
        rhs_im += basis * (w * phase[i]);
    }
    let lu = normal.lu();
    let (re, im) = match (lu.solve(&rhs_re), lu.solve(&rhs_im)) {
        (Some(r), Some(i)) => (r, i),
        _ => return Err(Error::invalid("fit_momentum_amplitudes", "singular fit")),
    };
    let c: Vec<Complex64> = (0..3).map(|k| Complex64::new(re[k], im[k])).collect();
    let w = -c[2];
    if !(w.re > 0.0) {
        return Err(Error::invalid("fit_momentum_amplitudes", "samples are not Gaussian"));
    }
    let delta = c[1].re / (2.0 * w.re);
    let center = 2.0 * w.im * delta - c[1].im;
    let phi = (c[0] + w * delta * delta - Complex64::i() * center * delta).im;
    GaussianPacket::new(
        center,
        p_c + HBAR * delta,
        w.re,
        2.0 * mass * w.im / HBAR,
        phi.rem_euclid(2.0 * PI),
    )
}

// ============================================================================
// Ideal step and free flight
// ============================================================================

/// Pulse-area integrals of one step that enter the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepIntegrals {
    /// `∫cos²θ dt` over the step [time].
    pub cos2_area: f64,
    /// Global phase β of the ideal transfer [rad].
    pub beta: f64,
}

/// Evaluates `∫cos²θ` and the transfer phase
/// `β = π − R(t_f) + ∫sin²θ·Ṙ dt`, where `R(t)` is the part of `α_p − α_s`
/// that does not depend on the slice momentum.
pub fn step_integrals(step: &StirapStep, atom: &AtomSpec) -> StepIntegrals {
    let c = StepConstants::new(step, atom);
    let (t0, tf) = (step.start, step.end());
    let cos2 = |t: f64| mixing_angle_or_limit(step, t).theta.cos().powi(2);
    let cos2_area = quad::integrate(cos2, t0, tf, QUAD_TOL, QUAD_TOL);
    let rate0 = c.pump_rate0 - c.stokes_rate0;
    let r = |t: f64| rate0 * t + step.pump.phase_mod.value(t) - step.stokes.phase_mod.value(t);
    let r_dot = |t: f64| {
        rate0 + step.pump.phase_mod.derivative(t) - step.stokes.phase_mod.derivative(t)
    };
    let drift = quad::integrate(
        |t| mixing_angle_or_limit(step, t).theta.sin().powi(2) * r_dot(t),
        t0,
        tf,
        QUAD_TOL,
        QUAD_TOL,
    );
    StepIntegrals { cos2_area, beta: PI - r(tf) + drift }
}

/// Transports a packet through one ideal adiabatic step.
///
/// The packet must be in the step's initial internal state; the result is in
/// the final state with momentum shifted by the recoil, the linewidth aged by
/// the step duration and the centre advanced by the recoil-weighted
/// kinematics `z₁ = z + p₁T/M + sħK·∫cos²θ/M`.
pub fn ideal_step(
    packet: &GaussianPacket,
    state: GroundState,
    step: &StirapStep,
    atom: &AtomSpec,
) -> Result<(GaussianPacket, GroundState)> {
    let role = step.role;
    if state != role.initial_state() {
        return Err(Error::InvalidRole(format!(
            "step role {role:?} starts in {} but the packet is in {}",
            role.initial_state().label(),
            state.label()
        )));
    }
    let m = atom.mass;
    let s = step.sign();
    let k = step.recoil() / HBAR;
    let c = StepConstants::new(step, atom);
    let ints = step_integrals(step, atom);
    let (t0, tf) = (step.start, step.end());
    let p = packet.momentum;
    let p1 = p + step.momentum_change();
    let dp = c.dp_eff(step.slice_label(p));
    let phase = packet.phase
        + ints.beta
        - dp * k * (t0 + ints.cos2_area) / m
        + (p * p / (2.0 * m) + c.e_init) * t0 / HBAR
        - (p1 * p1 / (2.0 * m) + c.e_final) * tf / HBAR;
    let next = GaussianPacket {
        center: packet.center + p1 * step.duration / m + s * HBAR * k * ints.cos2_area / m,
        momentum: p1,
        dx2: packet.dx2,
        age: packet.age + step.duration,
        phase,
    };
    Ok((next, role.final_state()))
}

/// Free motion for `dt ≥ 0`: `z += p·dt/M`, `T_acc += dt`, `φ −= p²dt/(2ħM)`.
pub fn free_flight(packet: &GaussianPacket, mass: f64, dt: f64) -> Result<GaussianPacket> {
    if !(dt >= 0.0) {
        return Err(Error::invalid("free_flight", "dt must be non-negative"));
    }
    let p = packet.momentum;
    Ok(GaussianPacket {
        center: packet.center + p * dt / mass,
        age: packet.age + dt,
        phase: packet.phase - p * p * dt / (2.0 * HBAR * mass),
        ..*packet
    })
}

// ============================================================================
// Sequences
// ============================================================================

/// One snapshot of a packet trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    /// Time.
    pub t: f64,
    /// Packet at `t`.
    pub packet: GaussianPacket,
    /// Internal ground state at `t`.
    pub state: GroundState,
}

/// Packet snapshots at the start, after every step and after every flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketTrajectory {
    /// Snapshots in time order.
    pub entries: Vec<TrajectoryEntry>,
    /// Signed momentum change of every step.
    pub recoil_ledger: Vec<f64>,
}

impl PacketTrajectory {
    /// Last snapshot.
    pub fn last(&self) -> &TrajectoryEntry {
        self.entries.last().expect("trajectory holds the initial packet")
    }
}

/// Applies the steps of `plan` with free flights between them.
///
/// `flights[i]` is the flight after step `i` and must equal the plan's gap
/// there, so that the closed form tracks the same clock as the plan. During
/// a flight the internal energy phase `−E_g·dt/ħ` is added to the motional
/// one so that the global phase stays that of the full state.
pub fn run_sequence(
    packet: &GaussianPacket,
    state: GroundState,
    plan: &SequencePlan,
    atom: &AtomSpec,
    flights: &[f64],
) -> Result<PacketTrajectory> {
    let gaps = plan.gaps();
    if flights.len() != gaps.len() {
        return Err(Error::invalid(
            "run_sequence",
            format!("expected {} flights, got {}", gaps.len(), flights.len()),
        ));
    }
    for (i, (f, g)) in flights.iter().zip(&gaps).enumerate() {
        if (f - g).abs() > 1e-9 * g.abs().max(1.0) {
            return Err(Error::invalid(
                "run_sequence",
                format!("flight {i} lasts {f} but the plan leaves a gap of {g}"),
            ));
        }
    }
    let t_start = plan.start().unwrap_or(0.0);
    let mut entries = vec![TrajectoryEntry { t: t_start, packet: *packet, state }];
    let mut ledger = Vec::with_capacity(plan.steps.len());
    let (mut cur, mut st) = (*packet, state);
    for (i, step) in plan.steps.iter().enumerate() {
        let (next, next_state) = ideal_step(&cur, st, step, atom)?;
        cur = next;
        st = next_state;
        ledger.push(step.momentum_change());
        entries.push(TrajectoryEntry { t: step.end(), packet: cur, state: st });
        if let Some(&dt) = flights.get(i) {
            let mut flown = free_flight(&cur, atom.mass, dt)?;
            flown.phase -= atom.ground_energy(st) * dt / HBAR;
            cur = flown;
            entries.push(TrajectoryEntry { t: step.end() + dt, packet: cur, state: st });
        }
    }
    Ok(PacketTrajectory { entries, recoil_ledger: ledger })
}

// ============================================================================
// Compression of packet trains
// ============================================================================

/// Spacing of two packets of a train after deceleration and acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpacing {
    /// Index of the earlier packet (1-based).
    pub i: usize,
    /// Index of the later packet (1-based).
    pub j: usize,
    /// Centre distance after deceleration, at a common time [length].
    pub distance: f64,
    /// Arrival-time difference after acceleration [time].
    pub time_offset: f64,
}

/// One geometric constraint, as a raw margin and in units of the relevant spreading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    /// Constraint name.
    pub name: String,
    /// Distance minus `safety × spreading` [length]; positive means satisfied.
    pub value: f64,
    /// Spreading the constraint compares against [length].
    pub spreading: f64,
    /// `value / spreading`.
    pub ratio: f64,
}

impl Margin {
    fn new(name: &str, value: f64, spreading: f64) -> Self {
        Self { name: name.to_string(), value, spreading, ratio: value / spreading }
    }
}

/// Geometry of `m_r` packets fed one after another through the same
/// decelerating plan and then accelerated together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    /// Space-compressing factor `R_s = P_d/p₀`.
    pub r_space: f64,
    /// Time-compressing factor `R_t = P_d/P_a`.
    pub r_time: f64,
    /// Momentum after deceleration `P_d`.
    pub decelerated_momentum: f64,
    /// Momentum after acceleration `P_a`.
    pub accelerated_momentum: f64,
    /// Pairwise spacings for all `1 ≤ i < j ≤ m_r`.
    pub pairs: Vec<PairSpacing>,
    /// Waiting times `T_s(i)` between deceleration end and acceleration start.
    pub waiting_times: Vec<f64>,
    /// Decelerating region `[D_L, D_R]`.
    pub decel_region: (f64, f64),
    /// Accelerating region `[A_L, A_R]`.
    pub accel_region: (f64, f64),
    /// Distance covered during acceleration `L_A`.
    pub accel_length: f64,
    /// Safety multiplier applied to spreadings.
    pub safety: f64,
    /// Region constraints.
    pub margins: Vec<Margin>,
}

/// Builds the compression report.
///
/// Packet `i` (1-based) reaches `packet.center` at `t₀ + (i−1)ΔT`, where
/// `t₀` is the start of `plan_d`, and runs through a copy of `plan_d` shifted
/// accordingly. `plan_a` is shared by all packets; its start time is ignored
/// and replaced by `t₀ + τ_d + T_s`, with `τ_d` the span of `plan_d`.
#[allow(clippy::too_many_arguments)]
pub fn compression_report(
    plan_d: &SequencePlan,
    plan_a: &SequencePlan,
    atom: &AtomSpec,
    packet: &GaussianPacket,
    m_r: usize,
    delta_t: f64,
    t_s: f64,
    safety: f64,
) -> Result<CompressionReport> {
    if m_r < 2 {
        return Err(Error::invalid("compression_report", "m_r must be at least 2"));
    }
    if !(delta_t > 0.0) || !(safety >= 0.0) {
        return Err(Error::invalid("compression_report", "need dT > 0 and safety ≥ 0"));
    }
    let m = atom.mass;
    let p0 = packet.momentum;
    if p0 <= 0.0 {
        return Err(Error::NonPositiveMomentum { momentum: p0 });
    }
    let p_d = p0 + plan_d.total_momentum_change();
    if p_d <= 0.0 {
        return Err(Error::NonPositiveMomentum { momentum: p_d });
    }
    let p_a = p_d + plan_a.total_momentum_change();
    if p_a <= 0.0 {
        return Err(Error::NonPositiveMomentum { momentum: p_a });
    }
    let t0 = plan_d.start().unwrap_or(0.0);
    let tau_d = plan_d.end().map_or(0.0, |e| e - t0);
    let tau_a = match (plan_a.start(), plan_a.end()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    let state0 = plan_d
        .steps
        .first()
        .map_or(GroundState::G0, |s| s.role.initial_state());
    let decel = run_sequence(packet, state0, plan_d, atom, &plan_d.gaps())?;
    let after_d = *decel.last();
    let z_d = after_d.packet.center;

    let waiting_times: Vec<f64> = (0..m_r).map(|i| t_s - i as f64 * delta_t).collect();
    let x0 = |j: usize| z_d + p_d * waiting_times[j - 1] / m;
    let spread = |age: f64| GaussianPacket { age, ..*packet }.spreading(m);

    let t_mr = t0 + tau_d + t_s;
    let plan_a_here = match plan_a.start() {
        Some(a) => plan_a.shifted(t_mr - a),
        None => plan_a.clone(),
    };
    let start_a = GaussianPacket { center: x0(1), momentum: p_d, ..after_d.packet };
    let accel = run_sequence(
        &start_a,
        after_d.state,
        &plan_a_here,
        atom,
        &plan_a_here.gaps(),
    )?;
    let accel_length = accel.last().packet.center - x0(1);

    let mut pairs = Vec::new();
    for i in 1..=m_r {
        for j in i + 1..=m_r {
            let n = (j - i) as f64;
            pairs.push(PairSpacing {
                i,
                j,
                distance: n * delta_t * p_d / m,
                time_offset: n * delta_t * p_d / p_a,
            });
        }
    }

    let t_d = packet.age;
    let eps_d = |j: usize| spread(t_d + tau_d + waiting_times[j - 1]);
    let eps_a = |j: usize| spread(t_d + tau_d + waiting_times[j - 1] + tau_a);
    let accel_region = (
        x0(m_r) - safety * eps_d(m_r),
        x0(1) + accel_length + safety * eps_a(1),
    );

    let eps_start = spread(t_d);
    let eps_end = spread(t_d + tau_d);
    let d_l = packet.center - safety * eps_start;
    let d_r = z_d + safety * eps_end;
    let eps_next = spread(t_d + tau_d - delta_t);
    let neighbour_edge = packet.center - (delta_t - tau_d) * p0 / m;
    let eps_self = spread(t_d + delta_t);
    let self_pos = z_d + (delta_t - tau_d) * p_d / m;
    let margins = vec![
        Margin::new("initial_order", (d_r - packet.center) - (packet.center - d_l), eps_start),
        Margin::new("final_order", (z_d - d_l) - (d_r - z_d), eps_end),
        Margin::new("left_neighbour", d_l - neighbour_edge - safety * eps_next, eps_next),
        Margin::new("self_exit", self_pos - d_r - safety * eps_self, eps_self),
    ];

    Ok(CompressionReport {
        r_space: p_d / p0,
        r_time: p_d / p_a,
        decelerated_momentum: p_d,
        accelerated_momentum: p_a,
        pairs,
        waiting_times,
        decel_region: (d_l, d_r),
        accel_region,
        accel_length,
        safety,
        margins,
    })
}
