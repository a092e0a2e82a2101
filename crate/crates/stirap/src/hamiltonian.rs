//! Time- and momentum-dependent functions of one STIRAP step: mixing angle,
//! laser phases, detunings, carrier solutions, the rotating-frame Hamiltonian
//! and its adiabatic eigensystem, and the coupling coefficients of the
//! adiabatic-frame equations.
//!
//! The rotating-frame Hamiltonian of a slice with label `P` is
//!
//! ```text
//!        ⎡ 0            Ω_p e^{iα_p}   0            ⎤
//! H/ħ =  ⎢ Ω_p e^{−iα_p} 0             Ω_s e^{−iα_s} ⎥
//!        ⎣ 0            Ω_s e^{iα_s}   0            ⎦
//! ```
//!
//! with `α_p = (sPk₀/M + ħk₀²/2M − (ω_ie − ω₀))·t + φ₀(t)` and
//! `α_s = (−sPk₁/M + ħk₁²/2M − (ω_fe − ω₁))·t + φ₁(t)`, where `ω_ie` and
//! `ω_fe` are the transition frequencies from the role's initial and final
//! ground states to the excited state. The gauge of the adiabatic vectors is
//! fixed by zero global phases.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{AtomSpec, StepRole, StirapStep};
use crate::numerics::magnus::{Mat3, Vec3};
use crate::numerics::scalar::safeguarded_newton;
use crate::units::{UnitSystem, HBAR};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

// ============================================================================
// Mixing angle
// ============================================================================

/// Mixing angle, its rate, and the total Rabi frequency at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleState {
    /// θ = atan2(Ω_p, Ω_s) ∈ [0, π/2].
    pub theta: f64,
    /// dθ/dt [1/time].
    pub theta_dot: f64,
    /// Ω = √(Ω_p² + Ω_s²) [1/time].
    pub omega: f64,
}

/// Mixing angle at `t`, with θ̇ from the analytic envelope derivatives.
///
/// Fails with [`Error::BothEnvelopesZero`] when both envelopes vanish.
pub fn mixing_angle(step: &StirapStep, t: f64) -> Result<AngleState> {
    let ((wp, dwp), (ws, dws)) = step.rabi(t);
    if wp == 0.0 && ws == 0.0 {
        return Err(Error::BothEnvelopesZero { t });
    }
    let omega = wp.hypot(ws);
    let theta = wp.atan2(ws);
    let theta_dot = (dwp * theta.cos() - dws * theta.sin()) / omega;
    Ok(AngleState { theta, theta_dot, omega })
}

/// Mixing angle at `t`, replacing an undefined angle by its one-sided limit
/// under counterintuitive ordering (0 in the first half of the step, π/2 in
/// the second) with zero rate and zero Rabi frequency.
pub fn mixing_angle_or_limit(step: &StirapStep, t: f64) -> AngleState {
    mixing_angle(step, t).unwrap_or_else(|_| AngleState {
        theta: if t < step.start + 0.5 * step.duration {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2
        },
        theta_dot: 0.0,
        omega: 0.0,
    })
}

// ============================================================================
// Kinematic constants, phases and detunings
// ============================================================================

/// Per-step constants of the phase and coefficient formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConstants {
    /// Recoil sign s.
    pub sign: f64,
    /// Atomic mass M.
    pub mass: f64,
    /// Pump wave number k₀.
    pub k0: f64,
    /// Stokes wave number k₁.
    pub k1: f64,
    /// Initial-ground-to-excited transition frequency ω_ie.
    pub omega_ie: f64,
    /// Final-ground-to-excited transition frequency ω_fe.
    pub omega_fe: f64,
    /// Initial ground energy.
    pub e_init: f64,
    /// Final ground energy.
    pub e_final: f64,
    /// Excited energy.
    pub e_excited: f64,
    /// Reference slice label P₀.
    pub p0: f64,
    /// `sP₀k₀/M + ħk₀²/2M − (ω_ie − ω₀)`: the pump phase rate at ΔP = 0 before modulation.
    pub pump_rate0: f64,
    /// `−sP₀k₁/M + ħk₁²/2M − (ω_fe − ω₁)`: the Stokes phase rate at ΔP = 0 before modulation.
    pub stokes_rate0: f64,
}

impl StepConstants {
    /// Constants of `step` for `atom`.
    pub fn new(step: &StirapStep, atom: &AtomSpec) -> Self {
        let (e_init, e_final) = step.ground_energies(atom);
        let s = step.sign();
        let m = atom.mass;
        let k0 = step.pump.wavenumber;
        let k1 = step.stokes.wavenumber;
        let omega_ie = atom.e2 - e_init;
        let omega_fe = atom.e2 - e_final;
        let p0 = step.reference_momentum;
        Self {
            sign: s,
            mass: m,
            k0,
            k1,
            omega_ie,
            omega_fe,
            e_init,
            e_final,
            e_excited: atom.e2,
            p0,
            pump_rate0: s * p0 * k0 / m + HBAR * k0 * k0 / (2.0 * m) - (omega_ie - step.pump.carrier),
            stokes_rate0: -s * p0 * k1 / m + HBAR * k1 * k1 / (2.0 * m)
                - (omega_fe - step.stokes.carrier),
        }
    }

    /// Effective offset `s(P − P₀)`.
    pub fn dp_eff(&self, p_label: f64) -> f64 {
        self.sign * (p_label - self.p0)
    }

    /// Bare energies `(ε₀, ε₁, ε₂)` of the three slice states.
    pub fn bare_energies(&self, p_label: f64) -> [f64; 3] {
        let m2 = 2.0 * self.mass;
        let p1 = p_label + self.sign * HBAR * self.k0;
        let p3 = p_label - self.sign * HBAR * self.k1;
        [
            p1 * p1 / m2 + self.e_init,
            p_label * p_label / m2 + self.e_excited,
            p3 * p3 / m2 + self.e_final,
        ]
    }
}

/// Laser phases of one slice at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    /// Pump phase α_p.
    pub alpha_p: f64,
    /// Stokes phase α_s.
    pub alpha_s: f64,
    /// α_p − α_s.
    pub alpha_diff: f64,
}

/// Laser phases of slice `p_label` at `t`.
pub fn phases(step: &StirapStep, atom: &AtomSpec, p_label: f64, t: f64) -> PhasePair {
    phases_with(&StepConstants::new(step, atom), step, p_label, t)
}

/// [`phases`] with precomputed constants.
pub fn phases_with(c: &StepConstants, step: &StirapStep, p_label: f64, t: f64) -> PhasePair {
    let dp = c.dp_eff(p_label);
    let alpha_p = (dp * c.k0 / c.mass + c.pump_rate0) * t + step.pump.phase_mod.value(t);
    let alpha_s = (-dp * c.k1 / c.mass + c.stokes_rate0) * t + step.stokes.phase_mod.value(t);
    PhasePair { alpha_p, alpha_s, alpha_diff: alpha_p - alpha_s }
}

/// Time derivatives `(α̇_p, α̇_s)` of the laser phases.
pub fn phase_rates_with(c: &StepConstants, step: &StirapStep, p_label: f64, t: f64) -> (f64, f64) {
    let dp = c.dp_eff(p_label);
    (
        dp * c.k0 / c.mass + c.pump_rate0 + step.pump.phase_mod.derivative(t),
        -dp * c.k1 / c.mass + c.stokes_rate0 + step.stokes.phase_mod.derivative(t),
    )
}

/// Pump and Stokes detunings `(Δ_p, Δ_s)` of slice `p_label` for a role.
///
/// `Δ_p = (ω_ie − ω₀) − s(k₀/M)P − ħk₀²/2M`,
/// `Δ_s = (ω_fe − ω₁) + s(k₁/M)P − ħk₁²/2M`.
pub fn detunings(
    atom: &AtomSpec,
    role: StepRole,
    pump: &crate::model::BeamSpec,
    stokes: &crate::model::BeamSpec,
    p_label: f64,
) -> (f64, f64) {
    let s = role.sign();
    let m = atom.mass;
    let omega_ie = atom.e2 - atom.ground_energy(role.initial_state());
    let omega_fe = atom.e2 - atom.ground_energy(role.final_state());
    let (k0, k1) = (pump.wavenumber, stokes.wavenumber);
    (
        (omega_ie - pump.carrier) - s * k0 / m * p_label - HBAR * k0 * k0 / (2.0 * m),
        (omega_fe - stokes.carrier) + s * k1 / m * p_label - HBAR * k1 * k1 / (2.0 * m),
    )
}

// ============================================================================
// Carrier solutions
// ============================================================================

fn solve_quadratic_condition(
    curvature: f64,
    slope: f64,
    constant: f64,
    guess: f64,
) -> Result<f64> {
    // f(ω) = curvature·ω² + slope·ω + constant
    let f = |w: f64| curvature * w * w + slope * w + constant;
    let df = |w: f64| 2.0 * curvature * w + slope;
    let scale = constant.abs().max(guess.abs()).max(1.0);
    safeguarded_newton(f, df, guess, 1e-13 * scale, 1e-16, 100, "solve_carriers")
}

/// Carrier frequencies `(ω₀, ω₁)` that make slice `P₀` resonant with
/// detunings `(c₀, c₁)`, with `k = ω/c` coupling each condition nonlinearly.
///
/// Solves `ħk₀²/2M − (ω_ie − ω₀) + c₀ + sP₀k₀/M = 0` and
/// `ħk₁²/2M − (ω_fe − ω₁) + c₁ − sP₀k₁/M = 0` by safeguarded Newton
/// iteration started from the decoupled solutions `ω_ie − c₀`, `ω_fe − c₁`.
pub fn solve_carriers(
    atom: &AtomSpec,
    role: StepRole,
    units: &UnitSystem,
    p0: f64,
    c0: f64,
    c1: f64,
) -> Result<(f64, f64)> {
    if !(p0 > 0.0) {
        return Err(Error::NonPositiveMomentum { momentum: p0 });
    }
    let s = role.sign();
    let m = atom.mass;
    let omega_ie = atom.e2 - atom.ground_energy(role.initial_state());
    let omega_fe = atom.e2 - atom.ground_energy(role.final_state());
    if units.speed_of_light.is_infinite() {
        return Ok((omega_ie - c0, omega_fe - c1));
    }
    let inv_c = 1.0 / units.speed_of_light;
    let curvature = HBAR * inv_c * inv_c / (2.0 * m);
    let w0 = solve_quadratic_condition(curvature, 1.0 + s * p0 * inv_c / m, c0 - omega_ie, omega_ie - c0)?;
    let w1 = solve_quadratic_condition(curvature, 1.0 - s * p0 * inv_c / m, c1 - omega_fe, omega_fe - c1)?;
    Ok((w0, w1))
}

/// Carriers for a packet of mean momentum `p_mean` entering a step of
/// `role`: returns `(ω₀, ω₁, P₀)` where `P₀ = p_mean − sħk₀(ω₀)` is the
/// self-consistent slice label of the packet center.
pub fn carriers_for_packet(
    atom: &AtomSpec,
    role: StepRole,
    units: &UnitSystem,
    p_mean: f64,
    c0: f64,
    c1: f64,
) -> Result<(f64, f64, f64)> {
    if !(p_mean > 0.0) {
        return Err(Error::NonPositiveMomentum { momentum: p_mean });
    }
    let s = role.sign();
    let m = atom.mass;
    let omega_ie = atom.e2 - atom.ground_energy(role.initial_state());
    if units.speed_of_light.is_infinite() {
        let (w0, w1) = solve_carriers(atom, role, units, p_mean, c0, c1)?;
        return Ok((w0, w1, p_mean));
    }
    let inv_c = 1.0 / units.speed_of_light;
    // Substituting P₀ = p − sħk₀ turns the pump condition into
    // −ħk₀²/2M − (ω_ie − ω₀) + c₀ + s·p·k₀/M = 0.
    let curvature = -HBAR * inv_c * inv_c / (2.0 * m);
    let w0 = solve_quadratic_condition(curvature, 1.0 + s * p_mean * inv_c / m, c0 - omega_ie, omega_ie - c0)?;
    let p0 = p_mean - s * HBAR * w0 * inv_c;
    let (_, w1) = solve_carriers(atom, role, units, p0, c0, c1)?;
    Ok((w0, w1, p0))
}

/// Residuals of the two resonance conditions for the step's own carriers and
/// reference momentum, given detunings `(c₀, c₁)`.
pub fn carrier_residuals(step: &StirapStep, atom: &AtomSpec, c0: f64, c1: f64) -> (f64, f64) {
    let c = StepConstants::new(step, atom);
    (c.pump_rate0 + c0, c.stokes_rate0 + c1)
}

// ============================================================================
// Hamiltonian and adiabatic eigensystem
// ============================================================================

/// Rotating-frame Hamiltonian `H(P, t)/ħ` of slice `p_label`.
pub fn hamiltonian_matrix(step: &StirapStep, atom: &AtomSpec, p_label: f64, t: f64) -> Mat3 {
    hamiltonian_with(&StepConstants::new(step, atom), step, p_label, t)
}

/// [`hamiltonian_matrix`] with precomputed constants.
pub fn hamiltonian_with(c: &StepConstants, step: &StirapStep, p_label: f64, t: f64) -> Mat3 {
    let wp = step.pump.envelope.value(t);
    let ws = step.stokes.envelope.value(t);
    let ph = phases_with(c, step, p_label, t);
    let mut h = Mat3::zeros();
    h[(0, 1)] = Complex64::from_polar(wp, ph.alpha_p);
    h[(1, 0)] = Complex64::from_polar(wp, -ph.alpha_p);
    h[(1, 2)] = Complex64::from_polar(ws, -ph.alpha_s);
    h[(2, 1)] = Complex64::from_polar(ws, ph.alpha_s);
    h
}

/// Adiabatic eigenvectors and eigenvalues of `H(P, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticEigensystem {
    /// Trapping state `g⁰ = (cos θ, 0, −sin θ e^{−i(α_p−α_s)})`, eigenvalue 0.
    pub g0: Vec3,
    /// `g⁺ = (sin θ, −e^{−iα_p}, cos θ e^{−i(α_p−α_s)})/√2`, eigenvalue −Ω.
    pub g_plus: Vec3,
    /// `g⁻ = (sin θ, e^{−iα_p}, cos θ e^{−i(α_p−α_s)})/√2`, eigenvalue +Ω.
    pub g_minus: Vec3,
    /// Eigenvalues in the order (g⁰, g⁺, g⁻): `[0, −Ω, +Ω]`.
    pub eigenvalues: [f64; 3],
}

/// Eigensystem built from an angle and phases.
pub fn eigensystem_from(angle: &AngleState, ph: &PhasePair) -> AdiabaticEigensystem {
    let (s, c) = angle.theta.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let e_chi = Complex64::from_polar(1.0, -ph.alpha_diff);
    let e_p = Complex64::from_polar(1.0, -ph.alpha_p);
    let g0 = Vec3::new(Complex64::from(c), Complex64::from(0.0), -e_chi * s);
    let g_plus = Vec3::new(Complex64::from(r * s), -e_p * r, e_chi * (r * c));
    let g_minus = Vec3::new(Complex64::from(r * s), e_p * r, e_chi * (r * c));
    AdiabaticEigensystem {
        g0,
        g_plus,
        g_minus,
        eigenvalues: [0.0, -angle.omega, angle.omega],
    }
}

/// Adiabatic eigensystem of slice `p_label` at `t`.
///
/// Fails with [`Error::DegenerateField`] when Ω(t) = 0.
pub fn adiabatic_eigensystem(
    step: &StirapStep,
    atom: &AtomSpec,
    p_label: f64,
    t: f64,
) -> Result<AdiabaticEigensystem> {
    let angle = mixing_angle(step, t).map_err(|_| Error::DegenerateField { t })?;
    Ok(eigensystem_from(&angle, &phases(step, atom, p_label, t)))
}

// ============================================================================
// Coupling coefficients
// ============================================================================

/// Coefficients of the adiabatic-frame equations for one slice and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    /// Ω(t).
    pub omega: f64,
    /// Ω₊(P, t) = Ω + (ω₀ − ω₊).
    pub omega_plus: f64,
    /// Ω₋(P, t) = Ω − (ω₀ − ω₊).
    pub omega_minus: f64,
    /// Θ(P, t) = −θ̇ + (i/2)·sin 2θ·(α̇_p − α̇_s).
    pub theta_c: Complex64,
    /// Γ(P, t) = sin²θ·α̇_p + cos²θ·α̇_s.
    pub gamma_c: f64,
    /// K₀(t) = [(k₀−k₁) + 3(k₀+k₁)cos 2θ]/(4M).
    pub k0_fn: f64,
    /// K₁(t) = (k₀+k₁)·sin 2θ/(2M).
    pub k1_fn: f64,
    /// K₂(t) = (k₀+k₁)·cos²θ/M.
    pub k2_fn: f64,
    /// Effective offset s·ΔP.
    pub dp_eff: f64,
    /// Dynamic-phase rate ω₀ = −sin²θ·(α̇_p − α̇_s) of the trapping amplitude.
    pub rate_zero: f64,
    /// Dynamic-phase rate ω₊ = ω₋ = −½α̇_p − ½cos²θ·(α̇_p − α̇_s).
    pub rate_pm: f64,
    /// Whether the closed linear-in-ΔP forms were used.
    pub closed_form: bool,
}

/// Whether a step's carriers and modulation make the phases exactly linear in
/// ΔP: each phase-modulation rate must cancel the ΔP = 0 phase rate (the
/// resonance conditions hold with detuning equal to the rate) and carry no
/// sinusoidal part.
pub fn closed_form_applicable(c: &StepConstants, step: &StirapStep) -> bool {
    let tol_p = 1e-12 * c.omega_ie.abs().max(1.0);
    let tol_s = 1e-12 * c.omega_fe.abs().max(1.0);
    step.pump.phase_mod.is_linear()
        && step.stokes.phase_mod.is_linear()
        && (c.pump_rate0 + step.pump.phase_mod.rate).abs() <= tol_p
        && (c.stokes_rate0 + step.stokes.phase_mod.rate).abs() <= tol_s
}

fn k_functions(c: &StepConstants, theta: f64) -> (f64, f64, f64) {
    let ksum = c.k0 + c.k1;
    let m = c.mass;
    (
        ((c.k0 - c.k1) + 3.0 * ksum * (2.0 * theta).cos()) / (4.0 * m),
        ksum * (2.0 * theta).sin() / (2.0 * m),
        ksum * theta.cos().powi(2) / m,
    )
}

/// Coefficients from an angle and explicit phase rates (the general forms).
pub fn coefficients_general(
    c: &StepConstants,
    angle: &AngleState,
    rate_p: f64,
    rate_s: f64,
    dp_eff: f64,
) -> CoefficientSet {
    let (s, co) = angle.theta.sin_cos();
    let chi_dot = rate_p - rate_s;
    let rate_zero = -s * s * chi_dot;
    let rate_pm = -0.5 * rate_p - 0.5 * co * co * chi_dot;
    let shift = rate_zero - rate_pm;
    let (k0f, k1f, k2f) = k_functions(c, angle.theta);
    CoefficientSet {
        omega: angle.omega,
        omega_plus: angle.omega + shift,
        omega_minus: angle.omega - shift,
        theta_c: Complex64::new(-angle.theta_dot, s * co * chi_dot),
        gamma_c: s * s * rate_p + co * co * rate_s,
        k0_fn: k0f,
        k1_fn: k1f,
        k2_fn: k2f,
        dp_eff,
        rate_zero,
        rate_pm,
        closed_form: false,
    }
}

/// Coefficients in the closed linear-in-ΔP forms.
pub fn coefficients_closed(c: &StepConstants, angle: &AngleState, dp_eff: f64) -> CoefficientSet {
    let (s, co) = angle.theta.sin_cos();
    let (k0f, k1f, k2f) = k_functions(c, angle.theta);
    let chi_dot = dp_eff * (c.k0 + c.k1) / c.mass;
    let rate_p = dp_eff * c.k0 / c.mass;
    CoefficientSet {
        omega: angle.omega,
        omega_plus: angle.omega + k0f * dp_eff,
        omega_minus: angle.omega - k0f * dp_eff,
        theta_c: Complex64::new(-angle.theta_dot, k1f * dp_eff),
        gamma_c: dp_eff * (c.k0 / c.mass - k2f),
        k0_fn: k0f,
        k1_fn: k1f,
        k2_fn: k2f,
        dp_eff,
        rate_zero: -s * s * chi_dot,
        rate_pm: -0.5 * rate_p - 0.5 * co * co * chi_dot,
        closed_form: true,
    }
}

/// Coupling coefficients of slice `p_label` at `t`.
///
/// Uses the closed linear-in-ΔP forms when [`closed_form_applicable`] holds
/// and the general forms with analytic phase rates otherwise. A vanishing
/// field is replaced by its one-sided limit (see [`mixing_angle_or_limit`]).
pub fn coefficient_set(step: &StirapStep, atom: &AtomSpec, p_label: f64, t: f64) -> CoefficientSet {
    let c = StepConstants::new(step, atom);
    coefficient_set_with(&c, closed_form_applicable(&c, step), step, p_label, t)
}

/// [`coefficient_set`] with precomputed constants and path choice.
pub fn coefficient_set_with(
    c: &StepConstants,
    closed: bool,
    step: &StirapStep,
    p_label: f64,
    t: f64,
) -> CoefficientSet {
    let angle = mixing_angle_or_limit(step, t);
    let dp = c.dp_eff(p_label);
    if closed {
        coefficients_closed(c, &angle, dp)
    } else {
        let (rp, rs) = phase_rates_with(c, step, p_label, t);
        coefficients_general(c, &angle, rp, rs, dp)
    }
}

/// Adiabatic-frame coupling matrix `M(P, t)` given the accumulated phases
/// `Λ = ∫Ω` and `∫(ω₀ − ω₊)` from the step start.
pub fn adiabatic_coupling(coef: &CoefficientSet, lambda: f64, shift_integral: f64) -> Mat3 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let theta_conj = coef.theta_c.conj();
    let m12 = I * r * theta_conj * Complex64::from_polar(1.0, lambda + shift_integral);
    let m13 = I * r * theta_conj * Complex64::from_polar(1.0, -lambda + shift_integral);
    let m23 = Complex64::from_polar(0.5 * coef.gamma_c, -2.0 * lambda);
    let mut m = Mat3::zeros();
    m[(0, 1)] = m12;
    m[(1, 0)] = m12.conj();
    m[(0, 2)] = m13;
    m[(2, 0)] = m13.conj();
    m[(1, 2)] = m23;
    m[(2, 1)] = m23.conj();
    m
}
