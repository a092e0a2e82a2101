//! Domain types shared by every other module: the atom, laser beams and
//! their envelopes, STIRAP steps and sequences, the Gaussian packet, the
//! momentum grid, and scenario validation.
//!
//! Conventions used throughout the crate:
//!
//! * The atom moves along `+x`. A step's role fixes the recoil sign
//!   `s = +1` (decelerating) or `s = −1` (accelerating).
//! * For a step whose initial ground state is `|init⟩` and final ground state
//!   is `|final⟩`, the three coupled bare states of one momentum slice are
//!   `|1⟩ = |P + sħk₀⟩|init⟩`, `|2⟩ = |P⟩|e⟩`, `|3⟩ = |P − sħk₁⟩|final⟩`.
//!   The slice label `P` is the excited-state momentum; a packet momentum `p`
//!   in the initial state maps to `P = p − sħk₀`.
//! * `reference_momentum` on a step is the slice label `P₀` at which the
//!   carriers satisfy the resonance conditions; `ΔP = P − P₀`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{UnitSystem, HBAR};

// ============================================================================
// Atom
// ============================================================================

/// Ground state of the Λ system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundState {
    /// Lower hyperfine ground state `|g₀⟩`.
    G0,
    /// Upper hyperfine ground state `|g₁⟩`.
    G1,
}

impl GroundState {
    /// The other ground state.
    pub fn other(self) -> Self {
        match self {
            GroundState::G0 => GroundState::G1,
            GroundState::G1 => GroundState::G0,
        }
    }

    /// Short label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            GroundState::G0 => "g0",
            GroundState::G1 => "g1",
        }
    }
}

/// Mass and internal energies of the three-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    /// Atomic mass [mass].
    pub mass: f64,
    /// Energy of `|g₀⟩` [1/time].
    pub e0: f64,
    /// Energy of `|g₁⟩` [1/time].
    pub e1: f64,
    /// Energy of the excited state `|e⟩` [1/time].
    pub e2: f64,
}

impl AtomSpec {
    /// Creates an atom, rejecting a non-positive mass or an excited level
    /// that does not lie above both ground levels.
    pub fn new(mass: f64, e0: f64, e1: f64, e2: f64) -> Result<Self> {
        let atom = Self { mass, e0, e1, e2 };
        atom.check()?;
        Ok(atom)
    }

    /// Checks the type invariants.
    pub fn check(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid("AtomSpec", "mass must be positive and finite"));
        }
        if !(self.e2 > self.e0 && self.e2 > self.e1) {
            return Err(Error::invalid(
                "AtomSpec",
                "excited level e2 must lie above both ground levels",
            ));
        }
        Ok(())
    }

    /// Energy of a ground state [1/time].
    pub fn ground_energy(&self, g: GroundState) -> f64 {
        match g {
            GroundState::G0 => self.e0,
            GroundState::G1 => self.e1,
        }
    }
}

// ============================================================================
// Envelopes and phase modulation
// ============================================================================

/// Functional form of a Rabi envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeKind {
    /// `A·exp(−(t−c)²/w²)`.
    Gaussian,
    /// `A·cos²(π(t−c)/w)` for `|t−c| ≤ w/2`, zero outside.
    SineSquared,
    /// `A·f((t−c)/w)` with `f` a monotone-cubic (PCHIP) interpolant of samples.
    Tabulated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PulseEnvelopeRepr {
    kind: EnvelopeKind,
    amplitude: f64,
    center: f64,
    width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<[f64; 2]>>,
}

/// Rabi envelope `Ω(t) ≥ 0` of one beam, continuously differentiable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PulseEnvelopeRepr", into = "PulseEnvelopeRepr")]
pub struct PulseEnvelope {
    /// Functional form.
    pub kind: EnvelopeKind,
    /// Peak Rabi angular frequency [1/time].
    pub amplitude: f64,
    /// Center time [time].
    pub center: f64,
    /// Width [time].
    pub width: f64,
    /// `(τ, f)` samples of the normalised shape for [`EnvelopeKind::Tabulated`],
    /// with `τ = (t − center)/width`.
    pub samples: Option<Vec<[f64; 2]>>,
    slopes: Vec<f64>,
}

impl TryFrom<PulseEnvelopeRepr> for PulseEnvelope {
    type Error = Error;
    fn try_from(r: PulseEnvelopeRepr) -> Result<Self> {
        match r.kind {
            EnvelopeKind::Tabulated => {
                let samples = r
                    .samples
                    .ok_or_else(|| Error::invalid("PulseEnvelope", "tabulated envelope needs samples"))?;
                PulseEnvelope::tabulated(r.amplitude, r.center, r.width, samples)
            }
            kind => PulseEnvelope::analytic(kind, r.amplitude, r.center, r.width),
        }
    }
}

impl From<PulseEnvelope> for PulseEnvelopeRepr {
    fn from(e: PulseEnvelope) -> Self {
        Self {
            kind: e.kind,
            amplitude: e.amplitude,
            center: e.center,
            width: e.width,
            samples: e.samples,
        }
    }
}

impl PulseEnvelope {
    /// Gaussian envelope `A·exp(−(t−c)²/w²)`.
    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        Self::analytic(EnvelopeKind::Gaussian, amplitude, center, width)
    }

    /// Sine-squared envelope of full support width `w`.
    pub fn sine_squared(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        Self::analytic(EnvelopeKind::SineSquared, amplitude, center, width)
    }

    /// Identically zero envelope.
    pub fn zero() -> Self {
        Self {
            kind: EnvelopeKind::Gaussian,
            amplitude: 0.0,
            center: 0.0,
            width: 1.0,
            samples: None,
            slopes: Vec::new(),
        }
    }

    fn analytic(kind: EnvelopeKind, amplitude: f64, center: f64, width: f64) -> Result<Self> {
        Self::check_scalars(amplitude, width)?;
        Ok(Self {
            kind,
            amplitude,
            center,
            width,
            samples: None,
            slopes: Vec::new(),
        })
    }

    /// Tabulated envelope; samples are `(τ, f(τ))` with strictly increasing
    /// `τ` and `f ≥ 0`. Outside the table the shape holds its end values.
    pub fn tabulated(amplitude: f64, center: f64, width: f64, samples: Vec<[f64; 2]>) -> Result<Self> {
        Self::check_scalars(amplitude, width)?;
        if samples.len() < 2 {
            return Err(Error::invalid("PulseEnvelope", "need at least two samples"));
        }
        if samples.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::invalid("PulseEnvelope", "sample times must increase strictly"));
        }
        if samples.iter().any(|s| s[1] < 0.0 || !s[1].is_finite()) {
            return Err(Error::invalid("PulseEnvelope", "samples must be non-negative"));
        }
        let slopes = pchip_slopes(&samples);
        Ok(Self {
            kind: EnvelopeKind::Tabulated,
            amplitude,
            center,
            width,
            samples: Some(samples),
            slopes,
        })
    }

    fn check_scalars(amplitude: f64, width: f64) -> Result<()> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid("PulseEnvelope", "amplitude must be non-negative"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid("PulseEnvelope", "width must be positive"));
        }
        Ok(())
    }

    /// Envelope value and time derivative at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if self.amplitude == 0.0 {
            return (0.0, 0.0);
        }
        let a = self.amplitude;
        let w = self.width;
        let u = (t - self.center) / w;
        match self.kind {
            EnvelopeKind::Gaussian => {
                let v = a * (-u * u).exp();
                (v, -2.0 * u / w * v)
            }
            EnvelopeKind::SineSquared => {
                if u.abs() > 0.5 {
                    (0.0, 0.0)
                } else {
                    let x = std::f64::consts::PI * u;
                    (a * x.cos().powi(2), -a * std::f64::consts::PI / w * (2.0 * x).sin())
                }
            }
            EnvelopeKind::Tabulated => {
                let samples = self.samples.as_deref().unwrap_or(&[]);
                let (f, df) = pchip_eval(samples, &self.slopes, u);
                (a * f, a * df / w)
            }
        }
    }

    /// Envelope value at `t`.
    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    /// Copy with amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut e = self.clone();
        e.amplitude *= factor;
        e
    }

    /// Copy translated in time by `dt`.
    pub fn shifted(&self, dt: f64) -> Self {
        let mut e = self.clone();
        e.center += dt;
        e
    }

    /// Copy stretched in time by `factor` about `origin`.
    pub fn stretched(&self, factor: f64, origin: f64) -> Self {
        let mut e = self.clone();
        e.center = origin + (e.center - origin) * factor;
        e.width *= factor;
        e
    }
}

fn pchip_slopes(s: &[[f64; 2]]) -> Vec<f64> {
    let n = s.len();
    let h: Vec<f64> = s.windows(2).map(|w| w[1][0] - w[0][0]).collect();
    let delta: Vec<f64> = s
        .windows(2)
        .zip(&h)
        .map(|(w, &hk)| (w[1][1] - w[0][1]) / hk)
        .collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if m.signum() != d0.signum() || d0 == 0.0 {
            0.0
        } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            m
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_eval(s: &[[f64; 2]], d: &[f64], x: f64) -> (f64, f64) {
    let n = s.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    if x <= s[0][0] {
        return (s[0][1], 0.0);
    }
    if x >= s[n - 1][0] {
        return (s[n - 1][1], 0.0);
    }
    let k = s.partition_point(|p| p[0] <= x) - 1;
    let h = s[k + 1][0] - s[k][0];
    let t = (x - s[k][0]) / h;
    let (y0, y1, m0, m1) = (s[k][1], s[k + 1][1], d[k] * h, d[k + 1] * h);
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * m1;
    let dv = ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * m1)
        / h;
    (v.max(0.0), dv)
}

/// Phase modulation `φ(t) = offset + rate·t + amplitude·sin(frequency·t + phase)`.
///
/// The linear `rate` plays the role of the detuning `c` that the resonance
/// conditions absorb; the sinusoidal part is a residual modulation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseModulation {
    /// Constant phase [rad].
    pub offset: f64,
    /// Linear rate [rad/time].
    pub rate: f64,
    /// Sinusoidal amplitude [rad].
    pub amplitude: f64,
    /// Sinusoidal angular frequency [rad/time].
    pub frequency: f64,
    /// Sinusoidal phase [rad].
    pub phase: f64,
}

impl PhaseModulation {
    /// Constant phase.
    pub fn constant(offset: f64) -> Self {
        Self { offset, ..Self::default() }
    }

    /// Linear phase `offset + rate·t`.
    pub fn linear(offset: f64, rate: f64) -> Self {
        Self { offset, rate, ..Self::default() }
    }

    /// `φ(t)` [rad].
    pub fn value(&self, t: f64) -> f64 {
        self.offset + self.rate * t + self.amplitude * (self.frequency * t + self.phase).sin()
    }

    /// `dφ/dt` [rad/time].
    pub fn derivative(&self, t: f64) -> f64 {
        self.rate + self.amplitude * self.frequency * (self.frequency * t + self.phase).cos()
    }

    /// Residual `φ(t) − rate·t` left after the linear rate is absorbed.
    pub fn residual(&self, t: f64) -> f64 {
        self.value(t) - self.rate * t
    }

    /// Residual rate `dφ/dt − rate`.
    pub fn residual_derivative(&self, t: f64) -> f64 {
        self.derivative(t) - self.rate
    }

    /// Whether the modulation is purely linear.
    pub fn is_linear(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Copy with `φ'(t) = φ(t − dt)`.
    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            offset: self.offset - self.rate * dt,
            phase: self.phase - self.frequency * dt,
            ..*self
        }
    }
}

// ============================================================================
// Beams and steps
// ============================================================================

/// Propagation direction of a beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Propagates along `+x`, with the atom.
    PlusX,
    /// Propagates along `−x`, against the atom.
    MinusX,
}

/// One Raman laser beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    /// Carrier angular frequency ω [1/time].
    pub carrier: f64,
    /// Wave number `k = ω/c` [1/length].
    pub wavenumber: f64,
    /// Propagation direction.
    pub direction: Direction,
    /// Rabi envelope.
    pub envelope: PulseEnvelope,
    /// Phase modulation φ(t).
    #[serde(default)]
    pub phase_mod: PhaseModulation,
}

impl BeamSpec {
    /// Beam whose wave number follows from the carrier and the unit system.
    pub fn new(
        carrier: f64,
        units: &UnitSystem,
        direction: Direction,
        envelope: PulseEnvelope,
        phase_mod: PhaseModulation,
    ) -> Self {
        Self {
            carrier,
            wavenumber: units.wavenumber(carrier),
            direction,
            envelope,
            phase_mod,
        }
    }
}

/// Role of a basic STIRAP step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRole {
    /// Decelerating transfer `|g₀⟩ → |g₁⟩` (pump against the motion).
    DecelerateG0ToG1,
    /// Decelerating transfer `|g₁⟩ → |g₀⟩`.
    DecelerateG1ToG0,
    /// Accelerating transfer `|g₀⟩ → |g₁⟩` (pump along the motion).
    AccelerateG0ToG1,
    /// Accelerating transfer `|g₁⟩ → |g₀⟩`.
    AccelerateG1ToG0,
}

impl StepRole {
    /// Recoil sign `s`: `+1` decelerating, `−1` accelerating.
    pub fn sign(self) -> f64 {
        if self.is_decelerating() {
            1.0
        } else {
            -1.0
        }
    }

    /// Whether the role decelerates the atom.
    pub fn is_decelerating(self) -> bool {
        matches!(self, StepRole::DecelerateG0ToG1 | StepRole::DecelerateG1ToG0)
    }

    /// Internal state before the step.
    pub fn initial_state(self) -> GroundState {
        match self {
            StepRole::DecelerateG0ToG1 | StepRole::AccelerateG0ToG1 => GroundState::G0,
            _ => GroundState::G1,
        }
    }

    /// Internal state after the step.
    pub fn final_state(self) -> GroundState {
        self.initial_state().other()
    }

    /// Required (pump, Stokes) propagation directions.
    pub fn beam_directions(self) -> (Direction, Direction) {
        if self.is_decelerating() {
            (Direction::MinusX, Direction::PlusX)
        } else {
            (Direction::PlusX, Direction::MinusX)
        }
    }

    /// Role with the same direction of momentum transfer starting in `state`.
    pub fn with_initial(decelerating: bool, state: GroundState) -> Self {
        match (decelerating, state) {
            (true, GroundState::G0) => StepRole::DecelerateG0ToG1,
            (true, GroundState::G1) => StepRole::DecelerateG1ToG0,
            (false, GroundState::G0) => StepRole::AccelerateG0ToG1,
            (false, GroundState::G1) => StepRole::AccelerateG1ToG0,
        }
    }
}

/// One basic STIRAP decelerating or accelerating step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StirapStep {
    /// Role (direction of transfer and of momentum change).
    pub role: StepRole,
    /// Pump beam (couples the initial ground state to the excited state).
    pub pump: BeamSpec,
    /// Stokes beam (couples the excited state to the final ground state).
    pub stokes: BeamSpec,
    /// Duration T [time].
    pub duration: f64,
    /// Start time t₀ [time].
    pub start: f64,
    /// Slice label P₀ [momentum] at which the carriers are resonant.
    pub reference_momentum: f64,
}

impl StirapStep {
    /// Recoil sign `s` of the role.
    pub fn sign(&self) -> f64 {
        self.role.sign()
    }

    /// End time t₀ + T.
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    /// Magnitude of the momentum transfer `ħ(k₀ + k₁)`.
    pub fn recoil(&self) -> f64 {
        HBAR * (self.pump.wavenumber + self.stokes.wavenumber)
    }

    /// Signed momentum change of the atom, `−s·ħ(k₀ + k₁)`.
    pub fn momentum_change(&self) -> f64 {
        -self.sign() * self.recoil()
    }

    /// (initial, final) ground-state energies for this role.
    pub fn ground_energies(&self, atom: &AtomSpec) -> (f64, f64) {
        (
            atom.ground_energy(self.role.initial_state()),
            atom.ground_energy(self.role.final_state()),
        )
    }

    /// Slice label `P = p − sħk₀` of a packet momentum `p`.
    pub fn slice_label(&self, p: f64) -> f64 {
        p - self.sign() * HBAR * self.pump.wavenumber
    }

    /// Effective momentum offset `s·(P − P₀)` entering every coefficient.
    pub fn effective_offset(&self, p_label: f64) -> f64 {
        self.sign() * (p_label - self.reference_momentum)
    }

    /// Pump and Stokes Rabi frequencies and their derivatives at `t`.
    pub fn rabi(&self, t: f64) -> ((f64, f64), (f64, f64)) {
        (self.pump.envelope.eval(t), self.stokes.envelope.eval(t))
    }

    /// Copy translated in time by `dt`.
    pub fn shifted(&self, dt: f64) -> Self {
        let mut s = self.clone();
        s.start += dt;
        for beam in [&mut s.pump, &mut s.stokes] {
            beam.envelope = beam.envelope.shifted(dt);
            beam.phase_mod = beam.phase_mod.shifted(dt);
        }
        s
    }

    /// Copy with both Rabi amplitudes multiplied by `factor`.
    pub fn with_rabi_scale(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.pump.envelope = s.pump.envelope.scaled(factor);
        s.stokes.envelope = s.stokes.envelope.scaled(factor);
        s
    }

    /// Copy with duration and envelopes stretched by `factor` about the start.
    pub fn stretched(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.duration *= factor;
        s.pump.envelope = s.pump.envelope.stretched(factor, s.start);
        s.stokes.envelope = s.stokes.envelope.stretched(factor, s.start);
        s
    }

    /// Copy with every phase-modulation offset shifted by `(dp, ds)`.
    pub fn with_phase_offsets(&self, dp: f64, ds: f64) -> Self {
        let mut s = self.clone();
        s.pump.phase_mod.offset += dp;
        s.stokes.phase_mod.offset += ds;
        s
    }

    /// Checks the argument-level invariants of the step.
    pub fn check(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("StirapStep", "duration must be positive"));
        }
        if !self.start.is_finite() {
            return Err(Error::invalid("StirapStep", "start must be finite"));
        }
        Ok(())
    }
}

/// An ordered train of steps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SequencePlan {
    /// Steps in time order.
    pub steps: Vec<StirapStep>,
}

impl SequencePlan {
    /// Plan from a list of steps.
    pub fn new(steps: Vec<StirapStep>) -> Self {
        Self { steps }
    }

    /// Signed momentum change of every step (the recoil ledger).
    pub fn recoil_records(&self) -> Vec<f64> {
        self.steps.iter().map(StirapStep::momentum_change).collect()
    }

    /// Total signed momentum change.
    pub fn total_momentum_change(&self) -> f64 {
        self.recoil_records().iter().sum()
    }

    /// Free-flight gaps between consecutive steps.
    pub fn gaps(&self) -> Vec<f64> {
        self.steps.windows(2).map(|w| w[1].start - w[0].end()).collect()
    }

    /// First start time, if any.
    pub fn start(&self) -> Option<f64> {
        self.steps.first().map(|s| s.start)
    }

    /// Last end time, if any.
    pub fn end(&self) -> Option<f64> {
        self.steps.last().map(StirapStep::end)
    }

    /// Copy translated in time by `dt`.
    pub fn shifted(&self, dt: f64) -> Self {
        Self::new(self.steps.iter().map(|s| s.shifted(dt)).collect())
    }

    /// Concatenation `self` then `other`.
    pub fn concat(&self, other: &SequencePlan) -> Self {
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        Self::new(steps)
    }
}

// ============================================================================
// Packet and momentum grid
// ============================================================================

/// Gaussian wave packet with complex linewidth `W = dx2 + iħ·age/(2M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    /// Center-of-mass position z [length].
    pub center: f64,
    /// Mean momentum p [momentum].
    pub momentum: f64,
    /// Real linewidth part (Δx)² [length²].
    pub dx2: f64,
    /// Accumulated free-spreading time T_acc [time].
    pub age: f64,
    /// Global phase [rad].
    pub phase: f64,
}

impl GaussianPacket {
    /// Creates a packet, rejecting a non-positive `dx2`.
    pub fn new(center: f64, momentum: f64, dx2: f64, age: f64, phase: f64) -> Result<Self> {
        if !(dx2 > 0.0 && dx2.is_finite()) {
            return Err(Error::invalid("GaussianPacket", "dx2 must be positive"));
        }
        Ok(Self { center, momentum, dx2, age, phase })
    }

    /// Complex linewidth `W = (Δx)² + iħ·T_acc/(2M)`.
    pub fn linewidth(&self, mass: f64) -> Complex64 {
        Complex64::new(self.dx2, HBAR * self.age / (2.0 * mass))
    }

    /// Spatial spreading `ε = √(2(Δx)² + 2(ħT_acc/(2M·Δx))²)`.
    pub fn spreading(&self, mass: f64) -> f64 {
        let b = HBAR * self.age / (2.0 * mass * self.dx2.sqrt());
        (2.0 * self.dx2 + 2.0 * b * b).sqrt()
    }

    /// `|ρ(p)|²` per unit wave number.
    pub fn momentum_density(&self, p: f64) -> f64 {
        let q = (p - self.momentum) / HBAR;
        (2.0 * self.dx2 / std::f64::consts::PI).sqrt() * (-2.0 * self.dx2 * q * q).exp()
    }
}

/// One momentum slice with its quadrature weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Packet momentum p [momentum].
    pub momentum: f64,
    /// `|ρ(p)|²·δp/ħ` with trapezoidal end weights.
    pub weight: f64,
}

/// Uniform momentum grid over the effective momentum region of a packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    /// Center momentum [momentum].
    pub center: f64,
    /// Half the bandwidth, ΔP_M/2 [momentum].
    pub half_width: f64,
    /// Slices in increasing momentum.
    pub points: Vec<GridPoint>,
}

impl MomentumGrid {
    /// Default bandwidth `ΔP_M = y_M·√2·ħ/Δx`.
    pub fn default_bandwidth(packet: &GaussianPacket, y_m: f64) -> f64 {
        y_m * 2f64.sqrt() * HBAR / packet.dx2.sqrt()
    }

    /// Uniform grid of `n ≥ 2` points over `[p̄ − ΔP_M/2, p̄ + ΔP_M/2]`.
    pub fn new(packet: &GaussianPacket, bandwidth: f64, n: usize) -> Result<Self> {
        if !(bandwidth > 0.0) || n < 2 {
            return Err(Error::invalid("MomentumGrid", "need bandwidth > 0 and at least two points"));
        }
        let half = 0.5 * bandwidth;
        let dp = bandwidth / (n - 1) as f64;
        let points = (0..n)
            .map(|i| {
                let p = packet.momentum - half + dp * i as f64;
                let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                GridPoint {
                    momentum: p,
                    weight: end * packet.momentum_density(p) * dp / HBAR,
                }
            })
            .collect();
        Ok(Self { center: packet.momentum, half_width: half, points })
    }

    /// One-point grid of unit weight at momentum `p`.
    pub fn single(p: f64) -> Self {
        Self {
            center: p,
            half_width: 0.0,
            points: vec![GridPoint { momentum: p, weight: 1.0 }],
        }
    }

    /// Bandwidth ΔP_M.
    pub fn bandwidth(&self) -> f64 {
        2.0 * self.half_width
    }

    /// Sum of weights.
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    /// Momenta of all slices.
    pub fn momenta(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.momentum).collect()
    }
}

// ============================================================================
// Validation
// ============================================================================

/// Category of a violated physical precondition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    /// Atom invariants violated.
    InvalidAtom,
    /// Non-positive or non-finite step duration.
    ZeroDuration,
    /// Beam directions inconsistent with the role.
    DirectionMismatch,
    /// Wave number inconsistent with the carrier and unit system.
    WavenumberMismatch,
    /// Stokes does not dominate at the start or pump at the end.
    OrderingViolation,
    /// Consecutive roles do not chain internal states.
    RoleAlternation,
    /// Same-kind steps with different durations.
    DurationMismatch,
    /// Steps overlap in time or are out of order.
    StepOverlap,
    /// Mean momentum not well above half the bandwidth.
    MomentumSignAmbiguity,
    /// A decelerating recoil would reverse part of the packet.
    RecoilExceedsMomentum,
    /// A step's reference momentum is outside the packet's momentum region.
    ReferenceMomentumOffCenter,
    /// Packet invariants violated.
    InvalidPacket,
    /// Grid weights inconsistent with the packet.
    InvalidGrid,
}

impl IssueKind {
    /// Stable phrase used in reports.
    pub fn phrase(self) -> &'static str {
        match self {
            IssueKind::InvalidAtom => "invalid atom",
            IssueKind::ZeroDuration => "zero-duration step",
            IssueKind::DirectionMismatch => "direction mismatch",
            IssueKind::WavenumberMismatch => "wavenumber mismatch",
            IssueKind::OrderingViolation => "ordering violation",
            IssueKind::RoleAlternation => "role alternation",
            IssueKind::DurationMismatch => "duration mismatch",
            IssueKind::StepOverlap => "step overlap",
            IssueKind::MomentumSignAmbiguity => "momentum sign ambiguity",
            IssueKind::RecoilExceedsMomentum => "recoil exceeds momentum",
            IssueKind::ReferenceMomentumOffCenter => "reference momentum off center",
            IssueKind::InvalidPacket => "invalid packet",
            IssueKind::InvalidGrid => "invalid grid",
        }
    }
}

/// One violated precondition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    /// Category.
    pub kind: IssueKind,
    /// Index of the offending step, when applicable.
    pub step: Option<usize>,
    /// Details.
    pub message: String,
}

/// Every violated physical precondition of a scenario; empty means runnable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Violations in discovery order.
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    /// Whether the scenario is runnable.
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// Whether an issue of `kind` was reported.
    pub fn contains(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }

    fn push(&mut self, kind: IssueKind, step: Option<usize>, message: impl Into<String>) {
        self.issues.push(ValidationIssue { kind, step, message: message.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for issue in &self.issues {
            match issue.step {
                Some(i) => writeln!(f, "{} (step {}): {}", issue.kind.phrase(), i, issue.message)?,
                None => writeln!(f, "{}: {}", issue.kind.phrase(), issue.message)?,
            }
        }
        Ok(())
    }
}

/// Tunable thresholds of [`validate_scenario_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Bound on `tan θ(t₀)` and `cot θ(t₀+T)`.
    pub theta_tol: f64,
    /// Unit system for the wave-number check; skipped when `None`.
    pub units: Option<UnitSystem>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { theta_tol: 1e-3, units: None }
    }
}

/// Validates a scenario with default thresholds.
pub fn validate_scenario(
    atom: &AtomSpec,
    plan: &SequencePlan,
    packet: &GaussianPacket,
    grid: &MomentumGrid,
) -> ValidationReport {
    validate_scenario_with(atom, plan, packet, grid, &ValidationOptions::default())
}

/// Ratio `Ω_a/Ω_b` at `t`, nudging inward when both vanish exactly.
fn envelope_ratio(a: &PulseEnvelope, b: &PulseEnvelope, t: f64, inward: f64) -> f64 {
    let (mut va, mut vb) = (a.value(t), b.value(t));
    if va == 0.0 && vb == 0.0 {
        va = a.value(t + inward);
        vb = b.value(t + inward);
    }
    if va == 0.0 {
        0.0
    } else if vb == 0.0 {
        f64::INFINITY
    } else {
        va / vb
    }
}

/// Validates a scenario; diagnostics are data, never errors.
pub fn validate_scenario_with(
    atom: &AtomSpec,
    plan: &SequencePlan,
    packet: &GaussianPacket,
    grid: &MomentumGrid,
    options: &ValidationOptions,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    if let Err(e) = atom.check() {
        report.push(IssueKind::InvalidAtom, None, e.to_string());
    }
    if atom.e0 == atom.e1 {
        report.push(IssueKind::InvalidAtom, None, "ground levels are degenerate (e0 = e1)");
    }
    if !(packet.dx2 > 0.0) {
        report.push(IssueKind::InvalidPacket, None, "dx2 must be positive");
    }
    let half = grid.half_width;
    if packet.momentum <= half {
        report.push(
            IssueKind::MomentumSignAmbiguity,
            None,
            format!("mean momentum {} does not exceed ΔP_M/2 = {}", packet.momentum, half),
        );
    }
    if grid.points.len() > 1 {
        if (grid.center - packet.momentum).abs() > 1e-12 * packet.momentum.abs().max(1.0) {
            report.push(IssueKind::InvalidGrid, None, "grid is not centered on the packet momentum");
        }
        if grid.points.iter().any(|p| !(p.weight >= 0.0)) {
            report.push(IssueKind::InvalidGrid, None, "negative grid weight");
        }
    }

    let mut p = packet.momentum;
    let mut durations: [Option<f64>; 2] = [None, None];
    for (i, step) in plan.steps.iter().enumerate() {
        if !(step.duration > 0.0 && step.duration.is_finite()) {
            report.push(IssueKind::ZeroDuration, Some(i), format!("duration {}", step.duration));
            continue;
        }
        let (dp, ds) = step.role.beam_directions();
        if step.pump.direction != dp || step.stokes.direction != ds {
            report.push(IssueKind::DirectionMismatch, Some(i), "beam directions do not match role");
        }
        if let Some(units) = options.units {
            for (name, beam) in [("pump", &step.pump), ("stokes", &step.stokes)] {
                let k = units.wavenumber(beam.carrier);
                if (k - beam.wavenumber).abs() > 1e-9 * k.abs().max(1e-300) {
                    report.push(
                        IssueKind::WavenumberMismatch,
                        Some(i),
                        format!("{name} wavenumber {} differs from carrier/c = {k}", beam.wavenumber),
                    );
                }
            }
        }
        let nudge = 1e-6 * step.duration;
        let tan0 = envelope_ratio(&step.pump.envelope, &step.stokes.envelope, step.start, nudge);
        let cot1 = envelope_ratio(&step.stokes.envelope, &step.pump.envelope, step.end(), -nudge);
        if !(tan0 <= options.theta_tol) || !(cot1 <= options.theta_tol) {
            report.push(
                IssueKind::OrderingViolation,
                Some(i),
                format!("tan θ(t0) = {tan0:e}, cot θ(tf) = {cot1:e} (tolerance {:e})", options.theta_tol),
            );
        }
        let slot = usize::from(!step.role.is_decelerating());
        match durations[slot] {
            None => durations[slot] = Some(step.duration),
            Some(d) if (d - step.duration).abs() > 1e-12 * d => report.push(
                IssueKind::DurationMismatch,
                Some(i),
                format!("duration {} differs from {}", step.duration, d),
            ),
            _ => {}
        }
        if i > 0 {
            let prev = &plan.steps[i - 1];
            if prev.role.final_state() != step.role.initial_state() {
                report.push(IssueKind::RoleAlternation, Some(i), "initial state differs from previous final state");
            }
            if step.start < prev.end() - 1e-12 * prev.duration {
                report.push(IssueKind::StepOverlap, Some(i), "step starts before the previous one ends");
            }
        }
        let label = step.slice_label(p);
        if (label - step.reference_momentum).abs() > half.max(1e-9 * p.abs()) {
            report.push(
                IssueKind::ReferenceMomentumOffCenter,
                Some(i),
                format!("reference momentum {} vs packet slice label {}", step.reference_momentum, label),
            );
        }
        if step.role.is_decelerating() && p - half <= step.recoil() {
            report.push(
                IssueKind::RecoilExceedsMomentum,
                Some(i),
                format!("p − ΔP_M/2 = {} does not exceed recoil {}", p - half, step.recoil()),
            );
        }
        p += step.momentum_change();
    }
    report
}
