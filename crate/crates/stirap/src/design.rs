//! Pulse-train design: counter-intuitive pulse pairs with carriers tuned to a
//! packet's running mean momentum.
//!
//! Every step of a designed train uses the same pulse shape, placed
//! symmetrically about the step midpoint with the Stokes pulse first. The
//! carriers of step `n` are solved for the packet momentum expected after
//! steps `1..n−1`, so the packet centre is resonant in every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::carriers_for_packet;
use crate::model::{
    AtomSpec, BeamSpec, EnvelopeKind, GroundState, PhaseModulation, PulseEnvelope, SequencePlan,
    StepRole, StirapStep,
};
use crate::units::UnitSystem;

// ============================================================================
// Pulse design
// ============================================================================

/// Shape and timing of the pulse pair used for every step of a train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseDesign {
    /// Envelope family (`gaussian` or `sine-squared`).
    pub shape: EnvelopeKind,
    /// Peak Rabi frequency of both pulses [rad/time].
    pub amplitude: f64,
    /// Step duration T [time].
    pub duration: f64,
    /// Envelope width as a fraction of T.
    pub width: f64,
    /// Stokes-to-pump centre delay as a fraction of T.
    pub delay: f64,
    /// Pump detuning c₀ absorbed by a linear phase ramp [rad/time].
    #[serde(default)]
    pub detuning_pump: f64,
    /// Stokes detuning c₁ absorbed by a linear phase ramp [rad/time].
    #[serde(default)]
    pub detuning_stokes: f64,
    /// Free-flight gap between consecutive steps [time].
    #[serde(default)]
    pub gap: f64,
}

impl Default for PulseDesign {
    fn default() -> Self {
        Self {
            shape: EnvelopeKind::Gaussian,
            amplitude: 400.0,
            duration: 1.0,
            width: 0.25,
            delay: 0.45,
            detuning_pump: 0.0,
            detuning_stokes: 0.0,
            gap: 0.0,
        }
    }
}

impl PulseDesign {
    /// Checks that the design describes a usable counter-intuitive pair.
    pub fn check(&self) -> Result<()> {
        if self.shape == EnvelopeKind::Tabulated {
            return Err(Error::invalid("PulseDesign", "tabulated shapes need an explicit plan"));
        }
        let positive = [self.amplitude, self.duration, self.width];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("PulseDesign", "amplitude, duration and width must be positive"));
        }
        if !(self.delay > 0.0 && self.delay < 1.0) {
            return Err(Error::invalid("PulseDesign", "delay must lie in (0, 1)"));
        }
        if !(self.gap >= 0.0) {
            return Err(Error::invalid("PulseDesign", "gap must be non-negative"));
        }
        Ok(())
    }

    /// (pump, Stokes) envelopes of a step starting at `start`.
    pub fn envelopes(&self, start: f64) -> Result<(PulseEnvelope, PulseEnvelope)> {
        let t = self.duration;
        let mid = start + 0.5 * t;
        let w = self.width * t;
        let (cp, cs) = (mid + 0.5 * self.delay * t, mid - 0.5 * self.delay * t);
        match self.shape {
            EnvelopeKind::Gaussian => Ok((
                PulseEnvelope::gaussian(self.amplitude, cp, w)?,
                PulseEnvelope::gaussian(self.amplitude, cs, w)?,
            )),
            _ => Ok((
                PulseEnvelope::sine_squared(self.amplitude, cp, w)?,
                PulseEnvelope::sine_squared(self.amplitude, cs, w)?,
            )),
        }
    }
}

/// One step of `role` starting at `start`, resonant for packet momentum `p_mean`.
pub fn design_step(
    atom: &AtomSpec,
    units: &UnitSystem,
    role: StepRole,
    p_mean: f64,
    start: f64,
    design: &PulseDesign,
) -> Result<StirapStep> {
    design.check()?;
    let (c0, c1) = (design.detuning_pump, design.detuning_stokes);
    let (w0, w1, p_ref) = carriers_for_packet(atom, role, units, p_mean, c0, c1)?;
    let (pump_env, stokes_env) = design.envelopes(start)?;
    let (pump_dir, stokes_dir) = role.beam_directions();
    Ok(StirapStep {
        role,
        pump: BeamSpec::new(w0, units, pump_dir, pump_env, PhaseModulation::linear(0.0, c0)),
        stokes: BeamSpec::new(w1, units, stokes_dir, stokes_env, PhaseModulation::linear(0.0, c1)),
        duration: design.duration,
        start,
        reference_momentum: p_ref,
    })
}

/// Train of `n_steps` alternating steps (`g0→g1`, `g1→g0`, …) starting at
/// `start` from internal state `state`, decelerating or accelerating a packet
/// of initial mean momentum `p_mean`.
#[allow(clippy::too_many_arguments)]
pub fn design_plan(
    atom: &AtomSpec,
    units: &UnitSystem,
    decelerating: bool,
    state: GroundState,
    p_mean: f64,
    n_steps: usize,
    start: f64,
    design: &PulseDesign,
) -> Result<SequencePlan> {
    let mut steps = Vec::with_capacity(n_steps);
    let (mut p, mut st, mut t) = (p_mean, state, start);
    for _ in 0..n_steps {
        let step = design_step(atom, units, StepRole::with_initial(decelerating, st), p, t, design)?;
        p += step.momentum_change();
        st = st.other();
        t = step.end() + design.gap;
        steps.push(step);
    }
    Ok(SequencePlan::new(steps))
}
