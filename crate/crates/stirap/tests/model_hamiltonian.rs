//! Model invariants, validation diagnostics, carrier resonance and the
//! adiabatic eigensystem.

use proptest::prelude::*;

use stirap::design::{design_plan, design_step, PulseDesign};
use stirap::hamiltonian::{
    adiabatic_eigensystem, carrier_residuals, detunings, hamiltonian_matrix, mixing_angle, solve_carriers,
};
use stirap::model::{
    validate_scenario, AtomSpec, GaussianPacket, GroundState, IssueKind, MomentumGrid, PulseEnvelope,
    SequencePlan, StepRole,
};
use stirap::units::UnitSystem;
use stirap::Error;

fn atom() -> AtomSpec {
    AtomSpec::new(100.0, 0.0, 5.0, 1000.0).unwrap()
}

fn packet() -> GaussianPacket {
    GaussianPacket::new(0.0, 200.0, 1.0, 0.0, 0.0).unwrap()
}

fn decel_step() -> stirap::model::StirapStep {
    let role = StepRole::with_initial(true, GroundState::G0);
    design_step(&atom(), &UnitSystem::default(), role, 200.0, 0.0, &PulseDesign::default()).unwrap()
}

// ============================================================================
// Model
// ============================================================================

#[test]
fn atom_and_packet_reject_invalid_input() {
    assert!(AtomSpec::new(-1.0, 0.0, 5.0, 1000.0).is_err());
    assert!(GaussianPacket::new(0.0, 1.0, 0.0, 0.0, 0.0).is_err());
    assert!(PulseEnvelope::gaussian(1.0, 0.0, 0.0).is_err());
}

#[test]
fn roles_chain_internal_states() {
    let d = StepRole::with_initial(true, GroundState::G0);
    assert_eq!(d.initial_state(), GroundState::G0);
    assert_eq!(d.final_state(), GroundState::G1);
    assert_eq!(StepRole::with_initial(true, GroundState::G1).final_state(), GroundState::G0);
    assert_eq!(d.sign(), 1.0);
    assert_eq!(StepRole::with_initial(false, GroundState::G0).sign(), -1.0);
}

#[test]
fn momentum_grid_is_centered_and_normalized() {
    let pk = packet();
    let grid = MomentumGrid::new(&pk, MomentumGrid::default_bandwidth(&pk, 5.0), 201).unwrap();
    assert_eq!(grid.points.len(), 201);
    assert!((grid.points[100].momentum - pk.momentum).abs() < 1e-12);
    // Probability inside ±5 reduced widths is 1 − erfc(5).
    assert!((grid.total_weight() - 1.0).abs() < 1e-9, "{}", grid.total_weight());
    let single = MomentumGrid::single(42.0);
    assert_eq!(single.momenta(), vec![42.0]);
    assert_eq!(single.bandwidth(), 0.0);
}

#[test]
fn designed_plan_validates_cleanly() {
    let pk = packet();
    let plan = design_plan(&atom(), &UnitSystem::default(), true, GroundState::G0, 200.0, 3, 0.0,
        &PulseDesign { gap: 0.1, ..PulseDesign::default() }).unwrap();
    let grid = MomentumGrid::new(&pk, MomentumGrid::default_bandwidth(&pk, 3.0), 11).unwrap();
    let report = validate_scenario(&atom(), &plan, &pk, &grid);
    assert!(report.is_empty(), "{report}");
}

#[test]
fn validation_reports_each_violation() {
    let pk = packet();
    let grid = MomentumGrid::new(&pk, MomentumGrid::default_bandwidth(&pk, 3.0), 11).unwrap();
    let step = decel_step();

    let mut zero = step.clone();
    zero.duration = 0.0;
    let r = validate_scenario(&atom(), &SequencePlan::new(vec![zero]), &pk, &grid);
    assert!(r.contains(IssueKind::ZeroDuration));

    let overlap = SequencePlan::new(vec![step.clone(), step.shifted(0.5)]);
    let r = validate_scenario(&atom(), &overlap, &pk, &grid);
    assert!(r.contains(IssueKind::StepOverlap) || r.contains(IssueKind::RoleAlternation));

    let mut swapped = step.clone();
    std::mem::swap(&mut swapped.pump.envelope, &mut swapped.stokes.envelope);
    let r = validate_scenario(&atom(), &SequencePlan::new(vec![swapped]), &pk, &grid);
    assert!(r.contains(IssueKind::OrderingViolation));

    let slow = GaussianPacket { momentum: 5.0, ..pk };
    let grid_slow = MomentumGrid::new(&slow, MomentumGrid::default_bandwidth(&slow, 3.0), 11).unwrap();
    let r = validate_scenario(&atom(), &SequencePlan::new(vec![step]), &slow, &grid_slow);
    assert!(!r.is_empty());
}

// ============================================================================
// Hamiltonian
// ============================================================================

#[test]
fn designed_carriers_are_resonant_at_the_reference_slice() {
    let step = decel_step();
    let (rp, rs) = carrier_residuals(&step, &atom(), 0.0, 0.0);
    assert!(rp.abs() < 1e-9 && rs.abs() < 1e-9, "{rp} {rs}");
    let (dp, ds) = detunings(&atom(), step.role, &step.pump, &step.stokes, step.reference_momentum);
    assert!(dp.abs() < 1e-9 && ds.abs() < 1e-9, "{dp} {ds}");
}

#[test]
fn carriers_need_positive_momentum() {
    let role = StepRole::with_initial(true, GroundState::G0);
    assert!(matches!(
        solve_carriers(&atom(), role, &UnitSystem::default(), -1.0, 0.0, 0.0),
        Err(Error::NonPositiveMomentum { .. })
    ));
}

#[test]
fn eigensystem_is_zero_field_error() {
    let step = decel_step();
    let far = step.end() + 100.0;
    assert!(mixing_angle(&step, far).is_err());
    assert!(adiabatic_eigensystem(&step, &atom(), step.reference_momentum, far).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// H is Hermitian and its adiabatic eigenvectors are orthonormal
    /// eigenvectors with eigenvalues (0, −Ω, +Ω).
    #[test]
    fn adiabatic_eigenvectors_diagonalize_h(u in 0.02f64..0.98, dp in -40.0f64..40.0) {
        let (atom, step) = (atom(), decel_step());
        let t = step.start + u * step.duration;
        let p = step.reference_momentum + dp;
        let h = hamiltonian_matrix(&step, &atom, p, t);
        prop_assert!((h - h.adjoint()).norm() < 1e-12 * h.norm());
        let es = adiabatic_eigensystem(&step, &atom, p, t).unwrap();
        let omega = mixing_angle(&step, t).unwrap().omega;
        let vecs = [es.g0, es.g_plus, es.g_minus];
        for (i, v) in vecs.iter().enumerate() {
            let residual = (h * v - v * num_complex::Complex64::from(es.eigenvalues[i])).norm();
            prop_assert!(residual < 1e-10 * omega, "residual {}", residual);
            for (j, w) in vecs.iter().enumerate() {
                let dot = v.dotc(w).norm();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-12);
            }
        }
        prop_assert_eq!(es.g0[1].norm(), 0.0);
    }

    /// θ̇ from analytic envelope derivatives matches a central difference.
    #[test]
    fn mixing_angle_rate_matches_difference(u in 0.05f64..0.95) {
        let step = decel_step();
        let t = step.start + u * step.duration;
        let h = 1e-5;
        let fd = (mixing_angle(&step, t + h).unwrap().theta - mixing_angle(&step, t - h).unwrap().theta) / (2.0 * h);
        let a = mixing_angle(&step, t).unwrap();
        prop_assert!((a.theta_dot - fd).abs() <= 1e-6 * fd.abs().max(1.0));
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&a.theta));
    }

    /// Scaling both Rabi amplitudes leaves θ unchanged and scales Ω.
    #[test]
    fn rabi_scaling_keeps_angle(u in 0.05f64..0.95, a in 0.1f64..10.0) {
        let step = decel_step();
        let t = step.start + u * step.duration;
        let (x, y) = (mixing_angle(&step, t).unwrap(), mixing_angle(&step.with_rabi_scale(a), t).unwrap());
        prop_assert!((x.theta - y.theta).abs() < 1e-12);
        prop_assert!((y.omega - a * x.omega).abs() < 1e-9 * y.omega);
    }
}
