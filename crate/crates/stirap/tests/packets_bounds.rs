//! Gaussian packet algebra and the adiabatic error bounds.

use num_complex::Complex64;
use proptest::prelude::*;

use stirap::bounds::{
    deviation_bound, dyson_bound, dyson_truncation_order, eqtrans_total_bound, f_factor, first_order_bound,
    matrix_norm_max, sequence_bound, theta_dot_max, truncation_order_for, BoundKind, BoundOptions,
};
use stirap::design::{design_plan, design_step, PulseDesign};
use stirap::model::{AtomSpec, GaussianPacket, GroundState, MomentumGrid, StepRole, StirapStep};
use stirap::propagator::slice_run;
use stirap::units::UnitSystem;
use stirap::wavepacket::{
    fit_momentum_amplitudes, free_flight, ideal_step, momentum_amplitude, run_sequence, truncation_probability,
};

fn atom() -> AtomSpec {
    AtomSpec::new(100.0, 0.0, 5.0, 1000.0).unwrap()
}

fn decel_step() -> StirapStep {
    let role = StepRole::with_initial(true, GroundState::G0);
    design_step(&atom(), &UnitSystem::default(), role, 200.0, 0.0, &PulseDesign::default()).unwrap()
}

// ============================================================================
// Packets
// ============================================================================

#[test]
fn ideal_step_requires_matching_state() {
    let pk = GaussianPacket::new(0.0, 200.0, 1.0, 0.0, 0.0).unwrap();
    assert!(ideal_step(&pk, GroundState::G1, &decel_step(), &atom()).is_err());
    let (next, st) = ideal_step(&pk, GroundState::G0, &decel_step(), &atom()).unwrap();
    assert_eq!(st, GroundState::G1);
    assert_eq!(next.momentum, 200.0 + decel_step().momentum_change());
    assert_eq!(next.age, 1.0);
}

#[test]
fn run_sequence_rejects_mismatched_flights() {
    let plan = design_plan(&atom(), &UnitSystem::default(), true, GroundState::G0, 200.0, 2, 0.0,
        &PulseDesign { gap: 0.3, ..PulseDesign::default() }).unwrap();
    let pk = GaussianPacket::new(0.0, 200.0, 1.0, 0.0, 0.0).unwrap();
    assert!(run_sequence(&pk, GroundState::G0, &plan, &atom(), &[0.1]).is_err());
    assert!(run_sequence(&pk, GroundState::G0, &plan, &atom(), &[0.3]).is_ok());
    assert!(free_flight(&pk, 100.0, -1.0).is_err());
}

#[test]
fn truncation_bracket_at_zero_bandwidth() {
    let pk = GaussianPacket::new(0.0, 200.0, 1.0, 0.0, 0.0).unwrap();
    let t = truncation_probability(&pk, 0.0).unwrap();
    assert_eq!(t.exact, 1.0);
    assert!(t.lower <= 1.0 && t.upper >= 1.0);
    assert!(truncation_probability(&pk, -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Sampling a packet's amplitude and fitting recovers the packet.
    #[test]
    fn fit_round_trip(z in -3.0f64..3.0, p in 50.0f64..300.0, dx2 in 0.2f64..4.0, age in 0.0f64..50.0,
                      phase in 0.0f64..6.28) {
        let mass = 100.0;
        let pk = GaussianPacket::new(z, p, dx2, age, phase).unwrap();
        let w = 3.0 / dx2.sqrt();
        let momenta: Vec<f64> = (0..41).map(|i| p - w + 2.0 * w * i as f64 / 40.0).collect();
        let amps: Vec<Complex64> = momenta.iter().map(|&q| momentum_amplitude(&pk, mass, q)).collect();
        let fit = fit_momentum_amplitudes(&momenta, &amps, mass).unwrap();
        prop_assert!((fit.center - z).abs() < 1e-8);
        prop_assert!((fit.momentum - p).abs() < 1e-8);
        prop_assert!((fit.dx2 - dx2).abs() < 1e-8 * dx2);
        prop_assert!((fit.age - age).abs() < 1e-6);
        let dphi = (fit.phase - phase).rem_euclid(std::f64::consts::TAU);
        prop_assert!(dphi < 1e-8 || dphi > std::f64::consts::TAU - 1e-8);
    }

    /// Free flight composes additively and keeps |ρ| fixed.
    #[test]
    fn free_flight_composes(a in 0.0f64..5.0, b in 0.0f64..5.0, q in -2.0f64..2.0) {
        let mass = 100.0;
        let pk = GaussianPacket::new(0.1, 150.0, 0.8, 1.0, 0.2).unwrap();
        let two = free_flight(&free_flight(&pk, mass, a).unwrap(), mass, b).unwrap();
        let one = free_flight(&pk, mass, a + b).unwrap();
        prop_assert!((two.center - one.center).abs() < 1e-12 * one.center.abs().max(1.0));
        prop_assert!((two.age - one.age).abs() < 1e-12 * one.age.max(1.0));
        prop_assert_eq!(two.dx2, pk.dx2);
        let (ra, rb) = (momentum_amplitude(&pk, mass, 150.0 + q), momentum_amplitude(&one, mass, 150.0 + q));
        prop_assert!((ra.norm() - rb.norm()).abs() < 1e-12);
    }

    /// The analytic bracket encloses erfc.
    #[test]
    fn truncation_bracket_holds(dpm in 0.0f64..20.0, dx2 in 0.1f64..5.0) {
        let pk = GaussianPacket::new(0.0, 200.0, dx2, 0.0, 0.0).unwrap();
        let t = truncation_probability(&pk, dpm).unwrap();
        prop_assert!(t.lower <= t.exact * (1.0 + 1e-12) && t.exact <= t.upper * (1.0 + 1e-12));
    }
}

// ============================================================================
// Bounds
// ============================================================================

#[test]
fn bound_reports_are_labelled() {
    let (atom, step) = (atom(), decel_step());
    let d = dyson_bound(&step, &atom, 10.0).unwrap();
    assert_eq!(d.kind, BoundKind::Dyson);
    for name in ["matrix_norm_max", "exponential_factor", "first_order"] {
        assert!(d.ingredient(name).is_some(), "{name}");
    }
    let f = first_order_bound(&step, &atom, 10.0).unwrap();
    assert!(f.value <= d.value);
    assert!((d.value - f.value * (matrix_norm_max(&step, &atom, 10.0).unwrap() * step.duration).exp()).abs()
        < 1e-9 * d.value);
}

#[test]
fn zero_bandwidth_keeps_only_the_angle_term() {
    let (atom, step) = (atom(), decel_step());
    let (_, thdot) = theta_dot_max(&step, &BoundOptions::default());
    let m = matrix_norm_max(&step, &atom, 0.0).unwrap();
    assert!((m - 2f64.sqrt() * thdot).abs() < 1e-12 * m, "{m} vs {}", 2f64.sqrt() * thdot);
    assert!(matrix_norm_max(&step, &atom, 10.0).unwrap() > m);
}

#[test]
fn sequence_bound_sums_steps() {
    let atom = atom();
    let plan = design_plan(&atom, &UnitSystem::default(), true, GroundState::G0, 200.0, 3, 0.0,
        &PulseDesign::default()).unwrap();
    let sum: f64 = plan.steps.iter().map(|s| dyson_bound(s, &atom, 5.0).unwrap().value).sum();
    assert_eq!(sequence_bound(&plan, &atom, 5.0).unwrap(), sum);
}

#[test]
fn eqtrans_bound_dominates_measured_deviation_per_slice() {
    let (atom, step) = (atom(), decel_step());
    for dp in [-20.0, 0.0, 7.0, 20.0] {
        let p = step.reference_momentum + dp;
        let b = deviation_bound(&step, &atom, p, &BoundOptions::default()).unwrap();
        let sup = (0..b.t.len()).map(|j| b.total(j, true)).fold(0.0, f64::max);
        let measured = slice_run(&step, &atom, p, 1e-10).unwrap().max_deviation.1;
        assert!(measured <= sup, "dp {dp}: measured {measured} > bound {sup}");
    }
    let pk = GaussianPacket::new(0.0, 200.0, 1.0, 0.0, 0.0).unwrap();
    let grid = MomentumGrid::new(&pk, 20.0, 5).unwrap();
    let r = eqtrans_total_bound(&step, &atom, &grid).unwrap();
    assert_eq!(r.kind, BoundKind::EqtransTotal);
    assert!(r.satisfied == (r.value <= r.epsilon_target));
}

#[test]
fn truncation_order_rejects_bad_targets() {
    assert!(truncation_order_for(1.0, 0.0).is_err());
    assert!(truncation_order_for(1.0, 1.5).is_err());
    assert!(truncation_order_for(f64::INFINITY, 0.1).is_err());
    assert_eq!(truncation_order_for(0.0, 0.1).unwrap(), 0);
    assert!(dyson_truncation_order(&decel_step(), &atom(), 10.0, 0.05).unwrap() > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The order is monotone in x and the exponential tail beyond it is
    /// below ε_r/100.
    #[test]
    fn truncation_order_controls_tail(x in 0.01f64..20.0, eps in 1e-8f64..0.5) {
        let n = truncation_order_for(x, eps).unwrap();
        prop_assert!(truncation_order_for(x * 1.5, eps).unwrap() >= n);
        let mut term = 1.0;
        for k in 1..=n + 1 {
            term *= x / k as f64;
        }
        let mut tail = 0.0;
        let mut k = n + 1;
        while term > 1e-300 && k < n + 400 {
            tail += term;
            k += 1;
            term *= x / k as f64;
        }
        prop_assert!(tail <= eps / 100.0, "x {} n {} tail {}", x, n, tail);
    }

    /// 0 < F ≤ 1 everywhere.
    #[test]
    fn f_factor_is_a_contraction(th in 0.0f64..100.0, g in 0.0f64..1000.0, om in 1.0f64..1000.0) {
        let f = f_factor(th, g, om);
        prop_assert!(f > 0.0 && f <= 1.0);
    }

    /// Bounds fall as the Rabi frequency grows.
    #[test]
    fn first_order_bound_decreases_with_rabi_scale(a in 1.0f64..8.0) {
        let (atom, step) = (atom(), decel_step());
        let x = first_order_bound(&step, &atom, 5.0).unwrap().value;
        let y = first_order_bound(&step.with_rabi_scale(a), &atom, 5.0).unwrap().value;
        prop_assert!((y - x / a).abs() <= 1e-9 * x);
    }
}
