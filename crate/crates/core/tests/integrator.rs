use ecqt::echam::ECHamiltonianSpec;
use ecqt::integrator::{evolve, step_unitary, IntegratorConfig, Stepping};
use ecqt::linalg::{self, c, pauli, zeros};
use ecqt::qstate::PureState;

#[test]
fn unitarity_over_ten_thousand_steps() {
    let a = 1.0;
    let spec = ECHamiltonianSpec::two_two(pauli(3) * c(0.3, 0.0), 0.2, -0.5, 1.15, -0.4, a);
    let dt = 1e-3 * a;
    let traj = evolve(&spec, &(pauli(2) * c(5.0, 0.0)), &PureState::plus().density(), &IntegratorConfig::new(dt, a + 10_000.0 * dt)).unwrap();
    for s in traj.history.states() {
        assert!((s.purity() - 1.0).abs() <= 1e-7);
        assert!((linalg::trace(s.matrix()).re - 1.0).abs() <= 1e-7);
    }
}

#[test]
fn empty_history_terms_reproduce_the_sqt_propagator() {
    let h = pauli(1) * c(0.7, 0.0) + pauli(3) * c(-0.2, 0.0);
    let dt = 0.01;
    let rho0 = PureState::from_amplitudes(&[0.6, 0.8]).unwrap().density();
    let traj = evolve(&ECHamiltonianSpec::sqt(h.clone()), &h, &rho0, &IntegratorConfig::new(dt, 10.0)).unwrap();
    let mut rho = rho0.clone();
    for _ in 0..1000 {
        rho = step_unitary(&h, &rho, dt).unwrap();
    }
    assert!(linalg::trace_distance(rho.matrix(), traj.final_state().matrix()) <= 1e-9);
}

fn terminal_error(dt: f64, stepping: Stepping) -> f64 {
    let a = 0.5;
    let spec = ECHamiltonianSpec::two_two(pauli(3) * c(0.5, 0.0), 0.0, 0.3, 1.15, -0.4, a);
    let kicker = pauli(2) * c(2.0, 0.0);
    let rho0 = PureState::plus().density();
    let horizon = 3.0;
    let reference = evolve(&spec, &kicker, &rho0, &IntegratorConfig::new(1e-4, horizon)).unwrap();
    let run = evolve(&spec, &kicker, &rho0, &IntegratorConfig::new(dt, horizon).with_stepping(stepping)).unwrap();
    linalg::trace_distance(run.final_state().matrix(), reference.final_state().matrix())
}

#[test]
fn halving_the_step_quarters_the_error() {
    let (e1, e2) = (terminal_error(0.01, Stepping::Trapezoid), terminal_error(0.005, Stepping::Trapezoid));
    let ratio = e1 / e2;
    assert!((3.5..4.6).contains(&ratio), "ratio {ratio} ({e1:.3e} → {e2:.3e})");
}

#[test]
fn left_endpoint_stepping_is_first_order() {
    let ratio = terminal_error(0.01, Stepping::LeftEndpoint) / terminal_error(0.005, Stepping::LeftEndpoint);
    assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
}

fn fidelity_amplitude(a: f64) -> f64 {
    let spec = ECHamiltonianSpec::two_two(zeros(2), 0.0, 0.0, 1.98, -0.97, a);
    let traj = evolve(&spec, &(pauli(2) * c(5.0, 0.0)), &PureState::plus().density(), &IntegratorConfig::new(0.001, a + 40.0)).unwrap();
    let f = &traj.fidelity_series(a).unwrap().values;
    let tail = &f[f.len() / 2..];
    tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn short_memory_collapses_fidelity_oscillations() {
    let (long, short) = (fidelity_amplitude(3.0), fidelity_amplitude(0.01));
    assert!(long > 10.0 * short, "amplitudes {long} vs {short}");
}

#[test]
fn off_grid_specs_fail_before_any_compute() {
    let spec = ECHamiltonianSpec::one_one(1.0, 0.123);
    let err = evolve(&spec, &pauli(1), &PureState::plus().density(), &IntegratorConfig::new(0.01, 1.0)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
