use ecqt::echam::{assemble, ECHamiltonianSpec};
use ecqt::integrator::{evolve, IntegratorConfig};
use ecqt::linalg::{self, c, pauli, CMatrix};
use ecqt::qstate::PureState;
use ecqt::reform::{self, basis_dependent_couplings, ec_couplings_one_qubit};
use proptest::prelude::*;

fn hermitian(p: &[f64]) -> CMatrix {
    linalg::identity(2) * c(p[0], 0.0) + pauli(1) * c(p[1], 0.0) + pauli(2) * c(p[2], 0.0) + pauli(3) * c(p[3], 0.0)
}

fn state(v: &[f64]) -> PureState {
    PureState::normalized(linalg::vector(&[c(v[0], v[1]), c(v[2], v[3])])).unwrap()
}

fn amplitudes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn both_recipes_reassemble_the_target(p in prop::collection::vec(-3.0f64..3.0, 4), u in amplitudes(), v in amplitudes()) {
        let (now, past) = (state(&u), state(&v));
        prop_assume!(now.amplitudes().dotc(past.amplitudes()).norm() < 0.99);
        let h = hermitian(&p);
        let cp = ec_couplings_one_qubit(&h, &now.density(), &past.density()).unwrap();
        prop_assert!(cp.is_finite());
        prop_assert!(linalg::max_abs_diff(&cp.assemble(now.density().matrix(), past.density().matrix()), &h) <= 1e-8);
        let pair = basis_dependent_couplings(&h, now.amplitudes(), past.amplitudes()).unwrap();
        prop_assert!(linalg::max_abs_diff(&pair.assemble(now.amplitudes(), past.amplitudes()).unwrap(), &h) <= 1e-8);
    }
}

#[test]
fn reformulation_is_exact_along_a_trajectory() {
    let h = hermitian(&[0.1, 0.7, -0.4, 0.3]);
    let a = 0.4;
    let traj = evolve(&ECHamiltonianSpec::sqt(h.clone()), &h, &state(&[0.6, 0.1, 0.3, -0.7]).density(), &IntegratorConfig::new(0.01, 6.0)).unwrap();
    let s = traj.history.steps_for_distance(a).unwrap();
    for k in s..traj.len() {
        let (now, past) = (traj.history.vector(k).unwrap(), traj.history.vector(k - s).unwrap());
        let cp = ec_couplings_one_qubit(&h, traj.history.state(k), traj.history.state(k - s)).unwrap();
        let back = cp.assemble(traj.history.state(k).matrix(), traj.history.state(k - s).matrix());
        assert!(linalg::max_abs_diff(&back, &h) <= 1e-8);
        let pair = basis_dependent_couplings(&h, now, past).unwrap();
        assert!(linalg::max_abs_diff(&pair.assemble(now, past).unwrap(), &h) <= 1e-8);
    }
}

#[test]
fn history_dependent_hamiltonians_depend_on_the_initial_state() {
    let spec = ECHamiltonianSpec::one_one(1.0, 0.5);
    let kicker = pauli(1) * c(2.0, 0.0);
    let cfg = IntegratorConfig::new(0.01, 3.0);
    let t1 = evolve(&spec, &kicker, &PureState::plus().density(), &cfg).unwrap();
    let t2 = evolve(&spec, &kicker, &PureState::basis(2, 0).density(), &cfg).unwrap();
    let h1 = assemble(&spec, &t1.history, 3.0).unwrap();
    let h2 = assemble(&spec, &t2.history, 3.0).unwrap();
    assert!(linalg::fro_norm(&(h1 - h2)) > 0.1);
}

/// Least-squares slope of log|y| against log x.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.abs().ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum::<f64>() / pts.iter().map(|&(x, _)| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn couplings_diverge_as_the_states_align() {
    let h = hermitian(&[0.0, 0.7, -0.4, 0.3]);
    let now = state(&[0.6, 0.1, 0.3, -0.73]);
    let tilt = linalg::vector(&[c(0.2, 0.5), c(-0.8, 0.1)]);
    let mut diag = Vec::new();
    let mut commutator = Vec::new();
    for eps in [3e-2, 1e-2, 3e-3, 1e-3, 3e-4] {
        let v = now.amplitudes() * c((1.0f64 - eps * eps).sqrt(), 0.0) + &tilt * c(eps, 0.0);
        let past = PureState::normalized(v).unwrap();
        let gamma2 = 1.0 - now.amplitudes().dotc(past.amplitudes()).norm_sqr();
        let cp = ec_couplings_one_qubit(&h, &now.density(), &past.density()).unwrap();
        diag.push((gamma2, cp.lambda_t));
        commutator.push((gamma2, cp.lambda_i));
    }
    // The (1 − w²)⁻² prefactor is partly cancelled by numerators that vanish with γ².
    assert!((log_slope(&diag) + 1.0).abs() < 0.02, "diagonal slope {}", log_slope(&diag));
    assert!((log_slope(&commutator) + 0.5).abs() < 0.02, "commutator slope {}", log_slope(&commutator));
}

#[test]
fn aligned_states_are_rejected() {
    let psi = PureState::plus();
    let err = ec_couplings_one_qubit(&pauli(3), &psi.density(), &psi.density()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn qubit_basis_solves_one_qubit_targets_along_histories() {
    let h = hermitian(&[0.2, -0.5, 0.9, 0.1]);
    let a = 0.3;
    let traj = evolve(&ECHamiltonianSpec::sqt(pauli(2)), &pauli(2), &PureState::basis(2, 0).density(), &IntegratorConfig::new(0.01, 2.0)).unwrap();
    let basis = reform::qubit_basis(a);
    for t in [0.5, 1.0, 1.7] {
        let sys = reform::CouplingSystem::build(&h, &basis, &traj.history, t).unwrap();
        let lam = reform::solve_couplings(&sys).unwrap();
        let back = reform::reassemble(&basis, &lam, &traj.history, t).unwrap();
        assert!(linalg::max_abs_diff(&back, &h) <= 1e-8);
    }
}
