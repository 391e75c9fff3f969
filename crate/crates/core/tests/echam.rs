use ecqt::echam::{assemble, CouplingSchedule, ECHamiltonianSpec, MonomialTerm, Parity};
use ecqt::integrator::prehistory;
use ecqt::linalg::{self, c, pauli, CMatrix, C64};
use ecqt::qstate::PureState;
use proptest::prelude::*;

fn history(kick: &[f64], amp: &[f64]) -> ecqt::qstate::StateHistory {
    let k = pauli(1) * c(kick[0], 0.0) + pauli(2) * c(kick[1], 0.0) + pauli(3) * c(kick[2], 0.0);
    let v: Vec<C64> = vec![c(amp[0], amp[1]), c(amp[2], amp[3])];
    let psi = PureState::normalized(linalg::vector(&v)).unwrap();
    prehistory(&k, &psi.density(), 2.0, 0.1).unwrap()
}

fn amplitudes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
}

fn random_spec(seed_terms: &[(bool, Vec<usize>, f64)]) -> ECHamiltonianSpec {
    let grid = [0.0, 0.3, 0.7, 1.2, 2.0];
    let mut spec = ECHamiltonianSpec::sqt(pauli(3) * c(0.4, 0.0));
    for (plus, idx, coupling) in seed_terms {
        let factors: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let parity = if *plus { Parity::Plus } else { Parity::Minus };
        spec = spec.with_term(MonomialTerm::primitive(parity, &factors), CouplingSchedule::constant(*coupling));
    }
    spec
}

fn terms() -> impl Strategy<Value = Vec<(bool, Vec<usize>, f64)>> {
    prop::collection::vec((any::<bool>(), prop::collection::vec(0usize..5, 1..4), -3.0f64..3.0), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembled_hamiltonians_are_hermitian(kick in prop::collection::vec(-3.0f64..3.0, 3), amp in amplitudes(), t in terms()) {
        let h = history(&kick, &amp);
        let spec = random_spec(&t);
        let m = assemble(&spec, &h, 2.0).unwrap();
        prop_assert!(linalg::hermiticity_residual(&m) <= 1e-12);
    }

    #[test]
    fn zero_coupling_terms_are_inert(kick in prop::collection::vec(-3.0f64..3.0, 3), amp in amplitudes(), t in terms()) {
        let h = history(&kick, &amp);
        let spec = random_spec(&t);
        let padded = spec.clone().with_term(MonomialTerm::primitive(Parity::Plus, &[0.3, 0.0]), CouplingSchedule::constant(0.0));
        prop_assert_eq!(assemble(&spec, &h, 2.0).unwrap(), assemble(&padded, &h, 2.0).unwrap());
    }

    #[test]
    fn a_max_bounds_every_distance(t in terms()) {
        let spec = random_spec(&t);
        let a_max = spec.a_max();
        prop_assert!(spec.distances().iter().all(|&a| a <= a_max));
        prop_assert!(spec.terms.iter().any(|term| term.monomial.max_distance() == a_max));
    }

    #[test]
    fn pure_two_two_matches_the_rank_two_form(
        kick in prop::collection::vec(-3.0f64..3.0, 3),
        amp in amplitudes(),
        lambda_tma in -2.0f64..2.0,
        lambda_r in -2.0f64..2.0,
        lambda_i in -2.0f64..2.0,
    ) {
        // λ_{t−a}|a⟩⟨a| + (λ^R + iλ^I) m |a⟩⟨t| + h.c. with m = ⟨a|t⟩.
        let h = history(&kick, &amp);
        let a = 0.7;
        let spec = ECHamiltonianSpec::two_two(CMatrix::zeros(2, 2), 0.0, lambda_tma, lambda_r, lambda_i, a);
        let got = assemble(&spec, &h, 2.0).unwrap();
        let now = h.vector(h.index_of(2.0).unwrap()).unwrap().clone();
        let past = h.vector(h.index_of(2.0 - a).unwrap()).unwrap().clone();
        let m = past.dotc(&now);
        let cross = linalg::outer(&past, &now) * (m * c(lambda_r, 0.0) + m * c(0.0, lambda_i));
        let want = linalg::outer(&past, &past) * c(lambda_tma, 0.0) + &cross + cross.adjoint();
        prop_assert!(linalg::max_abs_diff(&got, &want) <= 1e-12);
    }
}

#[test]
fn spec_validation_rejects_off_grid_distances() {
    let spec = ECHamiltonianSpec::one_one(1.0, 0.25);
    assert!(spec.validate(0.05).is_ok());
    assert_eq!(spec.validate(0.1).unwrap_err().exit_code(), 2);
}
