use ecqt::integrator::prehistory;
use ecqt::linalg::{self, c, CMatrix, C64};
use ecqt::qstate::{self, DensityOperator, PureState, StateHistory};
use proptest::prelude::*;

fn state_from(re: &[f64], im: &[f64]) -> PureState {
    let v: Vec<C64> = re.iter().zip(im).map(|(&a, &b)| c(a, b)).collect();
    PureState::normalized(linalg::vector(&v)).unwrap()
}

fn hermitian_from(entries: &[f64], d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |i, j| c(entries[2 * (i * d + j)], entries[2 * (i * d + j) + 1]));
    (&g + g.adjoint()) * c(0.5, 0.0)
}

fn kicked_history(d: usize, k: &[f64], re: &[f64], im: &[f64], horizon: f64, dt: f64) -> StateHistory {
    prehistory(&hermitian_from(k, d), &state_from(&re[..d], &im[..d]).density(), horizon, dt).unwrap()
}

fn nonzero_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pure_states_stay_normalized(re in nonzero_vec(3), im in prop::collection::vec(-1.0f64..1.0, 3)) {
        let psi = state_from(&re, &im);
        prop_assert!((psi.amplitudes().norm() - 1.0).abs() <= 1e-12);
        prop_assert!((psi.density().purity() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn two_point_is_bounded_and_conjugate_symmetric(
        k in prop::collection::vec(-2.0f64..2.0, 18),
        re in nonzero_vec(3),
        im in prop::collection::vec(-1.0f64..1.0, 3),
        i in 0usize..21,
        j in 0usize..21,
    ) {
        let h = kicked_history(3, &k, &re, &im, 2.0, 0.1);
        let (ti, tj) = (h.time(i), h.time(j));
        let ab = qstate::two_point(&h, ti, tj).unwrap();
        let ba = qstate::two_point(&h, tj, ti).unwrap();
        prop_assert!(ab.w <= 1.0 + 1e-10 && ab.w >= 0.0);
        prop_assert!((ab.m.unwrap() - ba.m.unwrap().conj()).norm() <= 1e-12);
        prop_assert!((ab.m.unwrap().norm() - ab.w).abs() <= 1e-12);
        let chained = qstate::n_point(&h, &[ti, tj]).unwrap();
        prop_assert_eq!(chained.m, ab.m);
    }

    #[test]
    fn purity_is_conserved_along_unitary_histories(
        k in prop::collection::vec(-2.0f64..2.0, 8),
        re in nonzero_vec(2),
        im in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let h = kicked_history(2, &k, &re, &im, 10.0, 1e-3);
        for s in h.states() {
            prop_assert!((s.purity() - 1.0).abs() <= 1e-7);
            prop_assert!((linalg::trace(s.matrix()).re - 1.0).abs() <= 1e-7);
        }
    }

    #[test]
    fn partial_trace_preserves_trace(
        re in nonzero_vec(6),
        im in prop::collection::vec(-1.0f64..1.0, 6),
        keep in 0usize..2,
    ) {
        let rho = state_from(&re, &im).density();
        let reduced = qstate::partial_trace(&rho, &[2, 3], keep).unwrap();
        prop_assert!((linalg::trace(reduced.matrix()) - linalg::trace(rho.matrix())).norm() <= 1e-14);
    }

    #[test]
    fn binary_encoding_round_trips(
        k in prop::collection::vec(-2.0f64..2.0, 8),
        re in nonzero_vec(2),
        im in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let h = kicked_history(2, &k, &re, &im, 1.0, 0.05);
        let mut bytes = Vec::new();
        h.write_binary(&mut bytes).unwrap();
        let back = StateHistory::read_binary(&bytes[..]).unwrap();
        prop_assert_eq!(back.len(), h.len());
        for (x, y) in back.states().iter().zip(h.states()) {
            prop_assert_eq!(x.matrix(), y.matrix());
        }
    }
}

#[test]
fn mixed_histories_have_no_phase() {
    let mut h = StateHistory::new_mixed(0.0, 0.1).unwrap();
    h.push_state(DensityOperator::maximally_mixed(2)).unwrap();
    h.push_state(PureState::plus().density()).unwrap();
    assert!(qstate::n_point(&h, &[0.0, 0.1]).is_err());
    let tp = qstate::two_point(&h, 0.0, 0.1).unwrap();
    assert!(tp.m.is_none());
    assert!((tp.fidelity() - 0.5).abs() < 1e-14);
}

#[test]
fn memory_distances_must_sit_on_the_grid() {
    assert_eq!(qstate::steps_for_distance(0.3, 0.1).unwrap(), 3);
    assert_eq!(qstate::steps_for_distance(0.35, 0.1).unwrap_err().exit_code(), 2);
}
