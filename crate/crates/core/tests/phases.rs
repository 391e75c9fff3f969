use ecqt::echam::ECHamiltonianSpec;
use ecqt::integrator::{evolve, IntegratorConfig};
use ecqt::linalg::{c, pauli, zeros};
use ecqt::phases::{classify, extract_features, series_features, PhaseLabel, PhaseSeries, Thresholds};
use ecqt::qstate::PureState;

const SETS: [(f64, f64); 5] = [(0.0, 12.49), (1.15, -0.4), (8.15, -2.0), (1.98, -0.97), (1.32, 2.19)];

fn label(lambda_r: f64, lambda_i: f64, dt: f64) -> PhaseLabel {
    let spec = ECHamiltonianSpec::two_two(zeros(2), 0.0, 0.0, lambda_r, lambda_i, 3.0);
    let traj = evolve(&spec, &(pauli(2) * c(5.0, 0.0)), &PureState::plus().density(), &IntegratorConfig::new(dt, 900.0)).unwrap();
    classify(&extract_features(&traj, 3.0, 0.05).unwrap(), &Thresholds::default())
}

#[test]
fn labels_survive_grid_refinement() {
    for (lr, li) in SETS {
        let (coarse, fine) = (label(lr, li, 0.01), label(lr, li, 0.005));
        assert_eq!(coarse, fine, "set ({lr}, {li})");
        assert!(!matches!(coarse, PhaseLabel::Undetermined | PhaseLabel::Mixed(_)));
    }
}

#[test]
fn classification_is_deterministic() {
    let (lr, li) = SETS[3];
    assert_eq!(label(lr, li, 0.01), label(lr, li, 0.01));
}

fn synthetic_swaps(period: f64, jitter: &[f64]) -> PhaseSeries {
    // A high plateau interrupted by sharp dips at (nearly) regular times.
    let dt = 0.01;
    let n = 60_000;
    let dips: Vec<f64> = (1..20).map(|k| k as f64 * period + jitter[k % jitter.len()]).collect();
    let fidelity: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let d = dips.iter().map(|&c| (-(t - c).powi(2) / 0.02).exp()).sum::<f64>();
            0.995 - 0.9 * d.min(1.0)
        })
        .collect();
    let populations = vec![fidelity.iter().map(|f| 0.5 + 0.5 * f).collect(), fidelity.iter().map(|f| 0.5 - 0.5 * f).collect()];
    PhaseSeries { t0: 0.0, dt, a: 3.0, fidelity, populations }
}

#[test]
fn bistable_swaps_are_equally_spaced() {
    let th = Thresholds::default();
    let f = series_features(&synthetic_swaps(30.0, &[0.0, 0.4, -0.3]), &th).unwrap();
    assert_eq!(classify(&f, &th), PhaseLabel::VBistableSwaps);
    assert!(f.swap_spacing_rel_std < 0.1, "spacing spread {}", f.swap_spacing_rel_std);
}

#[test]
fn mixed_labels_carry_distinct_components() {
    let m = PhaseLabel::Mixed(vec![PhaseLabel::IIRegularOscillation, PhaseLabel::IVStructuredModules]);
    let parts = m.components();
    assert!(parts.len() >= 2);
    assert_ne!(parts[0], parts[1]);
}
