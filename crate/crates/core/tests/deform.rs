use ecqt::deform::{self, SpectrumInit};
use ecqt::integrator::{evolve_effective_timelocal, IntegratorConfig, TimeLocalSchedule};
use ecqt::linalg::{c, diag_real, pauli};
use ecqt::qstate::PureState;
use proptest::prelude::*;

fn spectrum() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..6).prop_flat_map(|d| {
        (
            prop::collection::vec(0.05f64..1.0, d).prop_map(|gaps| {
                gaps.iter().scan(-1.0, |e, g| {
                    *e += g;
                    Some(*e)
                })
                .collect::<Vec<f64>>()
            }),
            prop::collection::vec(0.01f64..1.0, d).prop_map(|w| {
                let z: f64 = w.iter().sum();
                w.iter().map(|x| x / z).collect::<Vec<f64>>()
            }),
        )
    })
}

proptest! {
    #[test]
    fn localization_profiles_are_normalized((e, p) in spectrum(), xi in -5.0f64..5.0, t in 0.0f64..20.0) {
        let s = SpectrumInit::new(e, p).unwrap();
        let profile = deform::localization_profile(&s, xi, t);
        prop_assert!((profile.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(profile.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn near_markovian_scale_is_one_without_commutator_coupling(lt in -5.0f64..5.0, lr in -5.0f64..5.0, a in 0.001f64..0.1) {
        let m = deform::near_markovian_map(lt, lr, 0.0, a).unwrap();
        prop_assert!((m.h_scale - 1.0).abs() <= 1e-14);
        prop_assert!((m.xi_eff - m.xi1).abs() <= 1e-14);
    }

    #[test]
    fn lyapunov_energy_decreases_before_landing(xi in 0.1f64..3.0, de in 0.5f64..4.0, p0 in 0.01f64..0.9, f1 in 0.0f64..0.5, f2 in 0.5f64..0.99) {
        let t_land = deform::finite_landing_time(xi, de, p0).unwrap();
        let (l1, l2) = (deform::lyapunov(xi, de, p0, f1 * t_land).unwrap(), deform::lyapunov(xi, de, p0, f2 * t_land).unwrap());
        prop_assert!(l2 < l1);
    }
}

#[test]
fn phase_differences_drift_linearly() {
    let energies = [-1.0, -0.2, 0.5, 1.3];
    let s = SpectrumInit::new(energies.to_vec(), vec![0.25; 4]).unwrap();
    let xi = 0.7;
    let dt = 1e-3;
    let traj = evolve_effective_timelocal(
        &diag_real(&energies),
        xi,
        TimeLocalSchedule::Fixed,
        &PureState::from_amplitudes(&[0.5; 4]).unwrap().density(),
        &IntegratorConfig::new(dt, 3.0),
    )
    .unwrap();
    for (n, m) in [(1, 0), (3, 2), (2, 0)] {
        let mut unwrapped = Vec::with_capacity(traj.len());
        let mut prev = 0.0;
        let mut offset = 0.0;
        for k in 0..traj.len() {
            let v = traj.history.vector(k).unwrap();
            let raw = (v[n] * v[m].conj()).arg();
            if k > 0 {
                let jump = raw - prev;
                if jump > std::f64::consts::PI {
                    offset -= 2.0 * std::f64::consts::PI;
                } else if jump < -std::f64::consts::PI {
                    offset += 2.0 * std::f64::consts::PI;
                }
            }
            prev = raw;
            unwrapped.push((traj.history.time(k), raw + offset));
        }
        let n_pts = unwrapped.len() as f64;
        let (mt, mp) = unwrapped.iter().fold((0.0, 0.0), |(a, b), &(t, p)| (a + t / n_pts, b + p / n_pts));
        let slope = unwrapped.iter().map(|&(t, p)| (t - mt) * (p - mp)).sum::<f64>()
            / unwrapped.iter().map(|&(t, _)| (t - mt).powi(2)).sum::<f64>();
        let want = deform::phase_difference_rate(&s, xi, n, m);
        assert!(((slope - want) / want).abs() < 0.01, "levels ({n},{m}): slope {slope} vs {want}");
    }
}

#[test]
fn landing_oracle_matches_integration() {
    let (xi, de, p0): (f64, f64, f64) = (0.5, 2.0, 0.2);
    let h = pauli(3) * c(-1.0, 0.0);
    let rho0 = PureState::from_amplitudes(&[p0.sqrt(), (1.0 - p0).sqrt()]).unwrap().density();
    let traj = evolve_effective_timelocal(&h, xi, TimeLocalSchedule::Landing, &rho0, &IntegratorConfig::new(1e-3, 2.0)).unwrap();
    for k in (0..traj.len()).step_by(50) {
        let t = traj.history.time(k);
        let want = deform::landing_ground_population(xi, de, p0, t);
        assert!((traj.history.state(k).populations()[0] - want).abs() < 1e-4, "t={t}");
    }
    let t_land = traj.diagnostics.landing_time.unwrap();
    assert!((t_land - deform::finite_landing_time(xi, de, p0).unwrap()).abs() < 1e-3);
}

#[test]
fn root_window_is_only_defined_for_small_coupling() {
    assert!(deform::root_coupled_window_end(0.0).is_err());
    assert!(deform::root_coupled_window_end(0.5).is_err());
    assert!((deform::root_coupled_window_end(0.25).unwrap() - 2f64.sqrt()).abs() < 1e-12);
}
