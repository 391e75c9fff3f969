//! Energy-space localization under the derivative-coupled Hamiltonian
//! ℍ = H − ξρ̇: compare the analytic population profile with a direct
//! time-local integration for both signs of ξ.
//!
//! Run with `cargo run --release --example localization_profile`.

use ecqt::deform::{characteristic_time, localization_profile, SpectrumInit};
use ecqt::integrator::{evolve_effective_timelocal, IntegratorConfig, TimeLocalSchedule};
use ecqt::linalg::diag_real;
use ecqt::qstate::PureState;

fn main() -> ecqt::Result<()> {
    let energies = vec![-1.0, 0.0, 1.0];
    let populations = vec![0.2, 0.3, 0.5];
    let spectrum = SpectrumInit::new(energies.clone(), populations.clone())?;
    let h = diag_real(&energies);
    let amps: Vec<f64> = populations.iter().map(|p| p.sqrt()).collect();
    let psi0 = PureState::from_amplitudes(&amps)?;

    for xi in [-0.5, 0.5] {
        let tc = characteristic_time(&spectrum, xi)?;
        let traj = evolve_effective_timelocal(&h, xi, TimeLocalSchedule::Fixed, &psi0.density(), &IntegratorConfig::new(0.001, 4.0))?;
        println!("xi = {xi:+}: characteristic time {tc:.3}");
        for k in (0..traj.len()).step_by(1000) {
            let t = traj.history.time(k);
            let exact = localization_profile(&spectrum, xi, t);
            let num = traj.history.state(k).populations();
            println!("  t={t:.1}  analytic {:?}  numeric {:?}", round3(&exact), round3(&num));
        }
    }
    Ok(())
}

fn round3(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}
