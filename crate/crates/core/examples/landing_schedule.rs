//! Finite-time ground-state landing: the schedule raises the ground
//! population linearly until it reaches one, while the Lyapunov energy
//! decreases monotonically.
//!
//! Run with `cargo run --release --example landing_schedule`.

use ecqt::deform::{landing_ground_population, finite_landing_time, lyapunov};
use ecqt::integrator::{evolve_effective_timelocal, IntegratorConfig, TimeLocalSchedule};
use ecqt::linalg::pauli;
use ecqt::qstate::PureState;

fn main() -> ecqt::Result<()> {
    let xi = 1.0;
    let delta_e = 2.0;
    let h = pauli(3) * ecqt::linalg::c(-1.0, 0.0);
    let psi0 = PureState::from_amplitudes(&[0.5f64.sqrt(), 0.5f64.sqrt()])?;
    let t_land = finite_landing_time(xi, delta_e, 0.5)?;
    println!("predicted landing time {t_land:.4}");

    let horizon = 0.95 * t_land;
    let traj = evolve_effective_timelocal(&h, xi, TimeLocalSchedule::Landing, &psi0.density(), &IntegratorConfig::new(1e-4, horizon))?;
    for k in (0..traj.len()).step_by(traj.len() / 8) {
        let t = traj.history.time(k);
        let p = traj.history.state(k).populations()[0];
        println!(
            "t={t:.3}  ground {p:.5} (line {:.5})  lyapunov {:.4}",
            landing_ground_population(xi, delta_e, 0.5, t),
            lyapunov(xi, delta_e, 0.5, t)?
        );
    }
    Ok(())
}
