//! Evolve a qubit under a history-dependent Hamiltonian and print the
//! fidelity between the current state and the state one memory distance
//! back, sampled every τ = t/a.
//!
//! Run with `cargo run --release --example simulate_trajectory`.

use ecqt::echam::ECHamiltonianSpec;
use ecqt::integrator::{evolve, IntegratorConfig};
use ecqt::linalg::{c, pauli, zeros};
use ecqt::qstate::PureState;

fn main() -> ecqt::Result<()> {
    let a = 3.0;
    let spec = ECHamiltonianSpec::two_two(zeros(2), 0.0, 0.0, 1.15, -0.4, a);
    let kicker = pauli(2) * c(5.0, 0.0);
    let traj = evolve(&spec, &kicker, &PureState::plus().density(), &IntegratorConfig::new(0.01, 60.0))?;

    let series = traj.fidelity_series(a).expect("fidelity at the spec distance");
    println!("{:>6} {:>10} {:>10}", "tau", "F", "p0");
    let every = (a / traj.dt()).round() as usize;
    for (k, f) in series.values.iter().enumerate().step_by(every) {
        let idx = series.start_index + k;
        let t = traj.history.time(idx);
        println!("{:>6.1} {:>10.5} {:>10.5}", t / a, f, traj.history.state(idx).populations()[0]);
    }
    println!("max purity drift {:.2e}", traj.diagnostics.max_purity_drift);
    Ok(())
}
