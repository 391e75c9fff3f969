//! Rewrite a fixed qubit Hamiltonian as a history-dependent one: along a
//! Schrödinger trajectory, compute the relevant couplings that reproduce
//! H = σ³ from the current and delayed states, and check them against the
//! closed form.
//!
//! Run with `cargo run --release --example reformulate_couplings`.

use ecqt::echam::ECHamiltonianSpec;
use ecqt::integrator::{evolve, IntegratorConfig};
use ecqt::linalg::{max_abs_diff, pauli};
use ecqt::qstate::PureState;
use ecqt::reform::{couplings_along_history, sigma3_couplings};

fn main() -> ecqt::Result<()> {
    let h = pauli(3);
    let a = 0.5;
    let psi0 = PureState::from_amplitudes(&[0.8, 0.6])?;
    let traj = evolve(&ECHamiltonianSpec::sqt(h.clone()), &h, &psi0.density(), &IntegratorConfig::new(0.001, 5.0))?;

    // ν = ⟨σ³⟩ is conserved, so the couplings are constant along the run.
    let nu = 0.8f64.powi(2) - 0.6f64.powi(2);
    let closed = sigma3_couplings(nu, a)?;
    println!("closed form: {closed:?}");

    let along = couplings_along_history(&h, &traj.history, a)?;
    let mut worst: f64 = 0.0;
    for (t, cp) in along.iter().step_by(1000) {
        let k = traj.history.index_of(*t)?;
        let s = traj.history.steps_for_distance(a)?;
        let back = cp.assemble(traj.history.state(k).matrix(), traj.history.state(k - s).matrix());
        worst = worst.max(max_abs_diff(&back, &h));
        println!("t={t:5.2}  lambda_t={:+.6}  lambda_r={:+.6}  lambda_i={:+.6}", cp.lambda_t, cp.lambda_r, cp.lambda_i);
    }
    println!("max |H_rebuilt - H| = {worst:.2e}");
    Ok(())
}
