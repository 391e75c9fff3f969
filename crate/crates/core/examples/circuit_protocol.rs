//! Run the interferometric circuit protocol for a two-time Hamiltonian and
//! compare with the direct integrator as the Trotter step count grows.
//!
//! Run with `cargo run --release --example circuit_protocol`.

use ecqt::circuit::{evolve_ec_circuit, ProtocolSpec};
use ecqt::echam::ECHamiltonianSpec;
use ecqt::integrator::{evolve, prehistory, IntegratorConfig};
use ecqt::linalg::{c, pauli, trace_distance, zeros};
use ecqt::qstate::PureState;

fn main() -> ecqt::Result<()> {
    let a = 0.5;
    let spec = ECHamiltonianSpec::two_two(zeros(2), 0.0, 0.0, 1.15, -0.4, a);
    let kicker = pauli(2) * c(5.0, 0.0);
    let rho0 = PureState::plus().density();
    let duration = 1.0;
    println!("{:>6} {:>12} {:>12}", "m", "deviation", "bound");
    for m in [50, 100, 200, 400] {
        let delta = duration / m as f64;
        let p = ProtocolSpec::from_ec_spec(&spec, delta, m)?;
        let pre = prehistory(&kicker, &rho0, a, delta)?;
        let (_, run) = evolve_ec_circuit(&p, &pre)?;
        let exact = evolve(&spec, &kicker, &rho0, &IntegratorConfig::new(delta, a + duration))?;
        let dev = trace_distance(run.final_state.matrix(), exact.final_state().matrix());
        println!("{m:>6} {dev:>12.3e} {:>12.3e}", run.error_bound);
    }
    Ok(())
}
