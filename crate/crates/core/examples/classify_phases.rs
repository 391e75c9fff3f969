//! Classify long-time dynamics into the five phases for the reference
//! coupling sets with a = 3 and a 5σ² kicker.
//!
//! Run with `cargo run --release --example classify_phases`.

use ecqt::echam::ECHamiltonianSpec;
use ecqt::integrator::{evolve, IntegratorConfig};
use ecqt::linalg::{c, pauli, zeros};
use ecqt::phases::{classify, extract_features, Thresholds};
use ecqt::qstate::PureState;

fn main() -> ecqt::Result<()> {
    let a = 3.0;
    let sets = [(0.0, 12.49), (1.15, -0.4), (8.15, -2.0), (1.98, -0.97), (1.32, 2.19)];
    let th = Thresholds::default();
    for (lambda_r, lambda_i) in sets {
        let spec = ECHamiltonianSpec::two_two(zeros(2), 0.0, 0.0, lambda_r, lambda_i, a);
        let traj = evolve(&spec, &(pauli(2) * c(5.0, 0.0)), &PureState::plus().density(), &IntegratorConfig::new(0.01, 900.0))?;
        let f = extract_features(&traj, a, 0.05)?;
        println!(
            "lambda_r={lambda_r:5.2} lambda_i={lambda_i:6.2} -> {:>4}  (F std {:.4}, swaps {}, plateau {:.2})",
            classify(&f, &th).short(),
            f.f_std(),
            f.swap_count,
            f.plateau_fraction
        );
    }
    Ok(())
}
