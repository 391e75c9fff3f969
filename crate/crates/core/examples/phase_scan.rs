//! Sweep the two relevant couplings on a small grid, classify every cell
//! in parallel and print the resulting phase map.
//!
//! Run with `cargo run --release --example phase_scan`.

use ecqt::cli::{evaluate_scan, ScanAxis, ScanConfig, ScanParameter, SimulateConfig, ClassifyOptions, InitialState};
use ecqt::echam::ECHamiltonianSpec;
use ecqt::integrator::Stepping;
use ecqt::linalg::{c, pauli, zeros};

fn main() -> ecqt::Result<()> {
    let base = SimulateConfig {
        spec: ECHamiltonianSpec::two_two(zeros(2), 0.0, 0.0, 1.0, 0.0, 3.0),
        kicker: pauli(2) * c(5.0, 0.0),
        initial: InitialState::default(),
        dt: 0.01,
        horizon: 600.0,
        stepping: Stepping::default(),
        fidelity_distances: vec![],
        classify: Some(ClassifyOptions::default()),
        max_steps: 1_000_000,
    };
    // Terms 0..4 of the two-time spec are λ_t, λ_{t−a}, λ^R, λ^I.
    let cfg = ScanConfig {
        base,
        axes: vec![
            ScanAxis { parameter: ScanParameter::Term(2), values: vec![0.0, 1.15, 4.0, 8.15] },
            ScanAxis { parameter: ScanParameter::Term(3), values: vec![-2.0, -0.4, 2.19] },
        ],
        cell_budget: 64,
    };
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let sweep = evaluate_scan(&cfg, workers, "example")?;
    println!("lambda_r \\ lambda_i   -2.00  -0.40   2.19");
    for row in sweep.cells.chunks(3) {
        let labels: Vec<String> = row.iter().map(|c| format!("{:>6}", c.label)).collect();
        println!("{:>8.2}            {}", row[0].coordinates[0], labels.join(" "));
    }
    Ok(())
}
