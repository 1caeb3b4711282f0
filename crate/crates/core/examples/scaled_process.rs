// Rescaled lattice paths and the Brownian increment structure.

use hexwalk::montecarlo::{donsker_diagnostic, scaled_lattice_replica};
use hexwalk::StepProbabilities;

pub fn run_example() {
    let q = StepProbabilities::uniform();
    let p = scaled_lattice_replica(100, 5.0, &q, 5, 0).unwrap();
    for (t, v) in p.time_grid.iter().zip(&p.values) {
        println!("t = {t:.2}: ({:+.4}, {:+.4})", v[0], v[1]);
    }

    let q = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap();
    let r = donsker_diagnostic(1000, 5_000, &q, 6).unwrap();
    for inc in &r.increments {
        println!("increment [{}, {}]: whitened error {:.4}", inc.start, inc.end, inc.whitened_relative_error.unwrap());
    }
    let worst = r.cross.iter().map(|c| c.max_z).fold(0.0, f64::max);
    println!("largest cross-covariance z-score over disjoint increments: {worst:.2}");
}

#[allow(dead_code)]
fn main() {
    run_example()
}
