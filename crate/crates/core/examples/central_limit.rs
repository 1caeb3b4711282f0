// Monte Carlo check of the Gaussian limit of the centred endpoint.

use hexwalk::montecarlo::clt_diagnostic;
use hexwalk::StepProbabilities;

pub fn run_example() {
    let q = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap();
    let r = clt_diagnostic(500, 20_000, &q, 7).unwrap();
    println!("n = {}, {} replicas, seed {}", r.n, r.replicas, r.seed);
    println!("relative Frobenius error of the covariance: {:.4}", r.frobenius_relative_error.unwrap());
    for c in r.coverage.unwrap() {
        println!("  ellipse at level {:.2}: coverage {:.4}", c.level, c.fraction);
    }
}

#[allow(dead_code)]
fn main() {
    run_example()
}
