// Quadratic moderate deviation rate and convergence of the scaled log-mgf.

use hexwalk::deviations::{md_limit_check, ModerateScale};
use hexwalk::{moderate_rate, StepProbabilities};

pub fn run_example() {
    let q = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap();
    for z in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
        println!("I({}, {}) = {:.6}", z[0], z[1], moderate_rate(z[0], z[1], &q).value);
    }

    let scale = ModerateScale::power(0.25).unwrap();
    let report = md_limit_check(scale, &q, &[10, 100, 1000, 10_000], &[[0.5, -0.3]]).unwrap();
    for row in &report.rows {
        println!("n = {:>5}: value {:.8}, limit {:.8}, gap {:.2e}", row.n, row.value, row.target, row.gap);
    }
    println!("gaps shrink monotonically: {}", report.monotone);
}

#[allow(dead_code)]
fn main() {
    run_example()
}
