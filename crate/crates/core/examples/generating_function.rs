// Generating function, finite-time moments and the asymptotic covariance.

use hexwalk::{asymptotic_covariance, evolve, moments, pgf, Distribution, StepProbabilities};

pub fn run_example() {
    let q = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap();
    let n = 40;
    let d: Distribution<f64> = evolve(&q, n).unwrap();
    let (u, v) = (1.1, 0.9);
    let direct: f64 = hexwalk::validation::expectation(&d, u, v, q.spacing());
    println!("G({u}, {v}) at n = {n}: closed {:.15}, summed {:.15}", pgf(u, v, n, &q).unwrap(), direct);

    let m = moments(n, &q);
    println!("mean {:?}", m.mean);
    println!("variance {:?}, covariance {:.6}", m.variance, m.covariance);
    println!("drift per step {:?}", m.drift);
    let c = asymptotic_covariance(&q);
    println!("C = [[{:.6}, {:.6}], [{:.6}, {:.6}]]", c.xx, c.xy, c.xy, c.yy);
}

#[allow(dead_code)]
fn main() {
    run_example()
}
