// Cumulant generating function, its Legendre transform and halfplane tails.

use hexwalk::deviations::{empirical_decay, halfplane_infimum, lambda_derivatives, Halfplane};
use hexwalk::{lambda, legendre, StepProbabilities};

pub fn run_example() {
    let q = StepProbabilities::uniform();
    println!("Λ(0.5, -0.2) = {:.12}", lambda(0.5, -0.2, &q));
    let d = lambda_derivatives([0.0, 0.0], &q);
    println!("∇Λ(0) = {:?}", d.gradient);

    for z in [[0.0, 0.0], [0.3, 0.0], [0.5, 0.5], [10.0, 0.0]] {
        let r = legendre(z[0], z[1], &q, 1e-10).unwrap();
        println!("Λ*({}, {}) = {} (finite: {})", z[0], z[1], r.value, r.finite);
    }

    let h = Halfplane::new([1.0, 0.0], 0.3).unwrap();
    println!("inf over x ≥ 0.3: {:.6}", halfplane_infimum(&h, &q).unwrap().value);
    let decay = empirical_decay(&q, &h, &[25, 50, 100]).unwrap();
    for row in &decay.rows {
        println!("  n = {}: -ln P / n = {:.6}, gap {:.4}", row.n, row.rate, row.gap);
    }
}

#[allow(dead_code)]
fn main() {
    run_example()
}
