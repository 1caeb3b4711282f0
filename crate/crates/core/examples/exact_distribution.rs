// Exact state distribution by forward iteration, in rational and float arithmetic.

use hexwalk::io::heatmap;
use hexwalk::{evolve, Distribution, StepProbabilities};
use num_rational::BigRational;

pub fn run_example() {
    let q = StepProbabilities::parse(["1/2", "1/4", "1/4"], ["1/5", "3/10", "1/2"], 1.0).unwrap();
    let exact: Distribution<BigRational> = evolve(&q, 6).unwrap();
    println!("n = 6, {} reachable states, total mass {}", exact.support_len(), exact.total_mass());
    for ((j, k), p) in exact.iter().take(5) {
        println!("  p({j},{k}) = {p}");
    }
    print!("{}", heatmap(&exact));

    let float: Distribution<f64> = evolve(&q, 200).unwrap();
    println!("n = 200 in f64: mass drift {:e}", (float.total_mass() - 1.0).abs());
}

#[allow(dead_code)]
fn main() {
    run_example()
}
