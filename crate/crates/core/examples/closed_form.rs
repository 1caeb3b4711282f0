// Closed-form state probabilities and the exact symmetry relations.

use hexwalk::closed_form::check_symmetry;
use hexwalk::{evolve, ClosedForm, Distribution, StepProbabilities};
use num_rational::BigRational;

pub fn run_example() {
    let q = StepProbabilities::from_ratios([1, 2, 1], [5, 1, 2], 1.0).unwrap();
    let cf = ClosedForm::<BigRational>::new(&q, 6).unwrap();
    let (d, provenance) = cf.distribution(12).unwrap();
    let iterated: Distribution<BigRational> = evolve(&q, 12).unwrap();
    println!("n = 12 via {provenance:?}: agrees with iteration: {}", d == iterated);
    println!("p(1,-2) at n = 12: {}", cf.at(1, -2, 12).unwrap().value);

    let report = check_symmetry::<BigRational>(&q, 5).unwrap();
    for case in &report.cases {
        println!(
            "{:?}: applicable {}, parameter {:?}, violation {:?}",
            case.relation, case.applicable, case.parameter, case.max_violation
        );
    }
}

#[allow(dead_code)]
fn main() {
    run_example()
}
