// Runs the built-in consistency suites on a small configuration.

use hexwalk::validation::{default_battery, validate, Suite, ValidationConfig};

pub fn run_example() {
    let cfg = ValidationConfig {
        m: 4,
        normalization_steps: 20,
        moment_steps: 20,
    };
    let cases = default_battery();
    let report = validate(&cases[..2], &Suite::ALL, &cfg).unwrap();
    println!("cases: {}", report.cases.join(", "));
    for s in &report.suites {
        println!("{:<20} passed {:<5} checks {:>4} max violation {:e}", s.suite.name(), s.passed, s.checks, s.max_violation);
    }
    println!("all passed: {}", report.passed);
}

#[allow(dead_code)]
fn main() {
    run_example()
}
