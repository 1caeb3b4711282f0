// Rate surface on a grid, written as CSV.

use hexwalk::deviations::{rate_surface, Grid, RateMode};
use hexwalk::io::write_rate_surface_csv;
use hexwalk::StepProbabilities;

pub fn run_example() {
    let q = StepProbabilities::uniform();
    let grid: Grid = "-0.6:0.6:4,-0.6:0.6:4".parse().unwrap();
    let surface = rate_surface(RateMode::Large, &grid, &q, 1e-10);
    let mut out = Vec::new();
    write_rate_surface_csv(&surface, &mut out).unwrap();
    print!("{}", String::from_utf8(out).unwrap());
}

#[allow(dead_code)]
fn main() {
    run_example()
}
