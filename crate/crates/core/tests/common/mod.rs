//! Reference computations shared by the integration tests. Each one takes a
//! different route from the library code it is compared with.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hexwalk::lattice::StepProbabilities;
use hexwalk::Distribution;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

pub fn rational_set(q0: [i64; 3], q1: [i64; 3]) -> StepProbabilities {
    StepProbabilities::from_ratios(q0, q1, 1.0).unwrap()
}

/// The six parameter sets every battery test runs over.
pub fn battery() -> Vec<(&'static str, StepProbabilities)> {
    vec![
        ("uniform", rational_set([1, 1, 1], [1, 1, 1])),
        ("asymmetric", rational_set([2, 1, 1], [2, 3, 5])),
        ("rho-one", rational_set([2, 2, 1], [1, 3, 6])),
        ("zigzag", rational_set([1, 0, 1], [2, 0, 3])),
        ("generic", rational_set([1, 2, 4], [3, 5, 3])),
        ("swapped", rational_set([3, 5, 2], [3, 2, 5])),
    ]
}

/// Displacement of a step in direction `r` from a class-`i` vertex, straight from the angle.
pub fn step_vector(i: usize, r: usize, a: f64) -> (f64, f64) {
    let theta = 2.0 * std::f64::consts::PI * r as f64 / 3.0 + i as f64 * std::f64::consts::PI;
    (a * theta.cos(), a * theta.sin())
}

/// Lattice indices of a class-`i` point `(x, y)`.
pub fn indices(x: f64, y: f64, i: usize, a: f64) -> (i64, i64) {
    let j = ((x - i as f64 * a) / (1.5 * a)).round();
    let k = ((y - 0.5 * SQRT3 * a * j) / (SQRT3 * a)).round();
    (j as i64, k as i64)
}

pub fn position(j: i64, k: i64, i: usize, a: f64) -> (f64, f64) {
    (1.5 * a * j as f64 + i as f64 * a, 0.5 * SQRT3 * a * j as f64 + SQRT3 * a * k as f64)
}

/// `p_{j,k}(n)` by summing the probability of every one of the `3^n` paths.
pub fn enumerate_paths(q: &StepProbabilities, n: u32) -> BTreeMap<(i64, i64), BigRational> {
    let rows = q.exact_rows().expect("exact parameters").clone();
    let mut out = BTreeMap::new();
    for code in 0..3u64.pow(n) {
        let mut c = code;
        let (mut x, mut y) = (0.0, 0.0);
        let mut p = BigRational::one();
        for t in 0..n {
            let r = (c % 3) as usize;
            c /= 3;
            let i = (t % 2) as usize;
            let (dx, dy) = step_vector(i, r, 1.0);
            x += dx;
            y += dy;
            p *= &rows[i][r];
        }
        if !p.is_zero() {
            *out.entry(indices(x, y, (n % 2) as usize, 1.0)).or_insert_with(BigRational::zero) += p;
        }
    }
    out
}

/// `E[u^X v^Y]` summed over a distribution.
pub fn brute_pgf(d: &Distribution<f64>, u: f64, v: f64, a: f64) -> f64 {
    let i = (d.time() % 2) as usize;
    d.iter()
        .map(|((j, k), p)| {
            let (x, y) = position(j, k, i, a);
            u.powf(x) * v.powf(y) * p
        })
        .sum()
}

/// Mean, variances and covariance summed over a distribution.
pub fn brute_moments(d: &Distribution<f64>, a: f64) -> ([f64; 2], [f64; 2], f64) {
    let i = (d.time() % 2) as usize;
    let pts: Vec<(f64, f64, f64)> = d
        .iter()
        .map(|((j, k), p)| {
            let (x, y) = position(j, k, i, a);
            (x, y, p)
        })
        .collect();
    let mx: f64 = pts.iter().map(|p| p.0 * p.2).sum();
    let my: f64 = pts.iter().map(|p| p.1 * p.2).sum();
    let vx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2) * p.2).sum();
    let vy: f64 = pts.iter().map(|p| (p.1 - my).powi(2) * p.2).sum();
    let cxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my) * p.2).sum();
    ([mx, my], [vx, vy], cxy)
}

/// `Λ` by direct summation of the six exponentials.
pub fn lambda_direct(l1: f64, l2: f64, q: &StepProbabilities) -> f64 {
    let a = q.spacing();
    let e = |s: f64, t: f64| (SQRT3 * a * (s * l1 + t * l2)).exp();
    let g0 = q.q(0, 0) + q.q(0, 1) * e(-0.5 * SQRT3, 0.5) + q.q(0, 2) * e(-0.5 * SQRT3, -0.5);
    let g1 = q.q(1, 0) + q.q(1, 1) * e(0.5 * SQRT3, -0.5) + q.q(1, 2) * e(0.5 * SQRT3, 0.5);
    0.5 * (g0 * g1).ln()
}

/// `sup_λ λ·z - Λ(λ)` by successively refined grid search.
///
/// A coarse pass covers `|λ_i| ≤ 20` with step 0.05, then each pass
/// searches a window of ±2 steps around the best point at a step 40 times
/// finer.
pub fn legendre_grid(z: [f64; 2], q: &StepProbabilities) -> (f64, [f64; 2]) {
    let f = |l: [f64; 2]| l[0] * z[0] + l[1] * z[1] - lambda_direct(l[0], l[1], q);
    let mut centre = [0.0, 0.0];
    let mut half: f64 = 20.0;
    let mut h = 0.05;
    let mut best = (f(centre), centre);
    for _ in 0..5 {
        let steps = (half / h).round() as i64;
        for a in -steps..=steps {
            for b in -steps..=steps {
                let l = [centre[0] + a as f64 * h, centre[1] + b as f64 * h];
                let v = f(l);
                if v > best.0 {
                    best = (v, l);
                }
            }
        }
        centre = best.1;
        half = 2.0 * h;
        h /= 40.0;
    }
    best
}

/// One-dimensional Cramér rate `sup_t (t w - ln E e^{tW})` by refined grid search over `t ≥ 0`.
pub fn cramer_grid(w: f64, values: &[(f64, f64)]) -> f64 {
    let f = |t: f64| t * w - values.iter().map(|&(x, p)| p * (t * x).exp()).sum::<f64>().ln();
    let mut centre: f64 = 0.0;
    let mut half: f64 = 50.0;
    let mut h = 1e-2;
    let mut best = (f(0.0), 0.0);
    for _ in 0..4 {
        let steps = (half / h).round() as i64;
        for s in -steps..=steps {
            let t = (centre + s as f64 * h).max(0.0);
            let v = f(t);
            if v > best.0 {
                best = (v, t);
            }
        }
        centre = best.1;
        half = 2.0 * h;
        h /= 100.0;
    }
    best.0
}

/// Central-difference gradient of `f` at `l`.
pub fn fd_gradient(f: impl Fn(f64, f64) -> f64, l: [f64; 2], h: f64) -> [f64; 2] {
    [
        (f(l[0] + h, l[1]) - f(l[0] - h, l[1])) / (2.0 * h),
        (f(l[0], l[1] + h) - f(l[0], l[1] - h)) / (2.0 * h),
    ]
}

/// Central-difference Hessian `[xx, xy, yy]` of `f` at `l`.
pub fn fd_hessian(f: impl Fn(f64, f64) -> f64, l: [f64; 2], h: f64) -> [f64; 3] {
    let c = f(l[0], l[1]);
    let xx = (f(l[0] + h, l[1]) - 2.0 * c + f(l[0] - h, l[1])) / (h * h);
    let yy = (f(l[0], l[1] + h) - 2.0 * c + f(l[0], l[1] - h)) / (h * h);
    let xy = (f(l[0] + h, l[1] + h) - f(l[0] + h, l[1] - h) - f(l[0] - h, l[1] + h) + f(l[0] - h, l[1] - h)) / (4.0 * h * h);
    [xx, xy, yy]
}

/// Ranges of the odd-time support, `n = 2m + 1`.
pub fn odd_range(m: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for j in 0..=m {
        for k in -m..=m - j {
            out.push((j, k));
        }
    }
    for j in -m - 1..=-1 {
        for k in -m - j - 1..=m + 1 {
            out.push((j, k));
        }
    }
    out
}

/// Relative error with an absolute floor of 1.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
