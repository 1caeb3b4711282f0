//! Probability generating function and exact first and second moments.
//!
//! The generating function `G(u, v; n) = E[u^{X_n} v^{Y_n}]` factorizes as
//!
//! ```text
//! G(u, v; n) = α(ũ, ṽ)^{(n - i_n)/2} · β(ũ, ṽ)^{(n + i_n)/2} · u^{i_n a}
//! α(u, v) = q10 + q12 u + q11 u / v
//! β(u, v) = q00 + q01 v / u + q02 / u
//! ũ = u^{3a/2} v^{√3 a / 2},   ṽ = v^{√3 a}
//! ```
//!
//! Mean, variance and covariance grow linearly in `n` with a correction on odd
//! times, `E X_n = μ1 n + θ1 i_n` and so on. The linear coefficients form the
//! asymptotic covariance `C = [[σ1², σ12], [σ12, σ2²]]`.

use serde::Serialize;

use crate::engine::Distribution;
use crate::error::{Error, Result};
use crate::lattice::{parity, LatticeVertex, StepProbabilities};
use crate::linalg::Sym2;
use crate::scalar::{log_sum_exp, Scalar};

/// `α(u, v)` and `β(u, v)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgfFactors {
    pub alpha: f64,
    pub beta: f64,
}

impl PgfFactors {
    pub fn at(u: f64, v: f64, q: &StepProbabilities) -> Result<Self> {
        check_positive(u, v)?;
        let alpha = q.q(1, 0) + q.q(1, 2) * u + q.q(1, 1) * u / v;
        let beta = q.q(0, 0) + q.q(0, 1) * v / u + q.q(0, 2) / u;
        Ok(Self { alpha, beta })
    }
}

fn check_positive(u: f64, v: f64) -> Result<()> {
    if u > 0.0 && v > 0.0 && u.is_finite() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("generating function needs u, v > 0, got ({u}, {v})")))
    }
}

/// `ln α(ũ, ṽ)` and `ln β(ũ, ṽ)` as functions of `(ln u, ln v)`.
fn ln_factors(ln_u: f64, ln_v: f64, q: &StepProbabilities) -> (f64, f64) {
    let a = q.spacing();
    let s3 = 3f64.sqrt();
    let ln_ut = 1.5 * a * ln_u + 0.5 * s3 * a * ln_v;
    let ln_vt = s3 * a * ln_v;
    let ln = |p: f64| p.ln();
    let ln_alpha = log_sum_exp([ln(q.q(1, 0)), ln(q.q(1, 2)) + ln_ut, ln(q.q(1, 1)) + ln_ut - ln_vt]);
    let ln_beta = log_sum_exp([ln(q.q(0, 0)), ln(q.q(0, 1)) + ln_vt - ln_ut, ln(q.q(0, 2)) - ln_ut]);
    (ln_alpha, ln_beta)
}

/// `ln G(e^{ln_u}, e^{ln_v}; n)`, evaluated entirely in the log domain.
pub fn ln_pgf(ln_u: f64, ln_v: f64, n: u64, q: &StepProbabilities) -> f64 {
    let i = parity(n).index() as f64;
    let n = n as f64;
    let (ln_alpha, ln_beta) = ln_factors(ln_u, ln_v, q);
    let mut out = i * q.spacing() * ln_u;
    // zero exponents must not multiply a -inf factor
    if n - i > 0.0 {
        out += 0.5 * (n - i) * ln_alpha;
    }
    if n + i > 0.0 {
        out += 0.5 * (n + i) * ln_beta;
    }
    out
}

/// `G(u, v; n)` for `u, v > 0`.
pub fn pgf(u: f64, v: f64, n: u64, q: &StepProbabilities) -> Result<f64> {
    check_positive(u, v)?;
    Ok(ln_pgf(u.ln(), v.ln(), n, q).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Diffusion {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma12: f64,
}

/// Exact moments of `S_n = (X_n, Y_n)` and the asymptotic covariance.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MomentSummary {
    pub n: u64,
    pub mean: [f64; 2],
    pub variance: [f64; 2],
    pub covariance: f64,
    pub drift: [f64; 2],
    pub parity_shift: [f64; 5],
    pub diffusion: Diffusion,
    pub c: [[f64; 2]; 2],
}

impl MomentSummary {
    pub fn covariance_matrix(&self) -> Sym2 {
        Sym2::new(self.variance[0], self.covariance, self.variance[1])
    }
}

struct Coefficients {
    drift: [f64; 2],
    shift: [f64; 5],
    diffusion: Diffusion,
}

fn coefficients(q: &StepProbabilities) -> Coefficients {
    let a = q.spacing();
    let s3 = 3f64.sqrt();
    let (q01, q02, q11, q12) = (q.q(0, 1), q.q(0, 2), q.q(1, 1), q.q(1, 2));
    let (s0, s1) = (q01 + q02, q11 + q12);
    let (d0, d1) = (q01 - q02, q11 - q12);
    let a2 = a * a;
    let mu1 = 0.75 * a * (s1 - s0);
    let mu2 = 0.25 * s3 * a * (d0 - d1);
    let theta1 = a - 0.75 * a * (s1 + s0);
    let theta2 = 0.25 * s3 * a * (d0 + d1);
    let sigma1_sq = 9.0 / 8.0 * a2 * (s0 - s0 * s0 + s1 - s1 * s1);
    let theta3 = 9.0 / 8.0 * a2 * (s0 - s0 * s0 - s1 + s1 * s1);
    let sigma2_sq = 3.0 / 8.0 * a2 * (s0 - d0 * d0 + s1 - d1 * d1);
    let theta4 = 3.0 / 8.0 * a2 * (s0 - d0 * d0 - s1 + d1 * d1);
    let c0 = q01 * (q01 - 1.0) + q02 * (1.0 - q02);
    let c1 = q11 * (1.0 - q11) - q12 * (1.0 - q12);
    let k = 3.0 * s3 / 8.0 * a2;
    let sigma12 = k * (c0 - c1);
    let theta5 = k * (c0 + c1);
    Coefficients {
        drift: [mu1, mu2],
        shift: [theta1, theta2, theta3, theta4, theta5],
        diffusion: Diffusion {
            sigma1_sq,
            sigma2_sq,
            sigma12,
        },
    }
}

/// Mean vector, variances and covariance of `S_n`.
pub fn moments(n: u64, q: &StepProbabilities) -> MomentSummary {
    let Coefficients { drift, shift, diffusion } = coefficients(q);
    let i = parity(n).index() as f64;
    let nf = n as f64;
    MomentSummary {
        n,
        mean: [drift[0] * nf + shift[0] * i, drift[1] * nf + shift[1] * i],
        variance: [diffusion.sigma1_sq * nf + shift[2] * i, diffusion.sigma2_sq * nf + shift[3] * i],
        covariance: diffusion.sigma12 * nf + shift[4] * i,
        drift,
        parity_shift: shift,
        diffusion,
        c: [[diffusion.sigma1_sq, diffusion.sigma12], [diffusion.sigma12, diffusion.sigma2_sq]],
    }
}

/// The limiting covariance matrix of `n^{-1/2}(S_n - m_n)`.
pub fn asymptotic_covariance(q: &StepProbabilities) -> Sym2 {
    let d = coefficients(q).diffusion;
    Sym2::new(d.sigma1_sq, d.sigma12, d.sigma2_sq)
}

/// Mean velocity `(μ1, μ2)`.
pub fn drift(q: &StepProbabilities) -> [f64; 2] {
    coefficients(q).drift
}

/// Moments obtained by summing over a distribution's support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportMoments {
    pub mean: [f64; 2],
    pub variance: [f64; 2],
    pub covariance: f64,
}

/// First and second Cartesian moments of `d`, by direct enumeration.
pub fn moments_from_distribution<S: Scalar>(d: &Distribution<S>, a: f64) -> SupportMoments {
    let class = d.class();
    let pts: Vec<(f64, f64, f64)> = d
        .iter()
        .map(|((j, k), p)| {
            let c = LatticeVertex::new(j, k, class).position(a);
            (c.x, c.y, p.to_f64())
        })
        .collect();
    let sum = |f: &dyn Fn(&(f64, f64, f64)) -> f64| <f64 as Scalar>::sum(pts.iter().map(f));
    let mx = sum(&|&(x, _, p)| x * p);
    let my = sum(&|&(_, y, p)| y * p);
    SupportMoments {
        mean: [mx, my],
        variance: [sum(&|&(x, _, p)| (x - mx) * (x - mx) * p), sum(&|&(_, y, p)| (y - my) * (y - my) * p)],
        covariance: sum(&|&(x, y, p)| (x - mx) * (y - my) * p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgf_at_one_is_one() {
        let q = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 0.7).unwrap();
        for n in [0, 1, 2, 7, 100] {
            assert!((pgf(1.0, 1.0, n, &q).unwrap() - 1.0).abs() < 1e-13);
        }
        assert_eq!(pgf(1.3, 0.4, 0, &q).unwrap(), 1.0);
    }

    #[test]
    fn pgf_rejects_nonpositive_arguments() {
        let q = StepProbabilities::uniform();
        assert!(pgf(0.0, 1.0, 3, &q).is_err());
        assert!(pgf(1.0, -2.0, 3, &q).is_err());
        assert!(PgfFactors::at(-1.0, 1.0, &q).is_err());
    }

    #[test]
    fn pgf_with_degenerate_rows() {
        let q = StepProbabilities::new([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0).unwrap();
        // X alternates between 0 and a
        assert!((pgf(2.0, 3.0, 5, &q).unwrap() - 2.0).abs() < 1e-14);
        assert!((pgf(2.0, 3.0, 6, &q).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_moments() {
        let m = moments(11, &StepProbabilities::uniform());
        assert!(m.mean.iter().all(|x| x.abs() < 1e-15));
        assert!((m.diffusion.sigma1_sq - 0.5).abs() < 1e-15);
        assert!((m.diffusion.sigma2_sq - 0.5).abs() < 1e-15);
        assert!(m.diffusion.sigma12.abs() < 1e-15);
        assert!(m.parity_shift.iter().all(|t| t.abs() < 1e-15));
    }

    #[test]
    fn time_zero_moments_vanish() {
        let q = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap();
        let m = moments(0, &q);
        assert_eq!(m.mean, [0.0, 0.0]);
        assert_eq!(m.variance, [0.0, 0.0]);
        assert_eq!(m.covariance, 0.0);
    }

    // Three-outcome enumeration of the first step.
    #[test]
    fn one_step_moments() {
        let q = StepProbabilities::new([0.5, 0.3, 0.2], [0.2, 0.3, 0.5], 1.3).unwrap();
        let outcomes: Vec<(f64, f64, f64)> = (0..3)
            .map(|r| {
                let d = crate::lattice::displacement(crate::lattice::VertexClass::Zero, r, 1.3);
                (d.x, d.y, q.q(0, r))
            })
            .collect();
        let ex: f64 = outcomes.iter().map(|o| o.0 * o.2).sum();
        let ey: f64 = outcomes.iter().map(|o| o.1 * o.2).sum();
        let vx: f64 = outcomes.iter().map(|o| (o.0 - ex).powi(2) * o.2).sum();
        let vy: f64 = outcomes.iter().map(|o| (o.1 - ey).powi(2) * o.2).sum();
        let cxy: f64 = outcomes.iter().map(|o| (o.0 - ex) * (o.1 - ey) * o.2).sum();
        let m = moments(1, &q);
        for (a, b) in [(m.mean[0], ex), (m.mean[1], ey), (m.variance[0], vx), (m.variance[1], vy), (m.covariance, cxy)] {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn deterministic_walk_has_zero_covariance() {
        let q = StepProbabilities::new([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(asymptotic_covariance(&q), Sym2::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn uniform_covariance_is_half_identity() {
        let c = asymptotic_covariance(&StepProbabilities::uniform());
        assert!(c.sub(&Sym2::scaled_identity(0.5)).frobenius() < 1e-15);
    }
}
