//! Simulation of walk trajectories and scaling-limit diagnostics.
//!
//! Replica `r` of a run seeded with `s` draws from ChaCha8 keyed by `s` on
//! stream `r`, so every replica is reproducible on its own and results do not
//! depend on how replicas are spread over threads. Positions are tracked as
//! lattice vertices and converted to Cartesian coordinates only when read.

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{CartesianPoint, LatticeVertex, StepProbabilities};
use crate::linalg::{Mat2, Sym2};
use crate::moments::{asymptotic_covariance, moments};

/// One simulated walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub steps: u64,
    pub endpoint: CartesianPoint,
    pub path: Option<Vec<CartesianPoint>>,
    pub seed: u64,
    pub replica: u64,
}

/// Step sampler for a fixed parameter set.
///
/// Directions are chosen by comparing one 32-bit draw against cumulative
/// thresholds, so a zero probability is never sampled.
#[derive(Debug, Clone)]
pub struct Sampler {
    thresholds: [[u64; 2]; 2],
    a: f64,
    seed: u64,
}

impl Sampler {
    pub fn new(q: &StepProbabilities, seed: u64) -> Self {
        let scale = (1u64 << 32) as f64;
        let thresholds = q.rows().map(|row| {
            let t0 = (row[0] * scale).round() as u64;
            let t1 = ((row[0] + row[1]) * scale).round() as u64;
            // a zero middle weight must leave an empty interval
            [t0, if row[1] == 0.0 { t0 } else { t1.max(t0) }]
        });
        Self {
            thresholds,
            a: q.spacing(),
            seed,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.a
    }

    fn rng(&self, replica: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica);
        rng
    }

    fn direction(&self, v: &LatticeVertex, rng: &mut ChaCha8Rng) -> usize {
        let x = rng.next_u32() as u64;
        let [t0, t1] = self.thresholds[v.class.index()];
        if x < t0 {
            0
        } else if x < t1 {
            1
        } else {
            2
        }
    }

    /// The vertex occupied after `n` steps of replica `replica`.
    pub fn endpoint(&self, n: u64, replica: u64) -> LatticeVertex {
        let mut rng = self.rng(replica);
        let mut v = LatticeVertex::ORIGIN;
        for _ in 0..n {
            v = v.step(self.direction(&v, &mut rng));
        }
        v
    }

    /// Vertices occupied at each of the nondecreasing `times`.
    pub fn checkpoints(&self, times: &[u64], replica: u64) -> Vec<LatticeVertex> {
        let mut rng = self.rng(replica);
        let mut v = LatticeVertex::ORIGIN;
        let mut t = 0;
        times
            .iter()
            .map(|&target| {
                while t < target {
                    v = v.step(self.direction(&v, &mut rng));
                    t += 1;
                }
                v
            })
            .collect()
    }

    /// The full path of replica `replica`, `n + 1` vertices.
    pub fn path(&self, n: u64, replica: u64) -> Vec<LatticeVertex> {
        let mut rng = self.rng(replica);
        let mut v = LatticeVertex::ORIGIN;
        let mut out = Vec::with_capacity(n as usize + 1);
        out.push(v);
        for _ in 0..n {
            v = v.step(self.direction(&v, &mut rng));
            out.push(v);
        }
        out
    }

    pub fn sample(&self, n: u64, replica: u64, with_path: bool) -> TrajectorySample {
        let path = with_path.then(|| self.path(n, replica).iter().map(|v| v.position(self.a)).collect::<Vec<_>>());
        let endpoint = match &path {
            Some(p) => *p.last().expect("path has n + 1 points"),
            None => self.endpoint(n, replica).position(self.a),
        };
        TrajectorySample {
            steps: n,
            endpoint,
            path,
            seed: self.seed,
            replica,
        }
    }

    /// Endpoints of replicas `0..replicas`, in replica order.
    pub fn endpoints(&self, n: u64, replicas: u64) -> Vec<CartesianPoint> {
        (0..replicas)
            .into_par_iter()
            .map(|r| self.endpoint(n, r).position(self.a))
            .collect()
    }
}

/// One walk of `n` steps, replica 0 of `seed`.
pub fn sample_endpoint(n: u64, q: &StepProbabilities, seed: u64) -> TrajectorySample {
    Sampler::new(q, seed).sample(n, 0, false)
}

/// Like [`sample_endpoint`], keeping every visited point.
pub fn sample_path(n: u64, q: &StepProbabilities, seed: u64) -> TrajectorySample {
    Sampler::new(q, seed).sample(n, 0, true)
}

/// Endpoints of `replicas` independent walks.
pub fn sample_endpoints(n: u64, replicas: u64, q: &StepProbabilities, seed: u64) -> Vec<CartesianPoint> {
    Sampler::new(q, seed).endpoints(n, replicas)
}

/// Visit counts of the final vertex `(j, k)` over `replicas` walks.
pub fn endpoint_histogram(n: u64, replicas: u64, q: &StepProbabilities, seed: u64) -> BTreeMap<(i64, i64), u64> {
    let sampler = Sampler::new(q, seed);
    let ends: Vec<(i64, i64)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let v = sampler.endpoint(n, r);
            (v.j, v.k)
        })
        .collect();
    let mut hist = BTreeMap::new();
    for e in ends {
        *hist.entry(e).or_insert(0) += 1;
    }
    hist
}

/// Upper `p` quantile of the chi-square law with two degrees of freedom.
pub fn chi2_2_quantile(p: f64) -> f64 {
    -2.0 * (1.0 - p).ln()
}

/// Sample covariance about a known mean, in a fixed summation order.
fn covariance_about(points: &[[f64; 2]], centre: [f64; 2]) -> Sym2 {
    let n = points.len() as f64;
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - centre[0], p[1] - centre[1]);
        xx += dx * dx;
        xy += dx * dy;
        yy += dy * dy;
    }
    Sym2::new(xx / n, xy / n, yy / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coverage {
    pub level: f64,
    pub quantile: f64,
    pub fraction: f64,
}

/// Empirical check of the bivariate normal limit of `n^{-1/2}(S_n - m_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CltReport {
    pub n: u64,
    pub replicas: u64,
    pub seed: u64,
    pub c: Sym2,
    pub empirical_covariance: Sym2,
    /// `‖Ĉ - C‖ / ‖C‖`; absent when `C = 0`.
    pub frobenius_relative_error: Option<f64>,
    /// Fractions of squared Mahalanobis distances below the chi-square quantiles;
    /// absent when `C` is singular.
    pub coverage: Option<Vec<Coverage>>,
    pub singular: bool,
    pub max_abs_normalized: f64,
}

pub const COVERAGE_LEVELS: [f64; 3] = [0.5, 0.9, 0.99];

pub fn clt_diagnostic(n: u64, replicas: u64, q: &StepProbabilities, seed: u64) -> Result<CltReport> {
    if n == 0 {
        return Err(Error::invalid("the limit diagnostic needs n >= 1"));
    }
    if replicas < 1000 {
        return Err(Error::invalid(format!("need at least 1000 replicas, got {replicas}")));
    }
    let mean = moments(n, q).mean;
    let root = (n as f64).sqrt();
    let normalized: Vec<[f64; 2]> = sample_endpoints(n, replicas, q, seed)
        .into_iter()
        .map(|p| [(p.x - mean[0]) / root, (p.y - mean[1]) / root])
        .collect();
    let c = asymptotic_covariance(q);
    let empirical = covariance_about(&normalized, [0.0, 0.0]);
    let scale = c.frobenius();
    let frobenius_relative_error = (scale > 0.0).then(|| empirical.sub(&c).frobenius() / scale);
    let inverse = c.inverse();
    let coverage = inverse.map(|inv| {
        let d2: Vec<f64> = normalized.iter().map(|&w| inv.quadratic_form(w)).collect();
        COVERAGE_LEVELS
            .iter()
            .map(|&level| {
                let quantile = chi2_2_quantile(level);
                let inside = d2.iter().filter(|&&d| d <= quantile).count();
                Coverage {
                    level,
                    quantile,
                    fraction: inside as f64 / replicas as f64,
                }
            })
            .collect()
    });
    let max_abs_normalized = normalized.iter().flat_map(|w| w.iter().map(|x| x.abs())).fold(0.0, f64::max);
    Ok(CltReport {
        n,
        replicas,
        seed,
        c,
        empirical_covariance: empirical,
        frobenius_relative_error,
        coverage,
        singular: inverse.is_none(),
        max_abs_normalized,
    })
}

/// A sampled path of a rescaled walk on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalizedPathProcess {
    pub time_grid: Vec<f64>,
    pub values: Vec<[f64; 2]>,
}

/// `S*_k(t) = k^{-1/2} S_{⌊t⌋ k}` for `t = 0, 1, …, ⌊T⌋`.
pub fn scaled_lattice_process(k: u64, horizon: f64, q: &StepProbabilities, seed: u64) -> Result<NormalizedPathProcess> {
    scaled_lattice_replica(k, horizon, q, seed, 0)
}

/// Replica `replica` of [`scaled_lattice_process`].
pub fn scaled_lattice_replica(
    k: u64,
    horizon: f64,
    q: &StepProbabilities,
    seed: u64,
    replica: u64,
) -> Result<NormalizedPathProcess> {
    if k == 0 || !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::invalid("scaled process needs k >= 1 and a positive horizon"));
    }
    let last = horizon.floor() as u64;
    let times: Vec<u64> = (0..=last).map(|t| t * k).collect();
    let sampler = Sampler::new(q, seed);
    let root = (k as f64).sqrt();
    let values = sampler
        .checkpoints(&times, replica)
        .iter()
        .map(|v| {
            let p = v.position(sampler.spacing());
            [p.x / root, p.y / root]
        })
        .collect();
    Ok(NormalizedPathProcess {
        time_grid: (0..=last).map(|t| t as f64).collect(),
        values,
    })
}

/// `S_n(t) = n^{-1/2}(S_{⌊nt⌋} - m_{⌊nt⌋})` on `grid`, for one replica.
pub fn normalized_path(n: u64, grid: &[f64], q: &StepProbabilities, seed: u64, replica: u64) -> Result<NormalizedPathProcess> {
    let times = grid_times(n, grid)?;
    let sampler = Sampler::new(q, seed);
    Ok(NormalizedPathProcess {
        time_grid: grid.to_vec(),
        values: normalize(&sampler, n, &times, &sampler.checkpoints(&times, replica), q),
    })
}

fn grid_times(n: u64, grid: &[f64]) -> Result<Vec<u64>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid("time grid must be increasing and nonnegative"));
    }
    Ok(grid.iter().map(|&t| (n as f64 * t).floor() as u64).collect())
}

fn normalize(sampler: &Sampler, n: u64, times: &[u64], vertices: &[LatticeVertex], q: &StepProbabilities) -> Vec<[f64; 2]> {
    let root = (n as f64).sqrt();
    vertices
        .iter()
        .zip(times)
        .map(|(v, &t)| {
            let p = v.position(sampler.spacing());
            let m = moments(t, q).mean;
            [(p.x - m[0]) / root, (p.y - m[1]) / root]
        })
        .collect()
}

pub const DONSKER_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Statistics of one increment `S_n(t_k) - S_n(t_{k-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IncrementStats {
    pub start: f64,
    pub end: f64,
    /// Covariance of the raw increment.
    pub raw_covariance: Sym2,
    /// Covariance of the whitened increment `Δ D⁻¹`, when `D` is invertible.
    pub whitened_covariance: Option<Sym2>,
    /// Largest `|entry - Δt δ_ij| / Δt` of the whitened covariance.
    pub whitened_relative_error: Option<f64>,
}

/// Cross-covariance between two disjoint whitened increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CrossCovariance {
    pub first: usize,
    pub second: usize,
    pub entries: [[f64; 2]; 2],
    pub standard_errors: [[f64; 2]; 2],
    /// Largest `|entry| / standard error`.
    pub max_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DonskerReport {
    pub n: u64,
    pub replicas: u64,
    pub seed: u64,
    pub grid: Vec<f64>,
    pub c: Sym2,
    /// Lower-triangular `D` with `Dᵀ D = C`, or the symmetric square root when `C` is singular.
    pub d: Mat2,
    pub whitening_skipped: bool,
    pub increments: Vec<IncrementStats>,
    pub cross: Vec<CrossCovariance>,
    /// Largest `|S_n(0)|` over all replicas.
    pub origin_max: f64,
}

impl DonskerReport {
    pub fn cross_between(&self, first: usize, second: usize) -> Option<&CrossCovariance> {
        self.cross.iter().find(|c| c.first == first && c.second == second)
    }
}

/// Finite-dimensional check of the Brownian limit of `S_n(t)` on [`DONSKER_GRID`].
pub fn donsker_diagnostic(n: u64, replicas: u64, q: &StepProbabilities, seed: u64) -> Result<DonskerReport> {
    if n < 100 {
        return Err(Error::invalid(format!("the path diagnostic needs n >= 100, got {n}")));
    }
    if replicas < 2 {
        return Err(Error::invalid("need at least 2 replicas"));
    }
    let grid = DONSKER_GRID.to_vec();
    let times = grid_times(n, &grid)?;
    let sampler = Sampler::new(q, seed);
    let paths: Vec<Vec<[f64; 2]>> = (0..replicas)
        .into_par_iter()
        .map(|r| normalize(&sampler, n, &times, &sampler.checkpoints(&times, r), q))
        .collect();
    let origin_max = paths.iter().map(|p| p[0][0].abs().max(p[0][1].abs())).fold(0.0, f64::max);

    let c = asymptotic_covariance(q);
    let lower = c.lower_factor();
    let d = lower.unwrap_or_else(|| c.sqrt_psd());
    let d_inv = lower.and_then(|d| d.inverse());

    let segments = grid.len() - 1;
    let raw: Vec<Vec<[f64; 2]>> = (0..segments)
        .map(|s| paths.iter().map(|p| [p[s + 1][0] - p[s][0], p[s + 1][1] - p[s][1]]).collect())
        .collect();
    let whitened: Option<Vec<Vec<[f64; 2]>>> =
        d_inv.map(|inv| raw.iter().map(|inc| inc.iter().map(|&v| inv.left_apply(v)).collect()).collect());

    let increments = (0..segments)
        .map(|s| {
            let dt = grid[s + 1] - grid[s];
            let white = whitened.as_ref().map(|w| covariance_about(&w[s], [0.0, 0.0]));
            IncrementStats {
                start: grid[s],
                end: grid[s + 1],
                raw_covariance: covariance_about(&raw[s], [0.0, 0.0]),
                whitened_covariance: white,
                whitened_relative_error: white.map(|w| {
                    [(w.xx - dt).abs(), w.xy.abs(), (w.yy - dt).abs()].into_iter().fold(0.0, f64::max) / dt
                }),
            }
        })
        .collect();

    let source = whitened.as_ref().unwrap_or(&raw);
    let mut cross = Vec::new();
    for first in 0..segments {
        for second in first + 1..segments {
            cross.push(cross_covariance(first, second, &source[first], &source[second]));
        }
    }
    Ok(DonskerReport {
        n,
        replicas,
        seed,
        grid,
        c,
        d,
        whitening_skipped: whitened.is_none(),
        increments,
        cross,
        origin_max,
    })
}

fn cross_covariance(first: usize, second: usize, a: &[[f64; 2]], b: &[[f64; 2]]) -> CrossCovariance {
    let n = a.len() as f64;
    let mut entries = [[0.0; 2]; 2];
    let mut standard_errors = [[0.0; 2]; 2];
    let mut max_z: f64 = 0.0;
    for r in 0..2 {
        for s in 0..2 {
            let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x[r] * y[s]).collect();
            let mean = prods.iter().sum::<f64>() / n;
            let var = prods.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            entries[r][s] = mean;
            standard_errors[r][s] = se;
            if se > 0.0 {
                max_z = max_z.max(mean.abs() / se);
            }
        }
    }
    CrossCovariance {
        first,
        second,
        entries,
        standard_errors,
        max_z,
    }
}
