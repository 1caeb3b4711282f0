//! Large and moderate deviations.
//!
//! The scaled cumulant generating function of `S_n` has the limit
//!
//! ```text
//! Λ(λ) = ½ ln(g0(λ) g1(λ)),   g_i(λ) = q_{i,0} + q_{i,1} e^{c_{i,1}·λ} + q_{i,2} e^{c_{i,2}·λ}
//! ```
//!
//! with exponent vectors `c_{0,1} = a(-3/2, √3/2)`, `c_{0,2} = a(-3/2, -√3/2)`
//! and `c_{1,r} = -c_{0,r}` reflected in `y`. `S_n / n` satisfies a large
//! deviation principle with rate `Λ*`, the Legendre transform of `Λ`. At
//! intermediate scales the rate is the quadratic `½ zᵀ C⁻¹ z`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::engine::{Distribution, Engine, DEFAULT_STEP_CAP};
use crate::error::{Error, Result};
use crate::lattice::{LatticeVertex, StepProbabilities, VertexClass};
use crate::linalg::Sym2;
use crate::moments::{asymptotic_covariance, drift, ln_pgf, moments};
use crate::scalar::{log_sum_exp, LogProb, Scalar};

fn exponents(class: VertexClass, a: f64) -> [[f64; 2]; 3] {
    let h = 0.5 * 3f64.sqrt() * a;
    match class {
        VertexClass::Zero => [[0.0, 0.0], [-1.5 * a, h], [-1.5 * a, -h]],
        VertexClass::One => [[0.0, 0.0], [1.5 * a, -h], [1.5 * a, h]],
    }
}

fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn norm(u: [f64; 2]) -> f64 {
    u[0].hypot(u[1])
}

/// `g_i(λ1, λ2)`.
pub fn g(class: VertexClass, l1: f64, l2: f64, q: &StepProbabilities) -> f64 {
    ln_g(class, l1, l2, q).exp()
}

/// `ln g_i(λ1, λ2)`, by log-sum-exp.
pub fn ln_g(class: VertexClass, l1: f64, l2: f64, q: &StepProbabilities) -> f64 {
    let c = exponents(class, q.spacing());
    let i = class.index();
    log_sum_exp((0..3).map(|r| q.q(i, r).ln() + dot(c[r], [l1, l2])))
}

/// `Λ(λ1, λ2) = ½ ln(g0 g1)`.
pub fn lambda(l1: f64, l2: f64, q: &StepProbabilities) -> f64 {
    0.5 * (ln_g(VertexClass::Zero, l1, l2, q) + ln_g(VertexClass::One, l1, l2, q))
}

/// `Λ`, its gradient and Hessian at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaDerivatives {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: Sym2,
}

/// Analytic value, gradient and Hessian of `Λ`.
pub fn lambda_derivatives(l: [f64; 2], q: &StepProbabilities) -> LambdaDerivatives {
    let a = q.spacing();
    let mut value = 0.0;
    let mut gradient = [0.0; 2];
    let mut hessian = Sym2::default();
    for class in [VertexClass::Zero, VertexClass::One] {
        let c = exponents(class, a);
        let i = class.index();
        let logs: Vec<f64> = (0..3).map(|r| q.q(i, r).ln() + dot(c[r], l)).collect();
        let lse = log_sum_exp(logs.iter().copied());
        // softmax weights of the three terms
        let w: Vec<f64> = logs.iter().map(|x| (x - lse).exp()).collect();
        let mean = [
            (0..3).map(|r| w[r] * c[r][0]).sum::<f64>(),
            (0..3).map(|r| w[r] * c[r][1]).sum::<f64>(),
        ];
        let second = Sym2::new(
            (0..3).map(|r| w[r] * c[r][0] * c[r][0]).sum(),
            (0..3).map(|r| w[r] * c[r][0] * c[r][1]).sum(),
            (0..3).map(|r| w[r] * c[r][1] * c[r][1]).sum(),
        );
        let var = second.sub(&Sym2::new(mean[0] * mean[0], mean[0] * mean[1], mean[1] * mean[1]));
        value += 0.5 * lse;
        gradient[0] += 0.5 * mean[0];
        gradient[1] += 0.5 * mean[1];
        hessian = Sym2::new(hessian.xx + 0.5 * var.xx, hessian.xy + 0.5 * var.xy, hessian.yy + 0.5 * var.yy);
    }
    LambdaDerivatives { value, gradient, hessian }
}

/// `Λ` in the closed form valid when every `q_{i,r} = 1/3`.
pub fn lambda_uniform_cosh(l1: f64, l2: f64, a: f64) -> f64 {
    let s3 = 3f64.sqrt();
    let p = s3 * a * (0.5 * s3 * l1 - 0.5 * l2);
    let r = s3 * a * (0.5 * s3 * l1 + 0.5 * l2);
    0.5 * ((3.0 + 2.0 * p.cosh() + 2.0 * r.cosh() + 2.0 * (r - p).cosh()) / 9.0).ln()
}

/// `(1/n) ln G(e^{λ1}, e^{λ2}; n) - Λ(λ)`.
pub fn scaled_log_pgf_gap(l: [f64; 2], n: u64, q: &StepProbabilities) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("time must be positive"));
    }
    Ok(ln_pgf(l[0], l[1], n, q) / n as f64 - lambda(l[0], l[1], q))
}

fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else if *v < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

/// A rate function value at one velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RateResult {
    pub point: [f64; 2],
    #[serde(serialize_with = "serialize_extended")]
    pub value: f64,
    pub maximizer: Option<[f64; 2]>,
    pub finite: bool,
    pub iterations: u32,
    pub gradient_residual: f64,
    /// Set when the quadratic form was singular and a pseudo-inverse was used.
    pub singular: bool,
}

/// Solver settings for [`legendre_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreOptions {
    pub tol: f64,
    pub max_iterations: u32,
    /// Iterate norm beyond which a still-increasing objective means `+∞`.
    /// `None` uses `10³ / (√3 a)`.
    pub norm_cap: Option<f64>,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 200,
            norm_cap: None,
        }
    }
}

/// `Λ*(x, y) = sup_λ (λ·(x, y) - Λ(λ))`, with gradient tolerance `tol`.
pub fn legendre(x: f64, y: f64, q: &StepProbabilities, tol: f64) -> Result<RateResult> {
    legendre_with(
        x,
        y,
        q,
        &LegendreOptions {
            tol,
            ..LegendreOptions::default()
        },
    )
}

/// Damped Newton ascent on the concave objective `λ·z - Λ(λ)`.
pub fn legendre_with(x: f64, y: f64, q: &StepProbabilities, opts: &LegendreOptions) -> Result<RateResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::invalid("velocity must be finite"));
    }
    let z = [x, y];
    let cap = opts.norm_cap.unwrap_or(1e3 / (3f64.sqrt() * q.spacing()));
    let objective = |l: [f64; 2]| dot(l, z) - lambda(l[0], l[1], q);
    let finite = |l: [f64; 2], phi: f64, resid: f64, it: u32| RateResult {
        point: z,
        value: phi.max(0.0),
        maximizer: Some(l),
        finite: true,
        iterations: it,
        gradient_residual: resid,
        singular: false,
    };

    let mut l = [0.0, 0.0];
    let mut phi = 0.0;
    for it in 0..opts.max_iterations {
        let d = lambda_derivatives(l, q);
        let grad = [z[0] - d.gradient[0], z[1] - d.gradient[1]];
        let resid = norm(grad);
        if resid <= opts.tol {
            return Ok(finite(l, phi, resid, it));
        }
        let tau = 1e-10 * (1.0 + d.hessian.trace());
        let reg = Sym2::new(d.hessian.xx + tau, d.hessian.xy, d.hessian.yy + tau);
        let step = reg.solve(grad).unwrap_or(grad);
        let slack = 4.0 * f64::EPSILON * (1.0 + phi.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = [l[0] + t * step[0], l[1] + t * step[1]];
            let value = objective(trial);
            if value.is_finite() && value >= phi - slack {
                accepted = Some((trial, value));
                break;
            }
            t *= 0.5;
        }
        let Some((next, value)) = accepted else {
            // no ascent left at working precision
            return Err(Error::NumericalFailure {
                reason: format!("line search stalled with gradient residual {resid:.3e}"),
                iterations: it,
                last_iterate: l,
            });
        };
        let gain = value - phi;
        l = next;
        phi = value;
        if norm(l) > cap {
            if gain > opts.tol * (1.0 + phi.abs()) {
                return Ok(RateResult {
                    point: z,
                    value: f64::INFINITY,
                    maximizer: None,
                    finite: false,
                    iterations: it + 1,
                    gradient_residual: resid,
                    singular: false,
                });
            }
            // supremum approached at infinity: boundary of the reachable set
            let d = lambda_derivatives(l, q);
            let resid = norm([z[0] - d.gradient[0], z[1] - d.gradient[1]]);
            return Ok(finite(l, phi, resid, it + 1));
        }
    }
    Err(Error::NumericalFailure {
        reason: "iteration cap reached".into(),
        iterations: opts.max_iterations,
        last_iterate: l,
    })
}

/// Moderate-deviation rate `½ zᵀ C⁻¹ z`, with a pseudo-inverse when `C` is singular.
pub fn moderate_rate(x: f64, y: f64, q: &StepProbabilities) -> RateResult {
    let c = asymptotic_covariance(q);
    let z = [x, y];
    match c.inverse() {
        Some(inv) => {
            let l = inv.apply(z);
            let back = c.apply(l);
            RateResult {
                point: z,
                value: 0.5 * dot(z, l),
                maximizer: Some(l),
                finite: true,
                iterations: 0,
                gradient_residual: norm([back[0] - z[0], back[1] - z[1]]),
                singular: false,
            }
        }
        None => {
            let l = c.pseudo_inverse().apply(z);
            let back = c.apply(l);
            let resid = norm([back[0] - z[0], back[1] - z[1]]);
            let in_range = resid <= 1e-10 * (1.0 + norm(z));
            RateResult {
                point: z,
                value: if in_range { 0.5 * dot(z, l) } else { f64::INFINITY },
                maximizer: in_range.then_some(l),
                finite: in_range,
                iterations: 0,
                gradient_residual: resid,
                singular: true,
            }
        }
    }
}

/// The normalizing sequence `a_n` of a moderate deviation scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum ModerateScale {
    /// `a_n = n^{-γ}` with `0 < γ < 1`.
    Power { gamma: f64 },
    /// `a_n = 1`, the central limit scale.
    Unit,
}

impl ModerateScale {
    pub fn power(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma < 1.0 {
            Ok(ModerateScale::Power { gamma })
        } else {
            Err(Error::invalid(format!("scale exponent must lie in (0, 1), got {gamma}")))
        }
    }

    pub fn a_n(&self, n: u64) -> f64 {
        match *self {
            ModerateScale::Power { gamma } => (n as f64).powf(-gamma),
            ModerateScale::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MdRow {
    pub n: u64,
    pub lambda: [f64; 2],
    pub value: f64,
    pub target: f64,
    pub gap: f64,
    /// Rounding error estimate of the centered logarithm.
    pub rounding: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MdReport {
    pub scale: ModerateScale,
    pub rows: Vec<MdRow>,
    /// `|gap|` is non-increasing in `n` for every `λ`.
    pub monotone: bool,
}

impl MdReport {
    pub fn rows_for(&self, l: [f64; 2]) -> impl Iterator<Item = &MdRow> {
        self.rows.iter().filter(move |r| r.lambda == l)
    }
}

/// `Λ̃_n(λ) = a_n (ln G(e^{λ/√(n a_n)}; n) - λ·E S_n / √(n a_n))`.
pub fn md_scaled_log_mgf(l: [f64; 2], n: u64, scale: ModerateScale, q: &StepProbabilities) -> (f64, f64) {
    let an = scale.a_n(n);
    let s = (n as f64 * an).sqrt();
    let mean = moments(n, q).mean;
    let lg = ln_pgf(l[0] / s, l[1] / s, n, q);
    let centre = dot(l, mean) / s;
    let rounding = an * 8.0 * f64::EPSILON * (lg.abs() + centre.abs() + 1.0);
    (an * (lg - centre), rounding)
}

/// Compares `Λ̃_n` with `½ λᵀ C λ` for every `n` and `λ`.
pub fn md_limit_check(scale: ModerateScale, q: &StepProbabilities, n_list: &[u64], lambdas: &[[f64; 2]]) -> Result<MdReport> {
    if let ModerateScale::Power { gamma } = scale {
        ModerateScale::power(gamma)?;
    }
    if let Some(&n) = n_list.iter().find(|&&n| n == 0 || n > DEFAULT_STEP_CAP) {
        return Err(Error::ResourceLimit(format!("time {n} outside 1..={DEFAULT_STEP_CAP}")));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let c = asymptotic_covariance(q);
    let mut rows = Vec::new();
    let mut monotone = true;
    for &l in lambdas {
        let target = 0.5 * c.quadratic_form(l);
        let mut prev = f64::INFINITY;
        for &n in &ns {
            let (value, rounding) = md_scaled_log_mgf(l, n, scale, q);
            let gap = value - target;
            monotone &= gap.abs() <= prev + 1e-14;
            prev = gap.abs();
            rows.push(MdRow {
                n,
                lambda: l,
                value,
                target,
                gap,
                rounding,
                stable: rounding <= 1e-8,
            });
        }
    }
    Ok(MdReport { scale, rows, monotone })
}

/// The set `{z : u·z ≥ c}` for a unit normal `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Halfplane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl Halfplane {
    /// Normalizes `normal`.
    pub fn new(normal: [f64; 2], offset: f64) -> Result<Self> {
        let len = norm(normal);
        if !(len > 0.0) || !len.is_finite() || !offset.is_finite() {
            return Err(Error::invalid("halfplane needs a nonzero normal and finite offset"));
        }
        Ok(Self {
            normal: [normal[0] / len, normal[1] / len],
            offset: offset / len,
        })
    }

    pub fn contains(&self, z: [f64; 2]) -> bool {
        dot(self.normal, z) >= self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HalfplaneInfimum {
    #[serde(serialize_with = "serialize_extended")]
    pub value: f64,
    /// Minimizing velocity, when the infimum is finite.
    pub point: Option<[f64; 2]>,
    /// Multiplier `t` with maximizer `t u`.
    pub multiplier: f64,
    /// `|Λ*(point) - value|` from an independent two-dimensional solve.
    pub legendre_check: f64,
}

/// `inf {Λ*(z) : u·z ≥ c} = sup_{t ≥ 0} (t c - Λ(t u))`.
pub fn halfplane_infimum(h: &Halfplane, q: &StepProbabilities) -> Result<HalfplaneInfimum> {
    let u = h.normal;
    let c = h.offset;
    let mu = drift(q);
    if c <= dot(u, mu) {
        return Ok(HalfplaneInfimum {
            value: 0.0,
            point: Some(mu),
            multiplier: 0.0,
            legendre_check: 0.0,
        });
    }
    let slope = |t: f64| dot(u, lambda_derivatives([t * u[0], t * u[1]], q).gradient) - c;
    let cap = 1e3 / (3f64.sqrt() * q.spacing());
    let mut hi = 1.0;
    while slope(hi) < 0.0 {
        hi *= 2.0;
        if hi > cap {
            return Ok(HalfplaneInfimum {
                value: f64::INFINITY,
                point: None,
                multiplier: f64::INFINITY,
                legendre_check: 0.0,
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let l = [t * u[0], t * u[1]];
    let value = t * c - lambda(l[0], l[1], q);
    let z = lambda_derivatives(l, q).gradient;
    let check = legendre(z[0], z[1], q, 1e-11)?;
    Ok(HalfplaneInfimum {
        value,
        point: Some(z),
        multiplier: t,
        legendre_check: (check.value - value).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DecayRow {
    pub n: u64,
    pub ln_probability: f64,
    pub rate: f64,
    pub gap: f64,
    /// Whether the tail was summed in the log domain after float underflow.
    pub log_domain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DecayReport {
    pub halfplane: Halfplane,
    pub infimum: HalfplaneInfimum,
    pub rows: Vec<DecayRow>,
    /// Gaps share one sign and shrink in absolute value.
    pub monotone: bool,
}

fn tail_log_mass<S: Scalar>(d: &Distribution<S>, h: &Halfplane, a: f64) -> (f64, f64) {
    let n = d.time() as f64;
    let class = d.class();
    let terms: Vec<S> = d
        .iter()
        .filter(|&((j, k), _)| {
            let p = LatticeVertex::new(j, k, class).position(a);
            // lattice points on the boundary count as inside
            dot(h.normal, [p.x, p.y]) >= h.offset * n - 1e-9 * (1.0 + n)
        })
        .map(|(_, p)| p)
        .collect();
    let smallest = terms.iter().map(|p| p.ln()).fold(f64::INFINITY, f64::min);
    (S::sum(terms).ln(), smallest)
}

/// `-(1/n) ln P(S_n / n ∈ H)` from the exact distribution, next to `inf_H Λ*`.
pub fn empirical_decay(q: &StepProbabilities, h: &Halfplane, n_list: &[u64]) -> Result<DecayReport> {
    let infimum = halfplane_infimum(h, q)?;
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if let Some(&n) = ns.iter().find(|&&n| n == 0 || n > DEFAULT_STEP_CAP) {
        return Err(Error::ResourceLimit(format!("time {n} outside 1..={DEFAULT_STEP_CAP}")));
    }
    let a = q.spacing();
    let float = Engine::<f64>::new(q)?;
    let mut log_engine: Option<Engine<LogProb>> = None;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let d = float.run(Distribution::initial(), n)?;
        let (mut ln_p, smallest) = tail_log_mass(&d, h, a);
        // masses near the subnormal range may already have been lost
        let log_domain = !ln_p.is_finite() || smallest < -690.0;
        if log_domain {
            let engine = match &log_engine {
                Some(e) => e,
                None => log_engine.insert(Engine::new(q)?),
            };
            let d = engine.run(Distribution::initial(), n)?;
            ln_p = tail_log_mass(&d, h, a).0;
        }
        let rate = -ln_p / n as f64;
        rows.push(DecayRow {
            n,
            ln_probability: ln_p,
            rate,
            gap: rate - infimum.value,
            log_domain,
        });
    }
    let monotone = rows.windows(2).all(|w| {
        w[0].gap.signum() == w[1].gap.signum() && w[1].gap.abs() <= w[0].gap.abs()
    });
    Ok(DecayReport {
        halfplane: *h,
        infimum,
        rows,
        monotone,
    })
}

/// Which rate function a surface evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    Large,
    Moderate,
}

/// One axis of a rectangular grid, `min:max:steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + h * i as f64).collect()
    }
}

/// Rectangular `(x, y)` grid, parsed from `xmin:xmax:steps,ymin:ymax:steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub x: Axis,
    pub y: Axis,
}

impl Grid {
    pub fn points(&self) -> Vec<[f64; 2]> {
        let ys = self.y.values();
        self.x.values().into_iter().flat_map(|x| ys.iter().map(move |&y| [x, y])).collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("axis `{s}` is not min:max:steps"));
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts[..] else { return Err(bad()) };
        let min: f64 = min.trim().parse().map_err(|_| bad())?;
        let max: f64 = max.trim().parse().map_err(|_| bad())?;
        let steps: usize = steps.trim().parse().map_err(|_| bad())?;
        if !min.is_finite() || !max.is_finite() || steps == 0 || max < min {
            return Err(bad());
        }
        Ok(Axis { min, max, steps })
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| Error::invalid(format!("grid `{s}` needs two axes")))?;
        Ok(Grid { x: x.parse()?, y: y.parse()? })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{},{}:{}:{}", self.x.min, self.x.max, self.x.steps, self.y.min, self.y.max, self.y.steps)
    }
}

/// One grid point of a rate surface. Solver failures are kept, not raised.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub point: [f64; 2],
    pub result: Result<RateResult>,
}

/// Evaluates the chosen rate on every grid point, in parallel.
pub fn rate_surface(mode: RateMode, grid: &Grid, q: &StepProbabilities, tol: f64) -> Vec<SurfacePoint> {
    grid.points()
        .into_par_iter()
        .map(|p| SurfacePoint {
            point: p,
            result: match mode {
                RateMode::Large => legendre(p[0], p[1], q, tol),
                RateMode::Moderate => Ok(moderate_rate(p[0], p[1], q)),
            },
        })
        .collect()
}
