//! Cross-validation suites run by `hexwalk validate`.
//!
//! Each suite compares two independent routes to the same quantity and
//! reports the largest disagreement against a fixed tolerance.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::Serialize;

use crate::closed_form::{check_symmetry, in_odd_support, ClosedForm};
use crate::deviations::{lambda, lambda_derivatives, lambda_uniform_cosh, legendre, md_limit_check, moderate_rate, ModerateScale};
use crate::engine::{Distribution, Engine};
use crate::error::{Error, Result};
use crate::lattice::{LatticeVertex, StepProbabilities};
use crate::moments::{asymptotic_covariance, moments, moments_from_distribution, pgf};
use crate::scalar::Scalar;

/// A named parameter set.
#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub model: StepProbabilities,
}

/// Six exact parameter sets: uniform, asymmetric, `ρ = 1`, a one-dimensional
/// zigzag, a generic set, and a set with `q01 = q12`, `q02 = q11`.
pub fn default_battery() -> Vec<Case> {
    let sets: [(&str, [i64; 3], [i64; 3]); 6] = [
        ("uniform", [1, 1, 1], [1, 1, 1]),
        ("asymmetric", [10, 5, 5], [2, 3, 5]),
        ("rho-one", [2, 2, 1], [1, 3, 6]),
        ("zigzag", [5, 0, 5], [2, 0, 3]),
        ("generic", [1, 2, 4], [3, 5, 3]),
        ("swapped", [3, 5, 2], [3, 2, 5]),
    ];
    sets.iter()
        .map(|(name, q0, q1)| Case {
            name: name.to_string(),
            model: StepProbabilities::from_ratios(*q0, *q1, 1.0).expect("battery sets are valid"),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ClosedForm,
    OddTimes,
    Normalization,
    Symmetry,
    Pgf,
    Moments,
    LargeDeviations,
    ModerateDeviations,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::ClosedForm,
        Suite::OddTimes,
        Suite::Normalization,
        Suite::Symmetry,
        Suite::Pgf,
        Suite::Moments,
        Suite::LargeDeviations,
        Suite::ModerateDeviations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ClosedForm => "closed-form",
            Suite::OddTimes => "odd-times",
            Suite::Normalization => "normalization",
            Suite::Symmetry => "symmetry",
            Suite::Pgf => "pgf",
            Suite::Moments => "moments",
            Suite::LargeDeviations => "large-deviations",
            Suite::ModerateDeviations => "moderate-deviations",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite `{s}`")))
    }
}

/// Sizes used by the suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    /// Largest half-time `m` for closed-form and symmetry checks.
    pub m: u64,
    /// Largest time for the exact normalization check.
    pub normalization_steps: u64,
    /// Largest time for the moment check.
    pub moment_steps: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            m: 8,
            normalization_steps: 60,
            moment_steps: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteResult {
    pub suite: Suite,
    pub passed: bool,
    /// Largest raw disagreement over all checks.
    pub max_violation: f64,
    /// Largest disagreement divided by its check's tolerance; at most 1 to pass.
    pub worst_ratio: f64,
    pub checks: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub passed: bool,
    pub cases: Vec<String>,
    pub suites: Vec<SuiteResult>,
}

#[derive(Default)]
struct Tally {
    worst: f64,
    ratio: f64,
    checks: usize,
    notes: Vec<String>,
}

impl Tally {
    /// Records a disagreement `v` allowed up to `tol`; `tol = 0` demands equality.
    fn record(&mut self, v: f64, tol: f64) {
        self.checks += 1;
        let ratio = if v.is_nan() {
            f64::INFINITY
        } else if v == 0.0 {
            0.0
        } else if tol == 0.0 {
            f64::INFINITY
        } else {
            v / tol
        };
        self.worst = self.worst.max(if v.is_nan() { f64::INFINITY } else { v });
        self.ratio = self.ratio.max(ratio);
    }

    fn fail(&mut self, note: String) {
        self.notes.push(note);
        self.checks += 1;
        self.ratio = f64::INFINITY;
    }

    fn finish(self, suite: Suite) -> SuiteResult {
        SuiteResult {
            suite,
            passed: self.ratio <= 1.0,
            max_violation: self.worst,
            worst_ratio: self.ratio,
            checks: self.checks,
            notes: self.notes,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Runs `suites` over `cases`.
pub fn validate(cases: &[Case], suites: &[Suite], cfg: &ValidationConfig) -> Result<ValidationReport> {
    let mut results = Vec::with_capacity(suites.len());
    for &suite in suites {
        results.push(match suite {
            Suite::ClosedForm => closed_form_suite(cases, cfg)?,
            Suite::OddTimes => odd_suite(cases, cfg)?,
            Suite::Normalization => normalization_suite(cases, cfg)?,
            Suite::Symmetry => symmetry_suite(cases, cfg)?,
            Suite::Pgf => pgf_suite(cases)?,
            Suite::Moments => moment_suite(cases, cfg)?,
            Suite::LargeDeviations => large_suite(cases)?,
            Suite::ModerateDeviations => moderate_suite(cases)?,
        });
    }
    Ok(ValidationReport {
        passed: results.iter().all(|r| r.passed),
        cases: cases.iter().map(|c| c.name.clone()).collect(),
        suites: results,
    })
}

/// Largest pointwise difference between two distributions over the union of supports.
pub fn max_difference<S: Scalar>(a: &Distribution<S>, b: &Distribution<S>) -> f64 {
    let keys: std::collections::BTreeSet<(i64, i64)> = a.support().chain(b.support()).collect();
    keys.into_iter()
        .map(|(j, k)| a.probability(j, k).distance(&b.probability(j, k)))
        .fold(0.0, f64::max)
}

fn closed_form_suite(cases: &[Case], cfg: &ValidationConfig) -> Result<SuiteResult> {
    let mut t = Tally::default();
    for case in cases {
        let q = &case.model;
        if q.is_exact() {
            let cf = ClosedForm::<BigRational>::new(q, cfg.m)?;
            let trajectory = Engine::<BigRational>::new(q)?.trajectory(2 * cfg.m)?;
            for m in 1..=cfg.m {
                let (d, _) = cf.distribution(2 * m)?;
                t.record(max_difference(&d, &trajectory[2 * m as usize]), 0.0);
            }
        }
        let cf = ClosedForm::<f64>::new(q, cfg.m)?;
        let trajectory = Engine::<f64>::new(q)?.trajectory(2 * cfg.m)?;
        for m in 1..=cfg.m {
            let (d, _) = cf.distribution(2 * m)?;
            t.record(max_difference(&d, &trajectory[2 * m as usize]), 1e-12);
        }
    }
    Ok(t.finish(Suite::ClosedForm))
}

fn odd_suite(cases: &[Case], cfg: &ValidationConfig) -> Result<SuiteResult> {
    let mut t = Tally::default();
    for case in cases.iter().filter(|c| c.model.is_exact()) {
        let q = &case.model;
        let cf = ClosedForm::<BigRational>::new(q, cfg.m)?;
        let trajectory = Engine::<BigRational>::new(q)?.trajectory(2 * cfg.m + 1)?;
        for m in 0..=cfg.m {
            let n = 2 * m + 1;
            let (d, _) = cf.distribution(n)?;
            t.record(max_difference(&d, &trajectory[n as usize]), 0.0);
            let outside = d.support().filter(|&(j, k)| !in_odd_support(j, k, m as i64)).count();
            if outside > 0 {
                t.fail(format!("{}: {outside} states outside the odd support at n={n}", case.name));
            }
        }
    }
    Ok(t.finish(Suite::OddTimes))
}

fn normalization_suite(cases: &[Case], cfg: &ValidationConfig) -> Result<SuiteResult> {
    let mut t = Tally::default();
    for case in cases {
        let q = &case.model;
        if q.is_exact() {
            let engine = Engine::<BigRational>::new(q)?;
            let mut d = Distribution::initial();
            for _ in 0..cfg.normalization_steps {
                d = engine.step(&d);
                t.record(d.total_mass().distance(&<BigRational as Scalar>::one()), 0.0);
            }
        }
        let engine = Engine::<f64>::new(q)?;
        let mut d = Distribution::<f64>::initial();
        for _ in 0..cfg.normalization_steps {
            d = engine.step(&d);
            t.record((d.total_mass() - 1.0).abs(), 1e-12);
        }
    }
    Ok(t.finish(Suite::Normalization))
}

fn symmetry_suite(cases: &[Case], cfg: &ValidationConfig) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let m = cfg.m.clamp(1, 6);
    for case in cases.iter().filter(|c| c.model.is_exact()) {
        let report = check_symmetry::<BigRational>(&case.model, m)?;
        for c in report.cases.iter().filter(|c| c.applicable) {
            t.record(c.max_violation.unwrap_or(f64::NAN), 0.0);
            if c.rho_is_one != Some(true) {
                t.fail(format!("{}: {:?} applies but rho != 1", case.name, c.relation));
            }
            t.notes.push(format!("{}: {:?} max violation {}", case.name, c.relation, c.max_violation.unwrap_or(f64::NAN)));
        }
    }
    Ok(t.finish(Suite::Symmetry))
}

/// `Σ u^x v^y p` over the support of `d`.
pub fn expectation<S: Scalar>(d: &Distribution<S>, u: f64, v: f64, a: f64) -> f64 {
    let class = d.class();
    <f64 as Scalar>::sum(d.iter().map(|((j, k), p)| {
        let c = LatticeVertex::new(j, k, class).position(a);
        u.powf(c.x) * v.powf(c.y) * p.to_f64()
    }))
}

fn pgf_suite(cases: &[Case]) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let grid = [0.8, 1.0, 1.25];
    for case in cases {
        let q = &case.model;
        let a = q.spacing();
        for (n, d) in Engine::<f64>::new(q)?.trajectory(12)?.iter().enumerate() {
            for u in grid {
                for v in grid {
                    let expected = expectation(d, u, v, a);
                    let got = pgf(u, v, n as u64, q)?;
                    t.record((got - expected).abs() / expected.abs(), 1e-10);
                }
            }
        }
    }
    Ok(t.finish(Suite::Pgf))
}

fn moment_suite(cases: &[Case], cfg: &ValidationConfig) -> Result<SuiteResult> {
    let mut t = Tally::default();
    for case in cases {
        let q = &case.model;
        let a = q.spacing();
        for (n, d) in Engine::<f64>::new(q)?.trajectory(cfg.moment_steps)?.iter().enumerate() {
            let exact = moments(n as u64, q);
            let brute = moments_from_distribution(d, a);
            for (x, y) in [
                (exact.mean[0], brute.mean[0]),
                (exact.mean[1], brute.mean[1]),
                (exact.variance[0], brute.variance[0]),
                (exact.variance[1], brute.variance[1]),
                (exact.covariance, brute.covariance),
            ] {
                t.record(rel(x, y), 1e-10);
            }
        }
    }
    Ok(t.finish(Suite::Moments))
}

fn large_suite(cases: &[Case]) -> Result<SuiteResult> {
    let mut t = Tally::default();
    for case in cases {
        let q = &case.model;
        t.record(lambda(0.0, 0.0, q).abs(), 1e-15);
        let d0 = lambda_derivatives([0.0, 0.0], q);
        let m1 = moments(1, q);
        t.record((d0.gradient[0] - m1.drift[0]).abs().max((d0.gradient[1] - m1.drift[1]).abs()), 1e-8);
        t.record(d0.hessian.sub(&asymptotic_covariance(q)).frobenius(), 1e-8);
        // duality: the maximizer's gradient recovers the velocity
        for l in [[0.3, -0.2], [-0.5, 0.4], [1.0, 1.0]] {
            let z = lambda_derivatives(l, q).gradient;
            let r = legendre(z[0], z[1], q, 1e-11)?;
            if !r.finite {
                t.fail(format!("{}: grad Lambda{l:?} reported unreachable", case.name));
                continue;
            }
            let back = lambda_derivatives(r.maximizer.expect("finite result"), q).gradient;
            t.record((back[0] - z[0]).abs() + (back[1] - z[1]).abs(), 1e-9);
        }
        if case.name == "uniform" {
            for l1 in [-1.0, -0.3, 0.0, 0.4, 1.2] {
                for l2 in [-0.8, 0.0, 0.5, 2.0] {
                    t.record((lambda(l1, l2, q) - lambda_uniform_cosh(l1, l2, q.spacing())).abs(), 1e-12);
                }
            }
        }
    }
    Ok(t.finish(Suite::LargeDeviations))
}

fn moderate_suite(cases: &[Case]) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let scale = ModerateScale::power(0.5)?;
    for case in cases {
        let q = &case.model;
        let c = asymptotic_covariance(q);
        if let Some(inv) = c.inverse() {
            for z in [[1.0, 1.0], [-0.4, 0.7], [2.0, -1.5]] {
                let r = moderate_rate(z[0], z[1], q);
                t.record((r.value - 0.5 * inv.quadratic_form(z)).abs() / r.value.max(1.0), 1e-14);
            }
        }
        let report = md_limit_check(scale, q, &[100, 1000, 10_000], &[[1.0, 1.0], [0.5, -1.0]])?;
        if !report.monotone {
            t.fail(format!("{}: gap not decreasing in n", case.name));
        }
        for row in &report.rows {
            t.record(row.gap.abs(), 5.0 * (row.n as f64).powf(-0.25));
        }
    }
    Ok(t.finish(Suite::ModerateDeviations))
}
