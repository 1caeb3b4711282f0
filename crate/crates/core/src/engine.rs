//! Exact forward iteration of the state probabilities.
//!
//! `p_{j,k}(n)` is the probability of sitting on vertex `(j, k)` of class
//! `i_n` at time `n`. One step pushes every class-`i_n` vertex to its three
//! neighbours. Written as a gather over predecessors, with `n` even:
//!
//! ```text
//! p_{j,k}(n+1) = p_{j,k}(n) q00 + p_{j+1,k}(n) q02 + p_{j+1,k-1}(n) q01
//! ```
//!
//! and with `n` odd:
//!
//! ```text
//! p_{j,k}(n+1) = p_{j,k}(n) q10 + p_{j-1,k+1}(n) q11 + p_{j-1,k}(n) q12
//! ```
//!
//! This engine is the reference every analytic formula is checked against.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{parity, predecessors, StepProbabilities, VertexClass, STEP_OFFSETS};
use crate::scalar::{ArithmeticMode, Scalar};

/// Default cap on the number of steps [`evolve`] accepts.
pub const DEFAULT_STEP_CAP: u64 = 10_000;

/// Finite-support state distribution at time `n`.
///
/// Masses are stored as weights over a shared scale, `p = weight / scale`;
/// the parity class of every occupied vertex is `i_n`. Zero weights are never
/// stored. Equality compares probabilities, not the stored representation.
#[derive(Debug, Clone)]
pub struct Distribution<S> {
    n: u64,
    scale: S,
    weights: BTreeMap<(i64, i64), S>,
}

impl<S: Scalar> Distribution<S> {
    /// The walker at the origin at time 0.
    pub fn initial() -> Self {
        Self::atom(0, 0)
    }

    /// A point mass on class-0 vertex `(j, k)` at time 0.
    pub fn atom(j: i64, k: i64) -> Self {
        Self {
            n: 0,
            scale: S::one(),
            weights: BTreeMap::from([((j, k), S::one())]),
        }
    }

    pub(crate) fn from_parts(n: u64, weights: BTreeMap<(i64, i64), S>) -> Self {
        let weights = weights.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        Self {
            n,
            scale: S::one(),
            weights,
        }
    }

    pub fn time(&self) -> u64 {
        self.n
    }

    pub fn class(&self) -> VertexClass {
        parity(self.n)
    }

    pub fn mode(&self) -> ArithmeticMode {
        S::MODE
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn support(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.weights.keys().copied()
    }

    /// `p_{j,k}(n)`; zero off the support.
    pub fn probability(&self, j: i64, k: i64) -> S {
        match self.weights.get(&(j, k)) {
            Some(w) => w.div(&self.scale),
            None => S::zero(),
        }
    }

    /// `((j, k), p_{j,k}(n))` in ascending `(j, k)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((i64, i64), S)> + '_ {
        self.weights.iter().map(move |(&key, w)| (key, w.div(&self.scale)))
    }

    pub fn total_mass(&self) -> S {
        S::sum(self.weights.values().cloned()).div(&self.scale)
    }

    /// Bounding box `(jmin, jmax, kmin, kmax)` of the support.
    pub fn bounds(&self) -> Option<(i64, i64, i64, i64)> {
        let mut it = self.weights.keys();
        let &(j0, k0) = it.next()?;
        Some(it.fold((j0, j0, k0, k0), |(a, b, c, d), &(j, k)| (a.min(j), b.max(j), c.min(k), d.max(k))))
    }

    /// Float copy of the probabilities.
    pub fn to_float(&self) -> Distribution<f64> {
        Distribution {
            n: self.n,
            scale: 1.0,
            weights: self.iter().map(|(key, p)| (key, p.to_f64())).collect(),
        }
    }
}

impl<S: Scalar + PartialEq> PartialEq for Distribution<S> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.weights.len() == other.weights.len()
            && self.iter().zip(other.iter()).all(|((a, p), (b, r))| a == b && p == r)
    }
}

/// One-step propagator for a fixed parameter set.
#[derive(Debug, Clone)]
pub struct Engine<S> {
    rows: [([S; 3], S); 2],
    step_cap: u64,
}

impl<S: Scalar> Engine<S> {
    pub fn new(q: &StepProbabilities) -> Result<Self> {
        Ok(Self {
            rows: S::step_weights(q)?,
            step_cap: DEFAULT_STEP_CAP,
        })
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    /// Distribution at time `n + 1`.
    pub fn step(&self, d: &Distribution<S>) -> Distribution<S> {
        let source = d.class();
        let (weights, row_scale) = &self.rows[source.index()];
        let offsets = &STEP_OFFSETS[source.index()];

        let targets: BTreeSet<(i64, i64)> = d
            .weights
            .keys()
            .flat_map(|&(j, k)| {
                (0..3)
                    .filter(|&r| !weights[r].is_zero())
                    .map(move |r| (j + offsets[r].0, k + offsets[r].1))
            })
            .collect();
        let targets: Vec<(i64, i64)> = targets.into_iter().collect();

        let masses: Vec<((i64, i64), S)> = targets
            .into_par_iter()
            .map(|(j, k)| {
                let mut acc = S::zero();
                for (src, r) in predecessors(j, k, source) {
                    if let Some(w) = d.weights.get(&src) {
                        acc = acc.add(&w.mul(&weights[r]));
                    }
                }
                ((j, k), acc)
            })
            .filter(|(_, w)| !w.is_zero())
            .collect();

        Distribution {
            n: d.n + 1,
            scale: d.scale.mul(row_scale),
            weights: masses.into_iter().collect(),
        }
    }

    /// `n` steps from `start`.
    pub fn run(&self, start: Distribution<S>, n: u64) -> Result<Distribution<S>> {
        if n > self.step_cap {
            return Err(Error::ResourceLimit(format!("{n} steps requested, cap is {}", self.step_cap)));
        }
        Ok((0..n).fold(start, |d, _| self.step(&d)))
    }

    /// Every distribution from time 0 through time `n`.
    pub fn trajectory(&self, n: u64) -> Result<Vec<Distribution<S>>> {
        if n > self.step_cap {
            return Err(Error::ResourceLimit(format!("{n} steps requested, cap is {}", self.step_cap)));
        }
        let mut out = Vec::with_capacity(n as usize + 1);
        out.push(Distribution::initial());
        for _ in 0..n {
            let next = self.step(out.last().expect("nonempty"));
            out.push(next);
        }
        Ok(out)
    }
}

/// The distribution at time 0.
pub fn initial<S: Scalar>() -> Distribution<S> {
    Distribution::initial()
}

/// One forward step of `d`.
pub fn step<S: Scalar>(d: &Distribution<S>, q: &StepProbabilities) -> Result<Distribution<S>> {
    Ok(Engine::new(q)?.step(d))
}

/// The distribution at time `n`, starting from the origin.
pub fn evolve<S: Scalar>(q: &StepProbabilities, n: u64) -> Result<Distribution<S>> {
    Engine::new(q)?.run(Distribution::initial(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn initial_is_a_point_mass() {
        let d: Distribution<BigRational> = initial();
        assert_eq!(d.time(), 0);
        assert_eq!(d.support_len(), 1);
        assert!(d.probability(0, 0).is_one());
        assert!(d.total_mass().is_one());
    }

    #[test]
    fn first_step_from_origin() {
        let q = StepProbabilities::from_ratios([2, 1, 1], [2, 3, 5], 1.0).unwrap();
        let d = step(&initial::<BigRational>(), &q).unwrap();
        assert_eq!(d.time(), 1);
        assert_eq!(d.probability(0, 0), r(1, 2));
        assert_eq!(d.probability(-1, 0), r(1, 4));
        assert_eq!(d.probability(-1, 1), r(1, 4));
        assert_eq!(d.support_len(), 3);
    }

    #[test]
    fn uniform_return_probability_after_two_steps() {
        let d: Distribution<BigRational> = evolve(&StepProbabilities::uniform(), 2).unwrap();
        assert_eq!(d.probability(0, 0), r(1, 3));
        assert!(d.total_mass().is_one());
    }

    #[test]
    fn zero_steps_is_initial() {
        let d: Distribution<f64> = evolve(&StepProbabilities::uniform(), 0).unwrap();
        assert_eq!(d, Distribution::initial());
    }

    #[test]
    fn zero_probabilities_are_pruned() {
        let q = StepProbabilities::from_ratios([1, 0, 0], [1, 0, 0], 1.0).unwrap();
        let d: Distribution<BigRational> = evolve(&q, 7).unwrap();
        assert_eq!(d.support_len(), 1);
        assert!(d.probability(0, 0).is_one());
        assert!(d.iter().all(|(_, p)| !Zero::is_zero(&p)));
    }

    #[test]
    fn step_cap_is_enforced() {
        let engine = Engine::<f64>::new(&StepProbabilities::uniform()).unwrap().with_step_cap(5);
        assert!(matches!(engine.run(initial(), 6), Err(Error::ResourceLimit(_))));
        assert!(evolve::<f64>(&StepProbabilities::uniform(), DEFAULT_STEP_CAP + 1).is_err());
    }

    #[test]
    fn rational_mode_requires_exact_parameters() {
        let q = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap();
        assert!(evolve::<BigRational>(&q, 3).is_err());
        assert!(evolve::<f64>(&q, 3).is_ok());
    }
}
