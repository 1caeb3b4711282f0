//! Closed-form state probabilities.
//!
//! For even times `n = 2m` the probability `p_{j,k}(2m)` is a finite sum of
//! binomial × power × terminating Gauss hypergeometric terms, with the
//! hypergeometric argument
//!
//! ```text
//! ρ = q01 q11 / (q02 q12)
//! ```
//!
//! and one of four formulas selected by the region `(j, k)` lies in. Odd times
//! are obtained by pushing the even-time closed form one step forward.
//!
//! When `q02 q12 = 0` the ratio is undefined and answers come from the exact
//! engine instead, tagged [`Provenance::Oracle`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{evolve, Distribution};
use crate::error::{Error, Result};
use crate::lattice::{predecessors, StepProbabilities, VertexClass};
use crate::scalar::{ArithmeticMode, Scalar};

/// Parameters of `2F1(a, b; c; z)` for the terminating case.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergeometricArgs<S> {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub z: S,
}

/// `Σ_{t=0}^{T} (a)_t (b)_t / ((c)_t t!) z^t`, where `T` is the order at which
/// the first nonpositive upper parameter kills the series.
///
/// Positive and negative terms are accumulated separately, so in rational mode
/// the result is exact.
pub fn gauss_2f1_terminating<S: Scalar>(args: &HypergeometricArgs<S>) -> Result<S> {
    let HypergeometricArgs { a, b, c, z } = args;
    let order = [*a, *b]
        .into_iter()
        .filter(|&p| p <= 0)
        .map(|p| p.unsigned_abs())
        .min()
        .ok_or_else(|| Error::UnsupportedParameters(format!("2F1({a}, {b}; {c}; z) does not terminate")))?;
    if *c < 1 {
        return Err(Error::UnsupportedParameters(format!("lower parameter c = {c} must be at least 1")));
    }

    let mut positive = vec![S::one()];
    let mut negative = Vec::new();
    let mut magnitude = S::one();
    let mut negative_sign = false;
    for t in 0..order as i64 {
        let (fa, fb) = (a + t, b + t);
        // |(a+t)(b+t)| / ((c+t)(t+1)) · z
        let num = S::from_u64(fa.unsigned_abs()).mul(&S::from_u64(fb.unsigned_abs()));
        let den = S::from_u64((c + t) as u64).mul(&S::from_u64((t + 1) as u64));
        magnitude = magnitude.mul(&num).div(&den).mul(z);
        if magnitude.is_zero() {
            break;
        }
        negative_sign ^= (fa < 0) != (fb < 0);
        if negative_sign {
            negative.push(magnitude.clone());
        } else {
            positive.push(magnitude.clone());
        }
    }
    Ok(S::sum(positive).sub(&S::sum(negative)))
}

/// Where a closed-form answer came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    /// `ρ` is undefined for these parameters; the exact engine answered.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated<S> {
    pub value: S,
    pub provenance: Provenance,
}

/// The four index regions of the even-time closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `0 ≤ j ≤ m`, `-m ≤ k ≤ 0`
    I,
    /// `0 ≤ j ≤ m`, `1 ≤ k ≤ m - j`
    II,
    /// `-m ≤ j ≤ -1`, `-m - j ≤ k ≤ -1`
    III,
    /// `-m ≤ j ≤ -1`, `0 ≤ k ≤ m`
    IV,
}

impl Region {
    pub fn of(j: i64, k: i64, m: i64) -> Option<Region> {
        if (0..=m).contains(&j) {
            if (-m..=0).contains(&k) {
                return Some(Region::I);
            }
            if (1..=m - j).contains(&k) {
                return Some(Region::II);
            }
        } else if (-m..=-1).contains(&j) {
            if (-m - j..=-1).contains(&k) {
                return Some(Region::III);
            }
            if (0..=m).contains(&k) {
                return Some(Region::IV);
            }
        }
        None
    }
}

/// Whether `(j, k)` can carry mass at odd time `2m + 1`.
pub fn in_odd_support(j: i64, k: i64, m: i64) -> bool {
    ((0..=m).contains(&j) && (-m..=m - j).contains(&k)) || ((-m - 1..=-1).contains(&j) && (-m - j - 1..=m + 1).contains(&k))
}

/// Pascal's triangle, built by additions only.
#[derive(Debug, Clone)]
struct BinomialTable<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> BinomialTable<S> {
    fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<S>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![S::one()]);
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut row = Vec::with_capacity(n + 1);
            row.push(S::one());
            for k in 1..n {
                row.push(prev[k - 1].add(&prev[k]));
            }
            row.push(S::one());
            rows.push(row);
        }
        Self { rows }
    }

    fn get(&self, n: i64, k: i64) -> Option<&S> {
        if n < 0 || k < 0 || k > n {
            return None;
        }
        self.rows.get(n as usize).map(|row| &row[k as usize])
    }
}

/// Evaluator of the closed form for one parameter set, valid for `m ≤ max_m`.
#[derive(Debug, Clone)]
pub struct ClosedForm<S> {
    model: StepProbabilities,
    q: [[S; 3]; 2],
    rho: Option<S>,
    max_m: u64,
    binomials: BinomialTable<S>,
    powers: [[Vec<S>; 3]; 2],
}

impl<S: Scalar> ClosedForm<S> {
    pub fn new(model: &StepProbabilities, max_m: u64) -> Result<Self> {
        let q = S::transition_rows(model)?;
        let den = q[0][2].mul(&q[1][2]);
        let rho = (!den.is_zero()).then(|| q[0][1].mul(&q[1][1]).div(&den));
        let len = max_m as usize + 1;
        let powers = std::array::from_fn(|i| {
            std::array::from_fn(|r| {
                let mut v = Vec::with_capacity(len);
                let mut acc = S::one();
                for _ in 0..len {
                    v.push(acc.clone());
                    acc = acc.mul(&q[i][r]);
                }
                v
            })
        });
        Ok(Self {
            model: model.clone(),
            q,
            rho,
            max_m,
            binomials: BinomialTable::new(max_m as usize),
            powers,
        })
    }

    pub fn rho(&self) -> Option<&S> {
        self.rho.as_ref()
    }

    pub fn max_m(&self) -> u64 {
        self.max_m
    }

    pub fn provenance(&self) -> Provenance {
        if self.rho.is_some() {
            Provenance::ClosedForm
        } else {
            Provenance::Oracle
        }
    }

    fn pow(&self, i: usize, r: usize, e: i64) -> &S {
        &self.powers[i][r][e as usize]
    }

    fn binomial_product(&self, factors: [(i64, i64); 3]) -> Option<S> {
        let mut acc = S::one();
        for (n, k) in factors {
            acc = acc.mul(self.binomials.get(n, k)?);
        }
        (!acc.is_zero()).then_some(acc)
    }

    fn check_m(&self, m: u64) -> Result<()> {
        if m == 0 {
            return Err(Error::invalid("the even-time closed form needs m >= 1"));
        }
        if m > self.max_m {
            return Err(Error::invalid(format!("m = {m} exceeds evaluator capacity {}", self.max_m)));
        }
        Ok(())
    }

    /// `p_{j,k}(2m)` from the four-region closed form; zero outside every region.
    fn even_closed_form(&self, j: i64, k: i64, m: i64, rho: &S) -> Result<S> {
        let Some(region) = Region::of(j, k, m) else {
            return Ok(S::zero());
        };
        let hyp = |a: i64, b: i64, c: i64| gauss_2f1_terminating(&HypergeometricArgs { a, b, c, z: rho.clone() });
        let mut terms = Vec::new();
        match region {
            Region::I => {
                for t in 0..=m - j {
                    let Some(b) = self.binomial_product([(m, t), (m, j + t), (j + t, -k)]) else {
                        continue;
                    };
                    let term = b
                        .mul(self.pow(0, 0, m - t))
                        .mul(self.pow(1, 0, m - j - t))
                        .mul(self.pow(0, 2, t))
                        .mul(self.pow(1, 2, j + k + t))
                        .mul(self.pow(1, 1, -k))
                        .mul(&hyp(-j - k - t, -t, 1 - k)?);
                    terms.push(term);
                }
            }
            Region::II => {
                for t in k..=m - j {
                    let Some(b) = self.binomial_product([(m, t), (m, j + t), (t, k)]) else {
                        continue;
                    };
                    let term = b
                        .mul(self.pow(0, 0, m - t))
                        .mul(self.pow(1, 0, m - j - t))
                        .mul(self.pow(0, 1, k))
                        .mul(self.pow(0, 2, t - k))
                        .mul(self.pow(1, 2, j + t))
                        .mul(&hyp(-j - t, k - t, 1 + k)?);
                    terms.push(term);
                }
            }
            Region::III => {
                for t in -k..=m + j {
                    let Some(b) = self.binomial_product([(m, t), (m, t - j), (t, -k)]) else {
                        continue;
                    };
                    let term = b
                        .mul(self.pow(0, 0, m + j - t))
                        .mul(self.pow(1, 0, m - t))
                        .mul(self.pow(0, 2, t - j))
                        .mul(self.pow(1, 2, k + t))
                        .mul(self.pow(1, 1, -k))
                        .mul(&hyp(j - t, -k - t, 1 - k)?);
                    terms.push(term);
                }
            }
            Region::IV => {
                for t in 0..=m + j {
                    let Some(b) = self.binomial_product([(m, t), (m, t - j), (t - j, k)]) else {
                        continue;
                    };
                    let term = b
                        .mul(self.pow(0, 0, m + j - t))
                        .mul(self.pow(1, 0, m - t))
                        .mul(self.pow(0, 1, k))
                        .mul(self.pow(0, 2, t - j - k))
                        .mul(self.pow(1, 2, t))
                        .mul(&hyp(j + k - t, -t, 1 + k)?);
                    terms.push(term);
                }
            }
        }
        Ok(S::sum(terms))
    }

    /// `p_{j,k}(2m)`, `m ≥ 1`.
    pub fn even(&self, j: i64, k: i64, m: u64) -> Result<Evaluated<S>> {
        self.check_m(m)?;
        match &self.rho {
            Some(rho) => Ok(Evaluated {
                value: self.even_closed_form(j, k, m as i64, rho)?,
                provenance: Provenance::ClosedForm,
            }),
            None => Ok(Evaluated {
                value: evolve::<S>(&self.model, 2 * m)?.probability(j, k),
                provenance: Provenance::Oracle,
            }),
        }
    }

    /// `p_{j,k}(n)` for any `n ≥ 0`.
    pub fn at(&self, j: i64, k: i64, n: u64) -> Result<Evaluated<S>> {
        if n == 0 {
            let value = if (j, k) == (0, 0) { S::one() } else { S::zero() };
            return Ok(Evaluated {
                value,
                provenance: Provenance::ClosedForm,
            });
        }
        if n % 2 == 0 {
            return self.even(j, k, n / 2);
        }
        let m = n / 2;
        if self.rho.is_none() {
            return Ok(Evaluated {
                value: evolve::<S>(&self.model, n)?.probability(j, k),
                provenance: Provenance::Oracle,
            });
        }
        let mut terms = Vec::with_capacity(3);
        for ((sj, sk), r) in predecessors(j, k, VertexClass::Zero) {
            if self.q[0][r].is_zero() {
                continue;
            }
            let p = self.at(sj, sk, 2 * m)?.value;
            terms.push(p.mul(&self.q[0][r]));
        }
        Ok(Evaluated {
            value: S::sum(terms),
            provenance: Provenance::ClosedForm,
        })
    }

    /// Every nonzero `p_{j,k}(n)` evaluated over the bounding box of the reachable set.
    pub fn distribution(&self, n: u64) -> Result<(Distribution<S>, Provenance)> {
        if self.rho.is_none() {
            return Ok((evolve::<S>(&self.model, n)?, Provenance::Oracle));
        }
        if n == 0 {
            return Ok((Distribution::initial(), Provenance::ClosedForm));
        }
        if n / 2 > self.max_m {
            return Err(Error::invalid(format!("time {n} exceeds evaluator capacity")));
        }
        let m = (n / 2) as i64;
        let (jr, kr) = if n % 2 == 0 { (-m..=m, -m..=m) } else { (-m - 1..=m, -m - 1..=m + 1) };
        let rows: Vec<Result<Vec<((i64, i64), S)>>> = jr
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|j| {
                let mut row = Vec::new();
                for k in kr.clone() {
                    let v = self.at(j, k, n)?.value;
                    if !v.is_zero() {
                        row.push(((j, k), v));
                    }
                }
                Ok(row)
            })
            .collect();
        let mut weights = BTreeMap::new();
        for row in rows {
            weights.extend(row?);
        }
        Ok((Distribution::from_parts(n, weights), Provenance::ClosedForm))
    }
}

/// `p_{j,k}(2m)` for a single state.
pub fn state_probability_even<S: Scalar>(j: i64, k: i64, m: u64, q: &StepProbabilities) -> Result<Evaluated<S>> {
    ClosedForm::new(q, m.max(1))?.even(j, k, m)
}

/// `p_{j,k}(n)` for a single state, any `n ≥ 0`.
pub fn state_probability<S: Scalar>(j: i64, k: i64, n: u64, q: &StepProbabilities) -> Result<Evaluated<S>> {
    ClosedForm::new(q, (n / 2).max(1))?.at(j, k, n)
}

/// The three symmetry relations of the even-time distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymmetryRelation {
    /// `p_{j,k} = ξ^{2k+j} p_{j,-j-k}` when `q01/q02 = q12/q11 = ξ`
    Reflection,
    /// `p_{j,k} = δ^{2k+j} p_{-j,-k}` when `q01 = q12`, `q11 = q02`, `δ = q01/q11`
    PointInversion,
    /// `p_{j,k} = p_{-j,j+k}` when `q01 = q12`, `q11 = q02`
    Shear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SymmetryCase {
    pub relation: SymmetryRelation,
    pub applicable: bool,
    /// `ξ` or `δ` when the relation carries one.
    pub parameter: Option<f64>,
    pub max_violation: Option<f64>,
    /// Whether `ρ = 1` holds exactly (rational) or to 1e-12 (float).
    pub rho_is_one: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SymmetryReport {
    pub m: u64,
    pub mode: ArithmeticMode,
    pub cases: Vec<SymmetryCase>,
}

impl SymmetryReport {
    pub fn max_violation(&self) -> f64 {
        self.cases.iter().filter_map(|c| c.max_violation).fold(0.0, f64::max)
    }

    pub fn all_rho_one(&self) -> bool {
        self.cases.iter().filter(|c| c.applicable).all(|c| c.rho_is_one == Some(true))
    }
}

/// Maximum violation of each applicable symmetry relation over `-m ≤ j, k ≤ m`.
pub fn check_symmetry<S: Scalar>(q: &StepProbabilities, m: u64) -> Result<SymmetryReport> {
    if m == 0 {
        return Err(Error::invalid("symmetry check needs m >= 1"));
    }
    let rows = S::transition_rows(q)?;
    let [_, q01, q02] = rows[0].clone();
    let [_, q11, q12] = rows[1].clone();
    let evaluator = ClosedForm::<S>::new(q, m)?;
    let (dist, _) = evaluator.distribution(2 * m)?;
    let rho_is_one = evaluator.rho().map(|r| r.same(&S::one()));
    let mi = m as i64;

    let max_over = |f: &dyn Fn(i64, i64) -> f64| {
        let mut worst = 0.0f64;
        for j in -mi..=mi {
            for k in -mi..=mi {
                worst = worst.max(f(j, k));
            }
        }
        worst
    };

    let reflection_premise = !q02.is_zero() && !q11.is_zero() && q01.mul(&q11).same(&q12.mul(&q02));
    let reflection = if reflection_premise {
        let xi = q01.div(&q02);
        let v = max_over(&|j, k| {
            let rhs = xi.powi(2 * k + j).mul(&dist.probability(j, -j - k));
            dist.probability(j, k).distance(&rhs)
        });
        SymmetryCase {
            relation: SymmetryRelation::Reflection,
            applicable: true,
            parameter: Some(xi.to_f64()),
            max_violation: Some(v),
            rho_is_one,
        }
    } else {
        skipped(SymmetryRelation::Reflection)
    };

    let swap_premise = q01.same(&q12) && q11.same(&q02);
    let inversion = if swap_premise && !q11.is_zero() {
        let delta = q01.div(&q11);
        let v = max_over(&|j, k| {
            let rhs = delta.powi(2 * k + j).mul(&dist.probability(-j, -k));
            dist.probability(j, k).distance(&rhs)
        });
        SymmetryCase {
            relation: SymmetryRelation::PointInversion,
            applicable: true,
            parameter: Some(delta.to_f64()),
            max_violation: Some(v),
            rho_is_one,
        }
    } else {
        skipped(SymmetryRelation::PointInversion)
    };

    let shear = if swap_premise {
        let v = max_over(&|j, k| dist.probability(j, k).distance(&dist.probability(-j, j + k)));
        SymmetryCase {
            relation: SymmetryRelation::Shear,
            applicable: true,
            parameter: None,
            max_violation: Some(v),
            rho_is_one,
        }
    } else {
        skipped(SymmetryRelation::Shear)
    };

    Ok(SymmetryReport {
        m,
        mode: S::MODE,
        cases: vec![reflection, inversion, shear],
    })
}

fn skipped(relation: SymmetryRelation) -> SymmetryCase {
    SymmetryCase {
        relation,
        applicable: false,
        parameter: None,
        max_violation: None,
        rho_is_one: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::One;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn hyp(a: i64, b: i64, c: i64, z: BigRational) -> BigRational {
        gauss_2f1_terminating(&HypergeometricArgs { a, b, c, z }).unwrap()
    }

    #[test]
    fn terminating_series_examples() {
        assert_eq!(hyp(0, -5, 3, r(7, 10)), <BigRational as One>::one());
        let rho = r(3, 5);
        assert_eq!(hyp(-1, -1, 1, rho.clone()), <BigRational as One>::one() + rho);
        assert_eq!(hyp(-2, -2, 1, <BigRational as One>::one()), r(6, 1));
        let f = gauss_2f1_terminating(&HypergeometricArgs { a: -2, b: -2, c: 1, z: 1.0 }).unwrap();
        assert_eq!(f, 6.0);
        assert_eq!(hyp(-4, 0, 2, r(9, 2)), <BigRational as One>::one());
    }

    // One nonpositive parameter: terms alternate in sign.
    #[test]
    fn single_terminating_parameter() {
        // 2F1(-2, 3; 1; z) = 1 - 6z + 6z^2
        let z = r(1, 2);
        assert_eq!(hyp(-2, 3, 1, z.clone()), <BigRational as One>::one() - r(6, 1) * &z + r(6, 1) * &z * &z);
    }

    #[test]
    fn non_terminating_is_rejected() {
        let err = gauss_2f1_terminating(&HypergeometricArgs { a: 1, b: 2, c: 3, z: 0.5 });
        assert!(matches!(err, Err(Error::UnsupportedParameters(_))));
        let err = gauss_2f1_terminating(&HypergeometricArgs { a: -1, b: 2, c: 0, z: 0.5 });
        assert!(matches!(err, Err(Error::UnsupportedParameters(_))));
    }

    #[test]
    fn uniform_return_probability() {
        let p = state_probability_even::<BigRational>(0, 0, 1, &StepProbabilities::uniform()).unwrap();
        assert_eq!(p.value, r(1, 3));
        assert_eq!(p.provenance, Provenance::ClosedForm);
    }

    #[test]
    fn unreachable_states_are_zero() {
        let q = StepProbabilities::from_ratios([2, 1, 1], [2, 3, 5], 1.0).unwrap();
        for (j, k) in [(4, 0), (0, 4), (-1, -3), (2, 2), (-3, -1)] {
            let p = state_probability_even::<BigRational>(j, k, 3, &q).unwrap();
            assert!(num_traits::Zero::is_zero(&p.value), "({j},{k})");
        }
    }

    #[test]
    fn odd_time_first_step() {
        let q = StepProbabilities::from_ratios([2, 1, 1], [2, 3, 5], 1.0).unwrap();
        assert_eq!(state_probability::<BigRational>(0, 0, 1, &q).unwrap().value, r(1, 2));
        assert_eq!(state_probability::<BigRational>(-1, 1, 1, &q).unwrap().value, r(1, 4));
        assert_eq!(state_probability::<BigRational>(0, 0, 0, &q).unwrap().value, <BigRational as One>::one());
    }

    #[test]
    fn degenerate_rho_uses_oracle() {
        let q = StepProbabilities::from_ratios([1, 1, 0], [1, 1, 1], 1.0).unwrap();
        let p = state_probability_even::<BigRational>(0, 0, 2, &q).unwrap();
        assert_eq!(p.provenance, Provenance::Oracle);
        let oracle: Distribution<BigRational> = evolve(&q, 4).unwrap();
        assert_eq!(p.value, oracle.probability(0, 0));
        let p = state_probability::<BigRational>(0, 0, 3, &q).unwrap();
        assert_eq!(p.provenance, Provenance::Oracle);
    }

    #[test]
    fn m_zero_is_rejected() {
        assert!(state_probability_even::<f64>(0, 0, 0, &StepProbabilities::uniform()).is_err());
    }

    #[test]
    fn regions_partition_even_support() {
        let q = StepProbabilities::from_ratios([2, 1, 1], [2, 3, 5], 1.0).unwrap();
        for m in 1..=5u64 {
            let d: Distribution<BigRational> = evolve(&q, 2 * m).unwrap();
            for (j, k) in d.support() {
                assert!(Region::of(j, k, m as i64).is_some(), "({j},{k}) at m={m}");
            }
        }
    }

    #[test]
    fn symmetry_uniform() {
        let rep = check_symmetry::<BigRational>(&StepProbabilities::uniform(), 3).unwrap();
        assert!(rep.cases.iter().all(|c| c.applicable));
        assert_eq!(rep.max_violation(), 0.0);
        assert!(rep.all_rho_one());
    }

    #[test]
    fn symmetry_skips_inapplicable_cases() {
        let q = StepProbabilities::from_ratios([2, 1, 1], [2, 3, 5], 1.0).unwrap();
        let rep = check_symmetry::<BigRational>(&q, 2).unwrap();
        assert!(rep.cases.iter().all(|c| !c.applicable));
    }
}
