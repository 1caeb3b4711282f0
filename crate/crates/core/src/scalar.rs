//! Arithmetic back-ends shared by the exact engine and the closed form.
//!
//! Three implementations of [`Scalar`] exist: `BigRational` (the exact oracle),
//! `f64`, and [`LogProb`] (natural-log domain, for tail masses that underflow).
//! All quantities handled here are nonnegative, so the trait only needs the
//! operations of a semifield plus a partial subtraction.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::StepProbabilities;

/// Which arithmetic a computation ran in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArithmeticMode {
    Rational,
    Float,
    Log,
}

impl fmt::Display for ArithmeticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithmeticMode::Rational => "rational",
            ArithmeticMode::Float => "float",
            ArithmeticMode::Log => "log",
        })
    }
}

pub trait Scalar: Clone + fmt::Debug + Send + Sync + 'static {
    const MODE: ArithmeticMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(n: u64) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    /// `self - rhs`, defined when `self >= rhs`.
    fn sub(&self, rhs: &Self) -> Self;
    /// `|self - rhs|` as a float; zero exactly when the values are equal.
    fn distance(&self, rhs: &Self) -> f64;
    /// Equality: exact for rationals, within a relative 1e-12 for floats.
    fn same(&self, rhs: &Self) -> bool;
    fn to_f64(&self) -> f64;
    fn ln(&self) -> f64;

    /// The transition probabilities `q[i][r]` in this arithmetic.
    fn transition_rows(q: &StepProbabilities) -> Result<[[Self; 3]; 2]>;

    /// Per-row `(weights, scale)` with `q[i][r] = weights[r] / scale`.
    ///
    /// The rational implementation returns integer weights over the row's common
    /// denominator so the exact engine never reduces fractions.
    fn step_weights(q: &StepProbabilities) -> Result<[([Self; 3], Self); 2]> {
        let rows = Self::transition_rows(q)?;
        Ok(rows.map(|r| (r, Self::one())))
    }

    fn powi(&self, e: i64) -> Self {
        let mut base = if e < 0 { Self::one().div(self) } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn sum<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        terms.into_iter().fold(Self::zero(), |acc, t| acc.add(&t))
    }
}

impl Scalar for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn distance(&self, rhs: &Self) -> f64 {
        (self - rhs).abs()
    }
    fn same(&self, rhs: &Self) -> bool {
        (self - rhs).abs() <= 1e-12 * self.abs().max(rhs.abs()).max(1e-300)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn ln(&self) -> f64 {
        f64::ln(*self)
    }
    fn transition_rows(q: &StepProbabilities) -> Result<[[Self; 3]; 2]> {
        Ok(*q.rows())
    }

    /// Kahan-compensated summation.
    fn sum<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        let mut sum = 0.0;
        let mut c = 0.0;
        for t in terms {
            let y = t - c;
            let s = sum + y;
            c = (s - sum) - y;
            sum = s;
        }
        sum
    }
}

impl Scalar for BigRational {
    const MODE: ArithmeticMode = ArithmeticMode::Rational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    // integer operands skip the gcd reduction, which dominates for long numerators
    fn add(&self, rhs: &Self) -> Self {
        if self.is_integer() && rhs.is_integer() {
            BigRational::from_integer(self.numer() + rhs.numer())
        } else {
            self + rhs
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        if self.is_integer() && rhs.is_integer() {
            BigRational::from_integer(self.numer() * rhs.numer())
        } else {
            self * rhs
        }
    }
    fn div(&self, rhs: &Self) -> Self {
        if rhs.is_one() {
            self.clone()
        } else {
            self / rhs
        }
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn distance(&self, rhs: &Self) -> f64 {
        let d = (self - rhs).abs();
        if Zero::is_zero(&d) {
            0.0
        } else {
            // a nonzero difference never reports as zero
            ToPrimitive::to_f64(&d).unwrap_or(f64::INFINITY).max(f64::MIN_POSITIVE)
        }
    }
    fn same(&self, rhs: &Self) -> bool {
        self == rhs
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn ln(&self) -> f64 {
        if !self.is_positive() {
            return if Zero::is_zero(self) { f64::NEG_INFINITY } else { f64::NAN };
        }
        ln_bigint(self.numer()) - ln_bigint(self.denom())
    }
    fn transition_rows(q: &StepProbabilities) -> Result<[[Self; 3]; 2]> {
        q.exact_rows().cloned().ok_or_else(|| {
            Error::invalid("rational arithmetic needs exact probabilities (fractions or exact decimals)")
        })
    }
    fn step_weights(q: &StepProbabilities) -> Result<[([Self; 3], Self); 2]> {
        let rows = Self::transition_rows(q)?;
        Ok(rows.map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
            let weights = row.map(|p| BigRational::from_integer(p.numer() * (&lcm / p.denom())));
            (weights, BigRational::from_integer(lcm))
        }))
    }
}

/// Natural logarithm of a positive big integer without overflowing `f64`.
fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

/// A nonnegative number stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogProb(pub f64);

impl LogProb {
    pub fn from_prob(p: f64) -> Self {
        LogProb(p.ln())
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(x_i)` with max subtraction; `-inf` for an empty input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Scalar for LogProb {
    const MODE: ArithmeticMode = ArithmeticMode::Log;

    fn zero() -> Self {
        LogProb(f64::NEG_INFINITY)
    }
    fn one() -> Self {
        LogProb(0.0)
    }
    fn from_u64(n: u64) -> Self {
        LogProb((n as f64).ln())
    }
    fn is_zero(&self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
    fn add(&self, rhs: &Self) -> Self {
        LogProb(log_add_exp(self.0, rhs.0))
    }
    fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        LogProb(self.0 + rhs.0)
    }
    fn div(&self, rhs: &Self) -> Self {
        LogProb(self.0 - rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Self {
        if rhs.is_zero() {
            return *self;
        }
        LogProb(self.0 + (-(rhs.0 - self.0).exp()).ln_1p())
    }
    fn distance(&self, rhs: &Self) -> f64 {
        (self.0.exp() - rhs.0.exp()).abs()
    }
    fn same(&self, rhs: &Self) -> bool {
        self.0 == rhs.0 || (self.0 - rhs.0).abs() <= 1e-12 * self.0.abs().max(1.0)
    }
    fn to_f64(&self) -> f64 {
        self.0.exp()
    }
    fn ln(&self) -> f64 {
        self.0
    }
    fn transition_rows(q: &StepProbabilities) -> Result<[[Self; 3]; 2]> {
        Ok(q.rows().map(|row| row.map(LogProb::from_prob)))
    }
}
