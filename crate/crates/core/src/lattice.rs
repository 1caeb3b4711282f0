//! Hexagonal lattice geometry.
//!
//! Vertices are addressed by integer pairs `(j, k)` plus a class `i ∈ {0, 1}`:
//!
//! ```text
//! V_i = { ( (3/2) a j + i a ,  (√3/2) a j + √3 a k ) : j, k ∈ Z }
//! ```
//!
//! A class-`i` vertex has three neighbours, all of class `1 - i`. The step in
//! direction `r` displaces the walker by `a (cos(2πr/3 + iπ), sin(2πr/3 + iπ))`.
//! That displacement fixes which `(j, k)` shift each direction corresponds to,
//! recorded once in [`STEP_OFFSETS`].

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-15;

/// One of the two vertex classes of the bipartite lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexClass {
    Zero,
    One,
}

impl VertexClass {
    pub fn index(self) -> usize {
        match self {
            VertexClass::Zero => 0,
            VertexClass::One => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i % 2 == 0 {
            VertexClass::Zero
        } else {
            VertexClass::One
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            VertexClass::Zero => VertexClass::One,
            VertexClass::One => VertexClass::Zero,
        }
    }
}

/// Class occupied by the walker at time `n`: 0 for even `n`, 1 for odd `n`.
pub fn parity(n: u64) -> VertexClass {
    VertexClass::from_index((n % 2) as usize)
}

/// Index shift `(dj, dk)` of a step in direction `r` from a vertex of class `i`,
/// as `STEP_OFFSETS[i][r]`.
pub const STEP_OFFSETS: [[(i64, i64); 3]; 2] = [[(0, 0), (-1, 1), (-1, 0)], [(0, 0), (1, -1), (1, 0)]];

/// Cartesian displacement of a step in direction `r` from a class-`class` vertex.
pub fn displacement(class: VertexClass, r: usize, a: f64) -> CartesianPoint {
    let angle = r as f64 * 2.0 * std::f64::consts::PI / 3.0 + class.index() as f64 * std::f64::consts::PI;
    CartesianPoint {
        x: a * angle.cos(),
        y: a * angle.sin(),
    }
}

/// A lattice node `(j, k)` of class `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVertex {
    pub j: i64,
    pub k: i64,
    pub class: VertexClass,
}

impl LatticeVertex {
    pub const ORIGIN: LatticeVertex = LatticeVertex {
        j: 0,
        k: 0,
        class: VertexClass::Zero,
    };

    pub fn new(j: i64, k: i64, class: VertexClass) -> Self {
        Self { j, k, class }
    }

    /// Cartesian image for a spacing already known to be positive.
    pub(crate) fn position(&self, a: f64) -> CartesianPoint {
        let s3 = 3f64.sqrt();
        let (j, k) = (self.j as f64, self.k as f64);
        CartesianPoint {
            x: 1.5 * a * j + self.class.index() as f64 * a,
            y: 0.5 * s3 * a * j + s3 * a * k,
        }
    }

    /// The vertex reached by one step in direction `r`.
    pub fn step(&self, r: usize) -> LatticeVertex {
        let (dj, dk) = STEP_OFFSETS[self.class.index()][r];
        LatticeVertex::new(self.j + dj, self.k + dk, self.class.opposite())
    }
}

/// A point of the plane, in length units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
}

impl CartesianPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &CartesianPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Cartesian coordinates of `v` for lattice spacing `a`.
pub fn to_cartesian(v: &LatticeVertex, a: f64) -> Result<CartesianPoint> {
    check_spacing(a)?;
    Ok(v.position(a))
}

/// The three neighbours of `v`, each paired with the direction that reaches it.
pub fn neighbors(v: &LatticeVertex) -> [(LatticeVertex, usize); 3] {
    [0, 1, 2].map(|r| (v.step(r), r))
}

/// Sources `(j', k')` of class `source` from which direction `r` lands on `(j, k)`.
pub fn predecessors(j: i64, k: i64, source: VertexClass) -> [((i64, i64), usize); 3] {
    let offsets = &STEP_OFFSETS[source.index()];
    [0, 1, 2].map(|r| ((j - offsets[r].0, k - offsets[r].1), r))
}

fn check_spacing(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("lattice spacing must be positive and finite, got {a}")))
    }
}

/// The six one-step probabilities `q[i][r]` and the lattice spacing `a`.
///
/// Built either from floats (rows must sum to one within 1e-15) or from exact
/// rationals (rows must sum to one exactly). Exact parameters are needed by the
/// rational arithmetic mode.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProbabilities {
    q: [[f64; 3]; 2],
    exact: Option<[[BigRational; 3]; 2]>,
    spacing: f64,
}

impl StepProbabilities {
    pub fn new(q0: [f64; 3], q1: [f64; 3], a: f64) -> Result<Self> {
        check_spacing(a)?;
        for (i, row) in [q0, q1].iter().enumerate() {
            for (r, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(format!("q[{i}][{r}] = {p} is not a probability")));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!("row {i} sums to {sum}, expected 1")));
            }
        }
        Ok(Self {
            q: [q0, q1],
            exact: None,
            spacing: a,
        })
    }

    pub fn from_rationals(q0: [BigRational; 3], q1: [BigRational; 3], a: f64) -> Result<Self> {
        check_spacing(a)?;
        let rows = [q0, q1];
        for (i, row) in rows.iter().enumerate() {
            for (r, p) in row.iter().enumerate() {
                if p < &BigRational::zero() || p > &BigRational::one() {
                    return Err(Error::invalid(format!("q[{i}][{r}] = {p} is not a probability")));
                }
            }
            let sum: BigRational = row.iter().sum();
            if !sum.is_one() {
                return Err(Error::invalid(format!("row {i} sums to {sum}, expected exactly 1")));
            }
        }
        let q = [0, 1].map(|i| [0, 1, 2].map(|r| rows[i][r].to_f64().unwrap_or(f64::NAN)));
        Ok(Self {
            q,
            exact: Some(rows),
            spacing: a,
        })
    }

    /// Parses each probability from a decimal (`0.25`) or fraction (`1/4`) string.
    ///
    /// Values are parsed exactly; rows that sum exactly to one keep the exact
    /// representation.
    pub fn parse(q0: [&str; 3], q1: [&str; 3], a: f64) -> Result<Self> {
        let parse_row = |row: [&str; 3]| -> Result<[BigRational; 3]> {
            let v = row.iter().map(|s| parse_probability(s)).collect::<Result<Vec<_>>>()?;
            Ok([v[0].clone(), v[1].clone(), v[2].clone()])
        };
        let (r0, r1) = (parse_row(q0)?, parse_row(q1)?);
        match Self::from_rationals(r0.clone(), r1.clone(), a) {
            Ok(p) => Ok(p),
            Err(exact_err) => {
                let to_f = |row: &[BigRational; 3]| row.clone().map(|p| p.to_f64().unwrap_or(f64::NAN));
                Self::new(to_f(&r0), to_f(&r1), a).map_err(|_| exact_err)
            }
        }
    }

    /// `q[i][r] = 1/3` for all `i, r` and `a = 1`.
    pub fn uniform() -> Self {
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        Self::from_rationals(
            [third.clone(), third.clone(), third.clone()],
            [third.clone(), third.clone(), third],
            1.0,
        )
        .expect("uniform parameters are valid")
    }

    /// Exact parameters from integer numerators over a shared denominator per row.
    pub fn from_ratios(q0: [i64; 3], q1: [i64; 3], a: f64) -> Result<Self> {
        let row = |r: [i64; 3]| -> Result<[BigRational; 3]> {
            let d: i64 = r.iter().sum();
            if d <= 0 {
                return Err(Error::invalid("row weights must have a positive sum"));
            }
            Ok(r.map(|x| BigRational::new(BigInt::from(x), BigInt::from(d))))
        };
        Self::from_rationals(row(q0)?, row(q1)?, a)
    }

    pub fn with_spacing(&self, a: f64) -> Result<Self> {
        check_spacing(a)?;
        let mut out = self.clone();
        out.spacing = a;
        Ok(out)
    }

    /// `q[class][r]` as a float.
    pub fn q(&self, class: usize, r: usize) -> f64 {
        self.q[class][r]
    }

    pub fn rows(&self) -> &[[f64; 3]; 2] {
        &self.q
    }

    pub fn exact_rows(&self) -> Option<&[[BigRational; 3]; 2]> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `q01 q11 / (q02 q12)`, or `None` when the denominator vanishes.
    pub fn rho(&self) -> Option<f64> {
        let den = self.q[0][2] * self.q[1][2];
        (den > 0.0).then(|| self.q[0][1] * self.q[1][1] / den)
    }
}

impl fmt::Display for StepProbabilities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |i: usize| match &self.exact {
            Some(e) => format!("({}, {}, {})", e[i][0], e[i][1], e[i][2]),
            None => format!("({}, {}, {})", self.q[i][0], self.q[i][1], self.q[i][2]),
        };
        write!(f, "q0={} q1={} a={}", row(0), row(1), self.spacing)
    }
}

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.125"` exactly.
pub fn parse_probability(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse probability {s:?}"));
    if s.contains('/') {
        let r = BigRational::from_str(s).map_err(|_| bad())?;
        return Ok(r);
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    let digits_ok = |p: &str| p.chars().all(|c| c.is_ascii_digit());
    if (int_part.is_empty() && frac_part.is_empty()) || !digits_ok(int_part) || !digits_ok(frac_part) {
        return Err(bad());
    }
    let numer: BigInt = format!("{}{}", if int_part.is_empty() { "0" } else { int_part }, frac_part)
        .parse()
        .map_err(|_| bad())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(BigRational::new(numer, denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_of_small_times() {
        assert_eq!(parity(0), VertexClass::Zero);
        assert_eq!(parity(1), VertexClass::One);
        assert_eq!(parity(6), VertexClass::Zero);
    }

    #[test]
    fn cartesian_images() {
        let o = to_cartesian(&LatticeVertex::new(0, 0, VertexClass::Zero), 1.0).unwrap();
        assert_eq!((o.x, o.y), (0.0, 0.0));
        let p = to_cartesian(&LatticeVertex::new(0, 0, VertexClass::One), 1.0).unwrap();
        assert_eq!((p.x, p.y), (1.0, 0.0));
        let p = to_cartesian(&LatticeVertex::new(1, 0, VertexClass::Zero), 2.0).unwrap();
        assert!((p.x - 3.0).abs() < 1e-15 && (p.y - 3f64.sqrt()).abs() < 1e-15);
        assert!(to_cartesian(&LatticeVertex::ORIGIN, 0.0).is_err());
        assert!(to_cartesian(&LatticeVertex::ORIGIN, -1.0).is_err());
    }

    #[test]
    fn neighbor_tables() {
        let n0: Vec<_> = neighbors(&LatticeVertex::ORIGIN).iter().map(|(v, _)| (v.j, v.k, v.class)).collect();
        use VertexClass::*;
        assert_eq!(n0, vec![(0, 0, One), (-1, 1, One), (-1, 0, One)]);
        let n1: Vec<_> = neighbors(&LatticeVertex::new(0, 0, One))
            .iter()
            .map(|(v, _)| (v.j, v.k, v.class))
            .collect();
        assert_eq!(n1, vec![(0, 0, Zero), (1, -1, Zero), (1, 0, Zero)]);
    }

    // The offset table and the per-direction displacement must describe the same step.
    #[test]
    fn offsets_match_displacements() {
        for a in [1.0, 0.37, 2.5] {
            for class in [VertexClass::Zero, VertexClass::One] {
                for j in -3..=3 {
                    for k in -3..=3 {
                        let v = LatticeVertex::new(j, k, class);
                        let p = v.position(a);
                        for (w, r) in neighbors(&v) {
                            let q = w.position(a);
                            let d = displacement(class, r, a);
                            assert!((q.x - p.x - d.x).abs() < 1e-12 * a.max(1.0) * 10.0);
                            assert!((q.y - p.y - d.y).abs() < 1e-12 * a.max(1.0) * 10.0);
                            assert!(((p.distance(&q) - a) / a).abs() < 1e-12);
                            assert!(neighbors(&w).iter().any(|(u, _)| *u == v));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn predecessors_invert_steps() {
        for class in [VertexClass::Zero, VertexClass::One] {
            for ((sj, sk), r) in predecessors(4, -2, class) {
                let w = LatticeVertex::new(sj, sk, class).step(r);
                assert_eq!((w.j, w.k), (4, -2));
            }
        }
    }

    #[test]
    fn probability_validation() {
        assert!(StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).is_ok());
        assert!(StepProbabilities::new([0.5, 0.25, 0.15], [0.2, 0.3, 0.5], 1.0).is_err());
        assert!(StepProbabilities::new([1.2, -0.1, -0.1], [0.2, 0.3, 0.5], 1.0).is_err());
        assert!(StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 0.0).is_err());
        let p = StepProbabilities::parse(["1/3", "1/3", "1/3"], ["0.2", "0.3", "0.5"], 1.0).unwrap();
        assert!(p.is_exact());
        assert!(StepProbabilities::parse(["0.3", "0.3", "0.3"], ["0.2", "0.3", "0.5"], 1.0).is_err());
        assert!(StepProbabilities::parse(["x", "0.3", "0.3"], ["0.2", "0.3", "0.5"], 1.0).is_err());
    }

    #[test]
    fn parses_exact_decimals() {
        assert_eq!(parse_probability("0.125").unwrap(), BigRational::new(1.into(), 8.into()));
        assert_eq!(parse_probability("1").unwrap(), BigRational::one());
        assert_eq!(parse_probability(".5").unwrap(), BigRational::new(1.into(), 2.into()));
        assert!(parse_probability("").is_err());
        assert!(parse_probability("1e-3").is_err());
    }

    #[test]
    fn rho_definition() {
        let p = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap();
        assert!((p.rho().unwrap() - 0.6).abs() < 1e-15);
        let d = StepProbabilities::new([0.5, 0.5, 0.0], [0.2, 0.3, 0.5], 1.0).unwrap();
        assert!(d.rho().is_none());
    }
}
