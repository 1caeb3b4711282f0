//! CSV and JSON encodings of distributions, samples and rate surfaces.
//!
//! Floats are written with 17 significant digits and trailing zeros removed,
//! so reading a file back and writing it again reproduces it byte for byte.
//! Exact probabilities are written as reduced fractions.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::deviations::SurfacePoint;
use crate::engine::Distribution;
use crate::error::{Error, Result};
use crate::lattice::{parse_probability, CartesianPoint};
use crate::scalar::{ArithmeticMode, Scalar};

/// Fixed-width decimal rendering of `x`, in the style of C's `%.17g`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Probability types with a text form that survives a round trip.
pub trait TextScalar: Scalar {
    fn render(&self) -> String;
    fn parse_text(s: &str) -> Result<Self>;
}

impl TextScalar for f64 {
    fn render(&self) -> String {
        format_number(*self)
    }

    fn parse_text(s: &str) -> Result<Self> {
        s.trim()
            .parse()
            .map_err(|_| Error::Format(format!("`{s}` is not a number")))
    }
}

impl TextScalar for BigRational {
    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn parse_text(s: &str) -> Result<Self> {
        parse_probability(s).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    j: i64,
    k: i64,
    p: String,
}

/// Writes `j,k,p` rows in ascending `(j, k)` order.
pub fn write_distribution_csv<S: TextScalar, W: Write>(d: &Distribution<S>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for ((j, k), p) in d.iter() {
        w.serialize(Row { j, k, p: p.render() })?;
    }
    w.flush()?;
    Ok(())
}

fn collect_rows<S: TextScalar>(rows: impl Iterator<Item = Result<Row>>, n: u64) -> Result<Distribution<S>> {
    let mut weights = BTreeMap::new();
    for row in rows {
        let row = row?;
        if weights.insert((row.j, row.k), S::parse_text(&row.p)?).is_some() {
            return Err(Error::Format(format!("state ({}, {}) listed twice", row.j, row.k)));
        }
    }
    Ok(Distribution::from_parts(n, weights))
}

/// Reads a `j,k,p` table as the distribution at time `n`.
pub fn read_distribution_csv<S: TextScalar, R: Read>(input: R, n: u64) -> Result<Distribution<S>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["j", "k", "p"] {
        return Err(Error::Format("expected header j,k,p".into()));
    }
    let rows: Vec<Result<Row>> = r.deserialize().map(|x| x.map_err(Error::from)).collect();
    collect_rows(rows.into_iter(), n)
}

#[derive(Debug, Serialize, Deserialize)]
struct DistributionDoc {
    n: u64,
    mode: ArithmeticMode,
    entries: Vec<Row>,
}

/// Writes `{"n", "mode", "entries": [{"j", "k", "p"}]}` with `p` in text form.
pub fn write_distribution_json<S: TextScalar, W: Write>(d: &Distribution<S>, mut out: W) -> Result<()> {
    let doc = DistributionDoc {
        n: d.time(),
        mode: S::MODE,
        entries: d.iter().map(|((j, k), p)| Row { j, k, p: p.render() }).collect(),
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_distribution_json<S: TextScalar, R: Read>(input: R) -> Result<Distribution<S>> {
    let doc: DistributionDoc = serde_json::from_reader(input)?;
    if doc.mode != S::MODE {
        return Err(Error::Format(format!("file holds {} values, expected {}", doc.mode, S::MODE)));
    }
    collect_rows(doc.entries.into_iter().map(Ok), doc.n)
}

/// Writes `replica,x,y`.
pub fn write_endpoints_csv<W: Write>(points: &[CartesianPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replica", "x", "y"])?;
    for (i, p) in points.iter().enumerate() {
        w.write_record([i.to_string(), format_number(p.x), format_number(p.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `replica,t,x,y`, one row per visited point.
pub fn write_paths_csv<W: Write>(paths: &[Vec<CartesianPoint>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replica", "t", "x", "y"])?;
    for (i, path) in paths.iter().enumerate() {
        for (t, p) in path.iter().enumerate() {
            w.write_record([i.to_string(), t.to_string(), format_number(p.x), format_number(p.y)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `x,y,rate,finite`. Points whose solve failed carry rate `error`.
pub fn write_rate_surface_csv<W: Write>(surface: &[SurfacePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "rate", "finite"])?;
    for s in surface {
        let (rate, finite) = match &s.result {
            Ok(r) => (format_number(r.value), r.finite),
            Err(_) => ("error".to_string(), false),
        };
        w.write_record([format_number(s.point[0]), format_number(s.point[1]), rate, finite.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Text grid of `100 p` over `(j, k)`, `k` decreasing downwards.
pub fn heatmap<S: Scalar>(d: &Distribution<S>) -> String {
    let Some((j0, j1, k0, k1)) = d.bounds() else {
        return String::new();
    };
    let mut out = String::new();
    out.push_str("   k\\j");
    for j in j0..=j1 {
        out.push_str(&format!("{j:>7}"));
    }
    out.push('\n');
    for k in (k0..=k1).rev() {
        out.push_str(&format!("{k:>6}"));
        for j in j0..=j1 {
            let p = d.probability(j, k);
            if p.is_zero() {
                out.push_str("      .");
            } else {
                out.push_str(&format!("{:>7.2}", 100.0 * p.to_f64()));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::evolve;
    use crate::lattice::StepProbabilities;

    #[test]
    fn number_format() {
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(-2.25), "-2.25");
        assert_eq!(format_number(0.1), "0.10000000000000001");
        assert_eq!(format_number(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(format_number(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_number(1e20), "1e+20");
        assert_eq!(format_number(123456.0), "123456");
        for x in [0.1, 1.0 / 3.0, 2.5e-300, 7.0e15, -1e-5, std::f64::consts::PI] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let q = StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap();
        let d: Distribution<f64> = evolve(&q, 7).unwrap();
        let mut first = Vec::new();
        write_distribution_csv(&d, &mut first).unwrap();
        let back: Distribution<f64> = read_distribution_csv(&first[..], 7).unwrap();
        let mut second = Vec::new();
        write_distribution_csv(&back, &mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(back, d);
    }

    #[test]
    fn rational_json_round_trip() {
        let d: Distribution<BigRational> = evolve(&StepProbabilities::uniform(), 4).unwrap();
        let mut first = Vec::new();
        write_distribution_json(&d, &mut first).unwrap();
        let back: Distribution<BigRational> = read_distribution_json(&first[..]).unwrap();
        let mut second = Vec::new();
        write_distribution_json(&back, &mut second).unwrap();
        assert_eq!(first, second);
        assert!(read_distribution_json::<f64, _>(&first[..]).is_err());
    }

    #[test]
    fn time_zero_table() {
        let d: Distribution<BigRational> = Distribution::initial();
        let mut out = Vec::new();
        write_distribution_csv(&d, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "j,k,p\n0,0,1\n");
    }

    #[test]
    fn duplicate_states_are_rejected() {
        let text = "j,k,p\n0,0,0.5\n0,0,0.5\n";
        assert!(read_distribution_csv::<f64, _>(text.as_bytes(), 0).is_err());
    }
}
