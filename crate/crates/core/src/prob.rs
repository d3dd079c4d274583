//! Discrete probability bookkeeping.
//!
//! Every weight is held as an exact [`BigRational`]. Weights given as decimal
//! strings or `p/q` fractions stay exact and must sum to exactly one. Weights
//! given as JSON floats take the float fallback: the sum is checked against one
//! with tolerance [`NORMALIZATION_TOLERANCE`] and the table is then rescaled
//! exactly, so downstream enumeration is always exact.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact probability (or any exact real used by the enumeration oracles).
pub type Prob = BigRational;

pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

pub fn rat(numer: i64, denom: i64) -> Prob {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(v: i64) -> Prob {
    BigRational::from_integer(BigInt::from(v))
}

pub fn to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

/// Exact binary expansion of a finite float.
pub fn from_f64(v: f64) -> Option<Prob> {
    BigRational::from_float(v)
}

/// Parses `"3/8"`, `"-2"`, `"0.125"` or `"1e-3"`-free decimals exactly.
pub fn parse_rational(text: &str) -> Option<Prob> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// A single weight as it appears in a JSON model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Float(f64),
    Exact(String),
}

impl WeightValue {
    pub fn exact(p: &Prob) -> Self {
        WeightValue::Exact(format_rational(p))
    }
}

impl From<f64> for WeightValue {
    fn from(v: f64) -> Self {
        WeightValue::Float(v)
    }
}

impl From<&str> for WeightValue {
    fn from(v: &str) -> Self {
        WeightValue::Exact(v.to_owned())
    }
}

pub fn format_rational(p: &Prob) -> String {
    if p.denom().is_one() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

/// Parses a slice of weights into exact values, reporting whether any float
/// fallback was used.
pub fn parse_weights(path: &str, values: &[WeightValue]) -> Result<(Vec<Prob>, bool)> {
    let mut exact = true;
    let mut out = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let p = match v {
            WeightValue::Float(f) => {
                exact = false;
                from_f64(*f).ok_or_else(|| {
                    Error::invalid(format!("{path}[{i}]"), format!("non-finite weight {f}"))
                })?
            }
            WeightValue::Exact(s) => parse_rational(s).ok_or_else(|| {
                Error::invalid(
                    format!("{path}[{i}]"),
                    format!("cannot parse `{s}` as a rational"),
                )
            })?,
        };
        out.push(p);
    }
    Ok((out, exact))
}

/// A normalized probability table over a finite product of index ranges,
/// stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct ProbTable {
    dims: Vec<usize>,
    weights: Vec<Prob>,
    exact: bool,
}

impl fmt::Debug for ProbTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProbTable")
            .field("dims", &self.dims)
            .field(
                "weights",
                &self.weights.iter().map(format_rational).collect::<Vec<_>>(),
            )
            .finish()
    }
}

impl ProbTable {
    /// Builds a table from exact weights that must sum to exactly one.
    pub fn exact(path: &str, dims: Vec<usize>, weights: Vec<Prob>) -> Result<Self> {
        Self::build(path, dims, weights, true)
    }

    /// Builds a table from floats; the sum must be within
    /// [`NORMALIZATION_TOLERANCE`] of one and is then rescaled exactly.
    pub fn from_floats(path: &str, dims: Vec<usize>, weights: &[f64]) -> Result<Self> {
        let values: Vec<WeightValue> = weights.iter().copied().map(WeightValue::Float).collect();
        Self::from_values(path, dims, &values)
    }

    pub fn from_values(path: &str, dims: Vec<usize>, values: &[WeightValue]) -> Result<Self> {
        let (weights, exact) = parse_weights(path, values)?;
        Self::build(path, dims, weights, exact)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform table needs at least one atom");
        ProbTable {
            dims: vec![n],
            weights: vec![rat(1, n as i64); n],
            exact: true,
        }
    }

    /// Point mass: a one-atom table.
    pub fn point() -> Self {
        Self::uniform(1)
    }

    fn build(path: &str, dims: Vec<usize>, weights: Vec<Prob>, exact: bool) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::invalid(path, format!("empty dimension in {dims:?}")));
        }
        let expected: usize = dims.iter().product();
        if weights.len() != expected {
            return Err(Error::invalid(
                path,
                format!(
                    "expected {expected} weights for shape {dims:?}, found {}",
                    weights.len()
                ),
            ));
        }
        for (i, w) in weights.iter().enumerate() {
            if w.is_negative() {
                return Err(Error::invalid(
                    index_path(path, &dims, i),
                    format!("negative weight {}", format_rational(w)),
                ));
            }
        }
        let total: Prob = weights.iter().sum();
        if exact {
            if !total.is_one() {
                return Err(Error::invalid(
                    path,
                    format!("weights sum to {} instead of 1", format_rational(&total)),
                ));
            }
            return Ok(ProbTable {
                dims,
                weights,
                exact,
            });
        }
        let deviation = (to_f64(&total) - 1.0).abs();
        if deviation.is_nan() || deviation > NORMALIZATION_TOLERANCE {
            return Err(Error::invalid(
                path,
                format!(
                    "weights sum to {} (tolerance {NORMALIZATION_TOLERANCE:e})",
                    to_f64(&total)
                ),
            ));
        }
        let weights = weights.into_iter().map(|w| w / &total).collect();
        Ok(ProbTable {
            dims,
            weights,
            exact,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// True when every weight was given exactly (no float fallback).
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn weights(&self) -> &[Prob] {
        &self.weights
    }

    pub fn flat(&self, i: usize) -> &Prob {
        &self.weights[i]
    }

    pub fn get2(&self, i: usize, j: usize) -> &Prob {
        debug_assert_eq!(self.dims.len(), 2);
        &self.weights[i * self.dims[1] + j]
    }

    /// Splits a flat index into per-dimension indices.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (slot, &d) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        idx
    }

    /// Cumulative distribution as floats for inverse-CDF sampling. The last
    /// entry is pinned to exactly `1.0`.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = Prob::zero();
        let mut out: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                to_f64(&acc)
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        out
    }

    /// Nested JSON arrays of exact weights, inverse of [`ProbTable::from_values`].
    pub fn to_json(&self) -> serde_json::Value {
        fn nest(dims: &[usize], weights: &[Prob]) -> serde_json::Value {
            if dims.len() == 1 {
                return serde_json::Value::Array(
                    weights
                        .iter()
                        .map(|w| serde_json::Value::String(format_rational(w)))
                        .collect(),
                );
            }
            let stride: usize = dims[1..].iter().product();
            serde_json::Value::Array(
                weights
                    .chunks(stride)
                    .map(|chunk| nest(&dims[1..], chunk))
                    .collect(),
            )
        }
        nest(&self.dims, &self.weights)
    }
}

fn index_path(path: &str, dims: &[usize], mut flat: usize) -> String {
    let mut idx = vec![0; dims.len()];
    for (slot, &d) in idx.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
    let mut out = path.to_owned();
    for i in idx {
        out.push_str(&format!("[{i}]"));
    }
    out
}

/// Draws an index from a cumulative table: the first slot whose cumulative
/// weight exceeds `u`. Zero-weight slots are never selected.
pub fn sample_cdf(cdf: &[f64], u: f64) -> usize {
    let i = cdf.partition_point(|&c| c <= u);
    i.min(cdf.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rational("3/8"), Some(rat(3, 8)));
        assert_eq!(parse_rational("0.125"), Some(rat(1, 8)));
        assert_eq!(parse_rational("-2"), Some(int(-2)));
        assert_eq!(parse_rational(".5"), Some(rat(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn exact_tables_must_sum_to_one() {
        let ok = ProbTable::from_values("w", vec![3], &["1/3".into(), "1/3".into(), "1/3".into()]);
        assert!(ok.unwrap().is_exact());
        let err = ProbTable::from_values("w", vec![2], &["1/3".into(), "1/3".into()]).unwrap_err();
        assert!(err.to_string().contains("`w`"), "{err}");
    }

    #[test]
    fn float_tables_use_tolerance_then_rescale() {
        let t = ProbTable::from_floats("w", vec![3], &[0.1, 0.2, 0.7]).unwrap();
        assert!(!t.is_exact());
        let total: Prob = t.weights().iter().sum();
        assert!(total.is_one());
        assert!(ProbTable::from_floats("w", vec![2], &[0.5, 0.5 + 1e-9]).is_err());
    }

    #[test]
    fn negative_weight_reports_element_path() {
        let err = ProbTable::from_floats("weights.source", vec![2, 2], &[0.5, 0.75, -0.25, 0.0])
            .unwrap_err();
        assert!(err.to_string().contains("weights.source[1][0]"), "{err}");
    }

    #[test]
    fn cdf_sampling_skips_zero_mass() {
        let t = ProbTable::exact("w", vec![4], vec![rat(1, 2), int(0), rat(1, 2), int(0)]).unwrap();
        let cdf = t.cdf();
        assert_eq!(sample_cdf(&cdf, 0.0), 0);
        assert_eq!(sample_cdf(&cdf, 0.5), 2);
        assert_eq!(sample_cdf(&cdf, 0.999_999), 2);
    }

    #[test]
    fn json_round_trip_keeps_shape() {
        let t = ProbTable::exact(
            "w",
            vec![2, 2],
            vec![rat(1, 8), rat(3, 8), rat(1, 4), rat(1, 4)],
        )
        .unwrap();
        let values: Vec<Vec<WeightValue>> = serde_json::from_value(t.to_json()).unwrap();
        let flat: Vec<WeightValue> = values.into_iter().flatten().collect();
        assert_eq!(ProbTable::from_values("w", vec![2, 2], &flat).unwrap(), t);
    }
}
