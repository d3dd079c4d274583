//! CHSH combinations of the four context correlations.
//!
//! Three values are reported:
//!
//! * `grouped`: `|E_xy − E_xy'| + |E_x'y + E_x'y'|`, the two-absolute-value
//!   form. It covers only four of the eight sign patterns.
//! * `canonical`: `E_xy + E_xy' + E_x'y − E_x'y'`.
//! * `max`: the maximum over all eight patterns with an odd number of minus
//!   signs, i.e. `max |±E_xy ± E_xy' ± E_x'y ± E_x'y'|`.
//!
//! Every local model satisfies `max ≤ 2`.

use num_traits::Signed;
use serde::Serialize;

use super::CorrelationTable;
use crate::error::Result;
use crate::prob::Prob;

/// Signs with an odd number of `−1`, in lexicographic order.
pub const ODD_SIGN_PATTERNS: [[i8; 4]; 8] = [
    [1, 1, 1, -1],
    [1, 1, -1, 1],
    [1, -1, 1, 1],
    [1, -1, -1, -1],
    [-1, 1, 1, 1],
    [-1, 1, -1, -1],
    [-1, -1, 1, -1],
    [-1, -1, -1, 1],
];

pub const CANONICAL_SIGNS: [i8; 4] = [1, 1, 1, -1];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshValue {
    pub grouped: f64,
    pub canonical: f64,
    pub max: f64,
    /// Sign pattern attaining `max`.
    pub argmax: [i8; 4],
    /// Standard error of `max`, treating contexts as independent.
    pub se: f64,
}

pub fn chsh_with_signs(e: &[f64; 4], signs: [i8; 4]) -> f64 {
    e.iter().zip(signs).map(|(v, s)| v * s as f64).sum()
}

pub fn chsh_from_correlations(e: [f64; 4]) -> ChshValue {
    let grouped = (e[0] - e[1]).abs() + (e[2] + e[3]).abs();
    let canonical = chsh_with_signs(&e, CANONICAL_SIGNS);
    let (max, argmax) = ODD_SIGN_PATTERNS
        .iter()
        .map(|&s| (chsh_with_signs(&e, s), s))
        .fold((f64::NEG_INFINITY, CANONICAL_SIGNS), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        });
    ChshValue {
        grouped,
        canonical,
        max,
        argmax,
        se: 0.0,
    }
}

/// CHSH values of a table; an error if any context is undefined.
pub fn chsh_s(table: &CorrelationTable) -> Result<ChshValue> {
    let e = table.correlations()?;
    let mut value = chsh_from_correlations(e);
    let var: f64 = table
        .entries
        .iter()
        .flatten()
        .map(|c| c.se_correlation * c.se_correlation)
        .sum();
    value.se = var.sqrt();
    Ok(value)
}

/// Exact CHSH values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactChsh {
    pub grouped: Prob,
    pub canonical: Prob,
    pub max: Prob,
}

pub fn chsh_exact(e: &[Prob; 4]) -> ExactChsh {
    let signed = |signs: [i8; 4]| -> Prob {
        e.iter()
            .zip(signs)
            .map(|(v, s)| if s > 0 { v.clone() } else { -v.clone() })
            .sum()
    };
    let grouped = (&e[0] - &e[1]).abs() + (&e[2] + &e[3]).abs();
    let max = ODD_SIGN_PATTERNS
        .iter()
        .map(|&s| signed(s))
        .max()
        .expect("eight patterns");
    ExactChsh {
        grouped,
        canonical: signed(CANONICAL_SIGNS),
        max,
    }
}
