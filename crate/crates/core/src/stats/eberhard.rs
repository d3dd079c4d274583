//! Eberhard's inequality for raw data with undetected outcomes:
//!
//! `J = P_xy(++) − P_xy'(+o) − P_x'y(o+) − P_x'y'(++) ≤ 0`
//!
//! where `o` is any result other than `+` (a `−` or no click) and each
//! probability is normalized by its context's trial count.

use num_traits::Zero;

use super::{CorrelationTable, PairCounts, TableSource};
use crate::error::{Error, Result};
use crate::exact::PairDist;
use crate::model::{Context, Outcome};
use crate::prob::Prob;

const NOT_PLUS: [Outcome; 2] = [Outcome::Minus, Outcome::Zero];

fn count(c: &PairCounts, a: &[Outcome], b: &[Outcome]) -> u64 {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| c.get(x, y)))
        .sum()
}

/// `J` from per-context outcome counts including zeros.
pub fn eberhard_j_counts(counts: &[PairCounts; 4]) -> Result<f64> {
    if let Some(ctx) = Context::ALL
        .into_iter()
        .find(|c| counts[c.index()].total() == 0)
    {
        return Err(Error::Undefined(format!(
            "Eberhard J: context {ctx} has no trials"
        )));
    }
    let p = |ctx: Context, a: &[Outcome], b: &[Outcome]| {
        let c = &counts[ctx.index()];
        count(c, a, b) as f64 / c.total() as f64
    };
    let plus = [Outcome::Plus];
    Ok(p(Context::XY, &plus, &plus)
        - p(Context::XYP, &plus, &NOT_PLUS)
        - p(Context::XPY, &NOT_PLUS, &plus)
        - p(Context::XPYP, &plus, &plus))
}

/// `J` of a raw table. Post-selected tables have lost the `o` events, so
/// they are rejected.
pub fn eberhard_j(table: &CorrelationTable) -> Result<f64> {
    match table.source {
        TableSource::Raw | TableSource::Spreadsheet => {}
        TableSource::Final | TableSource::ExactFinal => return Err(Error::Undefined(
            "Eberhard J needs raw counts with undetected outcomes; post-selected data discard them"
                .into(),
        )),
        TableSource::ExactRaw => {
            return Err(Error::Undefined(
                "exact tables carry no counts; use eberhard_j_exact on the pair distributions"
                    .into(),
            ))
        }
    }
    let counts = table
        .counts()
        .ok_or_else(|| Error::Undefined("Eberhard J needs outcome counts".into()))?;
    eberhard_j_counts(&counts)
}

/// Exact `J` from the raw context distributions.
pub fn eberhard_j_exact(dists: &[PairDist; 4]) -> Prob {
    let p = |ctx: Context, a: &[Outcome], b: &[Outcome]| -> Prob {
        let d = &dists[ctx.index()];
        let mut acc = Prob::zero();
        for &x in a {
            for &y in b {
                acc += d.prob(x, y);
            }
        }
        acc
    };
    let plus = [Outcome::Plus];
    p(Context::XY, &plus, &plus)
        - p(Context::XYP, &plus, &NOT_PLUS)
        - p(Context::XPY, &NOT_PLUS, &plus)
        - p(Context::XPYP, &plus, &plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::rat;

    #[test]
    fn plus_plus_everywhere_gives_zero() {
        let mut c = PairCounts::default();
        c.add(Outcome::Plus, Outcome::Plus);
        // P_xy(++) = 1, P_x'y'(++) = 1, cross terms 0.
        assert_eq!(eberhard_j_counts(&[c; 4]).unwrap(), 0.0);
    }

    #[test]
    fn exact_matches_counts_on_a_table() {
        let mut d = PairDist::zero();
        d.cells[2][2] = rat(1, 2);
        d.cells[2][1] = rat(1, 4);
        d.cells[1][2] = rat(1, 4);
        let mut c = PairCounts::default();
        c.cells[2][2] = 2;
        c.cells[2][1] = 1;
        c.cells[1][2] = 1;
        let dists = [d.clone(), d.clone(), d.clone(), d];
        let exact = eberhard_j_exact(&dists);
        assert_eq!(exact, rat(-1, 2));
        assert_eq!(eberhard_j_counts(&[c; 4]).unwrap(), -0.5);
    }
}
