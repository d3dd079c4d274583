//! Marginal consistency across remote settings.

use serde::Serialize;

use super::{CorrelationTable, TableSource};
use crate::error::{Error, Result};
use crate::model::Context;

/// Difference of one party's marginal between the two remote settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalingDelta {
    pub name: &'static str,
    pub delta: f64,
    pub se: f64,
    /// `delta / se`; `None` when `se` is zero.
    pub z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalingReport {
    pub source: TableSource,
    /// `A(x), A(x'), B(y), B(y')`.
    pub deltas: [SignalingDelta; 4],
}

impl SignalingReport {
    pub fn max_abs(&self) -> f64 {
        self.deltas
            .iter()
            .map(|d| d.delta.abs())
            .fold(0.0, f64::max)
    }
}

/// Deltas of one table:
/// `A(x) = ⟨A⟩_xy − ⟨A⟩_xy'`, `A(x') = ⟨A⟩_x'y − ⟨A⟩_x'y'`,
/// `B(y) = ⟨B⟩_xy − ⟨B⟩_x'y`, `B(y') = ⟨B⟩_xy' − ⟨B⟩_x'y'`.
pub fn signaling_report(table: &CorrelationTable) -> Result<SignalingReport> {
    let pair = |name, c1: Context, c2: Context, alice: bool| -> Result<SignalingDelta> {
        let (e1, e2) = (table.get(c1)?, table.get(c2)?);
        let (m1, s1, m2, s2) = if alice {
            (
                e1.marginal_a,
                e1.se_marginal_a,
                e2.marginal_a,
                e2.se_marginal_a,
            )
        } else {
            (
                e1.marginal_b,
                e1.se_marginal_b,
                e2.marginal_b,
                e2.se_marginal_b,
            )
        };
        let delta = m1 - m2;
        let se = (s1 * s1 + s2 * s2).sqrt();
        Ok(SignalingDelta {
            name,
            delta,
            se,
            z: (se > 0.0).then(|| delta / se),
        })
    };
    Ok(SignalingReport {
        source: table.source,
        deltas: [
            pair("A(x)", Context::XY, Context::XYP, true)?,
            pair("A(x')", Context::XPY, Context::XPYP, true)?,
            pair("B(y)", Context::XY, Context::XPY, false)?,
            pair("B(y')", Context::XYP, Context::XPYP, false)?,
        ],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoSignalingReport {
    pub post_selected: SignalingReport,
    pub raw: SignalingReport,
}

/// Deltas of the post-selected and the raw table side by side.
pub fn nosignaling_deltas(
    final_table: &CorrelationTable,
    raw_table: &CorrelationTable,
) -> Result<NoSignalingReport> {
    if !matches!(
        final_table.source,
        TableSource::Final | TableSource::ExactFinal
    ) {
        return Err(Error::Undefined(format!(
            "expected a post-selected table, got {:?}",
            final_table.source
        )));
    }
    if !matches!(raw_table.source, TableSource::Raw | TableSource::ExactRaw) {
        return Err(Error::Undefined(format!(
            "expected a raw table, got {:?}",
            raw_table.source
        )));
    }
    Ok(NoSignalingReport {
        post_selected: signaling_report(final_table)?,
        raw: signaling_report(raw_table)?,
    })
}
