//! Estimators and test statistics.

mod audit;
mod cbd;
mod chsh;
mod eberhard;
mod signaling;
mod violation;

pub use audit::{larsson_gill_audit, AuditReport};
pub use cbd::{cbd_analysis, cbd_exact, CbdReport, ExactCbd};
pub use chsh::{
    chsh_exact, chsh_from_correlations, chsh_s, chsh_with_signs, ChshValue, ExactChsh,
    CANONICAL_SIGNS, ODD_SIGN_PATTERNS,
};
pub use eberhard::{eberhard_j, eberhard_j_counts, eberhard_j_exact};
pub use signaling::{
    nosignaling_deltas, signaling_report, NoSignalingReport, SignalingDelta, SignalingReport,
};
pub use violation::{
    violation_frequency, wilson_interval, ReplicationProtocol, ViolationFrequency, WilsonInterval,
};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetKind};
use crate::error::{Error, Result};
use crate::model::{Context, Outcome};

/// Counts of `(a, b)` indexed by [`Outcome::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub cells: [[u64; 3]; 3],
}

impl PairCounts {
    pub fn add(&mut self, a: Outcome, b: Outcome) {
        self.cells[a.index()][b.index()] += 1;
    }

    pub fn get(&self, a: Outcome, b: Outcome) -> u64 {
        self.cells[a.index()][b.index()]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    fn weighted(&self, f: impl Fn(i64, i64) -> i64) -> i64 {
        let mut acc = 0;
        for a in Outcome::ALL {
            for b in Outcome::ALL {
                acc += f(a.value() as i64, b.value() as i64) * self.get(a, b) as i64;
            }
        }
        acc
    }

    /// `Σ a·b` over all records.
    pub fn sum_ab(&self) -> i64 {
        self.weighted(|a, b| a * b)
    }

    /// Same counts restricted to records with both outcomes nonzero.
    pub fn post_selected(&self) -> PairCounts {
        let mut out = PairCounts::default();
        for a in [Outcome::Minus, Outcome::Plus] {
            for b in [Outcome::Minus, Outcome::Plus] {
                out.cells[a.index()][b.index()] = self.get(a, b);
            }
        }
        out
    }
}

/// Where a correlation table came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableSource {
    /// Context-protocol records, undetected outcomes counted as 0.
    Raw,
    /// Post-selected records.
    Final,
    /// Every context read off the same spreadsheet rows.
    Spreadsheet,
    /// Exact enumeration, zeros counted.
    ExactRaw,
    /// Exact enumeration conditioned on coincidence.
    ExactFinal,
}

impl TableSource {
    pub fn is_exact(self) -> bool {
        matches!(self, TableSource::ExactRaw | TableSource::ExactFinal)
    }
}

/// Estimates for one context. Standard errors are plug-in
/// `sqrt(var / n)` and zero for exact tables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextEstimate {
    /// Record count; `None` for exact values.
    pub n: Option<u64>,
    /// Coincidence probability for exact post-selected tables, else 1.
    pub weight: f64,
    pub correlation: f64,
    pub se_correlation: f64,
    pub marginal_a: f64,
    pub se_marginal_a: f64,
    pub marginal_b: f64,
    pub se_marginal_b: f64,
    #[serde(skip)]
    pub counts: Option<PairCounts>,
}

impl ContextEstimate {
    pub fn exact(correlation: f64, marginal_a: f64, marginal_b: f64, weight: f64) -> Self {
        ContextEstimate {
            n: None,
            weight,
            correlation,
            se_correlation: 0.0,
            marginal_a,
            se_marginal_a: 0.0,
            marginal_b,
            se_marginal_b: 0.0,
            counts: None,
        }
    }

    /// `None` when there are no records.
    pub fn from_counts(counts: &PairCounts) -> Option<Self> {
        let n = counts.total();
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        let mean_se = |sum: i64, sum_sq: i64| {
            let m = sum as f64 / nf;
            let var = (sum_sq as f64 / nf - m * m).max(0.0);
            (m, (var / nf).sqrt())
        };
        let (e, se_e) = mean_se(counts.sum_ab(), counts.weighted(|a, b| a * a * b * b));
        let (a, se_a) = mean_se(counts.weighted(|a, _| a), counts.weighted(|a, _| a * a));
        let (b, se_b) = mean_se(counts.weighted(|_, b| b), counts.weighted(|_, b| b * b));
        Some(ContextEstimate {
            n: Some(n),
            weight: 1.0,
            correlation: e,
            se_correlation: se_e,
            marginal_a: a,
            se_marginal_a: se_a,
            marginal_b: b,
            se_marginal_b: se_b,
            counts: Some(*counts),
        })
    }
}

/// Per-context estimates in canonical order; `None` marks a context with
/// no records (or zero coincidence probability).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub source: TableSource,
    pub entries: [Option<ContextEstimate>; 4],
}

impl CorrelationTable {
    pub fn from_counts(source: TableSource, counts: &[PairCounts; 4]) -> Self {
        CorrelationTable {
            source,
            entries: counts.map(|c| ContextEstimate::from_counts(&c)),
        }
    }

    pub fn get(&self, ctx: Context) -> Result<&ContextEstimate> {
        self.entries[ctx.index()]
            .as_ref()
            .ok_or_else(|| Error::Undefined(format!("context {ctx} has no records")))
    }

    pub fn correlations(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for ctx in Context::ALL {
            out[ctx.index()] = self.get(ctx)?.correlation;
        }
        Ok(out)
    }

    /// Outcome counts of every context, when the table was built from data.
    pub fn counts(&self) -> Option<[PairCounts; 4]> {
        let mut out = [PairCounts::default(); 4];
        for (slot, e) in out.iter_mut().zip(&self.entries) {
            *slot = e
                .as_ref()
                .map_or(Some(PairCounts::default()), |e| e.counts)?;
        }
        Some(out)
    }
}

/// Outcome counts per context of a pair or spreadsheet dataset.
pub fn dataset_counts(dataset: &Dataset) -> Result<[PairCounts; 4]> {
    let mut counts = [PairCounts::default(); 4];
    match dataset.kind {
        DatasetKind::Raw | DatasetKind::Final => {
            for r in dataset.pairs()? {
                counts[r.context.index()].add(r.a, r.b);
            }
        }
        DatasetKind::Spreadsheet => {
            for r in dataset.rows()? {
                for ctx in Context::ALL {
                    counts[ctx.index()]
                        .add(r.values[ctx.alice.index()], r.values[2 + ctx.bob.index()]);
                }
            }
        }
        DatasetKind::Streams => {
            return Err(Error::Dataset(
                "streams must be matched into trial records before estimation".into(),
            ))
        }
    }
    Ok(counts)
}

/// Sample correlations, marginals and their standard errors per context.
pub fn estimate_correlations(dataset: &Dataset) -> Result<CorrelationTable> {
    let counts = dataset_counts(dataset)?;
    let source = match dataset.kind {
        DatasetKind::Raw => TableSource::Raw,
        DatasetKind::Final => TableSource::Final,
        _ => TableSource::Spreadsheet,
    };
    Ok(CorrelationTable::from_counts(source, &counts))
}
