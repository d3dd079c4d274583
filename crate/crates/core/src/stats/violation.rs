//! Finite-sample violation frequency: how often the estimated canonical CHSH
//! value of an `n`-per-context experiment reaches or exceeds 2.
//!
//! Each replication's `S` is formed exactly: with equal trial counts,
//! `n · S = Σ_c s_c Σ a·b` is an integer, so `S ≥ 2` and `S > 2` are integer
//! comparisons. Replication `r` uses master seed `derive_seed(master, r)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chsh::CANONICAL_SIGNS;
use crate::error::{Error, Result};
use crate::model::{Context, Model};
use crate::protocols::sample_context_counts;
use crate::rng::{derive_seed, stream_rng, STREAM_SPREADSHEET};

pub const MIN_REPLICATIONS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicationProtocol {
    /// `n` independent trials per context.
    Contexts,
    /// `n` joint rows, all four contexts read off each row.
    Spreadsheet,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WilsonInterval {
    pub lower: f64,
    pub upper: f64,
    /// Half-width at `z = 1`, used as the standard error of the fraction.
    pub se: f64,
}

/// Wilson score interval for `k` successes in `n` at `z` (and the `z = 1`
/// half-width).
pub fn wilson_interval(k: u64, n: u64, z: f64) -> WilsonInterval {
    let half = |z: f64| {
        let (nf, p) = (n as f64, k as f64 / n as f64);
        let denom = 1.0 + z * z / nf;
        let center = (p + z * z / (2.0 * nf)) / denom;
        let h = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
        (center, h)
    };
    let (center, h) = half(z);
    WilsonInterval {
        lower: (center - h).max(0.0),
        upper: (center + h).min(1.0),
        se: half(1.0).1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationFrequency {
    pub protocol: ReplicationProtocol,
    pub n_per_context: u64,
    pub replications: u64,
    pub master_seed: u64,
    pub count_ge: u64,
    pub count_gt: u64,
    pub fraction_ge: f64,
    pub fraction_gt: f64,
    /// 95% Wilson intervals.
    pub ci_ge: WilsonInterval,
    pub ci_gt: WilsonInterval,
    pub s_mean: f64,
    pub s_min: f64,
    pub s_max: f64,
    #[serde(skip)]
    pub s_values: Vec<f64>,
}

/// `n · S` of one replication.
fn scaled_s(model: &Model, protocol: ReplicationProtocol, n: u64, seed: u64) -> Result<i64> {
    let sums: [i64; 4] = match protocol {
        ReplicationProtocol::Contexts => Context::ALL.map(|ctx| {
            let mut rng = stream_rng(seed, ctx.index() as u64);
            sample_context_counts(model, ctx, n, &mut rng).sum_ab()
        }),
        ReplicationProtocol::Spreadsheet => {
            let mut rng = stream_rng(seed, STREAM_SPREADSHEET);
            let mut sums = [0i64; 4];
            for _ in 0..n {
                let (_, row) = model.sample_row(&mut rng)?;
                for ctx in Context::ALL {
                    sums[ctx.index()] +=
                        (row[ctx.alice.index()].value() * row[2 + ctx.bob.index()].value()) as i64;
                }
            }
            sums
        }
    };
    Ok(sums
        .iter()
        .zip(CANONICAL_SIGNS)
        .map(|(s, sign)| s * sign as i64)
        .sum())
}

pub fn violation_frequency(
    model: &Model,
    protocol: ReplicationProtocol,
    n_per_context: u64,
    replications: u64,
    master_seed: u64,
) -> Result<ViolationFrequency> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::Protocol(format!(
            "violation frequency needs at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    if n_per_context == 0 {
        return Err(Error::Protocol(
            "trials per context must be positive".into(),
        ));
    }
    if protocol == ReplicationProtocol::Spreadsheet && !model.kind().emits_joint_rows() {
        return Err(Error::UnsupportedKind {
            operation: "spreadsheet replications",
            kind: model.kind(),
            reason: "the model cannot output all four values in one trial".into(),
        });
    }
    let scaled: Vec<i64> = (0..replications)
        .into_par_iter()
        .map(|r| scaled_s(model, protocol, n_per_context, derive_seed(master_seed, r)))
        .collect::<Result<_>>()?;
    let two_n = 2 * n_per_context as i64;
    let count_ge = scaled.iter().filter(|&&s| s >= two_n).count() as u64;
    let count_gt = scaled.iter().filter(|&&s| s > two_n).count() as u64;
    let s_values: Vec<f64> = scaled
        .iter()
        .map(|&s| s as f64 / n_per_context as f64)
        .collect();
    let rf = replications as f64;
    Ok(ViolationFrequency {
        protocol,
        n_per_context,
        replications,
        master_seed,
        count_ge,
        count_gt,
        fraction_ge: count_ge as f64 / rf,
        fraction_gt: count_gt as f64 / rf,
        ci_ge: wilson_interval(count_ge, replications, 1.96),
        ci_gt: wilson_interval(count_gt, replications, 1.96),
        s_mean: s_values.iter().sum::<f64>() / rf,
        s_min: s_values.iter().copied().fold(f64::INFINITY, f64::min),
        s_max: s_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        s_values,
    })
}
