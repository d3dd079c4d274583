//! Turning click streams into trial records: coincidence matching with a
//! window `W`, post-selection, window scans, and the exact windowed
//! enumeration that serves as their oracle.
//!
//! Matching rule. Each click belongs to the emission slot whose anchor
//! `k · spacing` is nearest. Per slot, if both sides clicked and
//! `|t_A − t_B| ≤ W / 2`, the slot yields the coincidence `(a, b)`.
//! Otherwise the earlier click opens a window that closes empty and is
//! recorded with `0` for the missing partner; the later click falls in no
//! open window of this slot and is dropped. Equal timestamps always pair.
//! Comparisons are exact in integer ticks.

use std::path::Path;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{
    ClickEvent, Dataset, DatasetKind, ProtocolInfo, Records, SelectionSummary, Step, TrialRecord,
};
use crate::error::{Error, Result};
use crate::exact::{ExactCorrelations, PairDist};
use crate::model::{units_to_ticks, Context, Delays, Instruments, Model, ModelKind, Outcome};
use crate::prob::{Prob, ProbTable};
use crate::stats::{chsh_s, estimate_correlations, ChshValue, CorrelationTable};

fn window_ticks(window: f64) -> Result<i64> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::Protocol(format!(
            "coincidence window must be positive, got {window}"
        )));
    }
    Ok(units_to_ticks(window))
}

/// Outcome pair of one slot under the matching rule.
fn pair_in_window(ta: i64, a: Outcome, tb: i64, b: Outcome, w_ticks: i64) -> (Outcome, Outcome) {
    let gap = (ta - tb).unsigned_abs() as u128;
    if 2 * gap <= w_ticks as u128 {
        (a, b)
    } else if ta < tb {
        (a, Outcome::Zero)
    } else {
        (Outcome::Zero, b)
    }
}

/// Slots `0..emissions` with the click nearest each anchor (ties: earlier).
fn slot_events(
    events: &[ClickEvent],
    emissions: u64,
    spacing_ticks: i64,
) -> Result<Vec<Option<ClickEvent>>> {
    let mut slots: Vec<Option<ClickEvent>> = vec![None; emissions as usize];
    for e in events {
        let k = (e.ticks + spacing_ticks / 2).div_euclid(spacing_ticks);
        if k < 0 || k as u64 >= emissions {
            return Err(Error::Dataset(format!(
                "click at {} lies outside the {emissions} emission slots",
                crate::dataset::format_ticks(e.ticks)
            )));
        }
        let anchor = k * spacing_ticks;
        let slot = &mut slots[k as usize];
        let better = match slot {
            None => true,
            Some(cur) => {
                let (d_new, d_cur) = ((e.ticks - anchor).abs(), (cur.ticks - anchor).abs());
                d_new < d_cur || (d_new == d_cur && e.ticks < cur.ticks)
            }
        };
        if better {
            *slot = Some(*e);
        }
    }
    Ok(slots)
}

/// Converts a streams dataset into raw trial records, one per observed
/// emission slot. Slots where a side recorded no click at all carry no
/// setting for that side and are counted as unobserved.
pub fn match_coincidences(dataset: &Dataset, window: f64) -> Result<Dataset> {
    let w_ticks = window_ticks(window)?;
    let (alice, bob) = dataset.streams()?;
    let ProtocolInfo::TimeSeries {
        emissions, spacing, ..
    } = dataset.provenance.protocol
    else {
        return Err(Error::Dataset(
            "streams dataset lacks time-series provenance".into(),
        ));
    };
    let spacing_ticks = units_to_ticks(spacing);
    let sa = slot_events(&alice.events, emissions, spacing_ticks)?;
    let sb = slot_events(&bob.events, emissions, spacing_ticks)?;
    let mut records = Vec::with_capacity(emissions as usize);
    let mut unobserved = 0;
    for (k, (ea, eb)) in sa.iter().zip(&sb).enumerate() {
        let (Some(ea), Some(eb)) = (ea, eb) else {
            unobserved += 1;
            continue;
        };
        let (a, b) = pair_in_window(ea.ticks, ea.sign, eb.ticks, eb.sign, w_ticks);
        records.push(TrialRecord {
            trial_index: k as u64,
            context: Context::new(ea.label, eb.label),
            a,
            b,
        });
    }
    let mut provenance = dataset.provenance.clone();
    provenance.steps.push(Step::Match {
        window,
        unobserved_epochs: unobserved,
    });
    Ok(Dataset {
        kind: DatasetKind::Raw,
        records: Records::Pairs(records),
        provenance,
        selection: None,
    })
}

/// Keeps only records with both outcomes nonzero.
pub fn post_select(dataset: &Dataset) -> Result<Dataset> {
    if dataset.kind != DatasetKind::Raw {
        return Err(Error::Dataset(format!(
            "post-selection needs a raw dataset, got {:?}",
            dataset.kind
        )));
    }
    let mut summary = SelectionSummary::default();
    let kept: Vec<TrialRecord> = dataset
        .pairs()?
        .iter()
        .filter(|r| {
            let keep = r.a.is_click() && r.b.is_click();
            let slot = if keep {
                &mut summary.retained
            } else {
                &mut summary.discarded
            };
            slot[r.context.index()] += 1;
            keep
        })
        .copied()
        .collect();
    let mut provenance = dataset.provenance.clone();
    provenance.steps.push(Step::PostSelect);
    Ok(Dataset {
        kind: DatasetKind::Final,
        records: Records::Pairs(kept),
        provenance,
        selection: Some(summary),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub window: f64,
    /// Coincidences over observed emission slots.
    pub retained_fraction: f64,
    pub table: CorrelationTable,
    /// `None` when some context has no coincidences.
    pub chsh: Option<ChshValue>,
}

/// Matches and post-selects the same streams at each window.
pub fn window_scan(dataset: &Dataset, windows: &[f64]) -> Result<Vec<ScanRow>> {
    if windows.is_empty() {
        return Err(Error::Protocol("window list is empty".into()));
    }
    windows
        .par_iter()
        .map(|&w| {
            let raw = match_coincidences(dataset, w)?;
            let observed = raw.records.len();
            let fin = post_select(&raw)?;
            let table = estimate_correlations(&fin)?;
            let chsh = chsh_s(&table).ok();
            let retained_fraction = if observed == 0 {
                0.0
            } else {
                fin.records.len() as f64 / observed as f64
            };
            Ok(ScanRow {
                window: w,
                retained_fraction,
                table,
                chsh,
            })
        })
        .collect()
}

/// CSV columns `window,retained_fraction,E_xy,E_xyp,E_xpy,E_xpyp,S`, with
/// `S` the maximum over the eight CHSH sign patterns; undefined cells empty.
pub fn write_scan_csv(rows: &[ScanRow], path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record([
        "window",
        "retained_fraction",
        "E_xy",
        "E_xyp",
        "E_xpy",
        "E_xpyp",
        "S",
    ])?;
    for r in rows {
        let mut rec = vec![r.window.to_string(), r.retained_fraction.to_string()];
        for e in &r.table.entries {
            rec.push(
                e.as_ref()
                    .map(|e| e.correlation.to_string())
                    .unwrap_or_default(),
            );
        }
        rec.push(
            r.chsh
                .as_ref()
                .map(|c| c.max.to_string())
                .unwrap_or_default(),
        );
        out.write_record(rec)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

type TimeTagParts<'a> = (&'a Delays, &'a [ProbTable; 2], &'a [ProbTable; 2]);

fn require_timetag<'a>(model: &'a Model, operation: &'static str) -> Result<TimeTagParts<'a>> {
    let (Some(delays), Instruments::PerSetting { alice, bob }) =
        (model.delays(), model.instruments())
    else {
        return Err(Error::UnsupportedKind {
            operation,
            kind: model.kind(),
            reason: "windowed enumeration needs a time-tag model".into(),
        });
    };
    debug_assert_eq!(model.kind(), ModelKind::TimeTag);
    Ok((delays, alice, bob))
}

/// Exact distribution of the matched `(a, b)` in one context at window `W`.
pub fn enumerate_windowed(model: &Model, ctx: Context, window: f64) -> Result<PairDist> {
    let w_ticks = window_ticks(window)?;
    let (delays, ia, ib) = require_timetag(model, "enumerate_windowed")?;
    let source = model.source();
    let (n1, n2) = (source.dims()[0], source.dims()[1]);
    let (la, lb) = (ctx.alice.index(), ctx.bob.index());
    let (ta, tb) = (&ia[la], &ib[lb]);
    let (sa, sb) = (ta.len(), tb.len());
    let mut dist = PairDist::zero();
    for l1 in 0..n1 {
        for l2 in 0..n2 {
            let p = source.get2(l1, l2);
            if p.is_zero() {
                continue;
            }
            for i in 0..sa {
                let pa = ta.flat(i);
                if pa.is_zero() {
                    continue;
                }
                let pa = p * pa;
                let (da, a) = (
                    delays.alice[la][l1 * sa + i],
                    model.outcome_a(ctx.alice, l1, i),
                );
                for j in 0..sb {
                    let pb = tb.flat(j);
                    if pb.is_zero() {
                        continue;
                    }
                    let (db, b) = (delays.bob[lb][l2 * sb + j], model.outcome_b(ctx.bob, l2, j));
                    let (ra, rb) = pair_in_window(da, a, db, b, w_ticks);
                    dist.cells[ra.index()][rb.index()] += &pa * pb;
                }
            }
        }
    }
    Ok(dist)
}

/// Exact raw and post-selected statistics of a time-tag model at window `W`.
pub fn exact_windowed(model: &Model, window: f64) -> Result<ExactCorrelations> {
    let mut dists: [PairDist; 4] = Default::default();
    for ctx in Context::ALL {
        dists[ctx.index()] = enumerate_windowed(model, ctx, window)?;
    }
    Ok(ExactCorrelations::from_dists(dists))
}

/// Mass of hidden-variable values that produce a coincidence in all four
/// contexts at window `W`.
pub fn all_context_coincidence_mass(model: &Model, window: f64) -> Result<Prob> {
    let w_ticks = window_ticks(window)?;
    let (delays, ia, ib) = require_timetag(model, "all_context_coincidence_mass")?;
    let source = model.source();
    let (n1, n2) = (source.dims()[0], source.dims()[1]);
    // Per λ: the delay pairs of each instrument combination with its weight.
    let side =
        |n: usize, tables: &[ProbTable; 2], d: &[Vec<i64>; 2]| -> Vec<Vec<([i64; 2], Prob)>> {
            (0..n)
                .map(|l| {
                    let mut out = Vec::new();
                    let (s0, s1) = (tables[0].len(), tables[1].len());
                    for i in 0..s0 {
                        for j in 0..s1 {
                            let w = tables[0].flat(i) * tables[1].flat(j);
                            if !w.is_zero() {
                                out.push(([d[0][l * s0 + i], d[1][l * s1 + j]], w));
                            }
                        }
                    }
                    out
                })
                .collect()
        };
    let alice = side(n1, ia, &delays.alice);
    let bob = side(n2, ib, &delays.bob);
    let mut mass = Prob::zero();
    for l1 in 0..n1 {
        for l2 in 0..n2 {
            let p = source.get2(l1, l2);
            if p.is_zero() {
                continue;
            }
            for (da, wa) in &alice[l1] {
                for (db, wb) in &bob[l2] {
                    let all = Context::ALL.iter().all(|c| {
                        let gap = (da[c.alice.index()] - db[c.bob.index()]).unsigned_abs() as u128;
                        2 * gap <= w_ticks as u128
                    });
                    if all {
                        mass += p * wa * wb;
                    }
                }
            }
        }
    }
    Ok(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ClickStream, Provenance, Schedule};
    use crate::model::{Label, Side};
    use crate::prob::rat;

    fn streams(a: Vec<(i64, Outcome)>, b: Vec<(i64, Outcome)>, emissions: u64) -> Dataset {
        let ev = |v: Vec<(i64, Outcome)>| {
            v.into_iter()
                .map(|(t, s)| ClickEvent {
                    ticks: t,
                    label: Label::Primary,
                    sign: s,
                })
                .collect()
        };
        Dataset {
            kind: DatasetKind::Streams,
            records: Records::Streams {
                alice: ClickStream {
                    side: Side::Alice,
                    events: ev(a),
                },
                bob: ClickStream {
                    side: Side::Bob,
                    events: ev(b),
                },
            },
            provenance: Provenance {
                model: "hand".into(),
                model_kind: ModelKind::TimeTag,
                master_seed: 0,
                protocol: ProtocolInfo::TimeSeries {
                    emissions,
                    spacing: 1.0,
                    schedule: Schedule::Fixed(Context::XY),
                },
                steps: vec![],
            },
            selection: None,
        }
    }

    const T: i64 = 1_000_000_000;

    #[test]
    fn matching_rule_on_hand_streams() {
        let ds = streams(
            vec![
                (0, Outcome::Plus),
                (T + T / 10, Outcome::Minus),
                (2 * T + T / 5, Outcome::Plus),
            ],
            vec![
                (0, Outcome::Minus),
                (T, Outcome::Plus),
                (2 * T, Outcome::Plus),
            ],
            3,
        );
        let raw = match_coincidences(&ds, 0.25).unwrap();
        let got: Vec<_> = raw.pairs().unwrap().iter().map(|r| (r.a, r.b)).collect();
        // slot 0 equal times pair; slot 1 gap 0.1 ≤ 0.125 pairs; slot 2 gap
        // 0.2 > 0.125, Bob is earlier.
        assert_eq!(
            got,
            vec![
                (Outcome::Plus, Outcome::Minus),
                (Outcome::Minus, Outcome::Plus),
                (Outcome::Zero, Outcome::Plus)
            ]
        );
        let fin = post_select(&raw).unwrap();
        assert_eq!(fin.selection.as_ref().unwrap().retained, [2, 0, 0, 0]);
        assert!(post_select(&fin).is_err());
    }

    #[test]
    fn half_window_boundary_is_inclusive() {
        let ds = streams(vec![(T / 4, Outcome::Plus)], vec![(0, Outcome::Plus)], 1);
        let raw = match_coincidences(&ds, 0.5).unwrap();
        assert_eq!(raw.pairs().unwrap()[0].a, Outcome::Plus);
        let raw = match_coincidences(&ds, 0.499_999_999).unwrap();
        let r = raw.pairs().unwrap()[0];
        assert_eq!((r.a, r.b), (Outcome::Zero, Outcome::Plus));
    }

    #[test]
    fn timetag_demo_windowed_values() {
        let m = crate::models::demo_model("demo_timetag").unwrap();
        let small = exact_windowed(&m, 0.1).unwrap();
        let e = small.post_correlations().unwrap();
        assert_eq!(e, [rat(7, 11), rat(1, 1), rat(7, 11), rat(-7, 11)]);
        let wide = exact_windowed(&m, 1.0).unwrap();
        let e = wide.post_correlations().unwrap();
        assert_eq!(e, [rat(4, 5), rat(1, 10), rat(4, 5), rat(1, 10)]);
        assert_eq!(all_context_coincidence_mass(&m, 0.1).unwrap(), rat(1, 10));
        assert_eq!(all_context_coincidence_mass(&m, 1.0).unwrap(), rat(1, 1));
    }
}
