//! Experimental protocols: the context protocol (four separate random
//! experiments), the spreadsheet protocol (one joint 4-tuple per trial) and
//! the time-series protocol (timestamped click streams).
//!
//! Seeds: context block `c` draws from stream `c` of the master seed, the
//! spreadsheet from [`STREAM_SPREADSHEET`]. A fixed-schedule time series in
//! context `c` draws its hidden variables from stream `c` as well, so its
//! outcomes coincide trial by trial with the context protocol.

use rand::Rng;
use rayon::prelude::*;

use crate::dataset::{
    ClickEvent, ClickStream, Dataset, DatasetKind, ProtocolInfo, Provenance, Records, Schedule,
    SpreadsheetRow, TrialRecord,
};
use crate::error::{Error, Result};
use crate::model::{units_to_ticks, Context, Label, Model, ModelKind, Outcome, Side};
use crate::rng::{
    stream_rng, STREAM_SPREADSHEET, STREAM_TIMESERIES_ALICE, STREAM_TIMESERIES_BOB,
    STREAM_TIMESERIES_HIDDEN,
};
use crate::stats::PairCounts;

fn provenance(model: &Model, master_seed: u64, protocol: ProtocolInfo) -> Provenance {
    Provenance {
        model: model.name().to_owned(),
        model_kind: model.kind(),
        master_seed,
        protocol,
        steps: Vec::new(),
    }
}

/// Runs `counts[c]` trials in each context `c` (canonical order), each block
/// an independent random experiment with its own stream. Trial indices run
/// consecutively across blocks.
pub fn run_context_protocol(model: &Model, counts: [u64; 4], master_seed: u64) -> Result<Dataset> {
    if let Some(ctx) = Context::ALL.into_iter().find(|c| counts[c.index()] == 0) {
        return Err(Error::Protocol(format!(
            "trial count for context {ctx} is zero"
        )));
    }
    let blocks: Vec<Vec<(Outcome, Outcome)>> = Context::ALL
        .par_iter()
        .map(|&ctx| {
            let mut rng = stream_rng(master_seed, ctx.index() as u64);
            (0..counts[ctx.index()])
                .map(|_| {
                    let t = model.sample_trial(ctx, &mut rng);
                    (t.a, t.b)
                })
                .collect()
        })
        .collect();
    let mut records = Vec::with_capacity(counts.iter().sum::<u64>() as usize);
    let mut index = 0;
    for (ctx, block) in Context::ALL.into_iter().zip(blocks) {
        for (a, b) in block {
            records.push(TrialRecord {
                trial_index: index,
                context: ctx,
                a,
                b,
            });
            index += 1;
        }
    }
    Ok(Dataset {
        kind: DatasetKind::Raw,
        records: Records::Pairs(records),
        provenance: provenance(model, master_seed, ProtocolInfo::Contexts { counts }),
        selection: None,
    })
}

/// Outcome counts of `n` trials in `ctx`, drawn from `rng` exactly as
/// [`run_context_protocol`] would, without materializing records.
pub fn sample_context_counts<R: Rng + ?Sized>(
    model: &Model,
    ctx: Context,
    n: u64,
    rng: &mut R,
) -> PairCounts {
    let mut counts = PairCounts::default();
    for _ in 0..n {
        let t = model.sample_trial(ctx, rng);
        counts.add(t.a, t.b);
    }
    counts
}

fn spreadsheet_refusal(kind: ModelKind) -> String {
    match kind {
        ModelKind::ContextualCorrelated => {
            "its instrument variables are drawn jointly from a different \
            distribution p_xy in each context, so no trial produces all four outcomes; the N×4 \
            spreadsheet cannot be filled, as in a real Bell test"
                .into()
        }
        ModelKind::ContextualProduct => "it describes four separate random experiments; build its \
            probabilistic coupling (coupled_joint) to obtain a joint 4-tuple model"
            .into(),
        ModelKind::TimeTag => "time-tag models are run through the time-series protocol".into(),
        _ => String::new(),
    }
}

/// Draws `n_rows` joint rows `(A_x, A_x', B_y, B_y')`.
pub fn run_spreadsheet_protocol(model: &Model, n_rows: u64, master_seed: u64) -> Result<Dataset> {
    if !model.kind().emits_joint_rows() {
        return Err(Error::UnsupportedKind {
            operation: "spreadsheet protocol",
            kind: model.kind(),
            reason: spreadsheet_refusal(model.kind()),
        });
    }
    if n_rows == 0 {
        return Err(Error::Protocol("spreadsheet row count is zero".into()));
    }
    let mut rng = stream_rng(master_seed, STREAM_SPREADSHEET);
    let mut rows = Vec::with_capacity(n_rows as usize);
    for row in 0..n_rows {
        let (_, values) = model.sample_row(&mut rng)?;
        rows.push(SpreadsheetRow { row, values });
    }
    Ok(Dataset {
        kind: DatasetKind::Spreadsheet,
        records: Records::Rows(rows),
        provenance: provenance(
            model,
            master_seed,
            ProtocolInfo::Spreadsheet { rows: n_rows },
        ),
        selection: None,
    })
}

/// `A_x B_y + A_x B_y' + A_x' B_y − A_x' B_y'` of one row, always ±2 for
/// ±1 rows.
pub fn per_row_chsh(row: &[Outcome; 4]) -> Result<i8> {
    if row.iter().any(|o| !o.is_click()) {
        return Err(Error::Undefined(
            "per-row CHSH needs four nonzero outcomes".into(),
        ));
    }
    let [ax, axp, by, byp] = row.map(Outcome::value);
    Ok(ax * by + ax * byp + axp * by - axp * byp)
}

/// Emits one pair of events per emission slot: emission `k` happens at
/// `k · spacing`, each side clicks after its outcome-dependent delay. Every
/// delay must be below `spacing / 2` so each click stays in its own slot.
pub fn run_timeseries_protocol(
    model: &Model,
    n_emissions: u64,
    schedule: Schedule,
    spacing: f64,
    master_seed: u64,
) -> Result<Dataset> {
    if model.kind() != ModelKind::TimeTag {
        return Err(Error::UnsupportedKind {
            operation: "time-series protocol",
            kind: model.kind(),
            reason: "only time-tag models carry click delays".into(),
        });
    }
    if n_emissions == 0 {
        return Err(Error::Protocol("empty schedule: zero emissions".into()));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Protocol(format!(
            "emission spacing must be positive, got {spacing}"
        )));
    }
    let spacing_ticks = units_to_ticks(spacing);
    let delays = model.delays().expect("time-tag models carry delays");
    let max_delay = delays
        .alice
        .iter()
        .chain(&delays.bob)
        .flatten()
        .copied()
        .max()
        .unwrap_or(0);
    if 2 * max_delay >= spacing_ticks {
        return Err(Error::Protocol(format!(
            "largest delay {} is not below half the emission spacing {spacing}",
            crate::model::ticks_to_units(max_delay)
        )));
    }
    let mut hidden = match schedule {
        Schedule::Fixed(ctx) => stream_rng(master_seed, ctx.index() as u64),
        Schedule::Random => stream_rng(master_seed, STREAM_TIMESERIES_HIDDEN),
    };
    let mut alice_rng = stream_rng(master_seed, STREAM_TIMESERIES_ALICE);
    let mut bob_rng = stream_rng(master_seed, STREAM_TIMESERIES_BOB);
    let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
        if rng.random::<f64>() < 0.5 {
            Label::Primary
        } else {
            Label::Alternate
        }
    };
    let mut alice = ClickStream {
        side: Side::Alice,
        events: Vec::with_capacity(n_emissions as usize),
    };
    let mut bob = ClickStream {
        side: Side::Bob,
        events: Vec::with_capacity(n_emissions as usize),
    };
    let a_table = model.alice_table();
    let b_table = model.bob_table();
    for k in 0..n_emissions {
        let ctx = match schedule {
            Schedule::Fixed(ctx) => ctx,
            Schedule::Random => Context::new(pick(&mut alice_rng), pick(&mut bob_rng)),
        };
        let t = model.sample_trial(ctx, &mut hidden);
        let h = t.hidden;
        let emit = k as i64 * spacing_ticks;
        let da = delays.alice[ctx.alice.index()]
            [h.lambda1 * a_table.instrument_sizes[ctx.alice.index()] + h.instr_a];
        let db = delays.bob[ctx.bob.index()]
            [h.lambda2 * b_table.instrument_sizes[ctx.bob.index()] + h.instr_b];
        alice.events.push(ClickEvent {
            ticks: emit + da,
            label: ctx.alice,
            sign: t.a,
        });
        bob.events.push(ClickEvent {
            ticks: emit + db,
            label: ctx.bob,
            sign: t.b,
        });
    }
    Ok(Dataset {
        kind: DatasetKind::Streams,
        records: Records::Streams { alice, bob },
        provenance: provenance(
            model,
            master_seed,
            ProtocolInfo::TimeSeries {
                emissions: n_emissions,
                spacing,
                schedule,
            },
        ),
        selection: None,
    })
}
