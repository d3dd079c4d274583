//! Datasets and their on-disk form.
//!
//! Every dataset is one CSV file plus a `<stem>.provenance.json` sidecar:
//!
//! | kind          | CSV header                      |
//! |---------------|---------------------------------|
//! | `raw`/`final` | `trial_index,context,a,b`       |
//! | `spreadsheet` | `row,a_x,a_xp,b_y,b_yp`         |
//! | `streams`     | `side,timestamp,setting,sign`   |
//!
//! Context and setting tokens are `xy, xyp, xpy, xpyp` and `x, xp, y, yp`.
//! Timestamps are written with nine decimals and are exact integer ticks.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Context, Label, ModelKind, Outcome, Setting, Side, TICKS_PER_UNIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Context-protocol pairs, zeros included.
    Raw,
    /// Pairs with both outcomes nonzero.
    Final,
    Spreadsheet,
    Streams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub context: Context,
    pub a: Outcome,
    pub b: Outcome,
}

/// `(A_x, A_x', B_y, B_y')` for one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpreadsheetRow {
    pub row: u64,
    pub values: [Outcome; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClickEvent {
    pub ticks: i64,
    pub label: Label,
    pub sign: Outcome,
}

/// One side's time-ordered clicks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickStream {
    pub side: Side,
    pub events: Vec<ClickEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Records {
    Pairs(Vec<TrialRecord>),
    Rows(Vec<SpreadsheetRow>),
    Streams {
        alice: ClickStream,
        bob: ClickStream,
    },
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Pairs(v) => v.len(),
            Records::Rows(v) => v.len(),
            Records::Streams { alice, bob } => alice.events.len() + bob.events.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Setting schedule of the time-series protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// The same context at every emission.
    Fixed(Context),
    /// Each side picks its label uniformly and independently per emission.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum ProtocolInfo {
    Contexts {
        counts: [u64; 4],
    },
    Spreadsheet {
        rows: u64,
    },
    TimeSeries {
        emissions: u64,
        spacing: f64,
        schedule: Schedule,
    },
}

/// Processing steps applied after generation, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    Match { window: f64, unobserved_epochs: u64 },
    PostSelect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub model_kind: ModelKind,
    pub master_seed: u64,
    #[serde(flatten)]
    pub protocol: ProtocolInfo,
    #[serde(default)]
    pub steps: Vec<Step>,
}

/// Per-context counts of a post-selection.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub retained: [u64; 4],
    pub discarded: [u64; 4],
}

impl SelectionSummary {
    pub fn retained_total(&self) -> u64 {
        self.retained.iter().sum()
    }

    /// Contexts left with no records.
    pub fn empty_contexts(&self) -> Vec<Context> {
        Context::ALL
            .into_iter()
            .filter(|c| self.retained[c.index()] == 0)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub records: Records,
    pub provenance: Provenance,
    pub selection: Option<SelectionSummary>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    kind: DatasetKind,
    records: usize,
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selection: Option<SelectionSummary>,
}

impl Dataset {
    pub fn pairs(&self) -> Result<&[TrialRecord]> {
        match &self.records {
            Records::Pairs(v) => Ok(v),
            _ => Err(Error::Dataset(format!(
                "{:?} dataset has no trial pairs",
                self.kind
            ))),
        }
    }

    pub fn rows(&self) -> Result<&[SpreadsheetRow]> {
        match &self.records {
            Records::Rows(v) => Ok(v),
            _ => Err(Error::Dataset(format!(
                "{:?} dataset has no spreadsheet rows",
                self.kind
            ))),
        }
    }

    pub fn streams(&self) -> Result<(&ClickStream, &ClickStream)> {
        match &self.records {
            Records::Streams { alice, bob } => Ok((alice, bob)),
            _ => Err(Error::Dataset(format!(
                "{:?} dataset has no click streams",
                self.kind
            ))),
        }
    }

    /// Sidecar path for a CSV path: `run/raw.csv` → `run/raw.provenance.json`.
    pub fn sidecar_path(csv: &Path) -> PathBuf {
        csv.with_extension("provenance.json")
    }

    /// Writes the CSV and its sidecar.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut w = csv::Writer::from_path(csv_path)?;
        match &self.records {
            Records::Pairs(v) => {
                w.write_record(["trial_index", "context", "a", "b"])?;
                for r in v {
                    w.write_record([
                        r.trial_index.to_string(),
                        r.context.token().to_owned(),
                        r.a.to_string(),
                        r.b.to_string(),
                    ])?;
                }
            }
            Records::Rows(v) => {
                w.write_record(["row", "a_x", "a_xp", "b_y", "b_yp"])?;
                for r in v {
                    let mut rec = vec![r.row.to_string()];
                    rec.extend(r.values.iter().map(|o| o.to_string()));
                    w.write_record(rec)?;
                }
            }
            Records::Streams { alice, bob } => {
                w.write_record(["side", "timestamp", "setting", "sign"])?;
                for stream in [alice, bob] {
                    for e in &stream.events {
                        let setting = Setting {
                            side: stream.side,
                            label: e.label,
                        };
                        w.write_record([
                            side_token(stream.side).to_owned(),
                            format_ticks(e.ticks),
                            setting.token().to_owned(),
                            e.sign.to_string(),
                        ])?;
                    }
                }
            }
        }
        w.flush().map_err(|e| Error::io(csv_path, e))?;
        let sidecar = Sidecar {
            kind: self.kind,
            records: self.records.len(),
            provenance: self.provenance.clone(),
            selection: self.selection.clone(),
        };
        let path = Self::sidecar_path(csv_path);
        let text = serde_json::to_string_pretty(&sidecar)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Reads a CSV and its sidecar.
    pub fn read(csv_path: &Path) -> Result<Dataset> {
        let side_path = Self::sidecar_path(csv_path);
        let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
        let sidecar: Sidecar = crate::models::parse_json_at(&text, "provenance")?;
        let mut reader = csv::Reader::from_path(csv_path)?;
        let headers = reader.headers()?.clone();
        let expected: &[&str] = match sidecar.kind {
            DatasetKind::Raw | DatasetKind::Final => &["trial_index", "context", "a", "b"],
            DatasetKind::Spreadsheet => &["row", "a_x", "a_xp", "b_y", "b_yp"],
            DatasetKind::Streams => &["side", "timestamp", "setting", "sign"],
        };
        if headers.iter().ne(expected.iter().copied()) {
            return Err(Error::Dataset(format!(
                "{}: header {:?}, expected {:?}",
                csv_path.display(),
                headers.iter().collect::<Vec<_>>(),
                expected
            )));
        }
        let where_ = |line: u64, field: &str, msg: String| {
            Error::Dataset(format!("{}:{line}: `{field}`: {msg}", csv_path.display()))
        };
        let mut pairs = Vec::new();
        let mut rows = Vec::new();
        let mut alice = ClickStream {
            side: Side::Alice,
            events: Vec::new(),
        };
        let mut bob = ClickStream {
            side: Side::Bob,
            events: Vec::new(),
        };
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let outcome = |k: usize| -> Result<Outcome> {
                let v: i8 = field(k)
                    .trim()
                    .parse()
                    .map_err(|_| where_(line, expected[k], "not an integer".into()))?;
                Outcome::try_from(v).map_err(|m| where_(line, expected[k], m))
            };
            let int = |k: usize| -> Result<u64> {
                field(k)
                    .trim()
                    .parse()
                    .map_err(|_| where_(line, expected[k], "not a nonnegative integer".into()))
            };
            match sidecar.kind {
                DatasetKind::Raw | DatasetKind::Final => pairs.push(TrialRecord {
                    trial_index: int(0)?,
                    context: field(1)
                        .parse()
                        .map_err(|e: Error| where_(line, "context", e.to_string()))?,
                    a: outcome(2)?,
                    b: outcome(3)?,
                }),
                DatasetKind::Spreadsheet => rows.push(SpreadsheetRow {
                    row: int(0)?,
                    values: [outcome(1)?, outcome(2)?, outcome(3)?, outcome(4)?],
                }),
                DatasetKind::Streams => {
                    let setting: Setting = field(2)
                        .parse()
                        .map_err(|e: Error| where_(line, "setting", e.to_string()))?;
                    let ticks = parse_ticks(field(1)).ok_or_else(|| {
                        where_(line, "timestamp", "expected a nonnegative decimal".into())
                    })?;
                    let sign = outcome(3)?;
                    if !sign.is_click() {
                        return Err(where_(line, "sign", "clicks carry sign ±1".into()));
                    }
                    let side = match field(0) {
                        "alice" => Side::Alice,
                        "bob" => Side::Bob,
                        other => {
                            return Err(where_(line, "side", format!("unknown side `{other}`")))
                        }
                    };
                    if setting.side != side {
                        return Err(where_(
                            line,
                            "setting",
                            format!("setting {setting} is not on side {}", side_token(side)),
                        ));
                    }
                    let stream = if side == Side::Alice {
                        &mut alice
                    } else {
                        &mut bob
                    };
                    stream.events.push(ClickEvent {
                        ticks,
                        label: setting.label,
                        sign,
                    });
                }
            }
        }
        let records = match sidecar.kind {
            DatasetKind::Raw | DatasetKind::Final => Records::Pairs(pairs),
            DatasetKind::Spreadsheet => Records::Rows(rows),
            DatasetKind::Streams => {
                alice.events.sort_by_key(|e| e.ticks);
                bob.events.sort_by_key(|e| e.ticks);
                Records::Streams { alice, bob }
            }
        };
        if records.len() != sidecar.records {
            return Err(Error::Dataset(format!(
                "{}: {} records, sidecar says {}",
                csv_path.display(),
                records.len(),
                sidecar.records
            )));
        }
        Ok(Dataset {
            kind: sidecar.kind,
            records,
            provenance: sidecar.provenance,
            selection: sidecar.selection,
        })
    }
}

fn side_token(side: Side) -> &'static str {
    match side {
        Side::Alice => "alice",
        Side::Bob => "bob",
    }
}

/// `1234567890` ticks → `"1.234567890"`.
pub fn format_ticks(ticks: i64) -> String {
    let sign = if ticks < 0 { "-" } else { "" };
    let t = ticks.unsigned_abs();
    let unit = TICKS_PER_UNIT as u64;
    format!("{sign}{}.{:09}", t / unit, t % unit)
}

/// Exact inverse of [`format_ticks`] for nonnegative values with at most
/// nine decimals.
pub fn parse_ticks(text: &str) -> Option<i64> {
    let text = text.trim();
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 9 || whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let w: i64 = if whole.is_empty() {
        0
    } else {
        whole.parse().ok()?
    };
    let f: i64 = if frac.is_empty() {
        0
    } else {
        format!("{frac:0<9}").parse().ok()?
    };
    w.checked_mul(TICKS_PER_UNIT)?.checked_add(f)
}
