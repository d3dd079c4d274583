//! JSON form of a compiled model.
//!
//! ```json
//! {
//!   "kind": "contextual_product",
//!   "name": "example",
//!   "lambda_spaces": { "lambda1": 2, "lambda2": 2, "x": 2, "xp": 1, "y": 1, "yp": 1 },
//!   "weights": { "source": [["1/2", "0"], ["0", "1/2"]], "x": ["1/2", "1/2"] },
//!   "outcome_tables": {
//!     "a": { "x": [[1, 0], [-1, 0]], "xp": [[1], [-1]] },
//!     "b": { "y": [[1], [-1]], "yp": [[1], [-1]] }
//!   }
//! }
//! ```
//!
//! Outcome tables are `[λ_source][λ_instr]`. Instrument spaces default to
//! size 1 and their weights to the point mass. Contextual correlated models
//! give `weights.xy`, `weights.xyp`, `weights.xpy`, `weights.xpyp` as
//! `[λ_a][λ_b]` tables instead of per-setting weights. Time-tag models add
//! `delays` shaped like the outcome tables, in time units.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    ticks_to_units, units_to_ticks, Angles, Context, Delays, Instruments, Label, Model, ModelKind,
    ModelParts, Outcome, OutcomeTable,
};
use crate::models::{matrix_table, AlicePair, BobPair, Matrix, ModelRecipe};
use crate::prob::{ProbTable, WeightValue};

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpaces {
    pub lambda1: usize,
    pub lambda2: usize,
    #[serde(default = "one")]
    pub x: usize,
    #[serde(default = "one")]
    pub xp: usize,
    #[serde(default = "one")]
    pub y: usize,
    #[serde(default = "one")]
    pub yp: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub source: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<WeightValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xp: Option<Vec<WeightValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<WeightValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yp: Option<Vec<WeightValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xy: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xyp: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xpy: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xpyp: Option<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeTablesFile {
    pub a: AlicePair<Vec<Vec<Outcome>>>,
    pub b: BobPair<Vec<Vec<Outcome>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaysFile {
    pub a: AlicePair<Vec<Vec<f64>>>,
    pub b: BobPair<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: ModelKind,
    #[serde(default)]
    pub name: String,
    pub lambda_spaces: LambdaSpaces,
    pub weights: WeightsFile,
    pub outcome_tables: OutcomeTablesFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<DelaysFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Angles>,
}

fn check_rows<T>(path: &str, rows: &[Vec<T>], n: usize, k: usize) -> Result<()> {
    if rows.len() != n {
        return Err(Error::invalid(
            path,
            format!("expected {n} rows (lambda values), found {}", rows.len()),
        ));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != k) {
        return Err(Error::invalid(
            format!("{path}[{i}]"),
            format!(
                "expected {k} entries (instrument values), found {}",
                rows[i].len()
            ),
        ));
    }
    Ok(())
}

fn instrument(path: &str, w: &Option<Vec<WeightValue>>, size: usize) -> Result<ProbTable> {
    match w {
        Some(w) => ProbTable::from_values(path, vec![w.len()], w).and_then(|t| {
            if t.len() != size {
                Err(Error::invalid(
                    path,
                    format!("expected {size} weights (lambda_spaces), found {}", t.len()),
                ))
            } else {
                Ok(t)
            }
        }),
        None if size == 1 => Ok(ProbTable::point()),
        None => Err(Error::invalid(
            path,
            format!("missing weights for an instrument space of size {size}"),
        )),
    }
}

impl ModelFile {
    pub fn into_model(self) -> Result<Model> {
        let ls = &self.lambda_spaces;
        let source = matrix_table("weights.source", &self.weights.source)?;
        if source.dims() != [ls.lambda1, ls.lambda2] {
            return Err(Error::invalid(
                "weights.source",
                format!(
                    "shape {:?} does not match lambda_spaces ({}, {})",
                    source.dims(),
                    ls.lambda1,
                    ls.lambda2
                ),
            ));
        }
        let ot = &self.outcome_tables;
        check_rows("outcome_tables.a.x", &ot.a.x, ls.lambda1, ls.x)?;
        check_rows("outcome_tables.a.xp", &ot.a.xp, ls.lambda1, ls.xp)?;
        check_rows("outcome_tables.b.y", &ot.b.y, ls.lambda2, ls.y)?;
        check_rows("outcome_tables.b.yp", &ot.b.yp, ls.lambda2, ls.yp)?;
        let flat = |t: &Vec<Vec<Outcome>>| t.iter().flatten().copied().collect::<Vec<_>>();
        let alice = OutcomeTable::new(
            "outcome_tables.a",
            ls.lambda1,
            [ls.x, ls.xp],
            [flat(&ot.a.x), flat(&ot.a.xp)],
        )?;
        let bob = OutcomeTable::new(
            "outcome_tables.b",
            ls.lambda2,
            [ls.y, ls.yp],
            [flat(&ot.b.y), flat(&ot.b.yp)],
        )?;
        let w = &self.weights;
        let per_context = [&w.xy, &w.xyp, &w.xpy, &w.xpyp];
        let instruments = if self.kind == ModelKind::ContextualCorrelated {
            let mut tables = Vec::with_capacity(4);
            for (ctx, m) in Context::ALL.into_iter().zip(per_context) {
                let path = format!("weights.{}", ctx.token());
                let m = m
                    .as_ref()
                    .ok_or_else(|| Error::invalid(&path, "missing joint instrument table"))?;
                tables.push(matrix_table(&path, m)?);
            }
            Instruments::PerContext(tables.try_into().expect("four tables"))
        } else {
            if let Some((ctx, _)) = Context::ALL
                .into_iter()
                .zip(per_context)
                .find(|(_, m)| m.is_some())
            {
                return Err(Error::invalid(
                    format!("weights.{}", ctx.token()),
                    format!("{} models take per-setting instrument weights", self.kind),
                ));
            }
            Instruments::PerSetting {
                alice: [
                    instrument("weights.x", &w.x, ls.x)?,
                    instrument("weights.xp", &w.xp, ls.xp)?,
                ],
                bob: [
                    instrument("weights.y", &w.y, ls.y)?,
                    instrument("weights.yp", &w.yp, ls.yp)?,
                ],
            }
        };
        let delays = match &self.delays {
            None => None,
            Some(d) => {
                check_rows("delays.a.x", &d.a.x, ls.lambda1, ls.x)?;
                check_rows("delays.a.xp", &d.a.xp, ls.lambda1, ls.xp)?;
                check_rows("delays.b.y", &d.b.y, ls.lambda2, ls.y)?;
                check_rows("delays.b.yp", &d.b.yp, ls.lambda2, ls.yp)?;
                let ticks = |path: &str, t: &Vec<Vec<f64>>| -> Result<Vec<i64>> {
                    t.iter()
                        .flatten()
                        .enumerate()
                        .map(|(i, &v)| {
                            if v.is_finite() && v >= 0.0 {
                                Ok(units_to_ticks(v))
                            } else {
                                Err(Error::invalid(
                                    format!("{path}[{i}]"),
                                    "delays must be finite and nonnegative",
                                ))
                            }
                        })
                        .collect()
                };
                Some(Delays {
                    alice: [ticks("delays.a.x", &d.a.x)?, ticks("delays.a.xp", &d.a.xp)?],
                    bob: [ticks("delays.b.y", &d.b.y)?, ticks("delays.b.yp", &d.b.yp)?],
                })
            }
        };
        let name = if self.name.is_empty() {
            self.kind.token().to_owned()
        } else {
            self.name
        };
        Model::from_parts(ModelParts {
            name,
            kind: self.kind,
            source,
            instruments,
            alice,
            bob,
            delays,
            angles: self.angles,
        })
    }

    /// File form of a model, with exact weights as strings.
    pub fn from_model(model: &Model) -> ModelFile {
        let p = model.parts();
        let rows = |t: &OutcomeTable, label: Label| -> Vec<Vec<Outcome>> {
            t.values[label.index()]
                .chunks(t.instrument_sizes[label.index()])
                .map(<[Outcome]>::to_vec)
                .collect()
        };
        let vec_w = |t: &ProbTable| {
            Some(
                t.weights()
                    .iter()
                    .map(WeightValue::exact)
                    .collect::<Vec<_>>(),
            )
        };
        let mat_w = |t: &ProbTable| -> Matrix {
            t.weights()
                .chunks(t.dims()[1])
                .map(|r| r.iter().map(WeightValue::exact).collect())
                .collect()
        };
        let mut weights = WeightsFile {
            source: mat_w(&p.source),
            ..Default::default()
        };
        match &p.instruments {
            Instruments::PerSetting { alice, bob } => {
                weights.x = vec_w(&alice[0]);
                weights.xp = vec_w(&alice[1]);
                weights.y = vec_w(&bob[0]);
                weights.yp = vec_w(&bob[1]);
            }
            Instruments::PerContext(t) => {
                weights.xy = Some(mat_w(&t[0]));
                weights.xyp = Some(mat_w(&t[1]));
                weights.xpy = Some(mat_w(&t[2]));
                weights.xpyp = Some(mat_w(&t[3]));
            }
        }
        let delays = p.delays.as_ref().map(|d| {
            let rows = |v: &Vec<i64>, size: usize| -> Vec<Vec<f64>> {
                v.chunks(size)
                    .map(|c| c.iter().map(|&t| ticks_to_units(t)).collect())
                    .collect()
            };
            let (sa, sb) = (p.alice.instrument_sizes, p.bob.instrument_sizes);
            DelaysFile {
                a: AlicePair {
                    x: rows(&d.alice[0], sa[0]),
                    xp: rows(&d.alice[1], sa[1]),
                },
                b: BobPair {
                    y: rows(&d.bob[0], sb[0]),
                    yp: rows(&d.bob[1], sb[1]),
                },
            }
        });
        ModelFile {
            kind: p.kind,
            name: p.name.clone(),
            lambda_spaces: LambdaSpaces {
                lambda1: p.source.dims()[0],
                lambda2: p.source.dims()[1],
                x: p.alice.instrument_sizes[0],
                xp: p.alice.instrument_sizes[1],
                y: p.bob.instrument_sizes[0],
                yp: p.bob.instrument_sizes[1],
            },
            weights,
            outcome_tables: OutcomeTablesFile {
                a: AlicePair {
                    x: rows(&p.alice, Label::Primary),
                    xp: rows(&p.alice, Label::Alternate),
                },
                b: BobPair {
                    y: rows(&p.bob, Label::Primary),
                    yp: rows(&p.bob, Label::Alternate),
                },
            },
            delays,
            angles: p.angles,
        }
    }
}

/// Builds a model from JSON: a recipe file (`{"recipe": ...}`) or a model
/// file.
pub fn model_from_value(value: &Value) -> Result<Model> {
    if value.get("recipe").is_some() {
        return ModelRecipe::from_file_value(value)?.build();
    }
    let file: ModelFile =
        crate::models::parse_json_at(&value.to_string(), "model").map_err(strip_model_prefix)?;
    file.into_model()
}

fn strip_model_prefix(e: Error) -> Error {
    match e {
        Error::Invalid { path, message } => {
            let path = path
                .strip_prefix("model.")
                .map(str::to_owned)
                .unwrap_or(path);
            Error::Invalid { path, message }
        }
        other => other,
    }
}

pub fn model_from_json_str(text: &str) -> Result<Model> {
    let value: Value = serde_json::from_str(text)?;
    model_from_value(&value)
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json_str(&text)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&ModelFile::from_model(model))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
