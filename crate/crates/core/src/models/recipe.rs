//! Serializable constructor arguments for every model family.
//!
//! A recipe file looks like
//!
//! ```json
//! { "recipe": { "kind": "contextual_product", "name": "demo_eq3",
//!               "parameters": { ... kind-specific ... } } }
//! ```
//!
//! Parameter fields per kind are the `*Params` structs below. Weights are
//! either JSON numbers (float fallback) or strings holding exact decimals or
//! `p/q` fractions.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{Angles, Model, ModelKind, Outcome};
use crate::prob::WeightValue;

/// Alice's per-setting values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlicePair<T> {
    pub x: T,
    pub xp: T,
}

/// Bob's per-setting values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BobPair<T> {
    pub y: T,
    pub yp: T,
}

/// Per-context values in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextQuad<T> {
    pub xy: T,
    pub xyp: T,
    pub xpy: T,
    pub xpyp: T,
}

impl<T> ContextQuad<T> {
    pub fn into_array(self) -> [T; 4] {
        [self.xy, self.xyp, self.xpy, self.xpyp]
    }
}

pub type Matrix = Vec<Vec<WeightValue>>;

/// Definite ±1 outcome per source value: `a.x[λ1]`, `b.y[λ2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterministicLocalParams {
    pub source: Matrix,
    pub a: AlicePair<Vec<Outcome>>,
    pub b: BobPair<Vec<Outcome>>,
}

/// Outcome probabilities `[P(+1), P(−1)]` per source value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticLocalParams {
    pub source: Matrix,
    pub a: AlicePair<Vec<[WeightValue; 2]>>,
    pub b: BobPair<Vec<[WeightValue; 2]>>,
}

/// Ternary outcome tables `a.x[λ1][λx]` and per-setting instrument weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextualProductParams {
    pub source: Matrix,
    pub instruments: InstrumentWeights,
    pub a: AlicePair<Vec<Vec<Outcome>>>,
    pub b: BobPair<Vec<Vec<Outcome>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentWeights {
    pub x: Vec<WeightValue>,
    pub xp: Vec<WeightValue>,
    pub y: Vec<WeightValue>,
    pub yp: Vec<WeightValue>,
}

/// ±1 outcome tables with statistically dependent instruments: either
/// explicit joint tables `p_xy(λx, λy)` per context, or an angle hook that
/// derives them from the relative polarizer angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextualCorrelatedParams {
    pub source: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruments: Option<ContextQuad<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_hook: Option<AngleHook>,
    pub a: AlicePair<Vec<Vec<Outcome>>>,
    pub b: BobPair<Vec<Vec<Outcome>>>,
}

/// Built-in `cos θ` parameterizations of the joint instrument table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngleHook {
    /// `p_xy = cos²θ · parallel + (1 − cos²θ) · perpendicular`, with
    /// `θ = θ_b − θ_a`.
    Malus {
        angles: Angles,
        parallel: Matrix,
        perpendicular: Matrix,
    },
}

/// A deterministic or stochastic local base model plus click delays
/// `delays.a.x[λ1]` in time units.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeTagParams {
    pub base: Box<ModelRecipe>,
    pub delays: TimeTagDelays,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeTagDelays {
    pub a: AlicePair<Vec<f64>>,
    pub b: BobPair<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RecipeParams {
    DeterministicLocal(DeterministicLocalParams),
    StochasticLocal(StochasticLocalParams),
    ContextualProduct(ContextualProductParams),
    ContextualCorrelated(ContextualCorrelatedParams),
    TimeTag(TimeTagParams),
}

/// A named, kind-tagged set of constructor parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelRecipe {
    pub name: String,
    pub params: RecipeParams,
}

impl ModelRecipe {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            RecipeParams::DeterministicLocal(_) => ModelKind::DeterministicLocal,
            RecipeParams::StochasticLocal(_) => ModelKind::StochasticLocal,
            RecipeParams::ContextualProduct(_) => ModelKind::ContextualProduct,
            RecipeParams::ContextualCorrelated(_) => ModelKind::ContextualCorrelated,
            RecipeParams::TimeTag(_) => ModelKind::TimeTag,
        }
    }

    /// Parses the inner recipe object (`{"kind", "name", "parameters"}`).
    /// Field errors carry their path below `prefix`.
    pub fn from_value(value: &Value, prefix: &str) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::invalid(prefix, "expected an object"))?;
        let kind_value = obj
            .get("kind")
            .ok_or_else(|| Error::invalid(format!("{prefix}.kind"), "missing field"))?;
        let kind: ModelKind = serde_json::from_value(kind_value.clone())
            .map_err(|e| Error::invalid(format!("{prefix}.kind"), e.to_string()))?;
        let name = match obj.get("name") {
            None => kind.token().to_owned(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                return Err(Error::invalid(
                    format!("{prefix}.name"),
                    "expected a string",
                ))
            }
        };
        for key in obj.keys() {
            if !matches!(key.as_str(), "kind" | "name" | "parameters") {
                return Err(Error::invalid(format!("{prefix}.{key}"), "unknown field"));
            }
        }
        let params_value = obj
            .get("parameters")
            .ok_or_else(|| Error::invalid(format!("{prefix}.parameters"), "missing field"))?;
        let ppath = format!("{prefix}.parameters");
        let params = match kind {
            ModelKind::DeterministicLocal => {
                RecipeParams::DeterministicLocal(parse_at(params_value, &ppath)?)
            }
            ModelKind::StochasticLocal => RecipeParams::StochasticLocal(parse_at(params_value, &ppath)?),
            ModelKind::ContextualProduct => {
                RecipeParams::ContextualProduct(parse_at(params_value, &ppath)?)
            }
            ModelKind::ContextualCorrelated => {
                RecipeParams::ContextualCorrelated(parse_at(params_value, &ppath)?)
            }
            ModelKind::TimeTag => {
                let raw: TimeTagRaw = parse_at(params_value, &ppath)?;
                let base = ModelRecipe::from_value(&raw.base, &format!("{ppath}.base"))?;
                RecipeParams::TimeTag(TimeTagParams { base: Box::new(base), delays: raw.delays })
            }
            ModelKind::CoupledJoint => {
                return Err(Error::invalid(
                    format!("{prefix}.kind"),
                    "coupled_joint models are derived from a contextual_product model, not built from a recipe",
                ))
            }
        };
        Ok(ModelRecipe { name, params })
    }

    /// Parses a recipe file (`{"recipe": {...}}`).
    pub fn from_file_value(value: &Value) -> Result<Self> {
        let inner = value
            .get("recipe")
            .ok_or_else(|| Error::invalid("recipe", "missing field"))?;
        Self::from_value(inner, "recipe")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_file_value(&value)
    }

    /// The inner recipe object.
    pub fn to_value(&self) -> Value {
        let parameters = match &self.params {
            RecipeParams::DeterministicLocal(p) => serde_json::to_value(p),
            RecipeParams::StochasticLocal(p) => serde_json::to_value(p),
            RecipeParams::ContextualProduct(p) => serde_json::to_value(p),
            RecipeParams::ContextualCorrelated(p) => serde_json::to_value(p),
            RecipeParams::TimeTag(p) => Ok(json!({
                "base": p.base.to_value(),
                "delays": p.delays,
            })),
        }
        .expect("recipe parameters serialize");
        json!({ "kind": self.kind(), "name": self.name, "parameters": parameters })
    }

    /// The recipe file form, `{"recipe": {...}}`.
    pub fn to_file_value(&self) -> Value {
        json!({ "recipe": self.to_value() })
    }

    pub fn build(&self) -> Result<Model> {
        super::build(self)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeTagRaw {
    base: Value,
    delays: TimeTagDelays,
}

pub(crate) fn parse_at<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            prefix.to_owned()
        } else {
            format!("{prefix}.{inner}")
        };
        Error::invalid(path, e.into_inner().to_string())
    })
}
