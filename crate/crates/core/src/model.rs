//! Hidden-variable model abstraction.
//!
//! A [`Model`] is a finite discrete hidden-variable specification: a source
//! distribution `p(λ1, λ2)`, instrument distributions (either one table per
//! setting, or one joint table per context), and tabulated outcome functions
//! `A(setting, λ1, λ_instr)` and `B(setting, λ2, λ_instr)`.
//!
//! Locality is structural: Alice's table is indexed only by her own setting,
//! `λ1` and her own instrument index, so no outcome function can read the
//! remote setting, `λ2`, or the remote instrument.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{JointDist, PairDist};
use crate::prob::{sample_cdf, Prob, ProbTable};

/// Ternary measurement result; `Zero` encodes "no click".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Minus,
    Zero,
    Plus,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Minus, Outcome::Zero, Outcome::Plus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Minus => -1,
            Outcome::Zero => 0,
            Outcome::Plus => 1,
        }
    }

    /// Position in `{−1, 0, +1}` order, used to index 3×3 tables.
    pub fn index(self) -> usize {
        (self.value() + 1) as usize
    }

    pub fn from_index(i: usize) -> Outcome {
        Outcome::ALL[i]
    }

    pub fn is_click(self) -> bool {
        self != Outcome::Zero
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            -1 => Ok(Outcome::Minus),
            0 => Ok(Outcome::Zero),
            1 => Ok(Outcome::Plus),
            other => Err(format!("outcome must be -1, 0 or 1, got {other}")),
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Alice,
    Bob,
}

/// Which of a side's two settings: `x`/`y` (primary) or `x'`/`y'` (alternate).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Primary,
    Alternate,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Primary, Label::Alternate];

    pub fn index(self) -> usize {
        match self {
            Label::Primary => 0,
            Label::Alternate => 1,
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Primary => Label::Alternate,
            Label::Alternate => Label::Primary,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Setting {
    pub side: Side,
    pub label: Label,
}

impl Setting {
    pub const X: Setting = Setting {
        side: Side::Alice,
        label: Label::Primary,
    };
    pub const XP: Setting = Setting {
        side: Side::Alice,
        label: Label::Alternate,
    };
    pub const Y: Setting = Setting {
        side: Side::Bob,
        label: Label::Primary,
    };
    pub const YP: Setting = Setting {
        side: Side::Bob,
        label: Label::Alternate,
    };
    pub const ALL: [Setting; 4] = [Setting::X, Setting::XP, Setting::Y, Setting::YP];

    /// File token: `x`, `xp`, `y`, `yp`.
    pub fn token(self) -> &'static str {
        match (self.side, self.label) {
            (Side::Alice, Label::Primary) => "x",
            (Side::Alice, Label::Alternate) => "xp",
            (Side::Bob, Label::Primary) => "y",
            (Side::Bob, Label::Alternate) => "yp",
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|setting| setting.token() == s)
            .ok_or_else(|| Error::invalid("setting", format!("unknown setting `{s}`")))
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One of the four setting pairs. [`Context::ALL`] is the canonical order
/// `(x,y), (x,y'), (x',y), (x',y')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context {
    pub alice: Label,
    pub bob: Label,
}

impl Context {
    pub const XY: Context = Context {
        alice: Label::Primary,
        bob: Label::Primary,
    };
    pub const XYP: Context = Context {
        alice: Label::Primary,
        bob: Label::Alternate,
    };
    pub const XPY: Context = Context {
        alice: Label::Alternate,
        bob: Label::Primary,
    };
    pub const XPYP: Context = Context {
        alice: Label::Alternate,
        bob: Label::Alternate,
    };
    pub const ALL: [Context; 4] = [Context::XY, Context::XYP, Context::XPY, Context::XPYP];

    pub fn new(alice: Label, bob: Label) -> Self {
        Context { alice, bob }
    }

    pub fn index(self) -> usize {
        self.alice.index() * 2 + self.bob.index()
    }

    pub fn from_index(i: usize) -> Context {
        Context::ALL[i]
    }

    pub fn alice_setting(self) -> Setting {
        Setting {
            side: Side::Alice,
            label: self.alice,
        }
    }

    pub fn bob_setting(self) -> Setting {
        Setting {
            side: Side::Bob,
            label: self.bob,
        }
    }

    /// File token: `xy`, `xyp`, `xpy`, `xpyp`.
    pub fn token(self) -> &'static str {
        ["xy", "xyp", "xpy", "xpyp"][self.index()]
    }
}

impl FromStr for Context {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Context::ALL
            .into_iter()
            .find(|c| c.token() == s)
            .ok_or_else(|| Error::invalid("context", format!("unknown context `{s}`")))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = if self.alice == Label::Primary {
            "x"
        } else {
            "x'"
        };
        let b = if self.bob == Label::Primary {
            "y"
        } else {
            "y'"
        };
        write!(f, "({a},{b})")
    }
}

impl Serialize for Context {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for Context {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DeterministicLocal,
    StochasticLocal,
    ContextualProduct,
    ContextualCorrelated,
    TimeTag,
    CoupledJoint,
}

impl ModelKind {
    pub fn token(self) -> &'static str {
        match self {
            ModelKind::DeterministicLocal => "deterministic_local",
            ModelKind::StochasticLocal => "stochastic_local",
            ModelKind::ContextualProduct => "contextual_product",
            ModelKind::ContextualCorrelated => "contextual_correlated",
            ModelKind::TimeTag => "time_tag",
            ModelKind::CoupledJoint => "coupled_joint",
        }
    }

    /// Kinds whose hidden variables live on one product space, so that all
    /// four outcomes of a trial can be computed together.
    pub fn emits_joint_rows(self) -> bool {
        matches!(
            self,
            ModelKind::DeterministicLocal | ModelKind::StochasticLocal | ModelKind::CoupledJoint
        )
    }

    pub fn is_local(self) -> bool {
        matches!(
            self,
            ModelKind::DeterministicLocal | ModelKind::StochasticLocal | ModelKind::TimeTag
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Indices of one sampled trial's hidden variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HiddenSample {
    pub lambda1: usize,
    pub lambda2: usize,
    pub instr_a: usize,
    pub instr_b: usize,
}

/// Hidden variables of a spreadsheet row: source pair plus all four
/// instrument indices `(λx, λx', λy, λy')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HiddenRow {
    pub lambda1: usize,
    pub lambda2: usize,
    pub instruments: [usize; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trial {
    pub hidden: HiddenSample,
    pub a: Outcome,
    pub b: Outcome,
}

/// One side's tabulated outcome function: for each label, a row-major
/// `[λ_source][λ_instr]` table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeTable {
    pub source_size: usize,
    pub instrument_sizes: [usize; 2],
    pub values: [Vec<Outcome>; 2],
}

impl OutcomeTable {
    pub fn new(
        path: &str,
        source_size: usize,
        instrument_sizes: [usize; 2],
        values: [Vec<Outcome>; 2],
    ) -> Result<Self> {
        for label in Label::ALL {
            let expected = source_size * instrument_sizes[label.index()];
            let found = values[label.index()].len();
            if found != expected {
                return Err(Error::invalid(
                    format!("{path}[{}]", label.index()),
                    format!("expected {expected} entries, found {found}"),
                ));
            }
        }
        Ok(OutcomeTable {
            source_size,
            instrument_sizes,
            values,
        })
    }

    /// Table whose outcome ignores the instrument (instrument space of size 1).
    pub fn deterministic(per_label: [Vec<Outcome>; 2]) -> Self {
        let source_size = per_label[0].len();
        OutcomeTable {
            source_size,
            instrument_sizes: [1, 1],
            values: per_label,
        }
    }

    pub fn get(&self, label: Label, source: usize, instr: usize) -> Outcome {
        let l = label.index();
        self.values[l][source * self.instrument_sizes[l] + instr]
    }

    fn any(&self, pred: impl Fn(Outcome) -> bool) -> bool {
        self.values.iter().flatten().any(|&o| pred(o))
    }
}

/// Instrument hidden-variable distributions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instruments {
    /// Independent per-setting tables `p_x, p_x'` (Alice) and `p_y, p_y'`
    /// (Bob): the context measure is `p_x(λx)·p_y(λy)·p(λ1,λ2)`.
    PerSetting {
        alice: [ProbTable; 2],
        bob: [ProbTable; 2],
    },
    /// One joint table `p_xy(λx, λy)` per context, in canonical context
    /// order; each table has shape `[size_a(label), size_b(label)]`.
    PerContext([ProbTable; 4]),
}

/// Click delays in integer ticks ([`TICKS_PER_UNIT`] ticks per time unit),
/// indexed like the outcome tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delays {
    pub alice: [Vec<i64>; 2],
    pub bob: [Vec<i64>; 2],
}

pub const TICKS_PER_UNIT: i64 = 1_000_000_000;

pub fn units_to_ticks(units: f64) -> i64 {
    (units * TICKS_PER_UNIT as f64).round() as i64
}

pub fn ticks_to_units(ticks: i64) -> f64 {
    ticks as f64 / TICKS_PER_UNIT as f64
}

/// Polarizer angles (radians) for angle-parameterized models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub x: f64,
    pub xp: f64,
    pub y: f64,
    pub yp: f64,
}

impl Angles {
    pub fn of(&self, setting: Setting) -> f64 {
        match setting.token() {
            "x" => self.x,
            "xp" => self.xp,
            "y" => self.y,
            _ => self.yp,
        }
    }

    /// Relative angle `θ_b − θ_a` of a context.
    pub fn relative(&self, ctx: Context) -> f64 {
        self.of(ctx.bob_setting()) - self.of(ctx.alice_setting())
    }
}

/// Unvalidated model components; see [`Model::from_parts`].
#[derive(Clone, Debug)]
pub struct ModelParts {
    pub name: String,
    pub kind: ModelKind,
    pub source: ProbTable,
    pub instruments: Instruments,
    pub alice: OutcomeTable,
    pub bob: OutcomeTable,
    pub delays: Option<Delays>,
    pub angles: Option<Angles>,
}

#[derive(Clone, Debug)]
struct Sampler {
    source: Vec<f64>,
    alice: [Vec<f64>; 2],
    bob: [Vec<f64>; 2],
    contexts: Option<[Vec<f64>; 4]>,
}

/// A validated, immutable hidden-variable model.
#[derive(Clone, Debug)]
pub struct Model {
    parts: ModelParts,
    sampler: Sampler,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (&self.parts, &other.parts);
        a.name == b.name
            && a.kind == b.kind
            && a.source == b.source
            && a.instruments == b.instruments
            && a.alice == b.alice
            && a.bob == b.bob
            && a.delays == b.delays
            && a.angles == b.angles
    }
}

impl Model {
    /// Validates the structural invariants for `parts.kind`.
    pub fn from_parts(parts: ModelParts) -> Result<Self> {
        let ModelParts {
            kind,
            source,
            instruments,
            alice,
            bob,
            delays,
            ..
        } = &parts;
        if source.dims().len() != 2 {
            return Err(Error::invalid(
                "weights.source",
                "source table must be two-dimensional over (lambda1, lambda2)",
            ));
        }
        let (n1, n2) = (source.dims()[0], source.dims()[1]);
        if alice.source_size != n1 {
            return Err(Error::invalid(
                "outcome_tables.a",
                format!(
                    "indexed by {} source values, lambda1 has {n1}",
                    alice.source_size
                ),
            ));
        }
        if bob.source_size != n2 {
            return Err(Error::invalid(
                "outcome_tables.b",
                format!(
                    "indexed by {} source values, lambda2 has {n2}",
                    bob.source_size
                ),
            ));
        }

        match instruments {
            Instruments::PerSetting { alice: pa, bob: pb } => {
                for (side, tables, table) in [("a", pa, alice), ("b", pb, bob)] {
                    for label in Label::ALL {
                        let t = &tables[label.index()];
                        let size = table.instrument_sizes[label.index()];
                        if t.dims() != [size] {
                            let name = instrument_token(side, label);
                            return Err(Error::invalid(
                                format!("weights.{name}"),
                                format!(
                                    "instrument table shape {:?} does not match size {size}",
                                    t.dims()
                                ),
                            ));
                        }
                    }
                }
            }
            Instruments::PerContext(tables) => {
                for ctx in Context::ALL {
                    let expected = [
                        alice.instrument_sizes[ctx.alice.index()],
                        bob.instrument_sizes[ctx.bob.index()],
                    ];
                    if tables[ctx.index()].dims() != expected {
                        return Err(Error::invalid(
                            format!("weights.{}", ctx.token()),
                            format!(
                                "joint instrument table shape {:?}, expected {expected:?}",
                                tables[ctx.index()].dims()
                            ),
                        ));
                    }
                }
            }
        }

        let per_setting = matches!(instruments, Instruments::PerSetting { .. });
        let has_zero = alice.any(|o| o == Outcome::Zero) || bob.any(|o| o == Outcome::Zero);
        let needs_per_setting = *kind != ModelKind::ContextualCorrelated;
        if needs_per_setting != per_setting {
            return Err(Error::invalid(
                "weights",
                if per_setting {
                    format!("{kind} models need per-context joint instrument tables")
                } else {
                    format!("{kind} models need per-setting instrument tables")
                },
            ));
        }
        if *kind == ModelKind::DeterministicLocal
            && (alice.instrument_sizes != [1, 1] || bob.instrument_sizes != [1, 1])
        {
            return Err(Error::invalid(
                "lambda_spaces",
                "deterministic local models have no instrument variables",
            ));
        }
        let allows_zero = matches!(kind, ModelKind::ContextualProduct | ModelKind::CoupledJoint);
        if has_zero && !allows_zero {
            let side = if alice.any(|o| o == Outcome::Zero) {
                "a"
            } else {
                "b"
            };
            return Err(Error::invalid(
                format!("outcome_tables.{side}"),
                format!("{kind} outcome tables must be ±1 (found 0)"),
            ));
        }
        match (kind, delays) {
            (ModelKind::TimeTag, None) => {
                return Err(Error::invalid(
                    "delays",
                    "time-tag models need delay tables",
                ));
            }
            (ModelKind::TimeTag, Some(d)) => {
                for (side, table, outcome) in [("a", &d.alice, alice), ("b", &d.bob, bob)] {
                    for label in Label::ALL {
                        let l = label.index();
                        let path = format!("delays.{}", instrument_token(side, label));
                        if table[l].len() != outcome.values[l].len() {
                            return Err(Error::invalid(
                                path,
                                format!(
                                    "expected {} delays, found {}",
                                    outcome.values[l].len(),
                                    table[l].len()
                                ),
                            ));
                        }
                        if let Some(i) = table[l].iter().position(|&t| t < 0) {
                            return Err(Error::invalid(
                                format!("{path}[{i}]"),
                                "delays must be nonnegative",
                            ));
                        }
                    }
                }
            }
            (_, Some(_)) => {
                return Err(Error::invalid(
                    "delays",
                    format!("{kind} models carry no delays"),
                ));
            }
            (_, None) => {}
        }

        let sampler = Sampler {
            source: source.cdf(),
            alice: match instruments {
                Instruments::PerSetting { alice, .. } => [alice[0].cdf(), alice[1].cdf()],
                Instruments::PerContext(_) => [Vec::new(), Vec::new()],
            },
            bob: match instruments {
                Instruments::PerSetting { bob, .. } => [bob[0].cdf(), bob[1].cdf()],
                Instruments::PerContext(_) => [Vec::new(), Vec::new()],
            },
            contexts: match instruments {
                Instruments::PerContext(t) => {
                    Some([t[0].cdf(), t[1].cdf(), t[2].cdf(), t[3].cdf()])
                }
                Instruments::PerSetting { .. } => None,
            },
        };
        Ok(Model { parts, sampler })
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    pub fn kind(&self) -> ModelKind {
        self.parts.kind
    }

    pub fn parts(&self) -> &ModelParts {
        &self.parts
    }

    pub fn into_parts(self) -> ModelParts {
        self.parts
    }

    pub fn source(&self) -> &ProbTable {
        &self.parts.source
    }

    pub fn instruments(&self) -> &Instruments {
        &self.parts.instruments
    }

    pub fn alice_table(&self) -> &OutcomeTable {
        &self.parts.alice
    }

    pub fn bob_table(&self) -> &OutcomeTable {
        &self.parts.bob
    }

    pub fn delays(&self) -> Option<&Delays> {
        self.parts.delays.as_ref()
    }

    pub fn angles(&self) -> Option<&Angles> {
        self.parts.angles.as_ref()
    }

    pub fn outcome_a(&self, label: Label, lambda1: usize, instr: usize) -> Outcome {
        self.parts.alice.get(label, lambda1, instr)
    }

    pub fn outcome_b(&self, label: Label, lambda2: usize, instr: usize) -> Outcome {
        self.parts.bob.get(label, lambda2, instr)
    }

    /// Copy of the model with a different name.
    pub fn renamed(&self, name: impl Into<String>) -> Model {
        let mut m = self.clone();
        m.parts.name = name.into();
        m
    }

    /// Replaces one per-setting instrument table, e.g. to build a perturbed
    /// fixture.
    pub fn with_instrument(&self, setting: Setting, table: ProbTable) -> Result<Model> {
        let mut parts = self.parts.clone();
        match &mut parts.instruments {
            Instruments::PerSetting { alice, bob } => {
                let slot = match setting.side {
                    Side::Alice => &mut alice[setting.label.index()],
                    Side::Bob => &mut bob[setting.label.index()],
                };
                *slot = table;
            }
            Instruments::PerContext(_) => {
                return Err(Error::UnsupportedKind {
                    operation: "with_instrument",
                    kind: self.kind(),
                    reason: "instrument tables are per context".into(),
                })
            }
        }
        Model::from_parts(parts)
    }

    /// The local ±1 model underneath a time-tag model (delays dropped).
    pub fn without_delays(&self) -> Result<Model> {
        if self.kind() != ModelKind::TimeTag {
            return Err(Error::UnsupportedKind {
                operation: "without_delays",
                kind: self.kind(),
                reason: "only time-tag models carry delays".into(),
            });
        }
        let mut parts = self.parts.clone();
        parts.delays = None;
        parts.kind =
            if parts.alice.instrument_sizes == [1, 1] && parts.bob.instrument_sizes == [1, 1] {
                ModelKind::DeterministicLocal
            } else {
                ModelKind::StochasticLocal
            };
        Model::from_parts(parts)
    }

    /// Per-source-value distribution of Alice's outcome at `label`, after
    /// summing out her instrument variable.
    pub(crate) fn alice_conditional(&self, label: Label) -> Vec<[Prob; 3]> {
        let Instruments::PerSetting { alice, .. } = &self.parts.instruments else {
            unreachable!("conditional outcome tables need per-setting instruments")
        };
        conditional_table(&self.parts.alice, label, &alice[label.index()])
    }

    pub(crate) fn bob_conditional(&self, label: Label) -> Vec<[Prob; 3]> {
        let Instruments::PerSetting { bob, .. } = &self.parts.instruments else {
            unreachable!("conditional outcome tables need per-setting instruments")
        };
        conditional_table(&self.parts.bob, label, &bob[label.index()])
    }

    /// Exact distribution of `(a, b)` in one context.
    ///
    /// Coupled-joint models are evaluated by projecting their joint 4-tuple
    /// distribution; every other kind sums directly over `Λ_xy`.
    pub fn enumerate_context(&self, ctx: Context) -> Result<PairDist> {
        if self.kind() == ModelKind::CoupledJoint {
            return Ok(self.enumerate_joint()?.project(ctx));
        }
        let source = &self.parts.source;
        let (n1, n2) = (source.dims()[0], source.dims()[1]);
        let mut dist = PairDist::zero();
        match &self.parts.instruments {
            Instruments::PerSetting { .. } => {
                let qa = self.alice_conditional(ctx.alice);
                let qb = self.bob_conditional(ctx.bob);
                for l1 in 0..n1 {
                    for l2 in 0..n2 {
                        let p = source.get2(l1, l2);
                        if p.is_zero() {
                            continue;
                        }
                        for a in 0..3 {
                            if qa[l1][a].is_zero() {
                                continue;
                            }
                            let pa = p * &qa[l1][a];
                            for b in 0..3 {
                                if !qb[l2][b].is_zero() {
                                    dist.cells[a][b] += &pa * &qb[l2][b];
                                }
                            }
                        }
                    }
                }
            }
            Instruments::PerContext(tables) => {
                let joint = &tables[ctx.index()];
                let (sa, sb) = (joint.dims()[0], joint.dims()[1]);
                for l1 in 0..n1 {
                    for l2 in 0..n2 {
                        let p = source.get2(l1, l2);
                        if p.is_zero() {
                            continue;
                        }
                        for ia in 0..sa {
                            let a = self.outcome_a(ctx.alice, l1, ia).index();
                            for ib in 0..sb {
                                let w = joint.get2(ia, ib);
                                if w.is_zero() {
                                    continue;
                                }
                                let b = self.outcome_b(ctx.bob, l2, ib).index();
                                dist.cells[a][b] += p * w;
                            }
                        }
                    }
                }
            }
        }
        Ok(dist)
    }

    /// Exact distribution of the 4-tuple `(A_x, A_x', B_y, B_y')` on the
    /// product space `Λ1×Λ2×Λx×Λx'×Λy×Λy'` with independent instruments.
    pub fn enumerate_joint(&self) -> Result<JointDist> {
        if !matches!(self.parts.instruments, Instruments::PerSetting { .. }) {
            return Err(Error::UnsupportedKind {
                operation: "enumerate_joint",
                kind: self.kind(),
                reason: "per-context instrument measures admit no joint 4-tuple distribution"
                    .into(),
            });
        }
        let source = &self.parts.source;
        let (n1, n2) = (source.dims()[0], source.dims()[1]);
        let qx = self.alice_conditional(Label::Primary);
        let qxp = self.alice_conditional(Label::Alternate);
        let qy = self.bob_conditional(Label::Primary);
        let qyp = self.bob_conditional(Label::Alternate);
        let mut joint = JointDist::zero();
        for l1 in 0..n1 {
            // Alice's pair distribution given λ1: instruments for x and x' are
            // independent draws.
            let mut alice_pair: Vec<(usize, usize, Prob)> = Vec::new();
            for a in 0..3 {
                for ap in 0..3 {
                    if !qx[l1][a].is_zero() && !qxp[l1][ap].is_zero() {
                        alice_pair.push((a, ap, &qx[l1][a] * &qxp[l1][ap]));
                    }
                }
            }
            for l2 in 0..n2 {
                let p = source.get2(l1, l2);
                if p.is_zero() {
                    continue;
                }
                for (a, ap, pa) in &alice_pair {
                    let pa = p * pa;
                    for b in 0..3 {
                        if qy[l2][b].is_zero() {
                            continue;
                        }
                        let pab = &pa * &qy[l2][b];
                        for bp in 0..3 {
                            if !qyp[l2][bp].is_zero() {
                                *joint.cell_mut([*a, *ap, b, bp]) += &pab * &qyp[l2][bp];
                            }
                        }
                    }
                }
            }
        }
        Ok(joint)
    }

    /// Draws one trial in `ctx` by sampling the hidden variables and
    /// evaluating the outcome tables. Consumes exactly three uniforms.
    pub fn sample_trial<R: Rng + ?Sized>(&self, ctx: Context, rng: &mut R) -> Trial {
        let (lambda1, lambda2) = self.sample_source(rng);
        let (instr_a, instr_b) = match &self.sampler.contexts {
            None => {
                let ia = sample_cdf(&self.sampler.alice[ctx.alice.index()], rng.random());
                let ib = sample_cdf(&self.sampler.bob[ctx.bob.index()], rng.random());
                (ia, ib)
            }
            Some(tables) => {
                let cell = sample_cdf(&tables[ctx.index()], rng.random());
                let _ = rng.random::<f64>();
                let sb = self.parts.bob.instrument_sizes[ctx.bob.index()];
                (cell / sb, cell % sb)
            }
        };
        Trial {
            hidden: HiddenSample {
                lambda1,
                lambda2,
                instr_a,
                instr_b,
            },
            a: self.outcome_a(ctx.alice, lambda1, instr_a),
            b: self.outcome_b(ctx.bob, lambda2, instr_b),
        }
    }

    /// Draws one 4-tuple row `(A_x, A_x', B_y, B_y')` from the joint product
    /// space. Only kinds with per-setting instruments can do this.
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(HiddenRow, [Outcome; 4])> {
        if self.sampler.contexts.is_some() {
            return Err(Error::UnsupportedKind {
                operation: "sample_row",
                kind: self.kind(),
                reason:
                    "per-context instrument measures cannot output all four values in one trial"
                        .into(),
            });
        }
        let (lambda1, lambda2) = self.sample_source(rng);
        let ix = sample_cdf(&self.sampler.alice[0], rng.random());
        let ixp = sample_cdf(&self.sampler.alice[1], rng.random());
        let iy = sample_cdf(&self.sampler.bob[0], rng.random());
        let iyp = sample_cdf(&self.sampler.bob[1], rng.random());
        let row = [
            self.outcome_a(Label::Primary, lambda1, ix),
            self.outcome_a(Label::Alternate, lambda1, ixp),
            self.outcome_b(Label::Primary, lambda2, iy),
            self.outcome_b(Label::Alternate, lambda2, iyp),
        ];
        Ok((
            HiddenRow {
                lambda1,
                lambda2,
                instruments: [ix, ixp, iy, iyp],
            },
            row,
        ))
    }

    fn sample_source<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let cell = sample_cdf(&self.sampler.source, rng.random());
        let n2 = self.parts.source.dims()[1];
        (cell / n2, cell % n2)
    }
}

pub(crate) fn instrument_token(side: &str, label: Label) -> &'static str {
    match (side, label) {
        ("a", Label::Primary) => "x",
        ("a", Label::Alternate) => "xp",
        (_, Label::Primary) => "y",
        (_, Label::Alternate) => "yp",
    }
}

fn conditional_table(table: &OutcomeTable, label: Label, instr: &ProbTable) -> Vec<[Prob; 3]> {
    let size = table.instrument_sizes[label.index()];
    (0..table.source_size)
        .map(|s| {
            let mut row: [Prob; 3] = Default::default();
            for i in 0..size {
                let w = instr.flat(i);
                if !w.is_zero() {
                    row[table.get(label, s, i).index()] += w;
                }
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{int, rat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant(a: Outcome, b: Outcome) -> Model {
        Model::from_parts(ModelParts {
            name: "constant".into(),
            kind: ModelKind::DeterministicLocal,
            source: ProbTable::exact("source", vec![1, 1], vec![int(1)]).unwrap(),
            instruments: Instruments::PerSetting {
                alice: [ProbTable::point(), ProbTable::point()],
                bob: [ProbTable::point(), ProbTable::point()],
            },
            alice: OutcomeTable::deterministic([vec![a], vec![a]]),
            bob: OutcomeTable::deterministic([vec![b], vec![b]]),
            delays: None,
            angles: None,
        })
        .unwrap()
    }

    #[test]
    fn constant_model_enumerates_to_a_point_mass() {
        let m = constant(Outcome::Plus, Outcome::Plus);
        for ctx in Context::ALL {
            let d = m.enumerate_context(ctx).unwrap();
            let support: Vec<_> = d.support().collect();
            assert_eq!(support, vec![((Outcome::Plus, Outcome::Plus), int(1))]);
        }
    }

    #[test]
    fn constant_model_always_samples_the_same_pair() {
        let m = constant(Outcome::Plus, Outcome::Plus);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for ctx in Context::ALL {
            for _ in 0..50 {
                let t = m.sample_trial(ctx, &mut rng);
                assert_eq!((t.a, t.b), (Outcome::Plus, Outcome::Plus));
            }
        }
    }

    #[test]
    fn sign_instrument_product_model_has_no_zero_mass() {
        // A_x(λ1, λx) = λx · sign(λ1), uniform two-point instrument spaces.
        let signs = [Outcome::Minus, Outcome::Plus];
        let table = |flip: bool| {
            let mut v = Vec::new();
            for s in signs {
                for i in signs {
                    let prod = s.value() * i.value() * if flip { -1 } else { 1 };
                    v.push(Outcome::try_from(prod).unwrap());
                }
            }
            v
        };
        let m = Model::from_parts(ModelParts {
            name: "signs".into(),
            kind: ModelKind::ContextualProduct,
            source: ProbTable::exact("source", vec![2, 2], vec![rat(1, 4); 4]).unwrap(),
            instruments: Instruments::PerSetting {
                alice: [ProbTable::uniform(2), ProbTable::uniform(2)],
                bob: [ProbTable::uniform(2), ProbTable::uniform(2)],
            },
            alice: OutcomeTable::new("a", 2, [2, 2], [table(false), table(true)]).unwrap(),
            bob: OutcomeTable::new("b", 2, [2, 2], [table(false), table(false)]).unwrap(),
            delays: None,
            angles: None,
        })
        .unwrap();
        for ctx in Context::ALL {
            let d = m.enumerate_context(ctx).unwrap();
            let mut pm = Prob::zero();
            for a in [Outcome::Minus, Outcome::Plus] {
                for b in [Outcome::Minus, Outcome::Plus] {
                    pm += d.prob(a, b);
                }
            }
            assert_eq!(pm, int(1));
            assert!(d.prob(Outcome::Zero, Outcome::Plus).is_zero());
        }
    }

    #[test]
    fn zero_outcomes_rejected_for_local_kinds() {
        let mut parts = constant(Outcome::Plus, Outcome::Plus).into_parts();
        parts.alice = OutcomeTable::deterministic([vec![Outcome::Zero], vec![Outcome::Plus]]);
        let err = Model::from_parts(parts).unwrap_err();
        assert!(err.to_string().contains("outcome_tables.a"), "{err}");
    }

    #[test]
    fn context_tokens_round_trip() {
        for ctx in Context::ALL {
            assert_eq!(ctx.token().parse::<Context>().unwrap(), ctx);
            assert_eq!(Context::from_index(ctx.index()), ctx);
        }
        assert!(matches!(
            "xz".parse::<Context>(),
            Err(Error::Invalid { .. })
        ));
    }
}
