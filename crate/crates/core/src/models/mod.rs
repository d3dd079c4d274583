//! Model constructors: one builder per model family, the optional coupling
//! of a contextual product model, and the shipped demo recipes.

mod demos;
pub mod generators;
mod recipe;

use num_traits::{One, Signed, Zero};

pub use demos::{demo_model, demo_recipe, DEMO_NAMES};
pub use recipe::{
    AlicePair, AngleHook, BobPair, ContextQuad, ContextualCorrelatedParams,
    ContextualProductParams, DeterministicLocalParams, InstrumentWeights, Matrix, ModelRecipe,
    RecipeParams, StochasticLocalParams, TimeTagDelays, TimeTagParams,
};

use crate::error::{Error, Result};
use crate::model::{
    units_to_ticks, Angles, Context, Delays, Instruments, Label, Model, ModelKind, ModelParts,
    Outcome, OutcomeTable,
};
use crate::prob::{parse_weights, to_f64, Prob, ProbTable, WeightValue, NORMALIZATION_TOLERANCE};

const P: &str = "recipe.parameters";

/// Builds any recipe.
pub fn build(recipe: &ModelRecipe) -> Result<Model> {
    let name = recipe.name.clone();
    match &recipe.params {
        RecipeParams::DeterministicLocal(p) => build_deterministic_local(name, p),
        RecipeParams::StochasticLocal(p) => build_stochastic_local(name, p),
        RecipeParams::ContextualProduct(p) => build_contextual_product(name, p),
        RecipeParams::ContextualCorrelated(p) => build_contextual_correlated(name, p),
        RecipeParams::TimeTag(p) => build_timetag_model(name, p),
    }
}

/// Local model with definite ±1 outcomes `A(x, λ1)`, `B(y, λ2)`.
pub fn build_deterministic_local(name: String, p: &DeterministicLocalParams) -> Result<Model> {
    let source = matrix_table(&format!("{P}.source"), &p.source)?;
    let alice = OutcomeTable::new(
        &format!("{P}.a"),
        source.dims()[0],
        [1, 1],
        [p.a.x.clone(), p.a.xp.clone()],
    )?;
    let bob = OutcomeTable::new(
        &format!("{P}.b"),
        source.dims()[1],
        [1, 1],
        [p.b.y.clone(), p.b.yp.clone()],
    )?;
    Model::from_parts(ModelParts {
        name,
        kind: ModelKind::DeterministicLocal,
        source,
        instruments: point_instruments(),
        alice,
        bob,
        delays: None,
        angles: None,
    })
}

/// Local model with setting-dependent outcome probabilities.
///
/// The randomness is folded into a per-setting instrument variable uniform on
/// `[0, 1)`: the interval is cut at every distinct `P(+1 | λ)` and the outcome
/// is `+1` on the cells below the threshold, so all zero-noise recipes reduce
/// to a single instrument cell and enumerate identically to the deterministic
/// constructor.
pub fn build_stochastic_local(name: String, p: &StochasticLocalParams) -> Result<Model> {
    let source = matrix_table(&format!("{P}.source"), &p.source)?;
    let (ix, ox) = fold_stochastic(&format!("{P}.a.x"), &p.a.x)?;
    let (ixp, oxp) = fold_stochastic(&format!("{P}.a.xp"), &p.a.xp)?;
    let (iy, oy) = fold_stochastic(&format!("{P}.b.y"), &p.b.y)?;
    let (iyp, oyp) = fold_stochastic(&format!("{P}.b.yp"), &p.b.yp)?;
    let alice = OutcomeTable::new(
        &format!("{P}.a"),
        source.dims()[0],
        [ix.len(), ixp.len()],
        [ox, oxp],
    )?;
    let bob = OutcomeTable::new(
        &format!("{P}.b"),
        source.dims()[1],
        [iy.len(), iyp.len()],
        [oy, oyp],
    )?;
    Model::from_parts(ModelParts {
        name,
        kind: ModelKind::StochasticLocal,
        source,
        instruments: Instruments::PerSetting {
            alice: [ix, ixp],
            bob: [iy, iyp],
        },
        alice,
        bob,
        delays: None,
        angles: None,
    })
}

/// Contextual model with independent per-setting instrument variables and
/// ternary outcomes `A(x, λ1, λx) ∈ {−1, 0, +1}`.
pub fn build_contextual_product(name: String, p: &ContextualProductParams) -> Result<Model> {
    let source = matrix_table(&format!("{P}.source"), &p.source)?;
    let w = &p.instruments;
    let ix = vector_table(&format!("{P}.instruments.x"), &w.x)?;
    let ixp = vector_table(&format!("{P}.instruments.xp"), &w.xp)?;
    let iy = vector_table(&format!("{P}.instruments.y"), &w.y)?;
    let iyp = vector_table(&format!("{P}.instruments.yp"), &w.yp)?;
    let alice = outcome_matrix(
        &format!("{P}.a"),
        source.dims()[0],
        [ix.len(), ixp.len()],
        [&p.a.x, &p.a.xp],
    )?;
    let bob = outcome_matrix(
        &format!("{P}.b"),
        source.dims()[1],
        [iy.len(), iyp.len()],
        [&p.b.y, &p.b.yp],
    )?;
    Model::from_parts(ModelParts {
        name,
        kind: ModelKind::ContextualProduct,
        source,
        instruments: Instruments::PerSetting {
            alice: [ix, ixp],
            bob: [iy, iyp],
        },
        alice,
        bob,
        delays: None,
        angles: None,
    })
}

/// Contextual model whose instrument variables are drawn jointly per context
/// from `p_xy(λx, λy)`. Outcomes are ±1.
pub fn build_contextual_correlated(name: String, p: &ContextualCorrelatedParams) -> Result<Model> {
    let source = matrix_table(&format!("{P}.source"), &p.source)?;
    let sizes_a = [
        row_width(&format!("{P}.a.x"), &p.a.x)?,
        row_width(&format!("{P}.a.xp"), &p.a.xp)?,
    ];
    let sizes_b = [
        row_width(&format!("{P}.b.y"), &p.b.y)?,
        row_width(&format!("{P}.b.yp"), &p.b.yp)?,
    ];
    let alice = outcome_matrix(
        &format!("{P}.a"),
        source.dims()[0],
        sizes_a,
        [&p.a.x, &p.a.xp],
    )?;
    let bob = outcome_matrix(
        &format!("{P}.b"),
        source.dims()[1],
        sizes_b,
        [&p.b.y, &p.b.yp],
    )?;
    let (tables, angles) = match (&p.instruments, &p.angle_hook) {
        (Some(quad), None) => {
            let quad = quad.clone().into_array();
            let mut tables = Vec::with_capacity(4);
            for (ctx, m) in Context::ALL.into_iter().zip(&quad) {
                tables.push(matrix_table(
                    &format!("{P}.instruments.{}", ctx.token()),
                    m,
                )?);
            }
            (vec_to_array(tables), None)
        }
        (
            None,
            Some(AngleHook::Malus {
                angles,
                parallel,
                perpendicular,
            }),
        ) => {
            let par = matrix_table(&format!("{P}.angle_hook.parallel"), parallel)?;
            let perp = matrix_table(&format!("{P}.angle_hook.perpendicular"), perpendicular)?;
            if par.dims() != perp.dims() {
                return Err(Error::invalid(
                    format!("{P}.angle_hook.perpendicular"),
                    "shape differs from the parallel table",
                ));
            }
            let tables = angle_tables(angles, |cos_theta| malus_table(cos_theta, &par, &perp))?;
            (tables, Some(*angles))
        }
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                format!("{P}.angle_hook"),
                "give either explicit instrument tables or an angle hook, not both",
            ))
        }
        (None, None) => {
            return Err(Error::invalid(
                format!("{P}.instruments"),
                "missing: give per-context instrument tables or an angle hook",
            ))
        }
    };
    Model::from_parts(ModelParts {
        name,
        kind: ModelKind::ContextualCorrelated,
        source,
        instruments: Instruments::PerContext(tables),
        alice,
        bob,
        delays: None,
        angles,
    })
}

/// Contextual correlated model whose joint instrument table in each context
/// is `hook(cos θ)`, `θ` being the relative angle `θ_b − θ_a`.
pub fn build_contextual_correlated_with_hook(
    name: String,
    source: ProbTable,
    alice: OutcomeTable,
    bob: OutcomeTable,
    angles: Angles,
    hook: impl Fn(f64) -> Result<ProbTable>,
) -> Result<Model> {
    let tables = angle_tables(&angles, hook)?;
    Model::from_parts(ModelParts {
        name,
        kind: ModelKind::ContextualCorrelated,
        source,
        instruments: Instruments::PerContext(tables),
        alice,
        bob,
        delays: None,
        angles: Some(angles),
    })
}

fn angle_tables(
    angles: &Angles,
    hook: impl Fn(f64) -> Result<ProbTable>,
) -> Result<[ProbTable; 4]> {
    let mut out = Vec::with_capacity(4);
    for ctx in Context::ALL {
        out.push(hook(angles.relative(ctx).cos())?);
    }
    Ok(vec_to_array(out))
}

/// `cos²θ · parallel + (1 − cos²θ) · perpendicular`, exact in the binary
/// value of `cos²θ`.
pub fn malus_table(
    cos_theta: f64,
    parallel: &ProbTable,
    perpendicular: &ProbTable,
) -> Result<ProbTable> {
    let w = crate::prob::from_f64((cos_theta * cos_theta).clamp(0.0, 1.0))
        .ok_or_else(|| Error::invalid("angles", "non-finite angle"))?;
    let rest = Prob::one() - &w;
    let weights = parallel
        .weights()
        .iter()
        .zip(perpendicular.weights())
        .map(|(p, q)| &w * p + &rest * q)
        .collect();
    ProbTable::exact("angle_hook", parallel.dims().to_vec(), weights)
}

/// Local ±1 base model plus per-outcome click delays.
pub fn build_timetag_model(name: String, p: &TimeTagParams) -> Result<Model> {
    if !matches!(
        p.base.kind(),
        ModelKind::DeterministicLocal | ModelKind::StochasticLocal
    ) {
        return Err(Error::invalid(
            format!("{P}.base.kind"),
            "time-tag base must be deterministic_local or stochastic_local",
        ));
    }
    let base = build(&p.base)?;
    let mut parts = base.into_parts();
    let expand =
        |path: String, table: &OutcomeTable, label: Label, delays: &[f64]| -> Result<Vec<i64>> {
            if delays.len() != table.source_size {
                return Err(Error::invalid(
                    path,
                    format!(
                        "expected {} delays, found {}",
                        table.source_size,
                        delays.len()
                    ),
                ));
            }
            let size = table.instrument_sizes[label.index()];
            let mut out = Vec::with_capacity(delays.len() * size);
            for (i, &d) in delays.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::invalid(
                        format!("{path}[{i}]"),
                        "delays must be finite and nonnegative",
                    ));
                }
                out.extend(std::iter::repeat(units_to_ticks(d)).take(size));
            }
            Ok(out)
        };
    let d = &p.delays;
    let delays = Delays {
        alice: [
            expand(
                format!("{P}.delays.a.x"),
                &parts.alice,
                Label::Primary,
                &d.a.x,
            )?,
            expand(
                format!("{P}.delays.a.xp"),
                &parts.alice,
                Label::Alternate,
                &d.a.xp,
            )?,
        ],
        bob: [
            expand(
                format!("{P}.delays.b.y"),
                &parts.bob,
                Label::Primary,
                &d.b.y,
            )?,
            expand(
                format!("{P}.delays.b.yp"),
                &parts.bob,
                Label::Alternate,
                &d.b.yp,
            )?,
        ],
    };
    parts.name = name;
    parts.kind = ModelKind::TimeTag;
    parts.delays = Some(delays);
    Model::from_parts(parts)
}

/// The probabilistic coupling of a contextual product model: the same
/// tables, read as one joint distribution of `(A_x, A_x', B_y, B_y')` on
/// `Λ1×Λ2×Λx×Λx'×Λy×Λy'`. Its context distributions are computed by
/// projecting that joint law, independently of the direct context sums.
pub fn build_gl_coupling(model: &Model) -> Result<Model> {
    if model.kind() != ModelKind::ContextualProduct {
        return Err(Error::UnsupportedKind {
            operation: "build_gl_coupling",
            kind: model.kind(),
            reason:
                "only contextual product models have independent per-setting instruments to couple"
                    .into(),
        });
    }
    let mut parts = model.parts().clone();
    parts.name = format!("{}+coupling", parts.name);
    parts.kind = ModelKind::CoupledJoint;
    Model::from_parts(parts)
}

/// Singlet-state prediction `E(a, b) = −cos 2(a − b)` for polarizer angles.
pub fn quantum_singlet_correlation(a: f64, b: f64) -> f64 {
    -(2.0 * (a - b)).cos()
}

/// Angles at which the singlet correlations reach `|S| = 2√2`.
pub fn chsh_optimal_angles() -> Angles {
    use std::f64::consts::PI;
    Angles {
        x: 0.0,
        xp: PI / 4.0,
        y: PI / 8.0,
        yp: 3.0 * PI / 8.0,
    }
}

/// Singlet correlations for all four contexts.
pub fn quantum_correlations(angles: &Angles) -> [f64; 4] {
    Context::ALL.map(|ctx| {
        quantum_singlet_correlation(angles.of(ctx.alice_setting()), angles.of(ctx.bob_setting()))
    })
}

pub(crate) fn parse_json_at<T: serde::de::DeserializeOwned>(text: &str, prefix: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    recipe::parse_at(&value, prefix)
}

fn point_instruments() -> Instruments {
    Instruments::PerSetting {
        alice: [ProbTable::point(), ProbTable::point()],
        bob: [ProbTable::point(), ProbTable::point()],
    }
}

fn vec_to_array(v: Vec<ProbTable>) -> [ProbTable; 4] {
    v.try_into().expect("four context tables")
}

fn vector_table(path: &str, w: &[WeightValue]) -> Result<ProbTable> {
    ProbTable::from_values(path, vec![w.len()], w)
}

pub(crate) fn matrix_table(path: &str, m: &Matrix) -> Result<ProbTable> {
    let cols = row_width(path, m)?;
    let flat: Vec<WeightValue> = m.iter().flatten().cloned().collect();
    ProbTable::from_values(path, vec![m.len(), cols], &flat)
}

fn row_width<T>(path: &str, m: &[Vec<T>]) -> Result<usize> {
    let cols = m.first().map(Vec::len).unwrap_or(0);
    if m.is_empty() || cols == 0 {
        return Err(Error::invalid(path, "empty table"));
    }
    if let Some(i) = m.iter().position(|r| r.len() != cols) {
        return Err(Error::invalid(
            format!("{path}[{i}]"),
            format!("ragged row: expected {cols} entries, found {}", m[i].len()),
        ));
    }
    Ok(cols)
}

fn outcome_matrix(
    path: &str,
    source_size: usize,
    sizes: [usize; 2],
    tables: [&Vec<Vec<Outcome>>; 2],
) -> Result<OutcomeTable> {
    let tokens = if path.ends_with(".a") {
        ["x", "xp"]
    } else {
        ["y", "yp"]
    };
    let mut values: [Vec<Outcome>; 2] = Default::default();
    for l in 0..2 {
        let p = format!("{path}.{}", tokens[l]);
        let t = tables[l];
        if t.len() != source_size {
            return Err(Error::invalid(
                p,
                format!(
                    "expected {source_size} rows (one per source value), found {}",
                    t.len()
                ),
            ));
        }
        if let Some(i) = t.iter().position(|r| r.len() != sizes[l]) {
            return Err(Error::invalid(
                format!("{p}[{i}]"),
                format!(
                    "expected {} entries (one per instrument value), found {}",
                    sizes[l],
                    t[i].len()
                ),
            ));
        }
        values[l] = t.iter().flatten().copied().collect();
    }
    OutcomeTable::new(path, source_size, sizes, values)
}

/// Folds per-source `[P(+1), P(−1)]` rows into an instrument table and a ±1
/// outcome table of shape `[λ_source][λ_instr]`.
fn fold_stochastic(path: &str, rows: &[[WeightValue; 2]]) -> Result<(ProbTable, Vec<Outcome>)> {
    let mut thresholds = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let (w, exact) = parse_weights(&rp, row)?;
        if let Some(j) = w.iter().position(|v| v.is_negative()) {
            return Err(Error::invalid(format!("{rp}[{j}]"), "negative probability"));
        }
        let total = &w[0] + &w[1];
        let ok = if exact {
            total.is_one()
        } else {
            (to_f64(&total) - 1.0).abs() <= NORMALIZATION_TOLERANCE
        };
        if !ok || total.is_zero() {
            return Err(Error::invalid(rp, "P(+1) + P(-1) must equal 1"));
        }
        thresholds.push(&w[0] / &total);
    }
    let mut cuts: Vec<Prob> = thresholds.clone();
    cuts.push(Prob::zero());
    cuts.push(Prob::one());
    cuts.sort();
    cuts.dedup();
    let cells: Vec<(Prob, Prob)> = cuts
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    let weights = cells.iter().map(|(lo, hi)| hi - lo).collect();
    let table = ProbTable::exact(path, vec![cells.len()], weights)?;
    let mut outcomes = Vec::with_capacity(rows.len() * cells.len());
    for q in &thresholds {
        for (_, hi) in &cells {
            outcomes.push(if hi <= q {
                Outcome::Plus
            } else {
                Outcome::Minus
            });
        }
    }
    Ok((table, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_correlations;
    use crate::prob::{int, rat};

    fn det_params() -> DeterministicLocalParams {
        DeterministicLocalParams {
            source: vec![
                vec!["1/2".into(), "0".into()],
                vec!["0".into(), "1/2".into()],
            ],
            a: AlicePair {
                x: vec![Outcome::Plus, Outcome::Minus],
                xp: vec![Outcome::Plus, Outcome::Plus],
            },
            b: BobPair {
                y: vec![Outcome::Plus, Outcome::Minus],
                yp: vec![Outcome::Minus, Outcome::Plus],
            },
        }
    }

    #[test]
    fn zero_noise_stochastic_matches_deterministic() {
        let det = build_deterministic_local("d".into(), &det_params()).unwrap();
        let to_row = |o: &Outcome| -> [WeightValue; 2] {
            if *o == Outcome::Plus {
                ["1".into(), "0".into()]
            } else {
                ["0".into(), "1".into()]
            }
        };
        let d = det_params();
        let sto = StochasticLocalParams {
            source: d.source.clone(),
            a: AlicePair {
                x: d.a.x.iter().map(to_row).collect(),
                xp: d.a.xp.iter().map(to_row).collect(),
            },
            b: BobPair {
                y: d.b.y.iter().map(to_row).collect(),
                yp: d.b.yp.iter().map(to_row).collect(),
            },
        };
        let sto = build_stochastic_local("s".into(), &sto).unwrap();
        assert_eq!(sto.alice_table().instrument_sizes, [1, 1]);
        assert_eq!(
            exact_correlations(&det).unwrap(),
            exact_correlations(&sto).unwrap()
        );
    }

    #[test]
    fn stochastic_fold_reproduces_conditionals() {
        let rows: Vec<[WeightValue; 2]> = vec![
            ["1/3".into(), "2/3".into()],
            ["3/4".into(), "1/4".into()],
            ["1/3".into(), "2/3".into()],
        ];
        let (table, outcomes) = fold_stochastic("t", &rows).unwrap();
        assert_eq!(table.len(), 3);
        let expected = [rat(1, 3), rat(3, 4), rat(1, 3)];
        for (s, q) in expected.iter().enumerate() {
            let mut plus = Prob::zero();
            for i in 0..table.len() {
                if outcomes[s * table.len() + i] == Outcome::Plus {
                    plus += table.flat(i);
                }
            }
            assert_eq!(&plus, q);
        }
    }

    #[test]
    fn coupling_preserves_context_distributions() {
        let m = demo_model("demo_eq3").unwrap();
        let c = build_gl_coupling(&m).unwrap();
        assert_eq!(c.kind(), ModelKind::CoupledJoint);
        for ctx in Context::ALL {
            assert_eq!(
                m.enumerate_context(ctx).unwrap(),
                c.enumerate_context(ctx).unwrap()
            );
        }
        assert!(build_gl_coupling(&c).is_err());
    }

    #[test]
    fn ragged_outcome_rows_name_the_row() {
        let mut p = match demo_recipe("demo_eq3").unwrap().params {
            RecipeParams::ContextualProduct(p) => p,
            _ => unreachable!(),
        };
        p.a.xp[3].pop();
        let err = build_contextual_product("bad".into(), &p).unwrap_err();
        assert!(
            err.to_string().contains("recipe.parameters.a.xp[3]"),
            "{err}"
        );
    }

    #[test]
    fn malus_hook_interpolates_exactly() {
        let par =
            ProbTable::exact("p", vec![2, 2], vec![int(0), rat(1, 2), rat(1, 2), int(0)]).unwrap();
        let perp =
            ProbTable::exact("q", vec![2, 2], vec![rat(1, 2), int(0), int(0), rat(1, 2)]).unwrap();
        assert_eq!(malus_table(1.0, &par, &perp).unwrap(), par);
        assert_eq!(malus_table(0.0, &par, &perp).unwrap(), perp);
    }

    #[test]
    fn singlet_correlation_at_optimal_angles() {
        let e = quantum_correlations(&chsh_optimal_angles());
        let s = -e[0] + e[1] - e[2] - e[3];
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}
