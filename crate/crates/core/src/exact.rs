//! Exact outcome distributions and the statistics derived from them.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::Result;
use crate::model::{Context, Model, Outcome};
use crate::prob::{format_rational, to_f64, Prob};
use crate::stats::{ContextEstimate, CorrelationTable, TableSource};

/// Exact distribution of `(a, b) ∈ {−1,0,1}²`, indexed by [`Outcome::index`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairDist {
    pub cells: [[Prob; 3]; 3],
}

impl PairDist {
    pub fn zero() -> Self {
        PairDist {
            cells: Default::default(),
        }
    }

    pub fn prob(&self, a: Outcome, b: Outcome) -> &Prob {
        &self.cells[a.index()][b.index()]
    }

    pub fn total(&self) -> Prob {
        self.cells.iter().flatten().sum()
    }

    /// All nine `(a, b)` pairs with their probability.
    pub fn iter(&self) -> impl Iterator<Item = ((Outcome, Outcome), &Prob)> + '_ {
        (0..9).map(move |i| {
            let (a, b) = (i / 3, i % 3);
            (
                (Outcome::from_index(a), Outcome::from_index(b)),
                &self.cells[a][b],
            )
        })
    }

    /// Pairs carrying nonzero mass.
    pub fn support(&self) -> impl Iterator<Item = ((Outcome, Outcome), Prob)> + '_ {
        self.iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(k, p)| (k, p.clone()))
    }

    fn moment(&self, f: impl Fn(i64, i64) -> i64, clicks_only: bool) -> Prob {
        let mut acc = Prob::zero();
        for ((a, b), p) in self.iter() {
            if clicks_only && !(a.is_click() && b.is_click()) {
                continue;
            }
            let w = f(a.value() as i64, b.value() as i64);
            if w != 0 && !p.is_zero() {
                acc += p * Prob::from_integer(w.into());
            }
        }
        acc
    }

    /// `E(A·B)` counting zeros.
    pub fn correlation(&self) -> Prob {
        self.moment(|a, b| a * b, false)
    }

    pub fn marginal_a(&self) -> Prob {
        self.moment(|a, _| a, false)
    }

    pub fn marginal_b(&self) -> Prob {
        self.moment(|_, b| b, false)
    }

    /// `P(A ≠ 0, B ≠ 0)`.
    pub fn coincidence(&self) -> Prob {
        self.moment(|_, _| 1, true)
    }

    /// Distribution conditioned on `A ≠ 0, B ≠ 0`; `None` when the
    /// coincidence probability is zero.
    pub fn post_selected(&self) -> Option<PairDist> {
        let c = self.coincidence();
        if c.is_zero() {
            return None;
        }
        let mut out = PairDist::zero();
        for a in [0, 2] {
            for b in [0, 2] {
                out.cells[a][b] = &self.cells[a][b] / &c;
            }
        }
        Some(out)
    }

    /// `P(a, b)` for `a, b ∈ {+1, −1}` in the order `(++, +−, −+, −−)`.
    pub fn signed_cells(&self) -> [Prob; 4] {
        [
            self.cells[2][2].clone(),
            self.cells[2][0].clone(),
            self.cells[0][2].clone(),
            self.cells[0][0].clone(),
        ]
    }
}

/// Exact distribution of `(A_x, A_x', B_y, B_y')` over `{−1,0,1}⁴`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointDist {
    cells: Vec<Prob>,
}

impl JointDist {
    pub fn zero() -> Self {
        JointDist {
            cells: vec![Prob::zero(); 81],
        }
    }

    fn flat(idx: [usize; 4]) -> usize {
        idx[0] * 27 + idx[1] * 9 + idx[2] * 3 + idx[3]
    }

    pub fn cell(&self, row: [Outcome; 4]) -> &Prob {
        &self.cells[Self::flat(row.map(Outcome::index))]
    }

    pub(crate) fn cell_mut(&mut self, idx: [usize; 4]) -> &mut Prob {
        &mut self.cells[Self::flat(idx)]
    }

    pub fn iter(&self) -> impl Iterator<Item = ([Outcome; 4], &Prob)> + '_ {
        self.cells.iter().enumerate().map(|(i, p)| {
            let row = [i / 27, (i / 9) % 3, (i / 3) % 3, i % 3].map(Outcome::from_index);
            (row, p)
        })
    }

    pub fn total(&self) -> Prob {
        self.cells.iter().sum()
    }

    /// Pairwise projection onto one context.
    pub fn project(&self, ctx: Context) -> PairDist {
        let mut out = PairDist::zero();
        for (row, p) in self.iter() {
            if p.is_zero() {
                continue;
            }
            let a = row[ctx.alice.index()];
            let b = row[2 + ctx.bob.index()];
            out.cells[a.index()][b.index()] += p;
        }
        out
    }

    /// Mass of rows in which all four outcomes are clicks.
    pub fn all_click_mass(&self) -> Prob {
        self.iter()
            .filter(|(row, _)| row.iter().all(|o| o.is_click()))
            .map(|(_, p)| p.clone())
            .sum()
    }

    /// `E` of one variable: index 0..4 is `A_x, A_x', B_y, B_y'`.
    pub fn mean(&self, var: usize) -> Prob {
        let mut acc = Prob::zero();
        for (row, p) in self.iter() {
            let v = row[var].value();
            if v != 0 && !p.is_zero() {
                acc += p * Prob::from_integer((v as i64).into());
            }
        }
        acc
    }
}

/// Post-selected moments of one context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PostMoments {
    pub correlation: Prob,
    pub marginal_a: Prob,
    pub marginal_b: Prob,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactContext {
    pub context: Context,
    pub dist: PairDist,
    pub correlation: Prob,
    pub marginal_a: Prob,
    pub marginal_b: Prob,
    pub coincidence: Prob,
    /// `None` when the coincidence probability is zero.
    pub post: Option<PostMoments>,
}

impl ExactContext {
    pub fn from_dist(context: Context, dist: PairDist) -> Self {
        let post = dist.post_selected().map(|d| PostMoments {
            correlation: d.correlation(),
            marginal_a: d.marginal_a(),
            marginal_b: d.marginal_b(),
        });
        ExactContext {
            context,
            correlation: dist.correlation(),
            marginal_a: dist.marginal_a(),
            marginal_b: dist.marginal_b(),
            coincidence: dist.coincidence(),
            post,
            dist,
        }
    }
}

/// Exact per-context statistics, raw and post-selected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactCorrelations {
    pub contexts: [ExactContext; 4],
}

impl ExactCorrelations {
    pub fn from_dists(dists: [PairDist; 4]) -> Self {
        let mut it = dists.into_iter().enumerate();
        let contexts = std::array::from_fn(|_| {
            let (i, d) = it.next().expect("four contexts");
            ExactContext::from_dist(Context::from_index(i), d)
        });
        ExactCorrelations { contexts }
    }

    pub fn of(model: &Model) -> Result<Self> {
        let mut dists: [PairDist; 4] = Default::default();
        for ctx in Context::ALL {
            dists[ctx.index()] = model.enumerate_context(ctx)?;
        }
        Ok(Self::from_dists(dists))
    }

    pub fn context(&self, ctx: Context) -> &ExactContext {
        &self.contexts[ctx.index()]
    }

    pub fn raw_correlations(&self) -> [Prob; 4] {
        self.contexts.clone().map(|c| c.correlation)
    }

    pub fn post_correlations(&self) -> Option<[Prob; 4]> {
        let mut out: [Prob; 4] = Default::default();
        for (slot, c) in out.iter_mut().zip(&self.contexts) {
            *slot = c.post.as_ref()?.correlation.clone();
        }
        Some(out)
    }

    /// Same-side marginal differences across the remote setting, in the
    /// order `Δ_A(x), Δ_A(x'), Δ_B(y), Δ_B(y')`. `None` for undefined
    /// post-selected contexts.
    pub fn signaling_deltas(&self, post_selected: bool) -> Option<[Prob; 4]> {
        let m = |ctx: Context, alice: bool| -> Option<Prob> {
            let c = self.context(ctx);
            if post_selected {
                let p = c.post.as_ref()?;
                Some(if alice {
                    p.marginal_a.clone()
                } else {
                    p.marginal_b.clone()
                })
            } else {
                Some(if alice {
                    c.marginal_a.clone()
                } else {
                    c.marginal_b.clone()
                })
            }
        };
        Some([
            m(Context::XY, true)? - m(Context::XYP, true)?,
            m(Context::XPY, true)? - m(Context::XPYP, true)?,
            m(Context::XY, false)? - m(Context::XPY, false)?,
            m(Context::XYP, false)? - m(Context::XPYP, false)?,
        ])
    }

    fn table(&self, post_selected: bool) -> CorrelationTable {
        let entries = self.contexts.clone().map(|c| {
            let (e, a, b, weight) = if post_selected {
                let p = c.post?;
                (p.correlation, p.marginal_a, p.marginal_b, c.coincidence)
            } else {
                (c.correlation, c.marginal_a, c.marginal_b, Prob::one())
            };
            Some(ContextEstimate::exact(
                to_f64(&e),
                to_f64(&a),
                to_f64(&b),
                to_f64(&weight),
            ))
        });
        CorrelationTable {
            source: if post_selected {
                TableSource::ExactFinal
            } else {
                TableSource::ExactRaw
            },
            entries,
        }
    }

    /// Raw-data table (zeros counted), standard errors zero.
    pub fn raw_table(&self) -> CorrelationTable {
        self.table(false)
    }

    /// Post-selected table; contexts with zero coincidence are undefined.
    pub fn final_table(&self) -> CorrelationTable {
        self.table(true)
    }

    /// Exact values as strings, for reports and golden files.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Row<'a> {
            context: &'a str,
            correlation: String,
            marginal_a: String,
            marginal_b: String,
            coincidence: String,
            post_correlation: Option<String>,
            post_marginal_a: Option<String>,
            post_marginal_b: Option<String>,
        }
        let rows: Vec<Row> = self
            .contexts
            .iter()
            .map(|c| Row {
                context: c.context.token(),
                correlation: format_rational(&c.correlation),
                marginal_a: format_rational(&c.marginal_a),
                marginal_b: format_rational(&c.marginal_b),
                coincidence: format_rational(&c.coincidence),
                post_correlation: c.post.as_ref().map(|p| format_rational(&p.correlation)),
                post_marginal_a: c.post.as_ref().map(|p| format_rational(&p.marginal_a)),
                post_marginal_b: c.post.as_ref().map(|p| format_rational(&p.marginal_b)),
            })
            .collect();
        serde_json::to_value(rows).expect("serializable")
    }
}

impl Default for PairDist {
    fn default() -> Self {
        PairDist::zero()
    }
}

/// Exact correlation table of a model: raw and post-selected expectations,
/// marginals and coincidence probabilities per context.
pub fn exact_correlations(model: &Model) -> Result<ExactCorrelations> {
    ExactCorrelations::of(model)
}
