//! Joint-probability feasibility for four ±1 variables `A_x, A_x', B_y, B_y'`.
//!
//! Given the four pairwise distributions, a joint distribution on the 16
//! assignments reproducing all of them exists iff the linear system
//! `A q = b, q ≥ 0` below is feasible. Feasibility is decided by the simplex;
//! infeasibility comes with a Farkas certificate, feasibility with a
//! witness. [`fine_inequalities`] gives the same answer by the eight
//! CHSH inequalities, an independent route used for cross-checking.

pub mod simplex;

use std::path::Path;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use self::simplex::{solve, LpOutcome, FEASIBILITY_EPS};
use crate::error::{Error, Result};
use crate::exact::ExactCorrelations;
use crate::model::{Context, Label, Model, ModelKind};
use crate::prob::{format_rational, to_f64, Prob};
use crate::stats::{CorrelationTable, ODD_SIGN_PATTERNS};

/// Tolerance on marginal agreement and cell normalization.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Cell order within a context: `(++), (+−), (−+), (−−)`.
pub const CELLS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Values `(A_x, A_x', B_y, B_y')` of assignment `v`: bit `3 − k` set
/// means variable `k` is `−1`.
pub fn assignment(v: usize) -> [i8; 4] {
    std::array::from_fn(|k| if v >> (3 - k) & 1 == 1 { -1 } else { 1 })
}

/// Four pairwise ±1 distributions in canonical context order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSystem {
    pub cells: [[f64; 4]; 4],
}

impl PairwiseSystem {
    /// From correlations and marginals:
    /// `P(a, b) = (1 + a·⟨A⟩ + b·⟨B⟩ + a·b·E) / 4`.
    pub fn from_moments(
        correlations: [f64; 4],
        marginals_a: [f64; 4],
        marginals_b: [f64; 4],
    ) -> Self {
        let cells = std::array::from_fn(|c| {
            CELLS.map(|(a, b)| {
                let (a, b) = (a as f64, b as f64);
                (1.0 + a * marginals_a[c] + b * marginals_b[c] + a * b * correlations[c]) / 4.0
            })
        });
        PairwiseSystem { cells }
    }

    /// Unbiased marginals.
    pub fn from_correlations(correlations: [f64; 4]) -> Self {
        Self::from_moments(correlations, [0.0; 4], [0.0; 4])
    }

    /// From a (post-selected) correlation table.
    pub fn from_table(table: &CorrelationTable) -> Result<Self> {
        let mut e = [0.0; 4];
        let mut ma = [0.0; 4];
        let mut mb = [0.0; 4];
        for ctx in Context::ALL {
            let est = table.get(ctx)?;
            e[ctx.index()] = est.correlation;
            ma[ctx.index()] = est.marginal_a;
            mb[ctx.index()] = est.marginal_b;
        }
        Ok(Self::from_moments(e, ma, mb))
    }

    /// Post-selected distributions of exact statistics.
    pub fn from_exact(exact: &ExactCorrelations) -> Result<Self> {
        let mut cells = [[0.0; 4]; 4];
        for c in &exact.contexts {
            let d = c.dist.post_selected().ok_or_else(|| {
                Error::Undefined(format!(
                    "context {} has zero coincidence probability",
                    c.context
                ))
            })?;
            cells[c.context.index()] = d.signed_cells().map(|p| to_f64(&p));
        }
        Ok(PairwiseSystem { cells })
    }

    pub fn correlations(&self) -> [f64; 4] {
        self.cells.map(|c| c[0] - c[1] - c[2] + c[3])
    }

    /// `(⟨A⟩, ⟨B⟩)` of one context.
    pub fn marginals(&self, ctx: Context) -> (f64, f64) {
        let c = self.cells[ctx.index()];
        (c[0] + c[1] - c[2] - c[3], c[0] - c[1] + c[2] - c[3])
    }

    fn validate(&self) -> Result<()> {
        for ctx in Context::ALL {
            let c = &self.cells[ctx.index()];
            for (k, &p) in c.iter().enumerate() {
                if !p.is_finite() || p < -CONSISTENCY_TOL {
                    return Err(Error::invalid(
                        format!("{}.{}", ctx.token(), ["p_pp", "p_pm", "p_mp", "p_mm"][k]),
                        format!("probability {p} is negative or not finite"),
                    ));
                }
            }
            let total: f64 = c.iter().sum();
            if (total - 1.0).abs() > CONSISTENCY_TOL {
                return Err(Error::invalid(
                    ctx.token(),
                    format!("cells sum to {total}, not 1"),
                ));
            }
        }
        Ok(())
    }

    /// First variable whose marginal differs between its two contexts.
    pub fn marginal_mismatch(&self) -> Option<MarginalMismatch> {
        let checks = [
            ("A_x", Context::XY, Context::XYP, true),
            ("A_x'", Context::XPY, Context::XPYP, true),
            ("B_y", Context::XY, Context::XPY, false),
            ("B_y'", Context::XYP, Context::XPYP, false),
        ];
        for (variable, c1, c2, alice) in checks {
            let pick = |c| {
                if alice {
                    self.marginals(c).0
                } else {
                    self.marginals(c).1
                }
            };
            let (m1, m2) = (pick(c1), pick(c2));
            if (m1 - m2).abs() > CONSISTENCY_TOL {
                return Some(MarginalMismatch {
                    variable: variable.into(),
                    contexts: [c1, c2],
                    values: [m1, m2],
                });
            }
        }
        None
    }

    fn lp_rows(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut a = Vec::with_capacity(16);
        let mut b = Vec::with_capacity(16);
        for ctx in Context::ALL {
            for (k, &(va, vb)) in CELLS.iter().enumerate() {
                let row = (0..16)
                    .map(|v| {
                        let s = assignment(v);
                        if s[ctx.alice.index()] == va && s[2 + ctx.bob.index()] == vb {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                a.push(row);
                b.push(self.cells[ctx.index()][k]);
            }
        }
        (a, b)
    }

    /// Parses `context,p_pp,p_pm,p_mp,p_mm` with one row per context.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let expected = ["context", "p_pp", "p_pm", "p_mp", "p_mm"];
        if headers.iter().ne(expected) {
            return Err(Error::Dataset(format!(
                "{}: expected header {}",
                path.display(),
                expected.join(",")
            )));
        }
        let mut cells: [Option<[f64; 4]>; 4] = [None; 4];
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let ctx: Context = rec[0]
                .trim()
                .parse()
                .map_err(|e: Error| Error::Dataset(format!("{}:{line}: {e}", path.display())))?;
            let mut row = [0.0; 4];
            for k in 0..4 {
                let text = rec.get(k + 1).unwrap_or("").trim();
                row[k] = text.parse().map_err(|_| {
                    Error::Dataset(format!(
                        "{}:{line}: `{}`: not a number: `{text}`",
                        path.display(),
                        expected[k + 1]
                    ))
                })?;
            }
            if cells[ctx.index()].replace(row).is_some() {
                return Err(Error::Dataset(format!(
                    "{}:{line}: context {} repeated",
                    path.display(),
                    ctx.token()
                )));
            }
        }
        let mut out = [[0.0; 4]; 4];
        for ctx in Context::ALL {
            out[ctx.index()] = cells[ctx.index()].ok_or_else(|| {
                Error::Dataset(format!(
                    "{}: context {} missing",
                    path.display(),
                    ctx.token()
                ))
            })?;
        }
        Ok(PairwiseSystem { cells: out })
    }

    /// Parses JSON, either `{"xy": [p_pp, p_pm, p_mp, p_mm], ...}` or
    /// `{"correlations": [E_xy, E_xyp, E_xpy, E_xpyp]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged, deny_unknown_fields)]
        enum Input {
            Correlations {
                correlations: [f64; 4],
            },
            Cells {
                xy: [f64; 4],
                xyp: [f64; 4],
                xpy: [f64; 4],
                xpyp: [f64; 4],
            },
        }
        let input: Input = crate::models::parse_json_at(text, "table")?;
        Ok(match input {
            Input::Correlations { correlations } => Self::from_correlations(correlations),
            Input::Cells { xy, xyp, xpy, xpyp } => PairwiseSystem {
                cells: [xy, xyp, xpy, xpyp],
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalMismatch {
    pub variable: String,
    pub contexts: [Context; 2],
    pub values: [f64; 2],
}

/// A joint distribution on the 16 assignments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointWitness {
    pub weights: [f64; 16],
}

impl JointWitness {
    /// Largest absolute difference between the witness's pairwise
    /// projections and the system.
    pub fn residual(&self, system: &PairwiseSystem) -> f64 {
        let mut worst: f64 = 0.0;
        for ctx in Context::ALL {
            for (k, &(va, vb)) in CELLS.iter().enumerate() {
                let mass: f64 = (0..16)
                    .filter(|&v| {
                        let s = assignment(v);
                        s[ctx.alice.index()] == va && s[2 + ctx.bob.index()] == vb
                    })
                    .map(|v| self.weights[v])
                    .sum();
                worst = worst.max((mass - system.cells[ctx.index()][k]).abs());
            }
        }
        worst
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Multipliers `y` (one per context cell) with `Σ y·[assignment matches]
/// ≤ 0` for every assignment and `Σ y·p > 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarkasCertificate {
    pub y: [[f64; 4]; 4],
}

impl FarkasCertificate {
    /// `(max_v (Aᵀy)_v, bᵀy)`.
    pub fn evaluate(&self, system: &PairwiseSystem) -> (f64, f64) {
        let mut worst = f64::NEG_INFINITY;
        for v in 0..16 {
            let s = assignment(v);
            let mut col = 0.0;
            for ctx in Context::ALL {
                let k = CELLS
                    .iter()
                    .position(|&(a, b)| a == s[ctx.alice.index()] && b == s[2 + ctx.bob.index()])
                    .expect("cell");
                col += self.y[ctx.index()][k];
            }
            worst = worst.max(col);
        }
        let by = (0..4)
            .flat_map(|c| (0..4).map(move |k| (c, k)))
            .map(|(c, k)| self.y[c][k] * system.cells[c][k])
            .sum();
        (worst, by)
    }

    /// Checks the certificate independently of the solver.
    pub fn verify(&self, system: &PairwiseSystem) -> bool {
        let (worst, by) = self.evaluate(system);
        worst <= 1e-9 && by > 1e-9
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JpVerdict {
    /// A witness exists with every weight positive.
    Feasible,
    /// Feasible, but every witness has a zero weight: the point lies on the
    /// boundary of the local polytope.
    MarginalFeasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JpResult {
    pub verdict: JpVerdict,
    pub witness: Option<JointWitness>,
    pub certificate: Option<FarkasCertificate>,
    pub inconsistent_marginal: Option<MarginalMismatch>,
    /// Largest attainable minimum witness weight.
    pub max_min_weight: Option<f64>,
    /// `Σ s·E − 2` for the eight odd sign patterns.
    pub fine: [f64; 8],
}

fn certificate_from(y: Vec<f64>) -> FarkasCertificate {
    FarkasCertificate {
        y: std::array::from_fn(|c| std::array::from_fn(|k| y[c * 4 + k])),
    }
}

/// Decides whether a joint distribution reproduces the four pairwise
/// distributions.
pub fn jp_feasible(system: &PairwiseSystem) -> Result<JpResult> {
    system.validate()?;
    let fine = fine_inequalities(&system.correlations());
    let mismatch = system.marginal_mismatch();
    let (a, b) = system.lp_rows();
    let result = match solve(&a, &b, &[0.0; 16]) {
        LpOutcome::Infeasible { farkas, .. } => JpResult {
            verdict: JpVerdict::Infeasible,
            witness: None,
            certificate: Some(certificate_from(farkas)),
            inconsistent_marginal: mismatch,
            max_min_weight: None,
            fine,
        },
        LpOutcome::Unbounded => unreachable!("zero objective cannot be unbounded"),
        LpOutcome::Optimal { x, .. } => {
            let witness = JointWitness {
                weights: x.try_into().expect("16 weights"),
            };
            // max t with q = q' + t·1, q' ≥ 0: each row covers four assignments.
            let mut a2 = a.clone();
            for row in &mut a2 {
                row.push(4.0);
            }
            let mut cost = vec![0.0; 16];
            cost.push(-1.0);
            let t = match solve(&a2, &b, &cost) {
                LpOutcome::Optimal { objective, .. } => -objective,
                _ => 0.0,
            };
            let verdict = if t > FEASIBILITY_EPS {
                JpVerdict::Feasible
            } else {
                JpVerdict::MarginalFeasible
            };
            JpResult {
                verdict,
                witness: Some(witness),
                certificate: None,
                inconsistent_marginal: mismatch,
                max_min_weight: Some(t),
                fine,
            }
        }
    };
    if result.inconsistent_marginal.is_none() {
        let fine_ok = result.fine.iter().all(|&f| f <= 1e-7);
        let lp_ok = result.verdict != JpVerdict::Infeasible;
        debug_assert_eq!(
            fine_ok, lp_ok,
            "LP and CHSH inequalities disagree on {system:?}"
        );
    }
    Ok(result)
}

/// `Σ s_i E_i − 2` for each odd sign pattern; all `≤ 0` iff a joint
/// distribution exists, given consistent marginals.
pub fn fine_inequalities(correlations: &[f64; 4]) -> [f64; 8] {
    ODD_SIGN_PATTERNS.map(|s| crate::stats::chsh_with_signs(correlations, s) - 2.0)
}

/// Residuals of the coupling equalities of a contextual product model:
/// the four pairwise expectations and the four single-variable means of the
/// coupling minus those of the product model's context distributions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingResiduals {
    pub names: [&'static str; 8],
    pub residuals: [Prob; 8],
}

impl CouplingResiduals {
    pub fn all_zero(&self) -> bool {
        self.residuals.iter().all(Zero::is_zero)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.names
                .iter()
                .zip(&self.residuals)
                .map(|(n, r)| (n.to_string(), serde_json::Value::String(format_rational(r))))
                .collect(),
        )
    }
}

pub fn coupling_equalities(product: &Model, coupling: &Model) -> Result<CouplingResiduals> {
    if product.kind() != ModelKind::ContextualProduct || coupling.kind() != ModelKind::CoupledJoint
    {
        return Err(Error::Undefined(format!(
            "coupling equalities compare a contextual_product model with a coupled_joint model, got {} and {}",
            product.kind(),
            coupling.kind()
        )));
    }
    let joint = coupling.enumerate_joint()?;
    let mut residuals: [Prob; 8] = Default::default();
    for ctx in Context::ALL {
        let direct = product.enumerate_context(ctx)?.correlation();
        residuals[ctx.index()] = joint.project(ctx).correlation() - direct;
    }
    // Means: A_x from (x,y), A_x' from (x',y), B_y from (x,y), B_y' from (x,y').
    let sources = [
        (0, Context::new(Label::Primary, Label::Primary), true),
        (1, Context::new(Label::Alternate, Label::Primary), true),
        (2, Context::new(Label::Primary, Label::Primary), false),
        (3, Context::new(Label::Primary, Label::Alternate), false),
    ];
    for (var, ctx, alice) in sources {
        let d = product.enumerate_context(ctx)?;
        let direct = if alice {
            d.marginal_a()
        } else {
            d.marginal_b()
        };
        residuals[4 + var] = joint.mean(var) - direct;
    }
    Ok(CouplingResiduals {
        names: [
            "E_xy", "E_xyp", "E_xpy", "E_xpyp", "A_x", "A_xp", "B_y", "B_yp",
        ],
        residuals,
    })
}

/// Random mixture of the 16 deterministic assignments: always feasible.
pub fn random_local_system(seed: u64) -> PairwiseSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let mut cells = [[0.0; 4]; 4];
    for (v, wv) in w.iter().enumerate() {
        let s = assignment(v);
        for ctx in Context::ALL {
            let k = CELLS
                .iter()
                .position(|&(a, b)| a == s[ctx.alice.index()] && b == s[2 + ctx.bob.index()])
                .unwrap();
            cells[ctx.index()][k] += wv;
        }
    }
    PairwiseSystem { cells }
}

/// `λ · PR + (1 − λ) · noise` with unbiased marginals and `E = λ·(1,1,1,−1)`;
/// `S = 4λ`, infeasible iff `λ > 1/2`.
pub fn pr_mixture(lambda: f64) -> PairwiseSystem {
    PairwiseSystem::from_correlations([lambda, lambda, lambda, -lambda])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pr_box_is_infeasible_with_verified_certificate() {
        let r = jp_feasible(&pr_mixture(1.0)).unwrap();
        assert_eq!(r.verdict, JpVerdict::Infeasible);
        assert!(r.certificate.unwrap().verify(&pr_mixture(1.0)));
    }

    #[test]
    fn noise_is_strictly_feasible() {
        let sys = pr_mixture(0.0);
        let r = jp_feasible(&sys).unwrap();
        assert_eq!(r.verdict, JpVerdict::Feasible);
        assert!(r.witness.unwrap().residual(&sys) < 1e-9);
        assert!((r.max_min_weight.unwrap() - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn half_pr_is_on_the_boundary() {
        let r = jp_feasible(&pr_mixture(0.5)).unwrap();
        assert_eq!(r.verdict, JpVerdict::MarginalFeasible);
    }

    #[test]
    fn inconsistent_marginals_name_the_variable() {
        let sys = PairwiseSystem::from_moments([0.0; 4], [0.5, 0.0, 0.0, 0.0], [0.0; 4]);
        let r = jp_feasible(&sys).unwrap();
        assert_eq!(r.verdict, JpVerdict::Infeasible);
        assert_eq!(r.inconsistent_marginal.unwrap().variable, "A_x");
        assert!(r.certificate.unwrap().verify(&sys));
    }

    #[test]
    fn assignment_bits() {
        assert_eq!(assignment(0), [1, 1, 1, 1]);
        assert_eq!(assignment(0b1000), [-1, 1, 1, 1]);
        assert_eq!(assignment(0b0001), [1, 1, 1, -1]);
    }
}
