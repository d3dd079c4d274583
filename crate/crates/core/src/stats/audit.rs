//! Post-selection audit: a local model observed through post-selection can
//! exceed 2 by at most `2(1 − δ)`, where `δ` is the probability of the
//! hidden-variable set on which every context's pair would be retained.
//! So `S ≤ 4 − 2δ`.
//!
//! For models with per-setting instruments the retained set of context
//! `(x, y)` is `{A_x ≠ 0, B_y ≠ 0}` on the coupling space and `δ` is the
//! all-click mass of the joint 4-tuple law. For time-tag models it is the
//! set where the two clicks fall within the coincidence window.

use serde::Serialize;

use super::chsh::chsh_exact;
use crate::error::{Error, Result};
use crate::exact::ExactCorrelations;
use crate::model::{Model, ModelKind};
use crate::prob::{format_rational, int, to_f64, Prob};
use crate::processing::{all_context_coincidence_mass, exact_windowed};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub model: String,
    pub kind: ModelKind,
    pub window: Option<f64>,
    pub delta: String,
    pub s_exact: String,
    pub bound: String,
    pub delta_f64: f64,
    pub s_f64: f64,
    pub bound_f64: f64,
    pub holds: bool,
    #[serde(skip)]
    pub exact: (Prob, Prob, Prob),
}

/// `δ`, the exact post-selected `S_max` and `bound = 4 − 2δ`.
pub fn larsson_gill_audit(model: &Model, window: Option<f64>) -> Result<AuditReport> {
    let (delta, exact) =
        match model.kind() {
            ModelKind::ContextualCorrelated => return Err(Error::UnsupportedKind {
                operation: "post-selection audit",
                kind: model.kind(),
                reason:
                    "per-context instrument measures have no common hidden-variable space on which \
                         the retained sets can be intersected"
                        .into(),
            }),
            ModelKind::TimeTag => {
                let w = window.ok_or_else(|| {
                    Error::Protocol("auditing a time-tag model needs a coincidence window".into())
                })?;
                (
                    all_context_coincidence_mass(model, w)?,
                    exact_windowed(model, w)?,
                )
            }
            _ => (
                model.enumerate_joint()?.all_click_mass(),
                ExactCorrelations::of(model)?,
            ),
        };
    let e = exact.post_correlations().ok_or_else(|| {
        Error::Undefined(
            "some context has zero coincidence probability, post-selected S undefined".into(),
        )
    })?;
    let s = chsh_exact(&e).max;
    let bound = int(4) - int(2) * &delta;
    Ok(AuditReport {
        model: model.name().to_owned(),
        kind: model.kind(),
        window: if model.kind() == ModelKind::TimeTag {
            window
        } else {
            None
        },
        delta: format_rational(&delta),
        s_exact: format_rational(&s),
        bound: format_rational(&bound),
        delta_f64: to_f64(&delta),
        s_f64: to_f64(&s),
        bound_f64: to_f64(&bound),
        holds: s <= bound,
        exact: (delta, s, bound),
    })
}
