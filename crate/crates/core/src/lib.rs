//! Simulation and analysis of Bell-type experiments with finite
//! hidden-variable models.
//!
//! * [`model`]: models, outcomes, settings and contexts.
//! * [`models`]: constructors for each model family and the shipped demos.
//! * [`protocols`]: context, spreadsheet and time-series protocols.
//! * [`processing`]: coincidence matching, post-selection, window scans.
//! * [`stats`]: correlations, CHSH, Eberhard, signaling, CbD, audits.
//! * [`jp`]: joint-probability feasibility with certificates.
//! * [`exact`]: exact rational enumeration used as the reference for all of
//!   the above.

#![allow(clippy::needless_range_loop)]

pub mod dataset;
pub mod error;
pub mod exact;
pub mod jp;
pub mod model;
pub mod model_file;
pub mod models;
pub mod prob;
pub mod processing;
pub mod protocols;
pub mod rng;
pub mod stats;

pub use dataset::{
    ClickEvent, ClickStream, Dataset, DatasetKind, ProtocolInfo, Provenance, Records, Schedule,
    SelectionSummary, SpreadsheetRow, Step, TrialRecord,
};
pub use error::{Error, Result};
pub use exact::{exact_correlations, ExactCorrelations, JointDist, PairDist};
pub use jp::{
    coupling_equalities, fine_inequalities, jp_feasible, FarkasCertificate, JointWitness, JpResult,
    JpVerdict, PairwiseSystem,
};
pub use model::{Angles, Context, Label, Model, ModelKind, Outcome, Setting, Side};
pub use model_file::{load_model, model_from_json_str, save_model, ModelFile};
pub use models::{build_gl_coupling, demo_model, quantum_singlet_correlation, ModelRecipe};
pub use prob::{Prob, ProbTable};
pub use processing::{
    enumerate_windowed, exact_windowed, match_coincidences, post_select, window_scan,
};
pub use protocols::{
    per_row_chsh, run_context_protocol, run_spreadsheet_protocol, run_timeseries_protocol,
};
pub use stats::{
    cbd_analysis, chsh_s, eberhard_j, estimate_correlations, larsson_gill_audit,
    nosignaling_deltas, violation_frequency, ChshValue, CorrelationTable, ReplicationProtocol,
    TableSource,
};
