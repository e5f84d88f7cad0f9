//! The work-extraction game: thermalizations, level raisings and lowerings, relabellings.
//!
//! [`engine`] enumerates every branch of a strategy exactly; [`sample`] draws single
//! realizations; [`schema`] is the JSON form of a strategy.

pub mod action;
pub mod engine;
pub mod sample;
pub mod schema;

pub use action::{Action, Matrix, Strategy};
pub use engine::{
    apply_thermalization, audit_bound, enumerate_paths, extract_step, final_weights, fine_grained_matrix, prefix_levels,
    success_stats, AuditReport, Branch, ExtractOutcome, FineGrained, PathOutcome, SuccessStats, ENUMERATION_CAP,
};
pub use sample::{monte_carlo, sample_realization, wilson_interval, CompiledStrategy, Ledger, MonteCarloReport, Trace};
pub use schema::{ActionFile, StrategyFile};
