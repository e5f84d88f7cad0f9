//! The extraction strategy that attains the work bound, and its building blocks.

pub mod assimilation;
pub mod extraction;
pub mod shift;

pub use assimilation::{assimilate, assimilation_indices, generalized_sum, Assimilation, AssimilationPlan};
pub use extraction::{extraction_protocol, run_protocol, ExactRun, PaddingReport, ProtocolPlan, ProtocolRun, RunMode};
pub use shift::{
    isothermal_shift, shuttle_exact, shuttle_monte_carlo, shuttle_realization, shuttle_strategy, ShiftOutcome, ShiftSpec,
    ShuttleEnumeration, ShuttleStats, ShuttleTrace, SHUTTLE_EXACT_LIMIT,
};
