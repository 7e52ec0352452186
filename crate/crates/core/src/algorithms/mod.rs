//! Path-following drivers, initialization and baseline adapters.

pub mod closure;

pub use closure::{close_aux, margins, Target};
pub mod run;

pub use run::{
    audit, find_initial_point, fit_budgets, run_maxmin_dl, run_mode, run_path_following, seed_point, Audit, IterRecord, RunSettings, RunTrace,
    Termination, AUDIT_SLACK, MONOTONE_SLACK, POWER_SLACK,
};
pub mod schemes;

pub use schemes::{block_shares, cell_rates, channels_for, objective_value, run_scheme, scheme_instances, SchemeOutcome};
