//! Single-step distribution system restoration.
//!
//! A feeder and an outage go in; a mixed-integer linear program choosing bus
//! energization, switch states, regulator taps, generator modes and dispatch
//! comes out, is solved with [`dsr_milp`], and the resulting plan is checked
//! against the physical and operating rules by an independent validator.

pub mod builder;
pub mod error;
pub mod feeder;
pub mod graph;
pub mod harness;
pub mod ieee37;
pub mod plan;
pub mod validator;

pub use builder::{build, tap_ratio_table, tap_ratios, BuildOptions, DsrModel, Symbols};
pub use error::{BuildError, DsrError, FeederError, GraphError, PlanError, ScenarioError};
pub use feeder::{
    default_switch_state, derive_post_outage, load_feeder, Bus, BusId, BusKind, Edge, EdgeId, EdgeKind, Feeder,
    OutageScenario, ScenarioFile, ROOT,
};
pub use graph::{
    energized_components, enumerate_bs_paths, enumerate_cycles, enumerate_nbs_paths, is_forest, EdgeIndicator,
    IndicatorKind, Topology,
};
pub use harness::{
    aggregates_csv, records_csv, run_batch, sample_scenario, scenario_rng, solve_scenario, BatchResult, BatchSpec,
    KAggregate, ScenarioRecord, Solved,
};
pub use ieee37::{builtin_ieee37, THREE_LINE_OUTAGE};
pub use plan::{restored_load_pct, GenMode, RestorationPlan};
pub use validator::{validate, validate_with, Check, ValidationReport, Violation};
