//! Scenario catalog, configuration, suites, and reports.

mod catalog;
mod config;
mod report;
mod suites;

pub use catalog::{
    catalog, find_scenario, scenario_names, AnalyticMd, Jacobian, JacobianFn, LinearWitness,
    MdFn, Scenario, ScenarioInfo, W1pExpectation, L1_CELLS,
};
pub use config::{
    GaugeSection, LabConfig, OutputSection, ScenarioSection, ScheduleSection, SobolevSection,
    SuiteSection,
};
pub use report::{fmt_f64, row, Assertion, Comparison, ExperimentReport, Table, TableSummary, Versions};
pub use suites::{
    converged_seminorm, md_at_point, resolve, ring_gauge, run, run_suite, show, RunOutcome,
    Suite, SuiteSettings, AXIOM_TOL, DUAL_FIT_TOL, EXACT_TOL, MONOTONE_SLACK, TREND_TAIL,
    NORM_IDENTITY_SLACK, PAIRING_IDENTITY_TOL, TRUNCATION_PAIRS,
};
