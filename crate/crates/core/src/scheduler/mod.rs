//! Scheduling problem: scenario description, MILP assembly and solution mapping.

mod build;
mod chance;
mod pwl;
mod scenario;
mod schedule;

pub use build::{build_model, build_with, chp_grid, renewables, thermal_grid, variable_census, CostGrid, PeriodRenewables};
pub use chance::{chance_constraint_rows, safe_big_l, BigL, ChanceRows};
pub use pwl::{pwl_eval, pwl_segments, Segment};
pub use scenario::{apply_mode, load_scenario, read_scenario, BigLRule, BuildingSpec, ChanceFormulation, Mode, Scenario};
pub use schedule::{extract_schedule, pwl_gap_bound, solve_scenario, true_costs, Solved, BessSchedule, ChpSchedule, CostBreakdown, Schedule, ThermalSchedule};
