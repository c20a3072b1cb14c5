//! Dwell-time allocation on a fixed cycle: peak balancing by the
//! logarithmic update law, per-visit splitting, the period search and the
//! exclusion loop for constrained (visit-once) cycles.

mod balance;
mod export;
mod golden;
mod plan;
mod schedule;
mod timeline;

pub use balance::{
    balance_from, balance_multi_visit, balance_single_visit, balance_within_target,
    equal_shares, DwellConfig, DwellState, TraceRow, WithinTarget,
};
pub use export::{write_balance_csv, write_probes_csv};
pub use golden::{golden_period_search, GCon, GoldenConfig, PeriodSearch, Probe};
pub use plan::{
    optimal_visiting_sequence_constrained, plan_cycle, ConstrainedPlan, ExclusionRound,
    ExclusionStop, Plan, PlanConfig, PlanDoc, PlannedCycle, TargetPeak, TargetPeakDoc,
};
pub use schedule::{Group, Schedule};
pub use timeline::{timeline_from_schedule, TargetVisits, VisitTimeline};
