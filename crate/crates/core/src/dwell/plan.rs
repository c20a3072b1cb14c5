use serde::{Deserialize, Serialize};

use super::balance::DwellConfig;
use super::golden::{golden_period_search, GoldenConfig, PeriodSearch};
use super::schedule::Schedule;
use super::DwellState;
use crate::covariance::{never_observed_cost, SteadyTable};
use crate::cycle::{tsp_heuristic, Cycle, Region};
use crate::error::{Error, Result};
use crate::model::{ShortestPaths, TargetNetwork};

#[derive(Clone, Copy, Debug)]
pub struct PlanConfig {
    pub dwell: DwellConfig,
    pub golden: GoldenConfig,
    /// Period bracket as multiples of the cycle travel time.
    pub t_min_factor: f64,
    pub t_max_factor: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            dwell: DwellConfig::default(),
            golden: GoldenConfig::default(),
            t_min_factor: 1.1,
            t_max_factor: 3.0,
        }
    }
}

impl PlanConfig {
    /// Search bracket for a cycle with the given travel time. A cycle with
    /// no travel has no natural time scale and is pinned to a unit period.
    pub fn bracket(&self, travel: f64) -> (f64, f64) {
        if travel > 0.0 {
            (self.t_min_factor * travel, self.t_max_factor * travel)
        } else {
            (1.0, 1.0)
        }
    }
}

/// Predicted peak of one target under a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetPeak {
    pub target: usize,
    /// In the cycle at all.
    pub visited: bool,
    /// Positive total dwell.
    pub active: bool,
    /// Cost at the start of each visit (empty if not visited).
    pub visit_peaks: Vec<f64>,
    /// Worst cost over the period; the never-observed cost when idle.
    pub peak: f64,
}

/// A single agent's periodic schedule and its predicted cost.
#[derive(Clone, Debug)]
pub struct Plan {
    pub cycle: Cycle,
    /// Dwell per cycle position.
    pub dwells: Vec<f64>,
    /// Travel time of the leg leaving each cycle position.
    pub legs: Vec<f64>,
    pub period: f64,
    /// Balanced peak of the active targets.
    pub g_con: f64,
    /// `max_{i,k} g_i(‖P̄_i^k‖)` over every target the plan is responsible
    /// for, idle and excluded ones included.
    pub j_pred: f64,
    pub peaks: Vec<TargetPeak>,
    /// Targets the plan is responsible for but never visits.
    pub excluded: Vec<usize>,
}

impl Plan {
    /// Plan for `scope` from a balanced state. Targets of `scope` outside
    /// the cycle are charged their never-observed cost.
    pub fn from_state(
        network: &TargetNetwork,
        steady: &SteadyTable,
        legs: Vec<f64>,
        state: &DwellState,
        scope: &[usize],
    ) -> Plan {
        let mut all: Vec<usize> = scope.iter().chain(&state.targets).copied().collect();
        all.sort_unstable();
        all.dedup();
        let totals = state.totals();
        let mut excluded = Vec::new();
        let peaks: Vec<TargetPeak> = all
            .into_iter()
            .map(|t| match state.targets.iter().position(|&x| x == t) {
                Some(gi) => TargetPeak {
                    target: t,
                    visited: true,
                    active: totals[gi] > 0.0,
                    visit_peaks: state.visit_peaks[gi].clone(),
                    peak: state.peaks[gi],
                },
                None => {
                    excluded.push(t);
                    TargetPeak {
                        target: t,
                        visited: false,
                        active: false,
                        visit_peaks: Vec::new(),
                        peak: never_observed_cost(network, steady, t),
                    }
                }
            })
            .collect();
        let j_pred = peaks.iter().fold(0.0_f64, |m, p| m.max(p.peak));
        Plan {
            cycle: state.cycle.clone(),
            dwells: state.dwells.clone(),
            legs,
            period: state.period,
            g_con: state.g_avg,
            j_pred,
            peaks,
            excluded,
        }
    }

    pub fn travel_time(&self) -> f64 {
        self.legs.iter().sum()
    }

    /// Evaluator for this plan's cycle and legs.
    pub fn schedule<'a>(&self, network: &'a TargetNetwork, steady: &'a SteadyTable) -> Schedule<'a> {
        Schedule::with_legs(network, steady, self.cycle.clone(), self.legs.clone())
    }

    /// Targets the plan covers (visited or excluded), ascending.
    pub fn scope(&self) -> Vec<usize> {
        self.peaks.iter().map(|p| p.target).collect()
    }

    pub fn peak_of(&self, target: usize) -> Option<&TargetPeak> {
        self.peaks.iter().find(|p| p.target == target)
    }
}

/// A plan with the period search that produced it.
#[derive(Clone, Debug)]
pub struct PlannedCycle {
    pub plan: Plan,
    pub search: PeriodSearch,
}

/// Optimise dwells and period for a fixed cycle.
pub fn plan_cycle(
    network: &TargetNetwork,
    steady: &SteadyTable,
    sp: &ShortestPaths,
    cycle: &Cycle,
    scope: &[usize],
    cfg: &PlanConfig,
) -> Result<PlannedCycle> {
    let schedule = Schedule::new(network, steady, sp, cycle.clone());
    let (lo, hi) = cfg.bracket(schedule.travel_time());
    let search = golden_period_search(&schedule, lo, hi, &cfg.dwell, &cfg.golden)?;
    let plan = Plan::from_state(network, steady, schedule.legs().to_vec(), &search.state, scope);
    Ok(PlannedCycle { plan, search })
}

/// Why the exclusion loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionStop {
    /// Every visited target ended up active.
    AllActive,
    /// The last excluded target's never-observed cost is above the new
    /// balanced peak.
    InactiveBottleneck,
    /// Nothing left to exclude.
    SingleTarget,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExclusionRound {
    pub remaining: Vec<usize>,
    pub period: f64,
    pub g_con: f64,
    pub j_pred: f64,
    /// Cheapest target of the round and its cost.
    pub argmin: usize,
    pub c_min: f64,
}

#[derive(Clone, Debug)]
pub struct ConstrainedPlan {
    pub plan: Plan,
    pub search: PeriodSearch,
    pub rounds: Vec<ExclusionRound>,
    pub stop: ExclusionStop,
}

/// Relative tolerance of the two stopping comparisons.
const EXCLUSION_TOL: f64 = 1e-6;

/// Shortest tour through the targets, balanced dwells and searched
/// period; targets that end idle are dropped one at a time (cheapest
/// first) while that keeps helping.
pub fn optimal_visiting_sequence_constrained(
    network: &TargetNetwork,
    steady: &SteadyTable,
    region: &Region,
    scope: &[usize],
    cfg: &PlanConfig,
) -> Result<ConstrainedPlan> {
    if scope.is_empty() {
        return Err(Error::InvalidArgument("nothing to plan for".into()));
    }
    let mut remaining: Vec<usize> = scope.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    let optimise = |remaining: &[usize]| -> Result<PlannedCycle> {
        let cycle = tsp_heuristic(region, remaining)?;
        plan_cycle(network, steady, &region.sp, &cycle, scope, cfg)
    };
    let mut current = optimise(&remaining)?;
    let mut rounds = Vec::new();
    let stop = loop {
        let state = &current.search.state;
        let (gi, c_min) = state
            .peaks
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (k, &c)| if c < b.1 { (k, c) } else { b });
        let argmin = state.targets[gi];
        let g_con = state.g_avg;
        rounds.push(ExclusionRound {
            remaining: remaining.clone(),
            period: state.period,
            g_con,
            j_pred: current.plan.j_pred,
            argmin,
            c_min,
        });
        let all_active = state.active_set.len() == state.targets.len();
        if all_active || c_min >= g_con * (1.0 - EXCLUSION_TOL) {
            break ExclusionStop::AllActive;
        }
        if remaining.len() == 1 {
            break ExclusionStop::SingleTarget;
        }
        remaining.retain(|&t| t != argmin);
        current = optimise(&remaining)?;
        if current.search.state.g_avg < c_min * (1.0 - EXCLUSION_TOL) {
            let state = &current.search.state;
            rounds.push(ExclusionRound {
                remaining: remaining.clone(),
                period: state.period,
                g_con: state.g_avg,
                j_pred: current.plan.j_pred,
                argmin,
                c_min,
            });
            break ExclusionStop::InactiveBottleneck;
        }
    };
    Ok(ConstrainedPlan {
        plan: current.plan,
        search: current.search,
        rounds,
        stop,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TargetPeakDoc {
    pub id: i64,
    pub visited: bool,
    pub active: bool,
    pub visit_peaks: Vec<f64>,
    /// `null` stands for an unbounded never-observed cost.
    #[serde(with = "crate::serde_inf")]
    pub peak: f64,
}

/// Plan as written to disk, with target ids instead of indices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PlanDoc {
    pub cycle: Vec<i64>,
    pub dwells: Vec<f64>,
    pub legs: Vec<f64>,
    pub period: f64,
    pub g_con: f64,
    #[serde(with = "crate::serde_inf")]
    pub j_pred: f64,
    pub targets: Vec<TargetPeakDoc>,
    pub excluded: Vec<i64>,
}

impl Plan {
    pub fn to_doc(&self, network: &TargetNetwork) -> PlanDoc {
        let id = |i: usize| network.targets[i].id;
        PlanDoc {
            cycle: self.cycle.visits().iter().map(|&i| id(i)).collect(),
            dwells: self.dwells.clone(),
            legs: self.legs.clone(),
            period: self.period,
            g_con: self.g_con,
            j_pred: self.j_pred,
            targets: self
                .peaks
                .iter()
                .map(|p| TargetPeakDoc {
                    id: id(p.target),
                    visited: p.visited,
                    active: p.active,
                    visit_peaks: p.visit_peaks.clone(),
                    peak: p.peak,
                })
                .collect(),
            excluded: self.excluded.iter().map(|&i| id(i)).collect(),
        }
    }

    pub fn from_doc(doc: &PlanDoc, network: &TargetNetwork) -> Result<Plan> {
        let index = |id: i64| {
            network
                .index_of(id)
                .ok_or_else(|| Error::Schema(format!("plan refers to unknown target id {id}")))
        };
        let visits = doc.cycle.iter().map(|&i| index(i)).collect::<Result<Vec<_>>>()?;
        if visits.is_empty() || doc.dwells.len() != visits.len() || doc.legs.len() != visits.len() {
            return Err(Error::Schema(
                "plan needs one dwell and one leg per cycle visit".into(),
            ));
        }
        if doc
            .dwells
            .iter()
            .chain(&doc.legs)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::Schema("dwells and legs must be non-negative".into()));
        }
        let total: f64 = doc.dwells.iter().chain(&doc.legs).sum();
        if !(doc.period > 0.0) || (total - doc.period).abs() > 1e-9 * doc.period.max(1.0) {
            return Err(Error::Schema(format!(
                "period {} does not equal dwells plus legs {total}",
                doc.period
            )));
        }
        let peaks = doc
            .targets
            .iter()
            .map(|p| {
                Ok(TargetPeak {
                    target: index(p.id)?,
                    visited: p.visited,
                    active: p.active,
                    visit_peaks: p.visit_peaks.clone(),
                    peak: p.peak,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Plan {
            cycle: Cycle::new(visits),
            dwells: doc.dwells.clone(),
            legs: doc.legs.clone(),
            period: doc.period,
            g_con: doc.g_con,
            j_pred: doc.j_pred,
            peaks,
            excluded: doc.excluded.iter().map(|&i| index(i)).collect::<Result<Vec<_>>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, MatrixNorm, TargetSpec};

    fn net(extra: Option<TargetSpec>) -> TargetNetwork {
        let mut targets = vec![
            TargetSpec::scalar(1, 0.35, 1.19, 2.31, 1.0).unwrap(),
            TargetSpec::scalar(2, 0.19, 1.26, 7.15, 1.0).unwrap(),
            TargetSpec::scalar(3, 0.46, 0.88, 4.20, 1.0).unwrap(),
        ];
        let pos = [[0.0, 0.0], [0.3, 0.1], [0.1, 0.35], [0.2, 0.2]];
        if let Some(t) = extra {
            targets.push(t);
        }
        let n = targets.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = f64::hypot(pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]);
                edges.push(Edge { i, j, d });
            }
        }
        TargetNetwork::new(targets, edges, MatrixNorm::Trace).unwrap()
    }

    #[test]
    fn unstable_targets_are_never_excluded() {
        let net = net(None);
        let st = SteadyTable::new(&net).unwrap();
        let r = optimal_visiting_sequence_constrained(
            &net,
            &st,
            &Region::full(&net),
            &[0, 1, 2],
            &PlanConfig::default(),
        )
        .unwrap();
        assert_eq!(r.stop, ExclusionStop::AllActive);
        assert!(r.plan.excluded.is_empty());
        assert_eq!(r.rounds.len(), 1);
        let spread = r.search.state.spread();
        assert!(spread <= 1e-6, "{spread}");
    }

    #[test]
    fn cheap_stable_target_is_excluded() {
        let extra = TargetSpec::scalar(4, -5.0, 0.01, 1.0, 1.0).unwrap();
        let net = net(Some(extra));
        let st = SteadyTable::new(&net).unwrap();
        let r = optimal_visiting_sequence_constrained(
            &net,
            &st,
            &Region::full(&net),
            &[0, 1, 2, 3],
            &PlanConfig::default(),
        )
        .unwrap();
        assert_eq!(r.plan.excluded, vec![3]);
        assert!(!r.plan.cycle.contains(3));
        assert!((r.plan.peak_of(3).unwrap().peak - 0.001).abs() < 1e-12);
    }

    #[test]
    fn document_round_trip() {
        let net = net(None);
        let st = SteadyTable::new(&net).unwrap();
        let region = Region::full(&net);
        let cycle = Cycle::new(vec![0, 1, 2]);
        let p = plan_cycle(&net, &st, &region.sp, &cycle, &[0, 1, 2], &PlanConfig::default())
            .unwrap()
            .plan;
        let doc = p.to_doc(&net);
        let text = serde_json::to_string(&doc).unwrap();
        let back: PlanDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        let q = Plan::from_doc(&back, &net).unwrap();
        assert_eq!(q.cycle, p.cycle);
        assert_eq!(q.dwells, p.dwells);
    }
}
