use serde::Serialize;

use super::{Cycle, CycleMetric, Region};
use crate::model::TargetNetwork;

#[derive(Clone, Debug, Serialize)]
pub struct DiagramInstance {
    pub target: i64,
    pub ordinal: usize,
    pub revisit_time: f64,
    pub lower_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagramLeg {
    pub from: i64,
    pub to: i64,
    pub travel_time: f64,
    /// Targets passed through without a visit.
    pub via: Vec<i64>,
}

/// Everything needed to draw a cycle diagram: visits with their revisit
/// lower bounds, legs with travel times, the metric and its critical visit.
#[derive(Clone, Debug, Serialize)]
pub struct CycleDiagram {
    pub instances: Vec<DiagramInstance>,
    pub legs: Vec<DiagramLeg>,
    pub travel_time: f64,
    pub j_hat: f64,
    pub critical: Option<(i64, usize)>,
    pub missing: Vec<i64>,
}

pub fn cycle_diagram(
    network: &TargetNetwork,
    region: &Region,
    cycle: &Cycle,
    metric: &CycleMetric,
) -> CycleDiagram {
    let id = |i: usize| network.targets[i].id;
    let v = cycle.visits();
    let ordinals = cycle.ordinals();
    let instances = (0..cycle.len())
        .map(|p| DiagramInstance {
            target: id(v[p]),
            ordinal: ordinals[p],
            revisit_time: metric.revisit[p],
            lower_bound: metric.instance_l[p],
        })
        .collect();
    let legs = (0..cycle.len())
        .map(|e| {
            let (a, b) = (v[e], v[cycle.next(e)]);
            DiagramLeg {
                from: id(a),
                to: id(b),
                travel_time: region.sp.time(a, b),
                via: region.sp.via(a, b).iter().map(|&x| id(x)).collect(),
            }
        })
        .collect();
    CycleDiagram {
        instances,
        legs,
        travel_time: cycle.travel_time(&region.sp),
        j_hat: metric.j_hat,
        critical: metric.critical.map(|c| (id(c.target), c.ordinal)),
        missing: metric.missing.iter().map(|&i| id(i)).collect(),
    }
}
