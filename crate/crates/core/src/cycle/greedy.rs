use serde::Serialize;

use super::{enumerate_cmos, j_hat, tsp_heuristic, CmoType, Cycle, CycleMetric, LowerBound, Region};
use crate::error::Result;

#[derive(Clone, Copy, Debug)]
pub struct GreedyConfig {
    /// Minimum accepted gain, relative to the current `Ĵ`.
    pub eps_rel: f64,
    /// Cap on accepted modifications per loop.
    pub max_steps: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            eps_rel: 1e-9,
            max_steps: 1000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GreedyStep {
    pub kind: CmoType,
    pub position: usize,
    pub j_hat_before: f64,
    pub j_hat_after: f64,
}

#[derive(Clone, Debug)]
pub struct GreedyResult {
    pub seed: Cycle,
    pub seed_j_hat: f64,
    pub cycle: Cycle,
    pub metric: CycleMetric,
    pub steps: Vec<GreedyStep>,
}

/// Apply the best modification of the allowed `types` while it lowers `Ĵ`
/// by at least `eps_rel · Ĵ`. Ties keep the first candidate in
/// (type, position) order.
pub fn improve_with_cmos(
    bound: &LowerBound,
    region: &Region,
    mut cycle: Cycle,
    required: &[usize],
    types: &[CmoType],
    cfg: &GreedyConfig,
    steps: &mut Vec<GreedyStep>,
) -> (Cycle, CycleMetric) {
    let mut metric = j_hat(bound, region, &cycle, required);
    for _ in 0..cfg.max_steps {
        let Some(critical) = metric.critical else { break };
        if !metric.j_hat.is_finite() {
            break;
        }
        let mut best: Option<(f64, CmoType, usize, Cycle, CycleMetric)> = None;
        for cand in enumerate_cmos(region, &cycle, &critical) {
            if !types.contains(&cand.kind) {
                continue;
            }
            let m = j_hat(bound, region, &cand.cycle, required);
            let gain = metric.j_hat - m.j_hat;
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, cand.kind, cand.position, cand.cycle, m));
            }
        }
        let Some((gain, kind, position, next, m)) = best else { break };
        if !(gain >= cfg.eps_rel * metric.j_hat && gain > 0.0) {
            break;
        }
        steps.push(GreedyStep {
            kind,
            position,
            j_hat_before: metric.j_hat,
            j_hat_after: m.j_hat,
        });
        cycle = next;
        metric = m;
    }
    (cycle, metric)
}

/// TSP seed, then Type I modifications, then Type II/III modifications,
/// each accepted only while it strictly lowers `Ĵ`.
pub fn greedy_construct(
    bound: &LowerBound,
    region: &Region,
    subset: &[usize],
    cfg: &GreedyConfig,
) -> Result<GreedyResult> {
    let seed = tsp_heuristic(region, subset)?;
    let seed_j_hat = j_hat(bound, region, &seed, subset).j_hat;
    let mut steps = Vec::new();
    let (cycle, _) = improve_with_cmos(
        bound,
        region,
        seed.clone(),
        subset,
        &[CmoType::I],
        cfg,
        &mut steps,
    );
    let (cycle, metric) = improve_with_cmos(
        bound,
        region,
        cycle,
        subset,
        &[CmoType::II, CmoType::III],
        cfg,
        &mut steps,
    );
    Ok(GreedyResult {
        seed,
        seed_j_hat,
        cycle,
        metric,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::SteadyTable;
    use crate::model::{Edge, MatrixNorm, TargetNetwork, TargetSpec};

    #[test]
    fn two_targets_need_no_steps() {
        let t = |id| TargetSpec::scalar(id, 0.3, 1.0, 2.0, 1.0).unwrap();
        let net = TargetNetwork::new(
            vec![t(1), t(2)],
            vec![Edge { i: 0, j: 1, d: 0.7 }],
            MatrixNorm::Trace,
        )
        .unwrap();
        let steady = SteadyTable::new(&net).unwrap();
        let lb = LowerBound::new(&net, &steady);
        let r = greedy_construct(&lb, &Region::full(&net), &[0, 1], &GreedyConfig::default())
            .unwrap();
        assert!(r.steps.is_empty());
        assert_eq!(r.cycle.len(), 2);
    }

    #[test]
    fn hub_with_fast_unstable_target_gets_extra_visits() {
        // star: hub 0 close to everything, target 1 is fast-growing
        let targets = vec![
            TargetSpec::scalar(1, 0.1, 0.5, 2.0, 1.0).unwrap(),
            TargetSpec::scalar(2, 0.9, 2.0, 1.0, 1.0).unwrap(),
            TargetSpec::scalar(3, 0.1, 0.5, 2.0, 1.0).unwrap(),
            TargetSpec::scalar(4, 0.1, 0.5, 2.0, 1.0).unwrap(),
        ];
        let edges = vec![
            Edge { i: 0, j: 1, d: 0.2 },
            Edge { i: 0, j: 2, d: 1.0 },
            Edge { i: 0, j: 3, d: 1.0 },
            Edge { i: 2, j: 3, d: 1.5 },
        ];
        let net = TargetNetwork::new(targets, edges, MatrixNorm::Trace).unwrap();
        let steady = SteadyTable::new(&net).unwrap();
        let lb = LowerBound::new(&net, &steady);
        let r = greedy_construct(&lb, &Region::full(&net), &[0, 1, 2, 3], &GreedyConfig::default())
            .unwrap();
        assert!(r.metric.j_hat < r.seed_j_hat);
        assert!(r.cycle.positions_of(1).len() >= 2);
        for s in &r.steps {
            assert!(s.j_hat_after < s.j_hat_before);
        }
    }
}
