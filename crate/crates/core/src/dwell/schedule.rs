use crate::covariance::{
    never_observed_cost, periodic_steady_state, scalar_visit_peaks, PeriodicConfig, SteadyTable,
    TargetTimeline,
};
use crate::cycle::Cycle;
use crate::error::{Error, Result};
use crate::model::{ShortestPaths, TargetNetwork};

use super::timeline::{timeline_from_schedule, VisitTimeline};

#[derive(Clone, Copy, Debug)]
enum Kind {
    Scalar { a: f64, q: f64, g: f64, alpha: f64 },
    Matrix,
}

/// The visits of one distinct target of the cycle.
#[derive(Clone, Debug)]
pub struct Group {
    pub target: usize,
    pub positions: Vec<usize>,
    kind: Kind,
    never: f64,
}

/// A cycle with fixed legs, ready to evaluate peak costs for any dwell
/// vector.
#[derive(Clone, Debug)]
pub struct Schedule<'a> {
    network: &'a TargetNetwork,
    steady: &'a SteadyTable,
    cycle: Cycle,
    legs: Vec<f64>,
    travel: f64,
    groups: Vec<Group>,
    /// Group index of each cycle position.
    group_of: Vec<usize>,
    periodic: PeriodicConfig,
}

impl<'a> Schedule<'a> {
    pub fn new(
        network: &'a TargetNetwork,
        steady: &'a SteadyTable,
        sp: &ShortestPaths,
        cycle: Cycle,
    ) -> Self {
        let legs = cycle.leg_times(sp);
        Self::with_legs(network, steady, cycle, legs)
    }

    pub fn with_legs(
        network: &'a TargetNetwork,
        steady: &'a SteadyTable,
        cycle: Cycle,
        legs: Vec<f64>,
    ) -> Self {
        assert_eq!(legs.len(), cycle.len(), "one leg per visit");
        let travel = legs.iter().sum();
        let mut group_of = vec![0; cycle.len()];
        let groups: Vec<Group> = cycle
            .targets()
            .into_iter()
            .enumerate()
            .map(|(gi, target)| {
                let positions = cycle.positions_of(target);
                for &p in &positions {
                    group_of[p] = gi;
                }
                let t = &network.targets[target];
                let kind = if t.dim() == 1 {
                    Kind::Scalar {
                        a: t.a[(0, 0)],
                        q: t.q[(0, 0)],
                        g: t.g[(0, 0)],
                        alpha: t.weight_alpha,
                    }
                } else {
                    Kind::Matrix
                };
                Group {
                    target,
                    positions,
                    kind,
                    never: never_observed_cost(network, steady, target),
                }
            })
            .collect();
        Schedule {
            network,
            steady,
            cycle,
            legs,
            travel,
            groups,
            group_of,
            periodic: PeriodicConfig {
                tol: 1e-12,
                max_iters: 10_000,
            },
        }
    }

    pub fn network(&self) -> &'a TargetNetwork {
        self.network
    }

    pub fn steady(&self) -> &'a SteadyTable {
        self.steady
    }

    pub fn cycle(&self) -> &Cycle {
        &self.cycle
    }

    pub fn legs(&self) -> &[f64] {
        &self.legs
    }

    pub fn travel_time(&self) -> f64 {
        self.travel
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_of(&self, position: usize) -> usize {
        self.group_of[position]
    }

    pub fn is_single_visit(&self) -> bool {
        self.groups.iter().all(|g| g.positions.len() == 1)
    }

    pub fn timeline(&self, dwells: &[f64]) -> Result<VisitTimeline> {
        timeline_from_schedule(&self.cycle, dwells, &self.legs)
    }

    /// `t_off` of every visit of group `gi`: legs plus the dwells of other
    /// visits up to the next visit of the same target.
    pub fn off_times(&self, gi: usize, dwells: &[f64]) -> Vec<f64> {
        let n = self.cycle.len();
        let pos = &self.groups[gi].positions;
        let m = pos.len();
        (0..m)
            .map(|k| {
                let stop = pos[(k + 1) % m];
                let mut p = pos[k];
                let mut off = self.legs[p];
                p = (p + 1) % n;
                while p != stop {
                    off += dwells[p] + self.legs[p];
                    p = (p + 1) % n;
                }
                off
            })
            .collect()
    }

    /// Cost `g(‖P̄^k‖)` at the start of every visit of group `gi`. A target
    /// with no dwell at all sits at its never-observed cost.
    pub fn visit_peaks(&self, gi: usize, on: &[f64], off: &[f64]) -> Result<Vec<f64>> {
        let group = &self.groups[gi];
        if !on.iter().any(|v| *v > 0.0) {
            return Ok(vec![group.never; on.len()]);
        }
        match group.kind {
            Kind::Scalar { a, q, g, alpha } => {
                let mut out = Vec::with_capacity(on.len());
                scalar_visit_peaks(a, q, g, on, off, &self.periodic, &mut out)?;
                out.iter_mut().for_each(|w| *w *= alpha);
                Ok(out)
            }
            Kind::Matrix => {
                let tl = TargetTimeline::new(on.to_vec(), off.to_vec());
                let target = &self.network.targets[group.target];
                let peaks = periodic_steady_state(target, self.steady.get(group.target), &tl, &self.periodic)?;
                Ok(peaks
                    .upper
                    .iter()
                    .map(|w| self.network.cost(group.target, w))
                    .collect())
            }
        }
    }

    /// Visit peaks of group `gi` under the full dwell vector.
    pub fn group_peaks(&self, gi: usize, dwells: &[f64]) -> Result<Vec<f64>> {
        let on: Vec<f64> = self.groups[gi].positions.iter().map(|&p| dwells[p]).collect();
        let off = self.off_times(gi, dwells);
        self.visit_peaks(gi, &on, &off)
    }

    /// Visit peaks of every group.
    pub fn evaluate(&self, dwells: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(dwells)?;
        (0..self.groups.len()).map(|gi| self.group_peaks(gi, dwells)).collect()
    }

    /// `max_{i,k} g_i(‖P̄_i^k‖)` over the targets of the cycle.
    pub fn cost(&self, dwells: &[f64]) -> Result<f64> {
        Ok(self
            .evaluate(dwells)?
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(*v)))
    }

    fn check(&self, dwells: &[f64]) -> Result<()> {
        if dwells.len() != self.cycle.len() {
            return Err(Error::InvalidArgument(format!(
                "{} dwells for {} visits",
                dwells.len(),
                self.cycle.len()
            )));
        }
        if dwells.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "dwells must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::periodic_steady_state;
    use crate::model::{Edge, MatrixNorm, TargetSpec};

    fn net() -> TargetNetwork {
        let targets = vec![
            TargetSpec::scalar(1, 0.3, 1.2, 2.3, 1.0).unwrap(),
            TargetSpec::scalar(2, 0.2, 1.3, 7.1, 2.0).unwrap(),
            TargetSpec::scalar(3, 0.4, 0.9, 4.2, 1.0).unwrap(),
        ];
        let edges = vec![
            Edge { i: 0, j: 1, d: 0.3 },
            Edge { i: 1, j: 2, d: 0.4 },
        ];
        TargetNetwork::new(targets, edges, MatrixNorm::Trace).unwrap()
    }

    #[test]
    fn scalar_fast_path_matches_engine() {
        let net = net();
        let st = SteadyTable::new(&net).unwrap();
        let s = Schedule::new(&net, &st, &net.shortest, Cycle::new(vec![0, 1, 0, 2]));
        let dwells = [0.3, 0.5, 0.2, 0.6];
        let peaks = s.evaluate(&dwells).unwrap();
        let tl = s.timeline(&dwells).unwrap();
        for (gi, tv) in tl.targets.iter().enumerate() {
            let p = periodic_steady_state(
                &net.targets[tv.target],
                st.get(tv.target),
                &tv.timeline,
                &PeriodicConfig::default(),
            )
            .unwrap();
            for (k, w) in p.upper.iter().enumerate() {
                let want = net.cost(tv.target, w);
                assert!((peaks[gi][k] - want).abs() < 1e-9 * want);
            }
            for (a, b) in s.off_times(gi, &dwells).iter().zip(&tv.timeline.off) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn idle_target_sits_at_never_observed_cost() {
        let targets = vec![
            TargetSpec::scalar(1, 0.3, 1.2, 2.3, 1.0).unwrap(),
            TargetSpec::scalar(2, -1.0, 0.5, 1.0, 1.0).unwrap(),
        ];
        let net = TargetNetwork::new(targets, vec![Edge { i: 0, j: 1, d: 0.2 }], MatrixNorm::Trace)
            .unwrap();
        let st = SteadyTable::new(&net).unwrap();
        let s = Schedule::new(&net, &st, &net.shortest, Cycle::new(vec![0, 1]));
        let p = s.evaluate(&[1.0, 0.0]).unwrap();
        assert!((p[1][0] - 0.25).abs() < 1e-12);
    }
}
