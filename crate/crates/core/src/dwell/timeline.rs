use crate::covariance::TargetTimeline;
use crate::cycle::Cycle;
use crate::error::{Error, Result};

/// The visits of one target within a cycle and its on/off pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetVisits {
    pub target: usize,
    /// Cycle positions of the visits, ascending.
    pub positions: Vec<usize>,
    pub timeline: TargetTimeline,
}

/// Every target's perspective of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct VisitTimeline {
    pub period: f64,
    /// One entry per distinct target, ascending target index.
    pub targets: Vec<TargetVisits>,
}

impl VisitTimeline {
    pub fn get(&self, target: usize) -> Option<&TargetVisits> {
        self.targets.iter().find(|t| t.target == target)
    }
}

/// Group the visits of each target: `t_on^k` is the dwell of its `k`-th
/// visit and `t_off^k` everything the agent does until the next one (legs
/// and other targets' dwells).
pub fn timeline_from_schedule(cycle: &Cycle, dwells: &[f64], legs: &[f64]) -> Result<VisitTimeline> {
    let n = cycle.len();
    if dwells.len() != n || legs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "schedule has {n} visits but {} dwells and {} legs",
            dwells.len(),
            legs.len()
        )));
    }
    if dwells.iter().chain(legs).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(
            "dwells and legs must be finite and non-negative".into(),
        ));
    }
    let mut start = vec![0.0; n + 1];
    for p in 0..n {
        start[p + 1] = start[p] + dwells[p] + legs[p];
    }
    let period = start[n];
    let targets = cycle
        .targets()
        .into_iter()
        .map(|target| {
            let positions = cycle.positions_of(target);
            let m = positions.len();
            let on: Vec<f64> = positions.iter().map(|&p| dwells[p]).collect();
            let off = (0..m)
                .map(|k| {
                    let (p, next) = (positions[k], positions[(k + 1) % m]);
                    let gap = if k + 1 < m {
                        start[next] - start[p]
                    } else {
                        period + start[next] - start[p]
                    };
                    (gap - dwells[p]).max(0.0)
                })
                .collect();
            TargetVisits {
                target,
                positions,
                timeline: TargetTimeline::new(on, off),
            }
        })
        .collect();
    Ok(VisitTimeline { period, targets })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_target_hand_sum() {
        let c = Cycle::new(vec![0, 1]);
        let tl = timeline_from_schedule(&c, &[0.5, 0.5], &[1.0, 1.0]).unwrap();
        assert_eq!(tl.period, 3.0);
        assert_eq!(tl.get(0).unwrap().timeline.off, vec![2.5]);
        assert_eq!(tl.get(1).unwrap().timeline.off, vec![2.5]);
    }

    #[test]
    fn repeated_target_off_times() {
        let c = Cycle::new(vec![0, 1, 0]);
        let (a, b, d) = (0.3, 0.7, 1.1);
        let legs = [0.4, 0.4, 0.0];
        let tl = timeline_from_schedule(&c, &[a, b, d], &legs).unwrap();
        let t0 = &tl.get(0).unwrap().timeline;
        assert!((t0.off[0] - (0.4 + b + 0.4)).abs() < 1e-15);
        assert!((t0.off[1] - 0.0).abs() < 1e-15);
        for tv in &tl.targets {
            assert!((tv.timeline.period() - tl.period).abs() < 1e-12);
        }
    }

    #[test]
    fn single_visit_no_travel() {
        let tl = timeline_from_schedule(&Cycle::new(vec![3]), &[2.0], &[0.0]).unwrap();
        assert_eq!(tl.targets[0].timeline.on, vec![2.0]);
        assert_eq!(tl.targets[0].timeline.off, vec![0.0]);
    }

    #[test]
    fn misaligned_lengths_rejected() {
        let c = Cycle::new(vec![0, 1]);
        assert!(timeline_from_schedule(&c, &[1.0], &[1.0, 1.0]).is_err());
    }
}
