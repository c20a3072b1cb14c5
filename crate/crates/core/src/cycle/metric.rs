use super::{Cycle, Region};
use crate::covariance::{lower_bound_l, never_observed_cost, SteadyTable};
use crate::model::TargetNetwork;

/// Fast evaluator of `L_i(t̄)` for every target of a network.
#[derive(Clone, Debug)]
pub struct LowerBound<'a> {
    network: &'a TargetNetwork,
    steady: &'a SteadyTable,
    scalar: Vec<Option<ScalarBound>>,
    never: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
struct ScalarBound {
    a: f64,
    q: f64,
    w_ss: f64,
    alpha: f64,
}

impl<'a> LowerBound<'a> {
    pub fn new(network: &'a TargetNetwork, steady: &'a SteadyTable) -> Self {
        let scalar = network
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                (t.dim() == 1).then(|| ScalarBound {
                    a: t.a[(0, 0)],
                    q: t.q[(0, 0)],
                    w_ss: steady.get(i).omega_ss[(0, 0)],
                    alpha: t.weight_alpha,
                })
            })
            .collect();
        let never = (0..network.len())
            .map(|i| never_observed_cost(network, steady, i))
            .collect();
        LowerBound {
            network,
            steady,
            scalar,
            never,
        }
    }

    pub fn network(&self) -> &'a TargetNetwork {
        self.network
    }

    pub fn steady(&self) -> &'a SteadyTable {
        self.steady
    }

    /// `L_i(t̄)`.
    pub fn eval(&self, i: usize, t_bar: f64) -> f64 {
        match self.scalar[i] {
            Some(s) => {
                let x = 2.0 * s.a * t_bar;
                let growth = if x.abs() > 1e-12 {
                    s.q * x.exp_m1() / (2.0 * s.a)
                } else {
                    s.q * t_bar * (1.0 + 0.5 * x)
                };
                s.alpha * (x.exp() * s.w_ss + growth)
            }
            None => lower_bound_l(self.network, self.steady, i, t_bar),
        }
    }

    /// `g_i(‖Ω^∞‖)`, or `+∞` when the drift is not Hurwitz.
    pub fn never_observed(&self, i: usize) -> f64 {
        self.never[i]
    }
}

/// Critical visit: the instance whose sub-cycle attains `Ĵ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Critical {
    pub target: usize,
    pub ordinal: usize,
    pub position: usize,
}

#[derive(Clone, Debug)]
pub struct CycleMetric {
    pub j_hat: f64,
    /// `None` when the maximum comes from a required target the cycle
    /// never visits.
    pub critical: Option<Critical>,
    /// `L(w)` per cycle position.
    pub instance_l: Vec<f64>,
    /// `w` per cycle position.
    pub revisit: Vec<f64>,
    /// Required targets the cycle does not visit.
    pub missing: Vec<usize>,
}

/// `Ĵ = max_i L_i(t̄_i)` over the cycle's targets, with required targets
/// that the cycle omits contributing their never-observed cost.
pub fn j_hat(bound: &LowerBound, region: &Region, cycle: &Cycle, required: &[usize]) -> CycleMetric {
    j_hat_with_legs(bound, cycle, &cycle.leg_times(&region.sp), required)
}

/// [`j_hat`] for explicit leg travel times.
pub fn j_hat_with_legs(
    bound: &LowerBound,
    cycle: &Cycle,
    legs: &[f64],
    required: &[usize],
) -> CycleMetric {
    let ids = &bound.network.targets;
    let revisit = cycle.revisit_times_with(legs);
    let instance_l: Vec<f64> = cycle
        .visits()
        .iter()
        .zip(&revisit)
        .map(|(&i, &w)| bound.eval(i, w))
        .collect();
    let ordinals = cycle.ordinals();

    let mut best: Option<(f64, Critical)> = None;
    for (pos, &l) in instance_l.iter().enumerate() {
        let cand = Critical {
            target: cycle.visits()[pos],
            ordinal: ordinals[pos],
            position: pos,
        };
        let better = match &best {
            None => true,
            Some((bl, bc)) => {
                l > *bl
                    || (l == *bl
                        && (ids[cand.target].id, cand.ordinal) < (ids[bc.target].id, bc.ordinal))
            }
        };
        if better {
            best = Some((l, cand));
        }
    }
    let (mut value, critical) = best.expect("cycle is non-empty");
    let mut critical = Some(critical);

    let missing: Vec<usize> = required
        .iter()
        .copied()
        .filter(|&i| !cycle.contains(i))
        .collect();
    for &i in &missing {
        let c = bound.never_observed(i);
        if c > value {
            value = c;
            critical = None;
        }
    }
    CycleMetric {
        j_hat: value,
        critical,
        instance_l,
        revisit,
        missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MatrixNorm, TargetSpec};

    fn network() -> TargetNetwork {
        let t = |id, a| TargetSpec::scalar(id, a, 1.0, 2.0, 1.0).unwrap();
        let edges = vec![crate::model::Edge { i: 0, j: 1, d: 1.0 }];
        TargetNetwork::new(vec![t(1, 0.3), t(2, -0.5)], edges, MatrixNorm::Trace).unwrap()
    }

    #[test]
    fn scalar_fast_path_matches_engine() {
        let net = network();
        let steady = SteadyTable::new(&net).unwrap();
        let lb = LowerBound::new(&net, &steady);
        for i in 0..2 {
            for t in [0.0, 0.3, 2.0, 7.5] {
                let fast = lb.eval(i, t);
                let slow = lower_bound_l(&net, &steady, i, t);
                assert!((fast - slow).abs() <= 1e-13 * slow.abs().max(1.0));
            }
        }
        assert!(lb.eval(0, 2.0) > lb.eval(0, 1.0));
        assert!(lb.eval(0, 1.0) > lb.eval(0, 0.0));
    }

    #[test]
    fn two_target_cycle() {
        let net = network();
        let steady = SteadyTable::new(&net).unwrap();
        let lb = LowerBound::new(&net, &steady);
        let region = Region::full(&net);
        let m = j_hat(&lb, &region, &Cycle::new(vec![0, 1]), &[0, 1]);
        assert_eq!(m.revisit, vec![2.0, 2.0]);
        assert_eq!(m.j_hat, lb.eval(0, 2.0).max(lb.eval(1, 2.0)));

        let single = j_hat(&lb, &region, &Cycle::new(vec![0]), &[0]);
        assert_eq!(single.j_hat, lb.eval(0, 0.0));

        // the unstable target left out makes the metric unbounded
        let missing = j_hat(&lb, &region, &Cycle::new(vec![1]), &[0, 1]);
        assert!(missing.j_hat.is_infinite());
        assert!(missing.critical.is_none());
        assert_eq!(missing.missing, vec![0]);
    }
}
