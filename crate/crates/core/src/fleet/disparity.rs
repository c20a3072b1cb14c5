use serde::Serialize;

use super::ceo::{enumerate_ceos, CeoType};
use crate::cycle::{improve_with_cmos, j_hat, CmoType, Cycle, GreedyConfig, LowerBound, Region};

/// Symmetric pairwise disparity with a zero diagonal.
#[derive(Clone, Debug, Serialize)]
pub struct DisparityMatrix {
    pub d: Vec<Vec<f64>>,
}

impl DisparityMatrix {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Median of the off-diagonal entries (`1` when there are none or the
    /// median is not positive).
    pub fn median(&self) -> f64 {
        let mut v: Vec<f64> = (0..self.len())
            .flat_map(|i| (i + 1..self.len()).map(move |j| (i, j)))
            .map(|(i, j)| self.d[i][j])
            .filter(|x| x.is_finite())
            .collect();
        if v.is_empty() {
            return 1.0;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let med = if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        };
        if med > 0.0 {
            med
        } else {
            1.0
        }
    }
}

/// One step of a greedy expansion from a start target.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionStep {
    pub added: usize,
    pub kind: CeoType,
    pub cycle: Vec<usize>,
    pub j_hat: f64,
}

/// Best expansion of `cycle` by any external target of `candidates`:
/// `(gain, target, kind, expanded cycle, Ĵ)`. Ties keep the first in
/// (target, type, position) order.
pub(crate) fn best_expansion(
    bound: &LowerBound,
    region: &Region,
    cycle: &Cycle,
    current: f64,
    candidates: &[usize],
) -> Option<(f64, usize, CeoType, Cycle, f64)> {
    let mut best: Option<(f64, usize, CeoType, Cycle, f64)> = None;
    let members = cycle.targets();
    let mut required = Vec::with_capacity(members.len() + 1);
    for &j in candidates {
        required.clear();
        required.extend_from_slice(&members);
        required.push(j);
        for cand in enumerate_ceos(cycle, j) {
            let value = j_hat(bound, region, &cand.cycle, &required).j_hat;
            let gain = current - value;
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, j, cand.kind, cand.cycle, value));
            }
        }
    }
    best
}

/// Grow a cycle from `start` until it covers every target of the region.
/// After each expansion, Type II/III modifications are applied while they
/// lower `Ĵ`.
pub fn expand_from(bound: &LowerBound, region: &Region, start: usize) -> Vec<ExpansionStep> {
    let cfg = GreedyConfig::default();
    let mut cycle = Cycle::new(vec![start]);
    let mut current = j_hat(bound, region, &cycle, &[start]).j_hat;
    let mut external: Vec<usize> = region.members.iter().copied().filter(|&j| j != start).collect();
    let mut steps = Vec::with_capacity(external.len());
    while !external.is_empty() {
        let (_, j, kind, expanded, _) = best_expansion(bound, region, &cycle, current, &external)
            .expect("an external target always has an expansion");
        external.retain(|&x| x != j);
        let required = expanded.targets();
        let (refined, metric) = improve_with_cmos(
            bound,
            region,
            expanded,
            &required,
            &[CmoType::II, CmoType::III],
            &cfg,
            &mut Vec::new(),
        );
        current = metric.j_hat;
        steps.push(ExpansionStep {
            added: j,
            kind,
            cycle: refined.visits().to_vec(),
            j_hat: current,
        });
        cycle = refined;
    }
    steps
}

/// Covering-cycle-cost disparity. Every sweep adds `½ Ĵ` to `d(i, j)` and
/// `d(j, i)` at the step where `j` enters the cycle grown from `i`, so each
/// pair collects the average of its two sweeps.
pub fn disparity_matrix(bound: &LowerBound, region: &Region) -> DisparityMatrix {
    let n = bound.network().len();
    let sweeps: Vec<(usize, Vec<ExpansionStep>)> = std::thread::scope(|s| {
        let handles: Vec<_> = region
            .members
            .iter()
            .map(|&i| s.spawn(move || (i, expand_from(bound, region, i))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("disparity sweep panicked"))
            .collect()
    });
    let mut d = vec![vec![0.0; n]; n];
    for (i, steps) in sweeps {
        let mut seen = vec![false; n];
        seen[i] = true;
        for st in steps {
            for &j in &st.cycle {
                if !seen[j] {
                    seen[j] = true;
                    d[i][j] += 0.5 * st.j_hat;
                    d[j][i] += 0.5 * st.j_hat;
                }
            }
        }
    }
    DisparityMatrix { d }
}

/// Shortest-path travel time as a disparity, for comparison.
pub fn travel_disparity(region: &Region, n: usize) -> DisparityMatrix {
    let mut d = vec![vec![0.0; n]; n];
    for &i in &region.members {
        for &j in &region.members {
            if i != j {
                d[i][j] = region.sp.time(i, j);
            }
        }
    }
    DisparityMatrix { d }
}
