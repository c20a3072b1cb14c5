//! Visiting sequences: the cycle model, the revisit lower bound `Ĵ`, a TSP
//! seed, cycle modification operations and the greedy constructor.

mod cmo;
mod diagram;
mod greedy;
mod metric;
mod tsp;

pub use cmo::{enumerate_cmos, CmoCandidate, CmoType};
pub use diagram::{cycle_diagram, CycleDiagram, DiagramInstance, DiagramLeg};
pub use greedy::{greedy_construct, improve_with_cmos, GreedyConfig, GreedyResult, GreedyStep};
pub use metric::{j_hat, j_hat_with_legs, Critical, CycleMetric, LowerBound};
pub use tsp::{nearest_neighbor_tour, tour_length, tsp_heuristic, two_opt};

use crate::model::{ShortestPaths, TargetNetwork};

/// Routing area for a planner: which targets may be visited and the fastest
/// routes between them.
#[derive(Clone, Debug)]
pub struct Region {
    pub sp: ShortestPaths,
    pub members: Vec<usize>,
    mask: Vec<bool>,
}

impl Region {
    /// The whole network.
    pub fn full(network: &TargetNetwork) -> Self {
        let members: Vec<usize> = (0..network.len()).collect();
        Region {
            sp: network.shortest.clone(),
            mask: vec![true; network.len()],
            members,
        }
    }

    /// Routes restricted to the sub-graph induced by `members`, falling
    /// back to full-network routes where the sub-graph is disconnected.
    pub fn cluster(network: &TargetNetwork, members: &[usize]) -> Self {
        let mut mask = vec![false; network.len()];
        for &m in members {
            mask[m] = true;
        }
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        Region {
            sp: ShortestPaths::within(network, &members),
            members,
            mask,
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }
}

/// A periodic visiting sequence of target indices. Every entry is a visit
/// at which the agent may dwell; consecutive entries are joined by the
/// fastest route, whose pass-through nodes are not visits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cycle {
    visits: Vec<usize>,
}

impl Cycle {
    pub fn new(visits: Vec<usize>) -> Self {
        assert!(!visits.is_empty(), "a cycle needs at least one visit");
        Cycle { visits }
    }

    pub fn visits(&self) -> &[usize] {
        &self.visits
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.visits.contains(&i)
    }

    /// Distinct targets, ascending.
    pub fn targets(&self) -> Vec<usize> {
        let mut t = self.visits.clone();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Visit ordinal (1-based, order of appearance) of every position.
    pub fn ordinals(&self) -> Vec<usize> {
        let mut seen = std::collections::HashMap::new();
        self.visits
            .iter()
            .map(|&v| {
                let c = seen.entry(v).or_insert(0usize);
                *c += 1;
                *c
            })
            .collect()
    }

    /// Positions at which target `i` is visited.
    pub fn positions_of(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.visits[p] == i).collect()
    }

    pub fn next(&self, pos: usize) -> usize {
        (pos + 1) % self.len()
    }

    /// Position of the previous visit to the same target (itself if the
    /// target is visited once).
    pub fn previous_instance(&self, pos: usize) -> usize {
        let n = self.len();
        let target = self.visits[pos];
        (1..=n)
            .map(|s| (pos + n - s) % n)
            .find(|&p| self.visits[p] == target)
            .expect("the position itself matches")
    }

    /// Travel time of leg `e`, from position `e` to the next position.
    pub fn leg_time(&self, sp: &ShortestPaths, e: usize) -> f64 {
        sp.time(self.visits[e], self.visits[self.next(e)])
    }

    pub fn leg_times(&self, sp: &ShortestPaths) -> Vec<f64> {
        (0..self.len()).map(|e| self.leg_time(sp, e)).collect()
    }

    pub fn travel_time(&self, sp: &ShortestPaths) -> f64 {
        self.leg_times(sp).iter().sum()
    }

    /// Sub-cycle travel time `w` ending at each position: the legs strictly
    /// between the previous visit to the same target and this one.
    pub fn revisit_times(&self, sp: &ShortestPaths) -> Vec<f64> {
        self.revisit_times_with(&self.leg_times(sp))
    }

    /// [`Cycle::revisit_times`] for explicit leg travel times.
    pub fn revisit_times_with(&self, legs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut prefix = vec![0.0; n + 1];
        for e in 0..n {
            prefix[e + 1] = prefix[e] + legs[e];
        }
        let total = prefix[n];
        (0..n)
            .map(|c| {
                let p = self.previous_instance(c);
                if p < c {
                    prefix[c] - prefix[p]
                } else if p > c {
                    total - (prefix[p] - prefix[c])
                } else {
                    total
                }
            })
            .collect()
    }

    /// Leg indices of the sub-cycle that ends at position `c`.
    pub fn subcycle_legs(&self, c: usize) -> Vec<usize> {
        let n = self.len();
        let p = self.previous_instance(c);
        let count = if p == c { n } else { (c + n - p) % n };
        (0..count).map(|s| (p + s) % n).collect()
    }

    /// Merge cyclically consecutive duplicate visits.
    pub fn normalized(&self) -> Cycle {
        let mut out: Vec<usize> = Vec::with_capacity(self.len());
        for &v in &self.visits {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        while out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        Cycle { visits: out }
    }

    /// Lexicographically smallest rotation, used to deduplicate cycles that
    /// differ only in their starting point.
    pub fn canonical(&self) -> Vec<usize> {
        let n = self.len();
        (0..n)
            .map(|r| (0..n).map(|k| self.visits[(r + k) % n]).collect::<Vec<_>>())
            .min()
            .expect("non-empty")
    }

    /// Cycle with the target `j` removed everywhere (`None` if nothing is
    /// left).
    pub fn without(&self, j: usize) -> Option<Cycle> {
        let v: Vec<usize> = self.visits.iter().copied().filter(|&x| x != j).collect();
        (!v.is_empty()).then(|| Cycle { visits: v }.normalized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;

    fn line(n: usize) -> ShortestPaths {
        let edges: Vec<Edge> = (0..n - 1).map(|i| Edge { i, j: i + 1, d: 1.0 }).collect();
        ShortestPaths::compute(n, &edges, None)
    }

    #[test]
    fn revisit_times_sum_to_travel() {
        let sp = line(3);
        let c = Cycle::new(vec![0, 1, 0, 2]);
        let w = c.revisit_times(&sp);
        let total = c.travel_time(&sp);
        assert_eq!(total, 1.0 + 1.0 + 2.0 + 2.0);
        assert_eq!(w[0] + w[2], total);
        assert_eq!(w[1], total);
        assert_eq!(w[3], total);
        assert_eq!(c.ordinals(), vec![1, 1, 2, 1]);
    }

    #[test]
    fn single_visit_cycle() {
        let sp = line(2);
        let c = Cycle::new(vec![1]);
        assert_eq!(c.travel_time(&sp), 0.0);
        assert_eq!(c.revisit_times(&sp), vec![0.0]);
        assert_eq!(c.subcycle_legs(0), vec![0]);
    }

    #[test]
    fn normalization_and_canonical_form() {
        let c = Cycle::new(vec![2, 2, 0, 1, 2]);
        assert_eq!(c.normalized().visits(), &[2, 0, 1]);
        assert_eq!(Cycle::new(vec![1, 2, 0]).canonical(), vec![0, 1, 2]);
        assert_eq!(Cycle::new(vec![3, 3]).normalized().visits(), &[3]);
    }

    #[test]
    fn subcycle_legs_wrap() {
        let c = Cycle::new(vec![0, 1, 2, 0, 3]);
        assert_eq!(c.subcycle_legs(3), vec![0, 1, 2]);
        assert_eq!(c.subcycle_legs(0), vec![3, 4]);
        assert_eq!(c.subcycle_legs(1), vec![1, 2, 3, 4, 0]);
    }
}
