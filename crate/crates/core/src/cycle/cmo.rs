use serde::Serialize;

use super::{Critical, Cycle, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CmoType {
    /// Promote the targets a leg passes through to visits.
    I,
    /// Route a leg that avoids the critical target through it.
    II,
    /// Insert a detour to the critical target and back after a visit.
    III,
}

#[derive(Clone, Debug)]
pub struct CmoCandidate {
    pub kind: CmoType,
    /// Index within the critical sub-cycle (leg for I/II, visit for III).
    pub position: usize,
    pub cycle: Cycle,
}

/// All modifications of the critical sub-cycle, in (type, position) order.
/// With `E` legs in the sub-cycle there are at most `E + (E − 2) + (E − 1)`
/// candidates.
pub fn enumerate_cmos(region: &Region, cycle: &Cycle, critical: &Critical) -> Vec<CmoCandidate> {
    let v = cycle.visits();
    let star = critical.target;
    let legs = cycle.subcycle_legs(critical.position);
    let mut out = Vec::with_capacity(3 * legs.len());

    for (s, &e) in legs.iter().enumerate() {
        let (l, j) = (v[e], v[cycle.next(e)]);
        let promoted: Vec<usize> = region
            .sp
            .via(l, j)
            .iter()
            .copied()
            .filter(|&x| region.contains(x))
            .collect();
        if promoted.is_empty() {
            continue;
        }
        let mut nv = Vec::with_capacity(v.len() + promoted.len());
        nv.extend_from_slice(&v[..=e]);
        nv.extend_from_slice(&promoted);
        nv.extend_from_slice(&v[e + 1..]);
        out.push(CmoCandidate {
            kind: CmoType::I,
            position: s,
            cycle: Cycle::new(nv).normalized(),
        });
    }

    for (s, &e) in legs.iter().enumerate() {
        let (l, j) = (v[e], v[cycle.next(e)]);
        if l == star || j == star {
            continue;
        }
        let mut nv = v.to_vec();
        nv.insert(e + 1, star);
        out.push(CmoCandidate {
            kind: CmoType::II,
            position: s,
            cycle: Cycle::new(nv).normalized(),
        });
    }

    for (s, &e) in legs.iter().enumerate().skip(1) {
        let j = v[e];
        if j == star {
            continue;
        }
        let mut nv = v.to_vec();
        nv.splice(e + 1..e + 1, [star, j]);
        out.push(CmoCandidate {
            kind: CmoType::III,
            position: s,
            cycle: Cycle::new(nv).normalized(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, MatrixNorm, TargetNetwork, TargetSpec};

    fn network(edges: Vec<Edge>, n: usize) -> TargetNetwork {
        let targets = (0..n)
            .map(|k| TargetSpec::scalar(k as i64 + 1, 0.2, 1.0, 2.0, 1.0).unwrap())
            .collect();
        TargetNetwork::new(targets, edges, MatrixNorm::Trace).unwrap()
    }

    fn crit(cycle: &Cycle, position: usize) -> Critical {
        Critical {
            target: cycle.visits()[position],
            ordinal: cycle.ordinals()[position],
            position,
        }
    }

    #[test]
    fn type_one_promotes_pass_through_target() {
        // 0–2 direct edge is slow, the route through 3 is fast
        let edges = vec![
            Edge { i: 0, j: 1, d: 1.0 },
            Edge { i: 1, j: 2, d: 1.0 },
            Edge { i: 0, j: 2, d: 10.0 },
            Edge { i: 0, j: 3, d: 0.5 },
            Edge { i: 3, j: 2, d: 0.5 },
        ];
        let net = network(edges, 4);
        let region = Region::full(&net);
        let cycle = Cycle::new(vec![0, 1, 2]);
        let c = enumerate_cmos(&region, &cycle, &crit(&cycle, 0));
        let type_one: Vec<_> = c.iter().filter(|x| x.kind == CmoType::I).collect();
        assert_eq!(type_one.len(), 1);
        assert_eq!(type_one[0].cycle.visits(), &[0, 1, 2, 3]);
    }

    #[test]
    fn two_leg_subcycle_has_no_type_two() {
        let net = network(vec![Edge { i: 0, j: 1, d: 1.0 }], 2);
        let region = Region::full(&net);
        let cycle = Cycle::new(vec![0, 1]);
        let c = enumerate_cmos(&region, &cycle, &crit(&cycle, 0));
        assert!(c.iter().all(|x| x.kind != CmoType::II));
    }

    #[test]
    fn candidate_count_bound_and_type_two_split() {
        let mut edges = Vec::new();
        for i in 0..5 {
            for j in (i + 1)..5 {
                edges.push(Edge { i, j, d: 1.0 + (i + j) as f64 * 0.1 });
            }
        }
        let net = network(edges, 5);
        let region = Region::full(&net);
        let cycle = Cycle::new(vec![0, 1, 2, 3, 4]);
        let cr = crit(&cycle, 0);
        let c = enumerate_cmos(&region, &cycle, &cr);
        assert!(c.len() < 3 * cycle.subcycle_legs(0).len());
        let ii: Vec<_> = c.iter().filter(|x| x.kind == CmoType::II).collect();
        assert_eq!(ii.len(), 3);
        assert_eq!(ii[0].cycle.visits(), &[0, 1, 0, 2, 3, 4]);
        let iii: Vec<_> = c.iter().filter(|x| x.kind == CmoType::III).collect();
        assert_eq!(iii[0].cycle.visits(), &[0, 1, 0, 1, 2, 3, 4]);
    }
}
