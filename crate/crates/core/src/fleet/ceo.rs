use std::collections::HashSet;

use serde::Serialize;

use crate::cycle::Cycle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CeoType {
    /// Put the external target on a leg: `(l, j)` becomes `(l, i), (i, j)`.
    I,
    /// Go out to the external target and come back: insert `i, j` after a
    /// visit `j`.
    II,
    /// Replace a run of redundant visits (their targets are visited
    /// elsewhere) by the external target.
    III,
}

#[derive(Clone, Debug)]
pub struct CeoCandidate {
    pub kind: CeoType,
    /// Position of the leg (I), visit (II) or first replaced visit (III).
    pub position: usize,
    pub cycle: Cycle,
}

/// Every expansion of `cycle` that adds the external target `i`, in
/// (type, position) order, with rotations of the same cycle kept once.
pub fn enumerate_ceos(cycle: &Cycle, i: usize) -> Vec<CeoCandidate> {
    debug_assert!(!cycle.contains(i), "target is already in the cycle");
    let v = cycle.visits();
    let n = v.len();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |kind, position, visits: Vec<usize>| {
        let c = Cycle::new(visits).normalized();
        if seen.insert(c.canonical()) {
            out.push(CeoCandidate {
                kind,
                position,
                cycle: c,
            });
        }
    };

    for e in 0..n {
        let mut nv = v.to_vec();
        nv.insert(e + 1, i);
        push(CeoType::I, e, nv);
    }
    for p in 0..n {
        let mut nv = v.to_vec();
        nv.splice(p + 1..p + 1, [i, v[p]]);
        push(CeoType::II, p, nv);
    }
    let mut count = std::collections::HashMap::new();
    for &x in v {
        *count.entry(x).or_insert(0usize) += 1;
    }
    // runs of 1..=n-2 visits strictly between positions p and p + len + 1
    for p in 0..n {
        let mut removed = std::collections::HashMap::new();
        for len in 1..n.saturating_sub(1) {
            let x = v[(p + len) % n];
            let r = removed.entry(x).or_insert(0usize);
            *r += 1;
            if *r == count[&x] {
                // this target would vanish, and so would every longer run
                break;
            }
            let mut nv = Vec::with_capacity(n - len + 1);
            nv.push(v[p]);
            nv.push(i);
            for s in len + 1..n {
                nv.push(v[(p + s) % n]);
            }
            push(CeoType::III, p, nv);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_cycle_has_one_expansion() {
        let c = enumerate_ceos(&Cycle::new(vec![0]), 1);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].cycle.visits(), &[0, 1]);
    }

    #[test]
    fn leg_insertion() {
        let c = enumerate_ceos(&Cycle::new(vec![0, 1, 2]), 3);
        let first = c.iter().find(|c| c.kind == CeoType::I && c.position == 0).unwrap();
        assert_eq!(first.cycle.visits(), &[0, 3, 1, 2]);
        // no visit is redundant, so there is no replacement
        assert!(c.iter().all(|c| c.kind != CeoType::III));
    }

    #[test]
    fn replacement_keeps_every_target() {
        let cycle = Cycle::new(vec![0, 1, 0, 2, 1]);
        for cand in enumerate_ceos(&cycle, 9) {
            let t = cand.cycle.targets();
            assert_eq!(t, vec![0, 1, 2, 9], "{:?}", cand);
        }
        let iii: Vec<_> = enumerate_ceos(&cycle, 9)
            .into_iter()
            .filter(|c| c.kind == CeoType::III)
            .collect();
        assert!(!iii.is_empty());
    }
}
