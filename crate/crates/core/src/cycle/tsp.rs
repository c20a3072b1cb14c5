use super::{Cycle, Region};
use crate::error::{Error, Result};
use crate::model::ShortestPaths;

pub fn tour_length(sp: &ShortestPaths, tour: &[usize]) -> f64 {
    let n = tour.len();
    (0..n).map(|k| sp.time(tour[k], tour[(k + 1) % n])).sum()
}

/// Greedy tour from the lowest-index target, always moving to the closest
/// unvisited target (ties go to the lower index).
pub fn nearest_neighbor_tour(sp: &ShortestPaths, subset: &[usize]) -> Vec<usize> {
    let mut left: Vec<usize> = subset.to_vec();
    left.sort_unstable();
    left.dedup();
    if left.is_empty() {
        return left;
    }
    let mut tour = vec![left.remove(0)];
    while !left.is_empty() {
        let cur = *tour.last().expect("non-empty");
        let (k, _) = left
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bk, bd), (k, &j)| {
                let d = sp.time(cur, j);
                if d < bd {
                    (k, d)
                } else {
                    (bk, bd)
                }
            });
        tour.push(left.remove(k));
    }
    tour
}

/// 2-opt to a local optimum (first improvement, scanning in index order).
pub fn two_opt(sp: &ShortestPaths, tour: &mut [usize]) {
    let n = tour.len();
    if n < 4 {
        return;
    }
    let scale = tour_length(sp, tour).max(1e-300);
    loop {
        let mut improved = false;
        for i in 0..n - 1 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, d) = (tour[j], tour[(j + 1) % n]);
                let delta = sp.time(a, c) + sp.time(b, d) - sp.time(a, b) - sp.time(c, d);
                if delta < -1e-12 * scale {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Short closed tour through `subset`, each target visited once.
pub fn tsp_heuristic(region: &Region, subset: &[usize]) -> Result<Cycle> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("tour subset is empty".into()));
    }
    let mut tour = nearest_neighbor_tour(&region.sp, subset);
    two_opt(&region.sp, &mut tour);
    Ok(Cycle::new(tour))
}
