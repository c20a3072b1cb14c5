use super::disparity::best_expansion;
use super::{ClusterPlan, Partition};
use crate::cycle::{improve_with_cmos, j_hat, CmoType, GreedyConfig, LowerBound, Region};
use crate::error::Result;
use crate::model::TargetNetwork;

#[derive(Clone, Copy, Debug)]
pub struct TesConfig {
    pub max_commits: usize,
    /// A commit must lower the fleet metric by more than this fraction.
    pub min_gain_rel: f64,
}

impl Default for TesConfig {
    fn default() -> Self {
        TesConfig {
            max_commits: 50,
            min_gain_rel: 1e-12,
        }
    }
}

/// One committed exchange: `target` moved from cluster `from` to `to`.
#[derive(Clone, Debug)]
pub struct TesCommit {
    pub target: usize,
    pub from: usize,
    pub to: usize,
    /// Estimated gain of annexing the target into `to`'s cycle.
    pub gain_annex: f64,
    /// Estimated gain of removing it from `from`'s cycle.
    pub gain_remove: f64,
    pub fleet_before: f64,
    pub fleet_after: f64,
    pub clusters_before: Vec<f64>,
    pub clusters_after: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TesResult {
    pub partition: Partition,
    pub commits: Vec<TesCommit>,
}

fn components(network: &TargetNetwork, members: &[usize]) -> usize {
    let n = network.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut inside = vec![false; n];
    for &m in members {
        inside[m] = true;
    }
    let mut count = members.len();
    for e in &network.edges {
        if inside[e.i] && inside[e.j] {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
    }
    count
}

/// Whether dropping `j` from `members` leaves the induced sub-graph with
/// no more connected pieces than before.
pub fn removal_keeps_connectivity(network: &TargetNetwork, members: &[usize], j: usize) -> bool {
    let rest: Vec<usize> = members.iter().copied().filter(|&x| x != j).collect();
    !rest.is_empty() && components(network, &rest) <= components(network, members)
}

/// `Ĵ(Ξ) − Ĵ(Ξ#)`, where `Ξ#` drops `j`, bridges the gaps with fastest
/// routes in the reduced sub-graph and is refined with Type II/III
/// modifications.
fn removal_gain(bound: &LowerBound, cluster: &ClusterPlan, j: usize) -> f64 {
    let rest: Vec<usize> = cluster.members.iter().copied().filter(|&x| x != j).collect();
    let region = Region::cluster(bound.network(), &rest);
    let Some(contracted) = cluster.cycle().without(j) else {
        return f64::NEG_INFINITY;
    };
    let (_, metric) = improve_with_cmos(
        bound,
        &region,
        contracted,
        &rest,
        &[CmoType::II, CmoType::III],
        &GreedyConfig::default(),
        &mut Vec::new(),
    );
    cluster.j_hat() - metric.j_hat
}

/// Best single-target expansion gain of cluster `cluster` taking `j`.
fn annex_gain(bound: &LowerBound, cluster: &ClusterPlan, j: usize) -> f64 {
    let mut grown = cluster.members.clone();
    grown.push(j);
    let region = Region::cluster(bound.network(), &grown);
    let current = j_hat(bound, &region, cluster.cycle(), &cluster.members).j_hat;
    best_expansion(bound, &region, cluster.cycle(), current, &[j]).map_or(f64::NEG_INFINITY, |b| b.0)
}

/// Move targets out of the critical cluster while that lowers the fleet
/// metric. Candidates are the distinct targets of the critical sub-cycle;
/// they are tried in decreasing order of estimated gain and the first one
/// whose rebuilt cycles improve the fleet metric is committed.
pub fn tes_refine(bound: &LowerBound, partition: Partition, cfg: &TesConfig) -> Result<TesResult> {
    let network = bound.network();
    let mut partition = partition;
    let mut commits = Vec::new();
    while commits.len() < cfg.max_commits && partition.clusters.len() > 1 {
        let a = partition.critical_cluster();
        let src = &partition.clusters[a];
        let Some(critical) = src.greedy.metric.critical else { break };
        if src.members.len() < 2 {
            break;
        }
        let cycle = src.cycle();
        let mut sub: Vec<usize> = cycle
            .subcycle_legs(critical.position)
            .iter()
            .map(|&e| cycle.visits()[e])
            .collect();
        sub.push(critical.target);
        sub.sort_unstable();
        sub.dedup();

        let mut candidates = Vec::new();
        for &j in &sub {
            if !removal_keeps_connectivity(network, &src.members, j) {
                continue;
            }
            let gain_remove = removal_gain(bound, src, j);
            for b in 0..partition.clusters.len() {
                if b == a {
                    continue;
                }
                let gain_annex = annex_gain(bound, &partition.clusters[b], j);
                candidates.push((gain_annex + gain_remove, j, b, gain_annex, gain_remove));
            }
        }
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0));

        let before = partition.fleet_j_hat();
        let mut committed = None;
        for &(_, j, b, gain_annex, gain_remove) in &candidates {
            let rest: Vec<usize> = src.members.iter().copied().filter(|&x| x != j).collect();
            let mut grown = partition.clusters[b].members.clone();
            grown.push(j);
            let new_a = ClusterPlan::build(bound, &rest)?;
            let new_b = ClusterPlan::build(bound, &grown)?;
            let after = partition
                .clusters
                .iter()
                .enumerate()
                .map(|(c, p)| match c {
                    c if c == a => new_a.j_hat(),
                    c if c == b => new_b.j_hat(),
                    _ => p.j_hat(),
                })
                .fold(0.0_f64, f64::max);
            if after < before * (1.0 - cfg.min_gain_rel) {
                committed = Some((j, b, gain_annex, gain_remove, new_a, new_b, after));
                break;
            }
        }
        let Some((j, b, gain_annex, gain_remove, new_a, new_b, after)) = committed else {
            break;
        };
        let clusters_before = partition.clusters.iter().map(|c| c.j_hat()).collect();
        partition.clusters[a] = new_a;
        partition.clusters[b] = new_b;
        commits.push(TesCommit {
            target: j,
            from: a,
            to: b,
            gain_annex,
            gain_remove,
            fleet_before: before,
            fleet_after: after,
            clusters_before,
            clusters_after: partition.clusters.iter().map(|c| c.j_hat()).collect(),
        });
    }
    Ok(TesResult { partition, commits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::SteadyTable;
    use crate::model::{Edge, MatrixNorm, TargetSpec};

    fn line() -> TargetNetwork {
        let targets = (1..=4)
            .map(|id| TargetSpec::scalar(id, 0.2, 1.0, 3.0, 1.0).unwrap())
            .collect();
        let edges = vec![
            Edge { i: 0, j: 1, d: 0.2 },
            Edge { i: 1, j: 2, d: 0.2 },
            Edge { i: 2, j: 3, d: 0.2 },
        ];
        TargetNetwork::new(targets, edges, MatrixNorm::Trace).unwrap()
    }

    #[test]
    fn cut_vertex_is_not_removable() {
        let net = line();
        assert!(!removal_keeps_connectivity(&net, &[0, 1, 2], 1));
        assert!(removal_keeps_connectivity(&net, &[0, 1, 2], 2));
        assert!(!removal_keeps_connectivity(&net, &[3], 3));
    }

    #[test]
    fn commits_strictly_lower_the_fleet_metric() {
        let net = line();
        let st = SteadyTable::new(&net).unwrap();
        let lb = LowerBound::new(&net, &st);
        // lopsided start: three targets against one
        let p = Partition::from_clusters(&lb, &[vec![0, 1, 2], vec![3]]).unwrap();
        let start = p.fleet_j_hat();
        let r = tes_refine(&lb, p, &TesConfig::default()).unwrap();
        assert!(!r.commits.is_empty());
        for c in &r.commits {
            assert!(c.fleet_after < c.fleet_before);
        }
        assert!(r.partition.fleet_j_hat() < start);
    }
}
