//! Multi-agent planning: covering-cycle-cost disparity, spectral
//! clustering of the targets, one greedy cycle per cluster and the target
//! exchange refinement.

mod ceo;
mod disparity;
mod spectral;
mod tes;

pub use ceo::{enumerate_ceos, CeoCandidate, CeoType};
pub use disparity::{disparity_matrix, expand_from, travel_disparity, DisparityMatrix, ExpansionStep};
pub use spectral::{
    kmeans, similarity, spectral_cluster, spectral_embedding, KMeans, SimilarityMatrix,
    SpectralEmbedding,
};
pub use tes::{removal_keeps_connectivity, tes_refine, TesCommit, TesConfig, TesResult};

use serde::Serialize;

use crate::covariance::SteadyTable;
use crate::cycle::{greedy_construct, Cycle, GreedyConfig, GreedyResult, LowerBound, Region};
use crate::dwell::{optimal_visiting_sequence_constrained, plan_cycle, PlanConfig, PlannedCycle};
use crate::error::{Error, Result};
use crate::model::TargetNetwork;

/// One agent's targets, routing area and cycle.
#[derive(Clone, Debug)]
pub struct ClusterPlan {
    pub members: Vec<usize>,
    pub region: Region,
    pub greedy: GreedyResult,
}

impl ClusterPlan {
    /// Greedy cycle over `members`, routed inside their sub-graph.
    pub fn build(bound: &LowerBound, members: &[usize]) -> Result<Self> {
        let region = Region::cluster(bound.network(), members);
        let greedy = greedy_construct(bound, &region, &region.members, &GreedyConfig::default())?;
        Ok(ClusterPlan {
            members: region.members.clone(),
            region,
            greedy,
        })
    }

    pub fn cycle(&self) -> &Cycle {
        &self.greedy.cycle
    }

    pub fn j_hat(&self) -> f64 {
        self.greedy.metric.j_hat
    }
}

/// Disjoint clusters covering the network, each with its cycle.
#[derive(Clone, Debug)]
pub struct Partition {
    pub clusters: Vec<ClusterPlan>,
}

impl Partition {
    pub fn from_clusters(bound: &LowerBound, clusters: &[Vec<usize>]) -> Result<Self> {
        let clusters = clusters
            .iter()
            .map(|m| ClusterPlan::build(bound, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition { clusters })
    }

    /// `Ĵ(𝒢) = max_a Ĵ(Ξᵃ)`.
    pub fn fleet_j_hat(&self) -> f64 {
        self.clusters.iter().fold(0.0_f64, |m, c| m.max(c.j_hat()))
    }

    /// Cluster attaining the fleet metric (lowest index on ties).
    pub fn critical_cluster(&self) -> usize {
        let mut best = 0;
        for (a, c) in self.clusters.iter().enumerate() {
            if c.j_hat() > self.clusters[best].j_hat() {
                best = a;
            }
        }
        best
    }

    /// Largest over smallest per-cluster metric.
    pub fn imbalance(&self) -> f64 {
        let min = self.clusters.iter().fold(f64::INFINITY, |m, c| m.min(c.j_hat()));
        self.fleet_j_hat() / min
    }

    pub fn cluster_of(&self, target: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.members.contains(&target))
    }
}

/// How pairwise disparity is measured before clustering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DisparityKind {
    /// Covering cycle cost from greedy cycle expansion.
    #[default]
    CoveringCycle,
    /// Shortest-path travel time.
    Travel,
}

#[derive(Clone, Copy, Debug)]
pub struct FleetConfig {
    pub agents: usize,
    /// Similarity bandwidth; the median off-diagonal disparity if `None`.
    pub sigma: Option<f64>,
    pub seed: u64,
    pub disparity: DisparityKind,
}

impl FleetConfig {
    pub fn new(agents: usize) -> Self {
        FleetConfig {
            agents,
            sigma: None,
            seed: 0,
            disparity: DisparityKind::CoveringCycle,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FleetPlan {
    pub disparity: DisparityMatrix,
    pub sigma: f64,
    pub partition: Partition,
}

/// Disparity, similarity, clustering and one greedy cycle per cluster.
pub fn plan_fleet(bound: &LowerBound, cfg: &FleetConfig) -> Result<FleetPlan> {
    let network = bound.network();
    let n = network.len();
    if cfg.agents == 0 || cfg.agents > n {
        return Err(Error::InvalidArgument(format!(
            "{} agents for {} targets",
            cfg.agents, n
        )));
    }
    let full = Region::full(network);
    let disparity = match cfg.disparity {
        DisparityKind::CoveringCycle if cfg.agents > 1 => disparity_matrix(bound, &full),
        DisparityKind::CoveringCycle => DisparityMatrix {
            d: vec![vec![0.0; n]; n],
        },
        DisparityKind::Travel => travel_disparity(&full, n),
    };
    let sigma = cfg.sigma.unwrap_or_else(|| disparity.median());
    let sim = similarity(&disparity, sigma)?;
    let clusters = spectral_cluster(&sim, cfg.agents, cfg.seed)?;
    let partition = Partition::from_clusters(bound, &clusters)?;
    Ok(FleetPlan {
        disparity,
        sigma,
        partition,
    })
}

/// Dwell plan for one agent: the better (lower predicted cost) of the
/// exclusion-loop tour plan and the plan on the given greedy cycle.
pub fn plan_agent(
    network: &TargetNetwork,
    steady: &SteadyTable,
    region: &Region,
    members: &[usize],
    greedy: &Cycle,
    cfg: &PlanConfig,
) -> Result<PlannedCycle> {
    let tour = optimal_visiting_sequence_constrained(network, steady, region, members, cfg)?;
    let greedy = plan_cycle(network, steady, &region.sp, greedy, members, cfg)?;
    Ok(if greedy.plan.j_pred < tour.plan.j_pred {
        greedy
    } else {
        PlannedCycle {
            plan: tour.plan,
            search: tour.search,
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub agent: usize,
    pub members: Vec<i64>,
    pub cycle: Vec<i64>,
    pub j_hat: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommitReport {
    pub target: i64,
    pub from_agent: usize,
    pub to_agent: usize,
    pub gain_annex: f64,
    pub gain_remove: f64,
    pub fleet_before: f64,
    pub fleet_after: f64,
    pub clusters_before: Vec<f64>,
    pub clusters_after: Vec<f64>,
}

/// Structured summary of a fleet plan.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    pub disparity: DisparityKind,
    pub sigma: f64,
    pub initial_fleet_j_hat: f64,
    pub initial_clusters: Vec<ClusterReport>,
    pub fleet_j_hat: f64,
    pub clusters: Vec<ClusterReport>,
    pub tes_commits: Vec<CommitReport>,
}

fn cluster_reports(network: &TargetNetwork, p: &Partition) -> Vec<ClusterReport> {
    let id = |i: &usize| network.targets[*i].id;
    p.clusters
        .iter()
        .enumerate()
        .map(|(a, c)| ClusterReport {
            agent: a + 1,
            members: c.members.iter().map(id).collect(),
            cycle: c.cycle().visits().iter().map(id).collect(),
            j_hat: c.j_hat(),
        })
        .collect()
}

impl PartitionReport {
    pub fn new(
        network: &TargetNetwork,
        plan: &FleetPlan,
        kind: DisparityKind,
        tes: Option<&TesResult>,
    ) -> Self {
        let final_partition = tes.map_or(&plan.partition, |t| &t.partition);
        let tes_commits = tes
            .map(|t| {
                t.commits
                    .iter()
                    .map(|c| CommitReport {
                        target: network.targets[c.target].id,
                        from_agent: c.from + 1,
                        to_agent: c.to + 1,
                        gain_annex: c.gain_annex,
                        gain_remove: c.gain_remove,
                        fleet_before: c.fleet_before,
                        fleet_after: c.fleet_after,
                        clusters_before: c.clusters_before.clone(),
                        clusters_after: c.clusters_after.clone(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        PartitionReport {
            disparity: kind,
            sigma: plan.sigma,
            initial_fleet_j_hat: plan.partition.fleet_j_hat(),
            initial_clusters: cluster_reports(network, &plan.partition),
            fleet_j_hat: final_partition.fleet_j_hat(),
            clusters: cluster_reports(network, final_partition),
            tes_commits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_random_instance, GeneratorConfig};

    #[test]
    fn one_agent_is_the_single_agent_greedy_cycle() {
        let net = generate_random_instance(6, 3, &GeneratorConfig::default()).unwrap();
        let st = SteadyTable::new(&net).unwrap();
        let lb = LowerBound::new(&net, &st);
        let f = plan_fleet(&lb, &FleetConfig::new(1)).unwrap();
        let single =
            greedy_construct(&lb, &Region::full(&net), &(0..6).collect::<Vec<_>>(), &GreedyConfig::default())
                .unwrap();
        assert_eq!(f.partition.clusters.len(), 1);
        assert_eq!(f.partition.clusters[0].cycle(), &single.cycle);
    }

    #[test]
    fn clusters_cover_disjointly() {
        let net = generate_random_instance(9, 11, &GeneratorConfig::default()).unwrap();
        let st = SteadyTable::new(&net).unwrap();
        let lb = LowerBound::new(&net, &st);
        let f = plan_fleet(&lb, &FleetConfig::new(3)).unwrap();
        let mut all: Vec<usize> = f.partition.clusters.iter().flat_map(|c| c.members.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
        for c in &f.partition.clusters {
            for &m in &c.members {
                assert!(c.cycle().contains(m));
            }
        }
        let max = f.partition.clusters.iter().map(|c| c.j_hat()).fold(0.0, f64::max);
        assert_eq!(f.partition.fleet_j_hat(), max);
    }
}
