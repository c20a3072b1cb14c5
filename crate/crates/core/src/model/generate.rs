use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Edge, MatrixNorm, TargetNetwork, TargetSpec};
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Parameter ranges for random instances. Defaults follow the usual
/// simulation setup: positions in `[0, 0.5]²`, `A ∈ [0.1, 0.5]`,
/// `Q ∈ [0.4, 1.8]`, `R ∈ [2, 8]`, `H = 1`.
#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub a_range: (f64, f64),
    pub q_range: (f64, f64),
    pub r_range: (f64, f64),
    pub box_size: f64,
    /// Travel time per unit of Euclidean distance.
    pub speed_scale: f64,
    pub weight_alpha: f64,
    /// 1 gives scalar targets; larger values give random observable
    /// `L×L` targets with `H = I`.
    pub state_dim: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            a_range: (0.1, 0.5),
            q_range: (0.4, 1.8),
            r_range: (2.0, 8.0),
            box_size: 0.5,
            speed_scale: 1.0,
            weight_alpha: 1.0,
            state_dim: 1,
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !range_ok(self.a_range) {
            return Err(Error::InvalidArgument("a_range must be an ordered finite pair".into()));
        }
        for (name, r) in [("q_range", self.q_range), ("r_range", self.r_range)] {
            if !range_ok(r) || r.0 <= 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive and ordered")));
            }
        }
        if !(self.box_size > 0.0 && self.speed_scale > 0.0 && self.weight_alpha > 0.0) {
            return Err(Error::InvalidArgument(
                "box_size, speed_scale and weight_alpha must be positive".into(),
            ));
        }
        if self.state_dim == 0 {
            return Err(Error::InvalidArgument("state_dim must be at least 1".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Deterministic random instance on a complete Euclidean graph with target
/// ids `1..=num_targets`.
pub fn generate_random_instance(
    num_targets: usize,
    seed: u64,
    cfg: &GeneratorConfig,
) -> Result<TargetNetwork> {
    if num_targets == 0 {
        return Err(Error::InvalidArgument("num_targets must be at least 1".into()));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = Vec::with_capacity(num_targets);
    for k in 0..num_targets {
        let pos = [
            rng.gen_range(0.0..cfg.box_size),
            rng.gen_range(0.0..cfg.box_size),
        ];
        let id = k as i64 + 1;
        let spec = if cfg.state_dim == 1 {
            let a = uniform(&mut rng, cfg.a_range);
            let q = uniform(&mut rng, cfg.q_range);
            let r = uniform(&mut rng, cfg.r_range);
            TargetSpec::scalar(id, a, q, r, cfg.weight_alpha)?
        } else {
            random_matrix_target(&mut rng, id, cfg)?
        };
        targets.push(spec.with_position(pos));
    }
    let edges = complete_euclidean(&targets, cfg.speed_scale);
    TargetNetwork::new(targets, edges, MatrixNorm::Trace)
}

fn complete_euclidean(targets: &[TargetSpec], speed_scale: f64) -> Vec<Edge> {
    let n = targets.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let [xi, yi] = targets[i].position.expect("positioned target");
            let [xj, yj] = targets[j].position.expect("positioned target");
            edges.push(Edge {
                i,
                j,
                d: speed_scale * (xi - xj).hypot(yi - yj),
            });
        }
    }
    edges
}

/// Scalar drift, noise and sensor variance of the five-target benchmark.
pub const TABLE_ONE: [(f64, f64, f64); 5] = [
    (0.3487, 1.1924, 2.3140),
    (0.1915, 1.2597, 7.1456),
    (0.4612, 0.8808, 4.2031),
    (0.2951, 1.7925, 5.2866),
    (0.1110, 0.4363, 7.5314),
];

/// The five-target benchmark with `H = 1`, `g(x) = x`, on a complete graph.
/// No coordinates come with the benchmark, so positions are drawn uniformly
/// in `[0, 0.5]²` from `seed`.
pub fn table_one_instance(seed: u64) -> Result<TargetNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = TABLE_ONE
        .iter()
        .enumerate()
        .map(|(k, &(a, q, r))| {
            let pos = [rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)];
            Ok(TargetSpec::scalar(k as i64 + 1, a, q, r, 1.0)?.with_position(pos))
        })
        .collect::<Result<Vec<_>>>()?;
    let edges = complete_euclidean(&targets, 1.0);
    TargetNetwork::new(targets, edges, MatrixNorm::Trace)
}

fn random_matrix_target(rng: &mut ChaCha8Rng, id: i64, cfg: &GeneratorConfig) -> Result<TargetSpec> {
    let n = cfg.state_dim;
    // Diagonal drift from the scalar range plus a weaker random coupling.
    let mut a = Mat::from_fn(n, n, |_, _| 0.0);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = if i == j {
                uniform(rng, cfg.a_range)
            } else {
                0.3 * rng.gen_range(-1.0..1.0)
            };
        }
    }
    let b = Mat::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
    let q_floor = uniform(rng, cfg.q_range);
    let q = crate::linalg::symmetrized(&b * b.transpose() + Mat::identity(n, n) * q_floor);
    let r = Mat::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        uniform(rng, cfg.r_range)
    }));
    TargetSpec::new(id, a, q, Mat::identity(n, n), r, cfg.weight_alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = GeneratorConfig::default();
        let a = generate_random_instance(5, 7, &cfg).unwrap();
        let b = generate_random_instance(5, 7, &cfg).unwrap();
        for (x, y) in a.targets.iter().zip(&b.targets) {
            assert_eq!(x.a, y.a);
            assert_eq!(x.q, y.q);
            assert_eq!(x.r, y.r);
            assert_eq!(x.position, y.position);
        }
        assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn sizes() {
        let cfg = GeneratorConfig::default();
        assert!(generate_random_instance(1, 0, &cfg).unwrap().edges.is_empty());
        assert_eq!(generate_random_instance(15, 3, &cfg).unwrap().edges.len(), 105);
    }

    #[test]
    fn parameters_in_range() {
        let cfg = GeneratorConfig::default();
        let net = generate_random_instance(30, 11, &cfg).unwrap();
        for t in &net.targets {
            let (a, q, r) = (t.a[(0, 0)], t.q[(0, 0)], t.r[(0, 0)]);
            assert!((0.1..0.5).contains(&a));
            assert!((0.4..1.8).contains(&q));
            assert!((2.0..8.0).contains(&r));
            let [x, y] = t.position.unwrap();
            assert!((0.0..0.5).contains(&x) && (0.0..0.5).contains(&y));
        }
    }

    #[test]
    fn matrix_targets() {
        let cfg = GeneratorConfig {
            state_dim: 3,
            ..GeneratorConfig::default()
        };
        let net = generate_random_instance(4, 2, &cfg).unwrap();
        assert!(net.targets.iter().all(|t| t.dim() == 3));
    }

    #[test]
    fn table_one_is_complete_and_scalar() {
        let net = table_one_instance(1).unwrap();
        assert_eq!(net.len(), 5);
        assert_eq!(net.edges.len(), 10);
        assert_eq!(net.targets[2].a[(0, 0)], 0.4612);
        assert_eq!(net.targets[4].r[(0, 0)], 7.5314);
    }

    #[test]
    fn bad_ranges_rejected() {
        let cfg = GeneratorConfig {
            q_range: (1.0, 0.5),
            ..GeneratorConfig::default()
        };
        assert!(generate_random_instance(3, 0, &cfg).is_err());
        assert!(generate_random_instance(0, 0, &GeneratorConfig::default()).is_err());
    }
}
