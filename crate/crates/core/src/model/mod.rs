//! Problem instances: targets with linear-Gaussian dynamics placed on an
//! undirected travel network.

mod generate;
mod instance;
mod paths;

pub use generate::{generate_random_instance, table_one_instance, GeneratorConfig, TABLE_ONE};
pub use instance::{load_instance, load_instance_file, to_document, write_instance_file};
pub use paths::ShortestPaths;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Matrix norm applied to a covariance before weighting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    #[default]
    Trace,
    MaxEigenvalue,
}

impl MatrixNorm {
    pub fn apply(self, m: &Mat) -> f64 {
        match self {
            MatrixNorm::Trace => m.trace(),
            MatrixNorm::MaxEigenvalue => linalg::max_eigenvalue(m),
        }
    }
}

/// One monitored target: `dφ = Aφ dt + w`, `z = Hφ + v`, `E[wwᵀ] = Q`,
/// `E[vvᵀ] = R`, and the derived information rate `G = Hᵀ R⁻¹ H`.
#[derive(Clone, Debug)]
pub struct TargetSpec {
    pub id: i64,
    pub a: Mat,
    pub q: Mat,
    pub h: Mat,
    pub r: Mat,
    pub g: Mat,
    pub weight_alpha: f64,
    pub position: Option<[f64; 2]>,
}

impl TargetSpec {
    pub fn new(id: i64, a: Mat, q: Mat, h: Mat, r: Mat, weight_alpha: f64) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidTarget {
            id,
            reason: reason.to_string(),
        };
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(bad("A must be a non-empty square matrix"));
        }
        if q.shape() != (n, n) {
            return Err(bad("Q must have the same shape as A"));
        }
        if h.ncols() != n || h.nrows() == 0 {
            return Err(bad("H must have as many columns as A"));
        }
        let m = h.nrows();
        if r.shape() != (m, m) {
            return Err(bad("R must be square with as many rows as H"));
        }
        let all_finite = [&a, &q, &h, &r]
            .iter()
            .all(|mat| mat.iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(bad("matrices must be finite"));
        }
        if !(weight_alpha > 0.0 && weight_alpha.is_finite()) {
            return Err(bad("weight_alpha must be positive"));
        }
        if !linalg::is_spd(&q) {
            return Err(bad("Q must be symmetric positive definite"));
        }
        if !linalg::is_spd(&r) {
            return Err(bad("R must be symmetric positive definite"));
        }
        if !linalg::is_observable(&a, &h) {
            return Err(Error::Unobservable { id });
        }
        let g = information_matrix(&h, &r);
        Ok(TargetSpec {
            id,
            a,
            q,
            h,
            r,
            g,
            weight_alpha,
            position: None,
        })
    }

    /// Scalar target with `H = 1`.
    pub fn scalar(id: i64, a: f64, q: f64, r: f64, weight_alpha: f64) -> Result<Self> {
        let s = |v: f64| Mat::from_element(1, 1, v);
        Self::new(id, s(a), s(q), s(1.0), s(r), weight_alpha)
    }

    pub fn with_position(mut self, position: [f64; 2]) -> Self {
        self.position = Some(position);
        self
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Linear weighting `g(x) = α x`.
    pub fn weight(&self, x: f64) -> f64 {
        self.weight_alpha * x
    }

    /// Relative mismatch between the stored `G` and `Hᵀ R⁻¹ H`.
    pub fn information_mismatch(&self) -> f64 {
        let g = information_matrix(&self.h, &self.r);
        linalg::max_abs_diff(&g, &self.g) / linalg::max_abs(&g).max(f64::MIN_POSITIVE)
    }
}

fn information_matrix(h: &Mat, r: &Mat) -> Mat {
    let r_inv = r
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| r.clone().try_inverse().expect("R validated as SPD"));
    linalg::symmetrized(h.transpose() * r_inv * h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub d: f64,
}

/// Targets, their undirected travel edges and the all-pairs fastest routes.
#[derive(Clone, Debug)]
pub struct TargetNetwork {
    pub targets: Vec<TargetSpec>,
    pub edges: Vec<Edge>,
    pub shortest: ShortestPaths,
    pub norm: MatrixNorm,
}

impl TargetNetwork {
    /// `edges` use target indices (positions in `targets`).
    pub fn new(targets: Vec<TargetSpec>, edges: Vec<Edge>, norm: MatrixNorm) -> Result<Self> {
        let n = targets.len();
        if n == 0 {
            return Err(Error::Schema("instance has no targets".into()));
        }
        for (k, t) in targets.iter().enumerate() {
            if targets[..k].iter().any(|o| o.id == t.id) {
                return Err(Error::InvalidTarget {
                    id: t.id,
                    reason: "duplicate target id".into(),
                });
            }
        }
        for e in &edges {
            let id = |x: usize| targets.get(x).map(|t| t.id).unwrap_or(x as i64);
            if e.i >= n || e.j >= n {
                return Err(Error::InvalidEdge {
                    i: id(e.i),
                    j: id(e.j),
                    reason: "endpoint is not a listed target".into(),
                });
            }
            if !(e.d >= 0.0 && e.d.is_finite()) {
                return Err(Error::InvalidEdge {
                    i: id(e.i),
                    j: id(e.j),
                    reason: "travel time must be finite and non-negative".into(),
                });
            }
        }
        let shortest = ShortestPaths::compute(n, &edges, None);
        for i in 0..n {
            for j in 0..n {
                if !shortest.time(i, j).is_finite() {
                    return Err(Error::Disconnected {
                        from: targets[i].id,
                        to: targets[j].id,
                    });
                }
            }
        }
        Ok(TargetNetwork {
            targets,
            edges,
            shortest,
            norm,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn index_of(&self, id: i64) -> Option<usize> {
        self.targets.iter().position(|t| t.id == id)
    }

    /// `g_i(‖Ω‖)`.
    pub fn cost(&self, i: usize, omega: &Mat) -> f64 {
        self.targets[i].weight(self.norm.apply(omega))
    }

    pub fn travel(&self, i: usize, j: usize) -> f64 {
        self.shortest.time(i, j)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.i == i && e.j == j) || (e.i == j && e.j == i))
    }
}

/// Number of agents in the fleet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FleetSpec {
    pub num_agents: usize,
}

impl FleetSpec {
    pub fn new(num_agents: usize, num_targets: usize) -> Result<Self> {
        if num_agents == 0 {
            return Err(Error::Schema("agents.count must be at least 1".into()));
        }
        if num_agents > num_targets {
            return Err(Error::Schema(format!(
                "agents.count ({num_agents}) exceeds the number of targets ({num_targets})"
            )));
        }
        Ok(FleetSpec { num_agents })
    }
}
