//! JSON instance documents.
//!
//! ```json
//! { "targets": [ { "id": 1, "A": 0.35, "Q": 1.19, "R": 2.31, "weight_alpha": 1.0 } ],
//!   "edges":   [ { "i": 1, "j": 2, "d": 0.4 } ],
//!   "agents":  { "count": 1 } }
//! ```
//!
//! Matrices are row-major nested lists; a 1×1 matrix may be a bare number.
//! `H` defaults to the identity when omitted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, FleetSpec, MatrixNorm, TargetNetwork, TargetSpec};
use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixDoc {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixDoc {
    fn to_mat(&self, id: i64, name: &str) -> Result<Mat> {
        match self {
            MatrixDoc::Scalar(v) => Ok(Mat::from_element(1, 1, *v)),
            MatrixDoc::Rows(rows) => {
                let nr = rows.len();
                let nc = rows.first().map_or(0, Vec::len);
                if nr == 0 || nc == 0 || rows.iter().any(|r| r.len() != nc) {
                    return Err(Error::Schema(format!(
                        "target {id}: matrix {name} must be a non-empty rectangular list of rows"
                    )));
                }
                Ok(Mat::from_fn(nr, nc, |i, j| rows[i][j]))
            }
        }
    }

    fn from_mat(m: &Mat) -> Self {
        if m.shape() == (1, 1) {
            MatrixDoc::Scalar(m[(0, 0)])
        } else {
            MatrixDoc::Rows(
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                    .collect(),
            )
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    id: i64,
    #[serde(rename = "A")]
    a: MatrixDoc,
    #[serde(rename = "Q")]
    q: MatrixDoc,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    h: Option<MatrixDoc>,
    #[serde(rename = "R")]
    r: MatrixDoc,
    #[serde(default = "default_alpha")]
    weight_alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    i: i64,
    j: i64,
    d: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentsDoc {
    count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    targets: Vec<TargetDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agents: Option<AgentsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    norm: Option<MatrixNorm>,
}

/// Parse and validate an instance document.
pub fn load_instance(document: &str) -> Result<(TargetNetwork, FleetSpec)> {
    let doc: InstanceDoc =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;

    let mut targets = Vec::with_capacity(doc.targets.len());
    for t in &doc.targets {
        let a = t.a.to_mat(t.id, "A")?;
        let q = t.q.to_mat(t.id, "Q")?;
        let r = t.r.to_mat(t.id, "R")?;
        let h = match &t.h {
            Some(h) => h.to_mat(t.id, "H")?,
            None => Mat::identity(a.nrows(), a.ncols()),
        };
        let mut spec = TargetSpec::new(t.id, a, q, h, r, t.weight_alpha)?;
        spec.position = t.position;
        targets.push(spec);
    }

    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in &doc.edges {
        let index = |id: i64| -> Result<usize> {
            doc.targets
                .iter()
                .position(|t| t.id == id)
                .ok_or_else(|| Error::InvalidEdge {
                    i: e.i,
                    j: e.j,
                    reason: format!("unknown target id {id}"),
                })
        };
        let i = index(e.i)?;
        let j = index(e.j)?;
        if i == j {
            return Err(Error::InvalidEdge {
                i: e.i,
                j: e.j,
                reason: "self loop".into(),
            });
        }
        edges.push(Edge { i, j, d: e.d });
    }

    let network = TargetNetwork::new(targets, edges, doc.norm.unwrap_or_default())?;
    let fleet = FleetSpec::new(doc.agents.map_or(1, |a| a.count), network.len())?;
    Ok((network, fleet))
}

pub fn load_instance_file(path: impl AsRef<Path>) -> Result<(TargetNetwork, FleetSpec)> {
    load_instance(&std::fs::read_to_string(path)?)
}

/// Serialise a network (and fleet size) back to the instance schema.
pub fn to_document(network: &TargetNetwork, fleet: Option<FleetSpec>) -> String {
    let doc = InstanceDoc {
        targets: network
            .targets
            .iter()
            .map(|t| {
                let default_h = t.h == Mat::identity(t.dim(), t.dim());
                TargetDoc {
                    id: t.id,
                    a: MatrixDoc::from_mat(&t.a),
                    q: MatrixDoc::from_mat(&t.q),
                    h: (!default_h).then(|| MatrixDoc::from_mat(&t.h)),
                    r: MatrixDoc::from_mat(&t.r),
                    weight_alpha: t.weight_alpha,
                    position: t.position,
                }
            })
            .collect(),
        edges: network
            .edges
            .iter()
            .map(|e| EdgeDoc {
                i: network.targets[e.i].id,
                j: network.targets[e.j].id,
                d: e.d,
            })
            .collect(),
        agents: fleet.map(|f| AgentsDoc {
            count: f.num_agents,
        }),
        norm: (network.norm != MatrixNorm::Trace).then_some(network.norm),
    };
    serde_json::to_string_pretty(&doc).expect("instance document serialises")
}

pub fn write_instance_file(
    path: impl AsRef<Path>,
    network: &TargetNetwork,
    fleet: Option<FleetSpec>,
) -> Result<()> {
    std::fs::write(path, to_document(network, fleet))?;
    Ok(())
}
