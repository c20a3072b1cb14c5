use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::disparity::DisparityMatrix;
use crate::error::{Error, Result};

/// Gaussian similarity `s_ij = exp(−d_ij² / 2σ²)`.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    pub s: DMatrix<f64>,
    pub sigma: f64,
}

pub fn similarity(d: &DisparityMatrix, sigma: f64) -> Result<SimilarityMatrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let n = d.len();
    let s = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let x = d.d[i][j];
            // far pairs would underflow to an exact zero
            (-x * x / (2.0 * sigma * sigma)).exp().max(f64::MIN_POSITIVE)
        }
    });
    Ok(SimilarityMatrix { s, sigma })
}

/// Eigen-pairs of `L u = λ D u` with `L = D − W`.
#[derive(Clone, Debug)]
pub struct SpectralEmbedding {
    /// Ascending.
    pub values: Vec<f64>,
    /// One column per eigenvalue.
    pub vectors: DMatrix<f64>,
}

/// The `k` smallest generalised eigen-pairs, computed from the symmetric
/// matrix `D^{-1/2} L D^{-1/2}` and mapped back by `u = D^{-1/2} v`.
pub fn spectral_embedding(w: &DMatrix<f64>, k: usize) -> SpectralEmbedding {
    let n = w.nrows();
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let sym = DMatrix::from_fn(n, n, |i, j| {
        let l = if i == j { deg[i] - w[(i, j)] } else { -w[(i, j)] };
        inv_sqrt[i] * l * inv_sqrt[j]
    });
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order[..k].iter().map(|&c| eig.eigenvalues[c]).collect();
    let vectors = DMatrix::from_fn(n, k, |i, c| inv_sqrt[i] * eig.eigenvectors[(i, order[c])]);
    SpectralEmbedding { values, vectors }
}

/// k-means result: a label per row and the within-cluster sum of squares.
#[derive(Clone, Debug)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub inertia: f64,
}

const RESTARTS: usize = 50;
const LLOYD_ITERS: usize = 300;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding followed by Lloyd iterations, best of 50 restarts.
/// Restarts that leave a cluster empty are discarded.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot split {n} points into {k} clusters")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeans> = None;
    for _ in 0..RESTARTS {
        let Some(run) = kmeans_once(points, k, &mut rng) else { continue };
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.ok_or(Error::EmptyCluster { k })
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Option<KMeans> {
    let n = points.len();
    let dim = points[0].len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut r = rng.gen_range(0.0..total);
        let mut pick = n - 1;
        for (i, w) in nearest.iter().enumerate() {
            if r < *w {
                pick = i;
                break;
            }
            r -= w;
        }
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(dist2(p, &centers[centers.len() - 1]));
        }
    }
    let mut labels = vec![usize::MAX; n];
    for _ in 0..LLOYD_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(p, center);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if labels[i] != best.1 {
                labels[i] = best.1;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        if counts.contains(&0) {
            return None;
        }
        for c in 0..k {
            centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| dist2(p, &centers[l]))
        .sum();
    Some(KMeans { labels, inertia })
}

/// Normalised spectral clustering into `k` clusters. Clusters are listed by
/// their smallest member; members are ascending.
pub fn spectral_cluster(sim: &SimilarityMatrix, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = sim.s.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot split {n} targets into {k} clusters")));
    }
    if k == 1 {
        return Ok(vec![(0..n).collect()]);
    }
    let emb = spectral_embedding(&sim.s, k);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| emb.vectors.row(i).iter().copied().collect())
        .collect();
    let km = kmeans(&rows, k, seed)?;
    Ok(group_labels(&km.labels, k))
}

pub(crate) fn group_labels(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut clusters = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        clusters[l].push(i);
    }
    clusters.retain(|c| !c.is_empty());
    clusters.sort_by_key(|c| c[0]);
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> SimilarityMatrix {
        // 0..3 and 3..6, strong inside, weak across
        let d = DisparityMatrix {
            d: (0..6)
                .map(|i| {
                    (0..6)
                        .map(|j| {
                            if i == j {
                                0.0
                            } else if (i < 3) == (j < 3) {
                                0.1
                            } else {
                                5.0
                            }
                        })
                        .collect()
                })
                .collect(),
        };
        similarity(&d, 1.0).unwrap()
    }

    #[test]
    fn recovers_cliques() {
        let c = spectral_cluster(&two_cliques(), 2, 7).unwrap();
        assert_eq!(c, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn generalised_residual_is_small() {
        let s = two_cliques();
        let emb = spectral_embedding(&s.s, 6);
        let n = 6;
        let deg = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| s.s.row(i).sum()));
        let l = &deg - &s.s;
        assert!(emb.values[0].abs() < 1e-12);
        for c in 0..n {
            let u = emb.vectors.column(c);
            let r = &l * u - emb.values[c] * (&deg * u);
            assert!(r.norm() < 1e-10, "pair {c}: {}", r.norm());
        }
        // the zero mode is constant
        let u0 = emb.vectors.column(0);
        assert!((u0.max() - u0.min()).abs() < 1e-10);
    }

    #[test]
    fn k_equal_n_gives_singletons() {
        let c = spectral_cluster(&two_cliques(), 6, 1).unwrap();
        assert_eq!(c.len(), 6);
    }
}
