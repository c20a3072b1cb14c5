use super::{Edge, TargetNetwork};

/// All-pairs fastest travel times with the node sequence of each route.
///
/// `path(i, j)` lists every node from `i` to `j` inclusive; `path(i, i)` is
/// empty and `time(i, i)` is zero.
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    dist: Vec<Vec<f64>>,
    paths: Vec<Vec<Vec<usize>>>,
}

impl ShortestPaths {
    /// Floyd–Warshall over `edges`, optionally restricted to nodes with
    /// `allowed[k] == true`.
    pub fn compute(n: usize, edges: &[Edge], allowed: Option<&[bool]>) -> Self {
        let ok = |k: usize| allowed.is_none_or(|a| a[k]);
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        let mut next: Vec<Vec<Option<usize>>> = vec![vec![None; n]; n];
        for (k, row) in dist.iter_mut().enumerate() {
            row[k] = 0.0;
        }
        for e in edges {
            if e.i == e.j || !ok(e.i) || !ok(e.j) {
                continue;
            }
            if e.d < dist[e.i][e.j] {
                dist[e.i][e.j] = e.d;
                dist[e.j][e.i] = e.d;
                next[e.i][e.j] = Some(e.j);
                next[e.j][e.i] = Some(e.i);
            }
        }
        for k in 0..n {
            if !ok(k) {
                continue;
            }
            for i in 0..n {
                let dik = dist[i][k];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let cand = dik + dist[k][j];
                    if cand < dist[i][j] {
                        dist[i][j] = cand;
                        next[i][j] = next[i][k];
                    }
                }
            }
        }
        let mut paths = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j || next[i][j].is_none() {
                    continue;
                }
                let mut p = vec![i];
                let mut cur = i;
                while cur != j {
                    cur = next[cur][j].expect("next hop along a finite route");
                    p.push(cur);
                }
                paths[i][j] = p;
            }
        }
        ShortestPaths { dist, paths }
    }

    /// Routes inside the sub-graph induced by `members`. Member pairs that
    /// the induced sub-graph cannot connect fall back to the full network's
    /// route, passing through non-member nodes without visiting them.
    pub fn within(network: &TargetNetwork, members: &[usize]) -> Self {
        let n = network.len();
        let mut allowed = vec![false; n];
        for &m in members {
            allowed[m] = true;
        }
        let mut sp = Self::compute(n, &network.edges, Some(&allowed));
        for &i in members {
            for &j in members {
                if !sp.dist[i][j].is_finite() {
                    sp.dist[i][j] = network.shortest.dist[i][j];
                    sp.paths[i][j] = network.shortest.paths[i][j].clone();
                }
            }
        }
        sp
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn time(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn path(&self, i: usize, j: usize) -> &[usize] {
        &self.paths[i][j]
    }

    /// Intermediate nodes strictly between `i` and `j` on the fastest route.
    pub fn via(&self, i: usize, j: usize) -> &[usize] {
        let p = &self.paths[i][j];
        if p.len() <= 2 {
            &[]
        } else {
            &p[1..p.len() - 1]
        }
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_routes_through_middle() {
        let edges = [Edge { i: 0, j: 1, d: 1.0 }, Edge { i: 1, j: 2, d: 1.0 }];
        let sp = ShortestPaths::compute(3, &edges, None);
        assert_eq!(sp.time(0, 2), 2.0);
        assert_eq!(sp.path(0, 2), &[0, 1, 2]);
        assert_eq!(sp.via(0, 2), &[1]);
        assert_eq!(sp.time(1, 1), 0.0);
        assert!(sp.path(1, 1).is_empty());
    }

    #[test]
    fn restriction_blocks_excluded_nodes() {
        let edges = [Edge { i: 0, j: 1, d: 1.0 }, Edge { i: 1, j: 2, d: 1.0 }];
        let sp = ShortestPaths::compute(3, &edges, Some(&[true, false, true]));
        assert!(sp.time(0, 2).is_infinite());
    }

    #[test]
    fn slow_direct_edge_loses_to_detour() {
        let edges = [
            Edge { i: 0, j: 2, d: 10.0 },
            Edge { i: 0, j: 1, d: 1.0 },
            Edge { i: 1, j: 2, d: 1.0 },
        ];
        let sp = ShortestPaths::compute(3, &edges, None);
        assert_eq!(sp.time(0, 2), 2.0);
        assert_eq!(sp.via(2, 0), &[1]);
    }
}
