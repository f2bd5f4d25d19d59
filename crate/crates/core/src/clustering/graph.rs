use serde::{Deserialize, Serialize};

use super::ClusterError;

/// Dense symmetric matrix of L1 distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Checks that all vectors share one length and hold finite values.
pub fn check_features(features: &[Vec<f64>]) -> Result<(), ClusterError> {
    let dim = features.first().map_or(0, Vec::len);
    for (index, f) in features.iter().enumerate() {
        if f.len() != dim {
            return Err(ClusterError::LengthMismatch {
                index,
                expected: dim,
                found: f.len(),
            });
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite(index));
        }
    }
    Ok(())
}

pub fn pairwise_distances(features: &[Vec<f64>]) -> Result<DistanceMatrix, ClusterError> {
    let n = features.len();
    if n < 2 {
        return Err(ClusterError::TooFewDocuments { need: 2, got: n });
    }
    check_features(features)?;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = features[i]
                .iter()
                .zip(&features[j])
                .map(|(a, b)| (a - b).abs())
                .sum();
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// How the directed h-NN relation becomes undirected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetrize {
    /// Edge if either endpoint lists the other.
    #[default]
    Union,
    /// Edge only if both endpoints list each other.
    Intersection,
}

/// Scale `a` in the similarity kernel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalScale {
    /// `a_u` = distance to the h-th nearest neighbour; the kernel divides by `a_u * a_v`.
    #[default]
    PerNode,
    /// One scale for every node; the kernel divides by `a^2`.
    Global(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub h: usize,
    pub alpha: f64,
    pub symmetrize: Symmetrize,
    pub scale: LocalScale,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            h: 5,
            alpha: 1.0,
            symmetrize: Symmetrize::Union,
            scale: LocalScale::PerNode,
        }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.h == 0 {
            return Err(ClusterError::NeighbourCount);
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ClusterError::Alpha(self.alpha));
        }
        if let LocalScale::Global(a) = self.scale {
            if !(a > 0.0 && a.is_finite()) {
                return Err(ClusterError::Scale(a));
            }
        }
        Ok(())
    }
}

/// Undirected weighted edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    pub n: usize,
    /// Sorted by `(u, v)`, no duplicates, no self-loops.
    pub edges: Vec<Edge>,
    pub scales: Vec<f64>,
    pub params: GraphParams,
}

impl SimilarityGraph {
    /// Graph with explicit edges; scales are set to 1. Pairs are normalized
    /// to `u < v`; self-loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut list: Vec<Edge> = edges
            .into_iter()
            .filter(|&(u, v, _)| u != v && u < n && v < n)
            .map(|(u, v, w)| Edge {
                u: u.min(v),
                v: u.max(v),
                w,
            })
            .collect();
        list.sort_by_key(|e| (e.u, e.v));
        list.dedup_by_key(|e| (e.u, e.v));
        Self {
            n,
            edges: list,
            scales: vec![1.0; n],
            params: GraphParams::default(),
        }
    }

    /// Neighbour lists with weights, each sorted by node index.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let key = (u.min(v), u.max(v));
        self.edges
            .binary_search_by_key(&key, |e| (e.u, e.v))
            .ok()
            .map(|i| self.edges[i].w)
    }

    /// Connected-component id of every node.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Similarity kernel `exp(-d^alpha / scale_product)`.
pub fn similarity(distance: f64, alpha: f64, scale_product: f64) -> f64 {
    (-distance.powf(alpha) / scale_product).exp()
}

const SCALE_FLOOR: f64 = 1e-9;

pub fn build_graph(
    distances: &DistanceMatrix,
    params: &GraphParams,
) -> Result<SimilarityGraph, ClusterError> {
    params.validate()?;
    let n = distances.len();
    if n == 0 {
        return Err(ClusterError::EmptyGraph);
    }
    let h = if params.h >= n {
        if n > 1 {
            log::warn!("h = {} is not below n = {n}; clamping to {}", params.h, n - 1);
        }
        n - 1
    } else {
        params.h
    };

    let mut neighbours = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    for u in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&v| v != u).collect();
        let row = distances.row(u);
        others.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        others.truncate(h);
        let a_u = match params.scale {
            LocalScale::Global(a) => a,
            LocalScale::PerNode => others.last().map_or(0.0, |&v| row[v]),
        };
        scales.push(if a_u > 0.0 { a_u } else { SCALE_FLOOR });
        neighbours.push(others);
    }

    let mut listed = vec![false; n * n];
    for (u, nn) in neighbours.iter().enumerate() {
        for &v in nn {
            listed[u * n + v] = true;
        }
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let (a, b) = (listed[u * n + v], listed[v * n + u]);
            let keep = match params.symmetrize {
                Symmetrize::Union => a || b,
                Symmetrize::Intersection => a && b,
            };
            if keep {
                let w = similarity(distances.get(u, v), params.alpha, scales[u] * scales[v])
                    .max(f64::MIN_POSITIVE);
                edges.push(Edge { u, v, w });
            }
        }
    }
    Ok(SimilarityGraph {
        n,
        edges,
        scales,
        params: GraphParams { h, ..*params },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn l1_distances() {
        let d = pairwise_distances(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(d.get(0, 1), 2.0);
        assert_eq!(d.get(1, 0), 2.0);
        assert_eq!(d.get(0, 2), 0.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn distances_match_double_loop() {
        let x = [
            [0.3, 0.9, 0.1],
            [0.5, 0.2, 0.8],
            [0.0, 0.0, 0.0],
            [1.0, 0.7, 0.4],
            [0.6, 0.6, 0.6],
        ];
        let rows: Vec<Vec<f64>> = x.iter().map(|r| r.to_vec()).collect();
        let d = pairwise_distances(&rows).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += (x[i][k] - x[j][k]).abs();
                }
                assert_relative_eq!(d.get(i, j), s, max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn distance_errors() {
        assert!(pairwise_distances(&[vec![1.0]]).is_err());
        assert!(matches!(
            pairwise_distances(&[vec![1.0], vec![1.0, 2.0]]),
            Err(ClusterError::LengthMismatch { .. })
        ));
        assert!(matches!(
            pairwise_distances(&[vec![1.0], vec![f64::NAN]]),
            Err(ClusterError::NonFinite(1))
        ));
    }

    #[test]
    fn kernel_values() {
        assert_eq!(similarity(0.0, 1.0, 1.0), 1.0);
        assert_eq!(similarity(0.0, 2.0, 0.3), 1.0);
        assert_relative_eq!(similarity(1.0, 1.0, 1.0), 0.367879441171442, max_relative = 1e-12);
        assert_relative_eq!(similarity(2.0, 2.0, 1.0), 0.018315638888734, max_relative = 1e-12);
    }

    fn line_points(xs: &[f64]) -> DistanceMatrix {
        pairwise_distances(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn knn_edges_and_scales() {
        let d = line_points(&[0.0, 1.0, 3.0, 10.0]);
        let g = build_graph(&d, &GraphParams { h: 1, ..Default::default() }).unwrap();
        // NN: 0->1, 1->0, 2->1, 3->2
        let pairs: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(g.scales, vec![1.0, 1.0, 2.0, 7.0]);
        assert_relative_eq!(g.weight(1, 2).unwrap(), (-2.0f64 / 2.0).exp());
    }

    #[test]
    fn intersection_keeps_mutual_pairs_only() {
        let d = line_points(&[0.0, 1.0, 3.0, 10.0]);
        let p = GraphParams { h: 1, symmetrize: Symmetrize::Intersection, ..Default::default() };
        let g = build_graph(&d, &p).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!((g.edges[0].u, g.edges[0].v), (0, 1));
    }

    #[test]
    fn ties_broken_by_index_and_h_clamped() {
        let d = line_points(&[0.0, 1.0, -1.0]);
        let g = build_graph(&d, &GraphParams { h: 1, ..Default::default() }).unwrap();
        // node 0 has two neighbours at distance 1 and picks node 1
        assert!(g.weight(0, 1).is_some());
        let g = build_graph(&d, &GraphParams { h: 10, ..Default::default() }).unwrap();
        assert_eq!(g.params.h, 2);
        assert_eq!(g.edges.len(), 3);
    }

    #[test]
    fn zero_scale_falls_back() {
        let d = line_points(&[0.0, 0.0, 5.0]);
        let g = build_graph(&d, &GraphParams { h: 1, ..Default::default() }).unwrap();
        assert_eq!(g.scales[0], SCALE_FLOOR);
        assert_eq!(g.weight(0, 1), Some(1.0));
        for e in &g.edges {
            assert!(e.w > 0.0 && e.w <= 1.0);
        }
    }

    #[test]
    fn global_scale() {
        let d = line_points(&[0.0, 2.0]);
        let p = GraphParams { h: 1, alpha: 2.0, scale: LocalScale::Global(1.0), ..Default::default() };
        let g = build_graph(&d, &p).unwrap();
        assert_relative_eq!(g.edges[0].w, (-4.0f64).exp());
    }

    #[test]
    fn invalid_params() {
        let d = line_points(&[0.0, 2.0]);
        assert!(build_graph(&d, &GraphParams { h: 0, ..Default::default() }).is_err());
        assert!(build_graph(&d, &GraphParams { alpha: -1.0, ..Default::default() }).is_err());
        assert!(build_graph(&d, &GraphParams { scale: LocalScale::Global(0.0), ..Default::default() }).is_err());
    }
}
