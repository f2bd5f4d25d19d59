use std::collections::VecDeque;

use super::{ClusterError, SimilarityGraph};

/// Bijection from nodes to integer labels `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOrdering {
    labels: Vec<usize>,
}

impl NodeOrdering {
    pub fn identity(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
        }
    }

    /// Builds the ordering from the sequence of nodes in label order.
    pub fn from_sequence(sequence: &[usize]) -> Self {
        let mut labels = vec![0; sequence.len()];
        for (label, &node) in sequence.iter().enumerate() {
            labels[node] = label;
        }
        Self { labels }
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.labels.len()];
        self.labels
            .iter()
            .all(|&l| l < seen.len() && !std::mem::replace(&mut seen[l], true))
    }
}

/// Reverse Cuthill-McKee over the unweighted edge structure.
///
/// Each component starts from its minimum-degree node (lowest index on
/// ties) and is explored breadth-first with neighbours visited by ascending
/// degree, then index. The concatenated sequence is reversed; isolated
/// nodes are appended afterwards in index order.
pub fn order_nodes(graph: &SimilarityGraph) -> NodeOrdering {
    let n = graph.n;
    let degree = graph.degrees();
    let adj: Vec<Vec<usize>> = graph
        .adjacency()
        .into_iter()
        .map(|list| {
            let mut nb: Vec<usize> = list.into_iter().map(|(v, _)| v).collect();
            nb.sort_by_key(|&v| (degree[v], v));
            nb
        })
        .collect();

    let mut visited = vec![false; n];
    let mut sequence = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    loop {
        let start = (0..n)
            .filter(|&u| !visited[u] && degree[u] > 0)
            .min_by_key(|&u| (degree[u], u));
        let Some(start) = start else { break };
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            sequence.push(u);
            for &v in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    sequence.reverse();
    sequence.extend((0..n).filter(|&u| degree[u] == 0));
    NodeOrdering::from_sequence(&sequence)
}

/// Largest label difference over the graph's edges.
pub fn bandwidth(graph: &SimilarityGraph, ordering: &NodeOrdering) -> usize {
    graph
        .edges
        .iter()
        .map(|e| ordering.label(e.u).abs_diff(ordering.label(e.v)))
        .max()
        .unwrap_or(0)
}

/// Keeps edges whose endpoint labels differ by less than `threshold`.
pub fn prune_edges(
    graph: &SimilarityGraph,
    ordering: &NodeOrdering,
    threshold: usize,
) -> Result<SimilarityGraph, ClusterError> {
    if threshold == 0 {
        return Err(ClusterError::Threshold);
    }
    let edges = graph
        .edges
        .iter()
        .filter(|e| ordering.label(e.u).abs_diff(ordering.label(e.v)) < threshold)
        .copied()
        .collect();
    Ok(SimilarityGraph {
        edges,
        ..graph.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, pairs: &[(usize, usize)]) -> SimilarityGraph {
        SimilarityGraph::from_edges(n, pairs.iter().map(|&(u, v)| (u, v, 1.0)))
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn single_node_identity() {
        assert_eq!(order_nodes(&unit(1, &[])), NodeOrdering::identity(1));
    }

    #[test]
    fn path_keeps_minimal_bandwidth() {
        let g = unit(3, &[(0, 1), (1, 2)]);
        let f = order_nodes(&g);
        assert!(f.is_bijection());
        let best = permutations(3)
            .iter()
            .map(|p| bandwidth(&g, &NodeOrdering::from_sequence(p)))
            .min()
            .unwrap();
        assert_eq!(best, 1);
        assert_eq!(bandwidth(&g, &f), best);
    }

    #[test]
    fn disconnected_pairs_are_consecutive() {
        let g = unit(4, &[(0, 2), (1, 3)]);
        let f = order_nodes(&g);
        assert_eq!(f.label(0).abs_diff(f.label(2)), 1);
        assert_eq!(f.label(1).abs_diff(f.label(3)), 1);
        // CM visits 0,2 then 1,3; reversed gives 3,1,2,0
        assert_eq!(f.labels(), &[3, 1, 2, 0]);
    }

    #[test]
    fn isolated_nodes_go_last_in_index_order() {
        let g = unit(5, &[(1, 3)]);
        let f = order_nodes(&g);
        assert_eq!((f.label(0), f.label(2), f.label(4)), (2, 3, 4));
        assert!(f.is_bijection());
    }

    #[test]
    fn scrambled_path_bandwidth_is_reduced() {
        // path 0-5-2-7-1-6-3-4 under identity labels has bandwidth 6
        let g = unit(8, &[(0, 5), (5, 2), (2, 7), (7, 1), (1, 6), (6, 3), (3, 4)]);
        assert_eq!(bandwidth(&g, &NodeOrdering::identity(8)), 6);
        assert_eq!(bandwidth(&g, &order_nodes(&g)), 1);
    }

    #[test]
    fn pruning_rules() {
        let g = unit(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let f = NodeOrdering::identity(4);
        assert_eq!(prune_edges(&g, &f, 4).unwrap(), g);
        assert!(prune_edges(&g, &f, 1).unwrap().edges.is_empty());
        let kept = prune_edges(&g, &f, 2).unwrap();
        assert_eq!(kept.edges.len(), 3);
        assert!(kept.weight(0, 3).is_none());
        assert_eq!(prune_edges(&g, &f, 0), Err(ClusterError::Threshold));
    }
}
