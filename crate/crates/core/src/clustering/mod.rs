//! Graph-evolutionary document clustering.
//!
//! Documents become nodes of an h-nearest-neighbour similarity graph with
//! weights `exp(-d^alpha / (a_u * a_v))`. Nodes are relabelled by reverse
//! Cuthill-McKee, edges whose endpoint labels differ by `T` or more are
//! dropped, a locus-based genetic algorithm maximises weighted modularity,
//! and the resulting clusters are merged by farthest-pair L1 distance until
//! `K` remain.

mod evolve;
mod graph;
mod merge;
mod ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use evolve::{decode_genome, evolve_partition, weighted_modularity, Evolved, GaParams};
pub use graph::{
    build_graph, check_features, pairwise_distances, similarity, DistanceMatrix, Edge, GraphParams, LocalScale,
    SimilarityGraph, Symmetrize,
};
pub use merge::{merge_clusters, split_clusters, Merged};
pub use ordering::{bandwidth, order_nodes, prune_edges, NodeOrdering};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("need at least {need} documents, got {got}")]
    TooFewDocuments { need: usize, got: usize },
    #[error("feature vector {index} has {found} values, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite feature value in document {0}")]
    NonFinite(usize),
    #[error("h must be at least 1")]
    NeighbourCount,
    #[error("alpha must be positive and finite, got {0}")]
    Alpha(f64),
    #[error("local scale must be positive and finite, got {0}")]
    Scale(f64),
    #[error("threshold T must be at least 1")]
    Threshold,
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("invalid GA parameters: {0}")]
    GaParams(String),
    #[error("cannot merge down to {requested} clusters from {available}")]
    MergeTarget { requested: usize, available: usize },
    #[error("partition covers {labels} nodes but distances cover {nodes}")]
    PartitionSize { labels: usize, nodes: usize },
}

/// Cluster assignment with dense labels `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabels arbitrary ids densely in order of first appearance.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|&r| {
                let next = map.len();
                *map.entry(r).or_insert(next)
            })
            .collect();
        Self { labels, k: map.len() }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
            k: n,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Members of each cluster, in label order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (node, &c) in self.labels.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        self.labels[a] == self.labels[b]
    }
}

/// End-to-end clusterer configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Final number of clusters.
    #[serde(alias = "K")]
    pub k: usize,
    pub h: usize,
    pub alpha: f64,
    /// Label-difference threshold; `None` means `ceil(n / 2)`.
    #[serde(rename = "T", alias = "t")]
    pub threshold: Option<usize>,
    pub symmetrize: Symmetrize,
    pub scale: LocalScale,
    pub ga: GaParams,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 2,
            h: 5,
            alpha: 1.0,
            threshold: None,
            symmetrize: Symmetrize::Union,
            scale: LocalScale::PerNode,
            ga: GaParams::default(),
        }
    }
}

impl ClusterConfig {
    pub fn graph_params(&self) -> GraphParams {
        GraphParams {
            h: self.h,
            alpha: self.alpha,
            symmetrize: self.symmetrize,
            scale: self.scale,
        }
    }

    pub fn threshold_for(&self, n: usize) -> usize {
        self.threshold.unwrap_or(n.div_ceil(2)).max(1)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.k == 0 {
            return Err(ClusterError::MergeTarget {
                requested: 0,
                available: 0,
            });
        }
        self.graph_params().validate()?;
        if self.threshold == Some(0) {
            return Err(ClusterError::Threshold);
        }
        self.ga.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    pub partition: Partition,
    /// Clusters found by the genetic algorithm before merging (or, when
    /// fewer than `k`, before splitting).
    pub evolved_k: usize,
    pub best_fitness: f64,
    /// Best modularity per generation, starting with the initial population.
    pub fitness_trace: Vec<f64>,
    pub merge_distances: Vec<f64>,
    /// Edge counts before and after bandwidth pruning.
    pub edges_built: usize,
    pub edges_kept: usize,
}

/// Full clustering pipeline on (already normalized) feature vectors.
pub fn cluster_documents(
    features: &[Vec<f64>],
    config: &ClusterConfig,
) -> Result<ClusterOutcome, ClusterError> {
    config.validate()?;
    let n = features.len();
    if n < config.k {
        return Err(ClusterError::TooFewDocuments {
            need: config.k,
            got: n,
        });
    }
    let distances = pairwise_distances(features)?;
    let graph = build_graph(&distances, &config.graph_params())?;
    let ordering = order_nodes(&graph);
    let pruned = prune_edges(&graph, &ordering, config.threshold_for(n))?;
    let evolved = evolve_partition(&pruned, &config.ga)?;
    let evolved_k = evolved.partition.k();
    let merged = if evolved_k >= config.k {
        merge_clusters(&evolved.partition, &distances, config.k)?
    } else {
        split_clusters(&evolved.partition, &distances, config.k)?
    };
    Ok(ClusterOutcome {
        partition: merged.partition,
        evolved_k,
        best_fitness: evolved.fitness,
        fitness_trace: evolved.trace,
        merge_distances: merged.distances,
        edges_built: graph.edges.len(),
        edges_kept: pruned.edges.len(),
    })
}
