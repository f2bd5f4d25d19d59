use super::{ClusterError, DistanceMatrix, Partition};

#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub partition: Partition,
    /// Farthest-pair distance of each merge, in merge order.
    pub distances: Vec<f64>,
}

/// Repeatedly merges the two clusters whose farthest members are closest,
/// until `k` clusters remain. Ties go to the lexicographically smallest
/// pair of current cluster indices.
pub fn merge_clusters(
    partition: &Partition,
    distances: &DistanceMatrix,
    k: usize,
) -> Result<Merged, ClusterError> {
    check_target(partition, distances, k, partition.k())?;
    Ok(agglomerate(partition.clusters(), None, distances, k))
}

/// Refines `partition` into exactly `k` clusters when it has fewer: starts
/// from singletons and merges by the same farthest-pair rule, but only
/// within clusters of `partition`.
pub fn split_clusters(
    partition: &Partition,
    distances: &DistanceMatrix,
    k: usize,
) -> Result<Merged, ClusterError> {
    check_target(partition, distances, k, partition.len())?;
    if k < partition.k() {
        return Err(ClusterError::MergeTarget {
            requested: k,
            available: partition.k(),
        });
    }
    let singletons = (0..partition.len()).map(|v| vec![v]).collect();
    Ok(agglomerate(singletons, Some(partition.labels()), distances, k))
}

fn check_target(
    partition: &Partition,
    distances: &DistanceMatrix,
    k: usize,
    available: usize,
) -> Result<(), ClusterError> {
    if partition.len() != distances.len() {
        return Err(ClusterError::PartitionSize {
            labels: partition.len(),
            nodes: distances.len(),
        });
    }
    if k == 0 || k > available {
        return Err(ClusterError::MergeTarget {
            requested: k,
            available,
        });
    }
    Ok(())
}

/// Complete-linkage agglomeration; with `groups`, only clusters whose first
/// members share a group may merge.
fn agglomerate(
    mut clusters: Vec<Vec<usize>>,
    groups: Option<&[usize]>,
    distances: &DistanceMatrix,
    k: usize,
) -> Merged {
    let m = clusters.len();
    let mut between = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let mut far = 0.0f64;
            for &a in &clusters[i] {
                for &b in &clusters[j] {
                    far = far.max(distances.get(a, b));
                }
            }
            between[i][j] = far;
            between[j][i] = far;
        }
    }
    let allowed = |clusters: &[Vec<usize>], i: usize, j: usize| {
        groups.is_none_or(|g| g[clusters[i][0]] == g[clusters[j][0]])
    };

    let mut merge_distances = Vec::new();
    while clusters.len() > k {
        let c = clusters.len();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..c {
            for j in (i + 1)..c {
                if best.is_none_or(|b| between[i][j] < b.2) && allowed(&clusters, i, j) {
                    best = Some((i, j, between[i][j]));
                }
            }
        }
        let Some((i, j, d)) = best else { break };
        merge_distances.push(d);
        let absorbed = clusters.remove(j);
        clusters[i].extend(absorbed);
        for x in 0..c {
            between[i][x] = between[i][x].max(between[j][x]);
            between[x][i] = between[i][x];
        }
        between[i][i] = 0.0;
        between.remove(j);
        for row in &mut between {
            row.remove(j);
        }
    }

    let n = clusters.iter().map(Vec::len).sum();
    let mut labels = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for &node in members {
            labels[node] = c;
        }
    }
    Merged {
        partition: Partition::from_labels(&labels),
        distances: merge_distances,
    }
}
