//! Reference clusterers: Euclidean k-means and complete-linkage agglomeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{
    check_features, merge_clusters, pairwise_distances, ClusterError, Partition,
};

const MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub partition: Partition,
    /// Centroids indexed by the partition's labels.
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, later ones drawn with
/// probability proportional to squared distance from the chosen set.
fn seed_centroids(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![data[rng.random_range(0..data.len())].clone()];
    let mut d2: Vec<f64> = data.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = data.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..data.len())
        };
        let c = data[pick].clone();
        for (d, p) in d2.iter_mut().zip(data) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(data: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let k = centroids.len();
    let dim = data[0].len();
    let mut labels = vec![usize::MAX; data.len()];
    for _ in 0..MAX_ITER {
        let mut changed = false;
        for (i, p) in data.iter().enumerate() {
            let (c, _) = nearest(p, &centroids);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        // Refill empty clusters with the point farthest from its centroid.
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..data.len())
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&data[a], &centroids[labels[a]])
                        .total_cmp(&sq_dist(&data[b], &centroids[labels[b]]))
                        .then(b.cmp(&a))
                });
            if let Some(i) = far {
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in data.iter().zip(&labels) {
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for (c, sum) in sums.into_iter().enumerate() {
            if sizes[c] > 0 {
                centroids[c] = sum.into_iter().map(|s| s / sizes[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let wcss = data
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    (labels, centroids, wcss)
}

/// Best of `restarts` seeded Lloyd runs by within-cluster sum of squares.
pub fn kmeans_baseline(
    data: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansFit, ClusterError> {
    if k == 0 || k > data.len() {
        return Err(ClusterError::MergeTarget {
            requested: k,
            available: data.len(),
        });
    }
    check_features(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    for _ in 0..restarts.max(1) {
        let fit = lloyd(data, seed_centroids(data, k, &mut rng));
        if best.as_ref().is_none_or(|b| fit.2 < b.2) {
            best = Some(fit);
        }
    }
    let (labels, centroids, wcss) = best.expect("at least one restart");
    let partition = Partition::from_labels(&labels);
    // reorder centroids to the canonical labels
    let mut ordered = vec![Vec::new(); k];
    for (raw, &canon) in labels.iter().zip(partition.labels()) {
        if ordered[canon].is_empty() {
            ordered[canon] = centroids[*raw].clone();
        }
    }
    Ok(KMeansFit {
        partition,
        centroids: ordered,
        wcss,
    })
}

/// Agglomerative clustering with complete linkage on L1 distances, cut at
/// `k` clusters.
pub fn complete_linkage_baseline(data: &[Vec<f64>], k: usize) -> Result<Partition, ClusterError> {
    if k == 0 || k > data.len() {
        return Err(ClusterError::MergeTarget {
            requested: k,
            available: data.len(),
        });
    }
    if data.len() == 1 {
        return Ok(Partition::singletons(1));
    }
    let distances = pairwise_distances(data)?;
    Ok(merge_clusters(&Partition::singletons(data.len()), &distances, k)?.partition)
}
