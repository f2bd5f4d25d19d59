//! External clustering metrics against ground-truth classes.

use serde::{Deserialize, Serialize};

/// Counts `table[cluster][class]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency {
    pub table: Vec<Vec<usize>>,
}

impl Contingency {
    /// Both label slices must be dense (`0..k`) and of equal length.
    pub fn new(clusters: &[usize], classes: &[usize]) -> Self {
        assert_eq!(clusters.len(), classes.len(), "label slices differ in length");
        let k = clusters.iter().max().map_or(0, |m| m + 1);
        let c = classes.iter().max().map_or(0, |m| m + 1);
        let mut table = vec![vec![0; c]; k];
        for (&a, &b) in clusters.iter().zip(classes) {
            table[a][b] += 1;
        }
        Self { table }
    }

    pub fn from_table(table: Vec<Vec<usize>>) -> Self {
        Self { table }
    }

    pub fn n_clusters(&self) -> usize {
        self.table.len()
    }

    pub fn n_classes(&self) -> usize {
        self.table.first().map_or(0, Vec::len)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        (0..self.n_classes())
            .map(|c| self.table.iter().map(|r| r[c]).sum())
            .collect()
    }

    pub fn total(&self) -> usize {
        self.table.iter().flatten().sum()
    }
}

/// Cluster-to-class matching: `assignment[cluster]` is the matched class, or
/// `None` for clusters left over when there are more clusters than classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub assignment: Vec<Option<usize>>,
    pub overlap: usize,
}

impl Matching {
    pub fn cluster_for_class(&self, class: usize) -> Option<usize> {
        self.assignment.iter().position(|&a| a == Some(class))
    }
}

/// One-to-one cluster/class assignment maximizing the summed overlap
/// (Hungarian method on the padded square cost matrix).
pub fn match_clusters(contingency: &Contingency) -> Matching {
    let rows = contingency.n_clusters();
    let cols = contingency.n_classes();
    let size = rows.max(cols);
    if size == 0 {
        return Matching {
            assignment: vec![None; rows],
            overlap: 0,
        };
    }
    let max = contingency.table.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            max - contingency.table[i][j] as i64
        } else {
            max
        }
    };
    let row_to_col = hungarian(size, cost);
    let mut assignment = vec![None; rows];
    let mut overlap = 0;
    for (i, slot) in assignment.iter_mut().enumerate() {
        let j = row_to_col[i];
        if j < cols {
            *slot = Some(j);
            overlap += contingency.table[i][j];
        }
    }
    Matching { assignment, overlap }
}

/// Minimum-cost perfect assignment on an `n x n` matrix (potentials form,
/// O(n^3)). Returns the column chosen for every row.
fn hungarian(n: usize, cost: impl Fn(usize, usize) -> i64) -> Vec<usize> {
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[col] = row (1-based), 0 = free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn f_measure(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Precision, recall and F for every class, using its matched cluster.
/// A class without a matched cluster scores zero.
pub fn prf_per_class(contingency: &Contingency, matching: &Matching) -> Vec<ClassScore> {
    let cluster_sizes = contingency.cluster_sizes();
    let class_sizes = contingency.class_sizes();
    (0..contingency.n_classes())
        .map(|class| match matching.cluster_for_class(class) {
            Some(k) => {
                let hit = contingency.table[k][class] as f64;
                let precision = if cluster_sizes[k] > 0 {
                    hit / cluster_sizes[k] as f64
                } else {
                    0.0
                };
                let recall = if class_sizes[class] > 0 {
                    hit / class_sizes[class] as f64
                } else {
                    0.0
                };
                ClassScore {
                    precision,
                    recall,
                    f_measure: f_measure(precision, recall),
                }
            }
            None => ClassScore {
                precision: 0.0,
                recall: 0.0,
                f_measure: 0.0,
            },
        })
        .collect()
}

fn entropy(sizes: &[usize], n: f64) -> f64 {
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `2 I(U;V) / (H(U) + H(V))` with natural logarithms.
///
/// When both entropies vanish the partitions are identical (one block each)
/// and the score is 1; when only one vanishes the score is 0.
pub fn nmi(contingency: &Contingency) -> f64 {
    let n = contingency.total() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let rows = contingency.cluster_sizes();
    let cols = contingency.class_sizes();
    let hu = entropy(&rows, n);
    let hv = entropy(&cols, n);
    if hu == 0.0 && hv == 0.0 {
        return 1.0;
    }
    if hu == 0.0 || hv == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for (i, row) in contingency.table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let nij = c as f64;
            mi += nij / n * (n * nij / (rows[i] as f64 * cols[j] as f64)).ln();
        }
    }
    (2.0 * mi / (hu + hv)).clamp(0.0, 1.0)
}
