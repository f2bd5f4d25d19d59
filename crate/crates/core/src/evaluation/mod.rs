//! Scoring clusterings against ground truth and the repeated-run protocol.

mod baselines;
mod metrics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baselines::{complete_linkage_baseline, kmeans_baseline, KMeansFit};
pub use metrics::{match_clusters, nmi, prf_per_class, ClassScore, Contingency, Matching};

use crate::clustering::{cluster_documents, ClusterConfig, ClusterError, Partition};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("document `{0}` has no ground-truth class")]
    MissingTruth(String),
    #[error("ground truth lists `{0}` twice")]
    DuplicateTruth(String),
    #[error("truth CSV: {0}")]
    Csv(String),
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("prediction covers {pred} documents but truth covers {truth}")]
    SizeMismatch { pred: usize, truth: usize },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Class label per document id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    entries: BTreeMap<String, String>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, class: impl Into<String>) -> Result<(), EvalError> {
        let doc_id = doc_id.into();
        if self.entries.contains_key(&doc_id) {
            return Err(EvalError::DuplicateTruth(doc_id));
        }
        self.entries.insert(doc_id, class.into());
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&str> {
        self.entries.get(doc_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads `doc_id,class` rows (header required).
    pub fn from_csv<R: Read>(input: R) -> Result<Self, EvalError> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut truth = Self::new();
        for record in rdr.records() {
            let record = record.map_err(|e| EvalError::Csv(e.to_string()))?;
            let (Some(doc), Some(class)) = (record.get(0), record.get(1)) else {
                return Err(EvalError::Csv(format!("short row {:?}", record)));
            };
            truth.insert(doc.trim(), class.trim())?;
        }
        Ok(truth)
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["doc_id", "class"]).expect("in-memory write");
        for (doc, class) in &self.entries {
            wtr.write_record([doc, class]).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Class indices for `doc_ids` plus the class names, sorted, that the
    /// indices refer to.
    pub fn encode(&self, doc_ids: &[String]) -> Result<(Vec<usize>, Vec<String>), EvalError> {
        let mut names = BTreeSet::new();
        let mut raw = Vec::with_capacity(doc_ids.len());
        for id in doc_ids {
            let class = self.get(id).ok_or_else(|| EvalError::MissingTruth(id.clone()))?;
            names.insert(class.to_string());
            raw.push(class);
        }
        let names: Vec<String> = names.into_iter().collect();
        let labels = raw
            .iter()
            .map(|c| names.iter().position(|n| n == c).expect("collected above"))
            .collect();
        Ok((labels, names))
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    pub precision: Stat,
    pub recall: Stat,
    pub f_measure: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub runs: usize,
    pub per_class: Vec<ClassSummary>,
    pub nmi: Stat,
    pub run_nmi: Vec<f64>,
    /// Conventions the scores depend on.
    pub notes: Vec<String>,
}

/// Scores of one clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct RunScore {
    pub per_class: Vec<ClassScore>,
    pub nmi: f64,
}

pub fn score_partition(partition: &Partition, truth: &[usize]) -> Result<RunScore, EvalError> {
    if partition.len() != truth.len() {
        return Err(EvalError::SizeMismatch {
            pred: partition.len(),
            truth: truth.len(),
        });
    }
    let table = Contingency::new(partition.labels(), truth);
    let matching = match_clusters(&table);
    Ok(RunScore {
        per_class: prf_per_class(&table, &matching),
        nmi: nmi(&table),
    })
}

const NOTES: [&str; 3] = [
    "clusters matched to classes by optimal one-to-one assignment on the contingency table",
    "NMI = 2*I(U;V) / (H(U) + H(V)), natural logarithms",
    "std is the population standard deviation over runs",
];

/// Aggregates per-run scores into mean and standard deviation.
pub fn summarize_runs(
    method: impl Into<String>,
    partitions: &[Partition],
    truth: &[usize],
    class_names: &[String],
) -> Result<EvalReport, EvalError> {
    if partitions.is_empty() {
        return Err(EvalError::NoRuns);
    }
    let scores = partitions
        .iter()
        .map(|p| score_partition(p, truth))
        .collect::<Result<Vec<_>, _>>()?;
    let column = |c: usize, pick: fn(&ClassScore) -> f64| -> Stat {
        Stat::of(&scores.iter().map(|s| pick(&s.per_class[c])).collect::<Vec<_>>())
    };
    let n_classes = scores[0].per_class.len();
    let per_class = (0..n_classes)
        .map(|c| ClassSummary {
            class: class_names
                .get(c)
                .cloned()
                .unwrap_or_else(|| format!("class{c}")),
            precision: column(c, |s| s.precision),
            recall: column(c, |s| s.recall),
            f_measure: column(c, |s| s.f_measure),
        })
        .collect();
    let run_nmi: Vec<f64> = scores.iter().map(|s| s.nmi).collect();
    Ok(EvalReport {
        method: method.into(),
        runs: partitions.len(),
        per_class,
        nmi: Stat::of(&run_nmi),
        run_nmi,
        notes: NOTES.iter().map(|s| s.to_string()).collect(),
    })
}

/// A clustering method the harness can run with a seed.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    GaIcda(ClusterConfig),
    KMeans { k: usize, restarts: usize },
    CompleteLinkage { k: usize },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::GaIcda(cfg) => format!("ga-icda(alpha={})", cfg.alpha),
            Method::KMeans { .. } => "k-means".into(),
            Method::CompleteLinkage { .. } => "complete-linkage".into(),
        }
    }

    pub fn run(&self, features: &[Vec<f64>], seed: u64) -> Result<Partition, EvalError> {
        Ok(match self {
            Method::GaIcda(cfg) => {
                let mut cfg = cfg.clone();
                cfg.ga.seed = seed;
                cluster_documents(features, &cfg)?.partition
            }
            Method::KMeans { k, restarts } => kmeans_baseline(features, *k, seed, *restarts)?.partition,
            Method::CompleteLinkage { k } => complete_linkage_baseline(features, *k)?,
        })
    }
}

/// Runs `method` with seeds `base_seed + 0 .. base_seed + n_runs - 1` and
/// summarizes. Runs execute in parallel; results are collected in seed order.
pub fn repeated_eval(
    method: &Method,
    features: &[Vec<f64>],
    truth: &[usize],
    class_names: &[String],
    n_runs: usize,
    base_seed: u64,
) -> Result<EvalReport, EvalError> {
    if n_runs == 0 {
        return Err(EvalError::NoRuns);
    }
    let partitions = (0..n_runs as u64)
        .into_par_iter()
        .map(|r| method.run(features, base_seed.wrapping_add(r)))
        .collect::<Result<Vec<_>, _>>()?;
    summarize_runs(method.name(), &partitions, truth, class_names)
}

fn cell(s: &Stat) -> String {
    format!("{:.3} ({:.3})", s.mean, s.std)
}

/// Aligned plain-text table, one block per method.
pub fn format_table(reports: &[EvalReport]) -> String {
    let method_w = reports
        .iter()
        .map(|r| r.method.len())
        .chain([6])
        .max()
        .unwrap_or(6);
    let class_w = reports
        .iter()
        .flat_map(|r| r.per_class.iter().map(|c| c.class.len()))
        .chain([5])
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<method_w$}  {:<class_w$}  {:<15}  {:<15}  {:<15}",
        "method", "class", "precision", "recall", "f-measure"
    );
    for r in reports {
        for (i, c) in r.per_class.iter().enumerate() {
            let name = if i == 0 { r.method.as_str() } else { "" };
            let _ = writeln!(
                out,
                "{:<method_w$}  {:<class_w$}  {:<15}  {:<15}  {:<15}",
                name,
                c.class,
                cell(&c.precision),
                cell(&c.recall),
                cell(&c.f_measure)
            );
        }
        let _ = writeln!(
            out,
            "{:<method_w$}  {:<class_w$}  {:<15}  runs={}",
            "",
            "NMI",
            cell(&r.nmi),
            r.runs
        );
    }
    for note in NOTES {
        let _ = writeln!(out, "# {note}");
    }
    out
}

/// Long-format CSV: `method,class,metric,mean,std`.
pub fn metrics_csv(reports: &[EvalReport]) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["method", "class", "metric", "mean", "std"])
        .expect("in-memory write");
    for r in reports {
        for c in &r.per_class {
            for (metric, s) in [("precision", c.precision), ("recall", c.recall), ("f_measure", c.f_measure)] {
                wtr.write_record([&r.method, &c.class, metric, &s.mean.to_string(), &s.std.to_string()])
                    .expect("in-memory write");
            }
        }
        wtr.write_record([&r.method, "", "nmi", &r.nmi.mean.to_string(), &r.nmi.std.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
