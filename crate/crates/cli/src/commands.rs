//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use scriptsort::evaluation::{repeated_eval, summarize_runs, EvalReport, GroundTruth, Method};
use scriptsort::features::{read_feature_csv, write_feature_csv};
use scriptsort::raster::{write_pgm, write_png};
use scriptsort::synth::{generate_coded_corpus, render_page, SynthSpec};
use scriptsort::{
    binarize, cluster_documents, encode_document, extract_features, load_document, normalize_corpus,
    ClusterConfig, CodedText, FeatureVector, Partition,
};

use crate::config::{FeatureSection, PipelineConfig};
use crate::failure::{Classify, Failure};
use crate::files::{
    collect_inputs, emit, ensure_unique_ids, has_ext, read_coded, write_coded, write_file, CODED_EXTS,
    IMAGE_EXTS,
};

pub fn encode_image(path: &Path, cfg: &PipelineConfig) -> Result<CodedText> {
    let img = load_document(path)?;
    let bin = binarize(&img, cfg.binarize);
    if bin.degenerate {
        warn!("{}: constant image, no ink found", path.display());
    }
    let page = encode_document(&bin.image, &cfg.coder).with_context(|| format!("encoding {}", path.display()))?;
    info!(
        "{}: threshold {}, {} lines, {} letters, {} specks dropped",
        path.display(),
        bin.threshold,
        page.lines.len(),
        page.coded.len(),
        page.discarded
    );
    Ok(page.coded)
}

/// Loads documents from images or coded-text JSON, sorted by id.
fn load_corpus(paths: &[PathBuf], cfg: &PipelineConfig) -> Result<Vec<CodedText>> {
    let mut docs = paths
        .par_iter()
        .map(|p| {
            if has_ext(p, CODED_EXTS) {
                read_coded(p)
            } else {
                encode_image(p, cfg)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    ensure_unique_ids(docs.iter().map(|d| d.doc_id.as_str()))?;
    Ok(docs)
}

pub fn compute_features(docs: &[CodedText], section: &FeatureSection) -> Result<Vec<FeatureVector>> {
    let vectors = docs
        .par_iter()
        .map(|d| extract_features(d, section.mode).with_context(|| format!("document `{}`", d.doc_id)))
        .collect::<Result<Vec<_>>>()?;
    if section.normalize {
        Ok(normalize_corpus(&vectors)?)
    } else {
        Ok(vectors)
    }
}

fn features_csv(vectors: &[FeatureVector]) -> Result<String> {
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, vectors)?;
    Ok(String::from_utf8(buf)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub evolved_k: usize,
    pub best_fitness: f64,
    pub fitness_trace: Vec<f64>,
    pub merge_distances: Vec<f64>,
    pub edges_built: usize,
    pub edges_kept: usize,
    pub assignments: BTreeMap<String, usize>,
}

/// Cluster JSON: the first run's assignments plus every run's record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterFile {
    pub assignments: BTreeMap<String, usize>,
    pub documents: usize,
    pub seed: u64,
    pub params: ClusterConfig,
    pub runs: Vec<RunRecord>,
}

fn assignment_map(ids: &[String], partition: &Partition) -> BTreeMap<String, usize> {
    ids.iter().cloned().zip(partition.labels().iter().copied()).collect()
}

pub fn run_clusterer(vectors: &[FeatureVector], cfg: &ClusterConfig, runs: usize) -> Result<(ClusterFile, Vec<Partition>)> {
    let ids: Vec<String> = vectors.iter().map(|v| v.doc_id.clone()).collect();
    ensure_unique_ids(ids.iter().map(String::as_str))?;
    let values: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
    let outcomes = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut run_cfg = cfg.clone();
            run_cfg.ga.seed = cfg.ga.seed.wrapping_add(r);
            cluster_documents(&values, &run_cfg).map(|o| (run_cfg.ga.seed, o))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<RunRecord> = outcomes
        .iter()
        .map(|(seed, o)| RunRecord {
            seed: *seed,
            evolved_k: o.evolved_k,
            best_fitness: o.best_fitness,
            fitness_trace: o.fitness_trace.clone(),
            merge_distances: o.merge_distances.clone(),
            edges_built: o.edges_built,
            edges_kept: o.edges_kept,
            assignments: assignment_map(&ids, &o.partition),
        })
        .collect();
    let partitions = outcomes.into_iter().map(|(_, o)| o.partition).collect();
    let file = ClusterFile {
        assignments: records[0].assignments.clone(),
        documents: ids.len(),
        seed: cfg.ga.seed,
        params: cfg.clone(),
        runs: records,
    };
    Ok((file, partitions))
}

fn read_truth(path: &Path) -> Result<GroundTruth> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    GroundTruth::from_csv(file).with_context(|| format!("reading {}", path.display()))
}

pub struct Reports {
    pub reports: Vec<EvalReport>,
    pub classes: Vec<String>,
}

impl Reports {
    fn json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            classes: &'a [String],
            reports: &'a [EvalReport],
        }
        Ok(serde_json::to_string_pretty(&Out {
            classes: &self.classes,
            reports: &self.reports,
        })? + "\n")
    }

    fn write_to(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join("report.json"), self.json()?)?;
        write_file(&dir.join("report.txt"), scriptsort::evaluation::format_table(&self.reports))?;
        write_file(&dir.join("report.csv"), scriptsort::evaluation::metrics_csv(&self.reports))
    }
}

pub struct Baselines {
    pub k: usize,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

/// Scores the GA runs and, optionally, both baselines over as many seeds.
fn evaluate_runs(
    ga_name: String,
    partitions: &[Partition],
    ids: &[String],
    truth: &GroundTruth,
    features: Option<(&[Vec<f64>], Baselines)>,
) -> Result<Reports> {
    let (labels, classes) = truth.encode(ids)?;
    let mut reports = vec![summarize_runs(ga_name, partitions, &labels, &classes)?];
    if let Some((values, b)) = features {
        let runs = partitions.len();
        for method in [
            Method::KMeans {
                k: b.k,
                restarts: b.kmeans_restarts,
            },
            Method::CompleteLinkage { k: b.k },
        ] {
            reports.push(repeated_eval(&method, values, &labels, &classes, runs, b.seed)?);
        }
    }
    Ok(Reports { reports, classes })
}

pub fn encode(inputs: &[PathBuf], out: &Path, cfg: &PipelineConfig) -> Result<(), Failure> {
    let paths = collect_inputs(inputs, IMAGE_EXTS).data()?;
    if paths.is_empty() {
        return Err(anyhow!("no input images found")).data();
    }
    let docs = paths
        .par_iter()
        .map(|p| encode_image(p, cfg))
        .collect::<Result<Vec<_>>>()
        .data()?;
    ensure_unique_ids(docs.iter().map(|d| d.doc_id.as_str())).data()?;
    write_coded(out, &docs).data()
}

pub fn features(inputs: &[PathBuf], out: Option<&Path>, section: &FeatureSection) -> Result<(), Failure> {
    let paths = collect_inputs(inputs, CODED_EXTS).data()?;
    if paths.is_empty() {
        return Err(anyhow!("no coded-text files found")).data();
    }
    let mut docs = paths.iter().map(|p| read_coded(p)).collect::<Result<Vec<_>>>().data()?;
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    ensure_unique_ids(docs.iter().map(|d| d.doc_id.as_str())).data()?;
    let vectors = compute_features(&docs, section).data()?;
    emit(out, &features_csv(&vectors).data()?).data()
}

fn read_features(path: &Path) -> Result<Vec<FeatureVector>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_feature_csv(file).with_context(|| format!("reading {}", path.display()))
}

pub fn cluster(features: &Path, out: Option<&Path>, cfg: &PipelineConfig) -> Result<(), Failure> {
    let vectors = read_features(features).data()?;
    let (file, _) = run_clusterer(&vectors, &cfg.cluster_config(), cfg.runs).data()?;
    emit(out, &(serde_json::to_string_pretty(&file).internal()? + "\n")).data()
}

/// Per-run partitions over the sorted document ids of a prediction file.
/// Accepts cluster JSON or a bare `{doc_id: cluster}` map.
fn read_predictions(path: &Path) -> Result<(Vec<String>, Vec<Partition>, Option<ClusterFile>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    let (maps, file) = if value.get("runs").is_some() {
        let file: ClusterFile =
            serde_json::from_value(value).with_context(|| format!("{} is not cluster JSON", path.display()))?;
        (file.runs.iter().map(|r| r.assignments.clone()).collect(), Some(file))
    } else {
        let map: BTreeMap<String, usize> = serde_json::from_value(value)
            .with_context(|| format!("{} is neither cluster JSON nor a doc_id map", path.display()))?;
        (vec![map], None)
    };
    let Some(first) = maps.first() else {
        bail!("{} holds no runs", path.display());
    };
    let ids: Vec<String> = first.keys().cloned().collect();
    let mut partitions = Vec::with_capacity(maps.len());
    for (r, map) in maps.iter().enumerate() {
        if map.len() != ids.len() || !ids.iter().all(|id| map.contains_key(id)) {
            bail!("run {r} covers a different document set than run 0");
        }
        let labels: Vec<usize> = ids.iter().map(|id| map[id]).collect();
        partitions.push(Partition::from_labels(&labels));
    }
    Ok((ids, partitions, file))
}

pub struct EvaluateArgs<'a> {
    pub truth: &'a Path,
    pub pred: &'a Path,
    pub runs: Option<usize>,
    pub features: Option<&'a Path>,
    pub k: Option<usize>,
    pub kmeans_restarts: usize,
    pub out: Option<&'a Path>,
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let truth = read_truth(args.truth).data()?;
    let (ids, mut partitions, file) = read_predictions(args.pred).data()?;
    if let Some(n) = args.runs {
        if n > partitions.len() {
            return Err(anyhow!(
                "--runs {n} requested but {} holds {} runs",
                args.pred.display(),
                partitions.len()
            ))
            .data();
        }
        partitions.truncate(n);
    }
    let name = match &file {
        Some(f) => Method::GaIcda(f.params.clone()).name(),
        None => "prediction".to_string(),
    };
    let seed = file.as_ref().map_or(0, |f| f.seed);
    let baseline_values = match args.features {
        Some(path) => {
            let vectors = read_features(path).data()?;
            let by_id: BTreeMap<&str, &FeatureVector> = vectors.iter().map(|v| (v.doc_id.as_str(), v)).collect();
            let values = ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|v| v.values.clone())
                        .ok_or_else(|| anyhow!("document `{id}` missing from {}", path.display()))
                })
                .collect::<Result<Vec<_>>>()
                .data()?;
            Some(values)
        }
        None => None,
    };
    let k = match args.k {
        Some(k) => k,
        None => truth.encode(&ids).data()?.1.len(),
    };
    let reports = evaluate_runs(
        name,
        &partitions,
        &ids,
        &truth,
        baseline_values.as_deref().map(|v| {
            (
                v,
                Baselines {
                    k,
                    kmeans_restarts: args.kmeans_restarts,
                    seed,
                },
            )
        }),
    )
    .data()?;
    if let Some(dir) = args.out {
        reports.write_to(dir).data()?;
    }
    emit(None, &scriptsort::evaluation::format_table(&reports.reports)).data()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ImageFormat {
    Pgm,
    Png,
}

pub fn synth(spec: Option<&Path>, seed: Option<u64>, out: &Path, format: ImageFormat) -> Result<(), Failure> {
    let mut spec = match spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .usage()?;
            serde_json::from_str::<SynthSpec>(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .usage()?
        }
        None => SynthSpec::three_script_benchmark(0),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.validate().usage()?;
    let docs = generate_coded_corpus(&spec).usage()?;
    docs.par_iter()
        .map(|doc| -> Result<()> {
            let page = render_page(&doc.coded, &spec.layout)?.to_gray();
            let dir = out.join("images");
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            match format {
                ImageFormat::Pgm => write_pgm(&page, dir.join(format!("{}.pgm", doc.coded.doc_id)))?,
                ImageFormat::Png => write_png(&page, dir.join(format!("{}.png", doc.coded.doc_id)))?,
            }
            Ok(())
        })
        .collect::<Result<()>>()
        .data()?;
    let coded: Vec<CodedText> = docs.iter().map(|d| d.coded.clone()).collect();
    write_coded(&out.join("coded"), &coded).data()?;
    let mut truth = GroundTruth::new();
    for d in &docs {
        truth.insert(d.coded.doc_id.clone(), d.class.clone()).data()?;
    }
    write_file(&out.join("truth.csv"), truth.to_csv()).data()?;
    write_file(&out.join("spec.json"), serde_json::to_string_pretty(&spec).internal()? + "\n").data()
}

pub fn pipeline(inputs: &[PathBuf], out: &Path, truth: Option<&Path>, cfg: &PipelineConfig) -> Result<(), Failure> {
    let mut exts = IMAGE_EXTS.to_vec();
    exts.extend_from_slice(CODED_EXTS);
    let paths = collect_inputs(inputs, &exts).context("input").data()?;
    if paths.is_empty() {
        return Err(anyhow!("input: no images or coded-text files found")).data();
    }
    let truth = truth.map(read_truth).transpose().context("truth").data()?;

    // Every stage runs before anything is written.
    let docs = load_corpus(&paths, cfg).context("encode stage").data()?;
    let vectors = compute_features(&docs, &cfg.features).context("features stage").data()?;
    let cluster_cfg = cfg.cluster_config();
    let (file, partitions) = run_clusterer(&vectors, &cluster_cfg, cfg.runs)
        .context("cluster stage")
        .data()?;
    let ids: Vec<String> = vectors.iter().map(|v| v.doc_id.clone()).collect();
    let values: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
    let reports = match &truth {
        Some(t) => {
            let baselines = cfg.baselines.enabled.then_some((
                values.as_slice(),
                Baselines {
                    k: cfg.cluster.k,
                    kmeans_restarts: cfg.baselines.kmeans_restarts,
                    seed: cfg.seed,
                },
            ));
            let name = Method::GaIcda(cluster_cfg.clone()).name();
            Some(evaluate_runs(name, &partitions, &ids, t, baselines).context("evaluate stage").data()?)
        }
        None => None,
    };
    let features_text = features_csv(&vectors).internal()?;
    let clusters_text = serde_json::to_string_pretty(&file).internal()? + "\n";
    let config_text = cfg.to_toml().internal()?;

    write_coded(&out.join("coded"), &docs).data()?;
    write_file(&out.join("features.csv"), features_text).data()?;
    write_file(&out.join("clusters.json"), clusters_text).data()?;
    write_file(&out.join("config.toml"), config_text).data()?;
    if let Some(r) = &reports {
        r.write_to(out).data()?;
        emit(None, &scriptsort::evaluation::format_table(&r.reports)).data()?;
    }
    info!("{} documents, {} runs, results in {}", docs.len(), cfg.runs, out.display());
    Ok(())
}
