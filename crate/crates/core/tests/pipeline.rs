use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scriptsort::evaluation::{repeated_eval, score_partition, GroundTruth, Method};
use scriptsort::features::{read_feature_csv, write_feature_csv};
use scriptsort::synth::{generate_coded_corpus, render_page, SynthDoc, SynthSpec};
use scriptsort::{
    binarize, cluster_documents, encode_document, extract_features, normalize_corpus, Binarization, ClusterConfig,
    CoderParams, FeatureMode, FeatureVector,
};

fn benchmark(seed: u64) -> Vec<SynthDoc> {
    generate_coded_corpus(&SynthSpec::three_script_benchmark(seed)).unwrap()
}

fn truth_of(docs: &[SynthDoc]) -> GroundTruth {
    let mut truth = GroundTruth::new();
    for d in docs {
        truth.insert(d.coded.doc_id.clone(), d.class.clone()).unwrap();
    }
    truth
}

fn features_of(docs: &[SynthDoc]) -> Vec<FeatureVector> {
    let raw: Vec<_> = docs
        .iter()
        .map(|d| extract_features(&d.coded, FeatureMode::Concat).unwrap())
        .collect();
    normalize_corpus(&raw).unwrap()
}

fn matrix(vectors: &[FeatureVector]) -> Vec<Vec<f64>> {
    vectors.iter().map(|v| v.values.clone()).collect()
}

/// Cluster in doc-id order and report `doc_id -> label` with labels
/// numbered by first appearance in that order.
fn canonical_assignment(mut docs: Vec<SynthDoc>, seed: u64) -> BTreeMap<String, usize> {
    docs.sort_by(|a, b| a.coded.doc_id.cmp(&b.coded.doc_id));
    let x = matrix(&features_of(&docs));
    let mut cfg = ClusterConfig { k: 3, ..Default::default() };
    cfg.ga.seed = seed;
    let out = cluster_documents(&x, &cfg).unwrap();
    docs.iter()
        .zip(out.partition.labels())
        .map(|(d, &l)| (d.coded.doc_id.clone(), l))
        .collect()
}

#[test]
fn images_to_scores() {
    let docs = benchmark(3);
    let params = CoderParams::default();
    let spec = SynthSpec::three_script_benchmark(3);
    let recovered: Vec<SynthDoc> = docs
        .iter()
        .map(|d| {
            let page = render_page(&d.coded, &spec.layout).unwrap().to_gray();
            let ink = binarize(&page, Binarization::Otsu);
            assert!(!ink.degenerate);
            let mut coded = encode_document(&ink.image, &params).unwrap().coded;
            coded.doc_id = d.coded.doc_id.clone();
            assert_eq!(coded.codes, d.coded.codes, "{}", d.coded.doc_id);
            SynthDoc { coded, class: d.class.clone() }
        })
        .collect();

    let x = matrix(&features_of(&recovered));
    let ids: Vec<String> = recovered.iter().map(|d| d.coded.doc_id.clone()).collect();
    let (labels, names) = truth_of(&recovered).encode(&ids).unwrap();
    assert_eq!(names, ["angular", "cyrillic", "round"]);

    let cfg = ClusterConfig { k: 3, ..Default::default() };
    let out = cluster_documents(&x, &cfg).unwrap();
    let score = score_partition(&out.partition, &labels).unwrap();
    assert_eq!(score.nmi, 1.0);
    assert!(score.per_class.iter().all(|c| c.f_measure == 1.0));

    let report = repeated_eval(&Method::GaIcda(cfg), &x, &labels, &names, 10, 0).unwrap();
    assert_eq!(report.runs, 10);
    assert_eq!(report.nmi.mean, 1.0);
    assert_eq!(report.nmi.std, 0.0);
}

#[test]
fn input_order_does_not_matter_after_canonical_sort() {
    let docs = benchmark(1);
    let reference = canonical_assignment(docs.clone(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let mut shuffled = docs.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(canonical_assignment(shuffled, 4), reference);
    }
}

#[test]
fn feature_csv_round_trips_exactly() {
    let vectors = features_of(&benchmark(2));
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &vectors).unwrap();
    let back = read_feature_csv(buf.as_slice()).unwrap();
    assert_eq!(back, vectors);
}

#[test]
fn truth_csv_round_trips() {
    let truth = truth_of(&benchmark(0));
    let text = truth.to_csv();
    assert!(text.starts_with("doc_id,class\n"));
    assert_eq!(GroundTruth::from_csv(text.as_bytes()).unwrap(), truth);
}

#[test]
fn baselines_separate_the_benchmark() {
    let docs = benchmark(0);
    let x = matrix(&features_of(&docs));
    let ids: Vec<String> = docs.iter().map(|d| d.coded.doc_id.clone()).collect();
    let (labels, names) = truth_of(&docs).encode(&ids).unwrap();
    for method in [Method::KMeans { k: 3, restarts: 10 }, Method::CompleteLinkage { k: 3 }] {
        let report = repeated_eval(&method, &x, &labels, &names, 5, 0).unwrap();
        assert_eq!(report.nmi.mean, 1.0, "{}", report.method);
    }
}
