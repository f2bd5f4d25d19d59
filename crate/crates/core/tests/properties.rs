use proptest::collection::vec;
use proptest::prelude::*;

use scriptsort::clustering::{
    decode_genome, evolve_partition, merge_clusters, order_nodes, pairwise_distances, prune_edges, similarity,
    GaParams, SimilarityGraph,
};
use scriptsort::coder::{classify_blob, Blob, LetterClass, ReferenceBand};
use scriptsort::evaluation::{match_clusters, nmi, prf_per_class, Contingency};
use scriptsort::features::{albp_histogram, run_length_features, run_length_matrix};
use scriptsort::synth::{render_page, Layout};
use scriptsort::{binarize, encode_document, Binarization, BinaryImage, CodedText, CoderParams, GrayImage, Partition};

fn coded(codes: Vec<u8>) -> CodedText {
    CodedText::new("p", codes).unwrap()
}

fn gray() -> impl Strategy<Value = GrayImage> {
    (1usize..16, 1usize..16).prop_flat_map(|(w, h)| {
        vec(any::<u8>(), w * h).prop_map(move |s| GrayImage::new(w, h, s, "g").unwrap())
    })
}

fn graph(max_n: usize) -> impl Strategy<Value = SimilarityGraph> {
    (1usize..max_n).prop_flat_map(|n| {
        vec((0..n, 0..n, 0.01f64..1.0), 0..3 * n)
            .prop_map(move |edges| SimilarityGraph::from_edges(n, edges))
    })
}

fn reverse4(b: usize) -> usize {
    (0..4).fold(0, |acc, i| acc | (((b >> i) & 1) << (3 - i)))
}

fn brute_overlap(table: &[Vec<usize>]) -> usize {
    // every injection of the smaller side into the larger one
    fn rec(table: &[Vec<usize>], row: usize, used: &mut Vec<bool>, transpose: bool) -> usize {
        let rows = if transpose { table[0].len() } else { table.len() };
        if row == rows {
            return 0;
        }
        let mut best = 0;
        for col in 0..used.len() {
            if !used[col] {
                used[col] = true;
                let cell = if transpose { table[col][row] } else { table[row][col] };
                best = best.max(cell + rec(table, row + 1, used, transpose));
                used[col] = false;
            }
        }
        best
    }
    let (r, c) = (table.len(), table[0].len());
    if r <= c {
        rec(table, 0, &mut vec![false; c], false)
    } else {
        rec(table, 0, &mut vec![false; r], true)
    }
}

fn permuted(labels: &[usize], perm: &[usize]) -> Vec<usize> {
    labels.iter().map(|&l| perm[l]).collect()
}

proptest! {
    #[test]
    fn otsu_on_inverse_picks_complementary_classes(img in gray()) {
        let a = binarize(&img, Binarization::Otsu);
        let b = binarize(&img.inverted(), Binarization::Otsu);
        prop_assert_eq!(a.degenerate, b.degenerate);
        if !a.degenerate {
            let n = img.width * img.height;
            prop_assert_eq!(a.image.foreground_count(), n - b.image.foreground_count());
        }
    }

    #[test]
    fn binarizing_a_rendered_mask_is_identity(
        (w, h, mask) in (1usize..20, 1usize..20)
            .prop_flat_map(|(w, h)| (Just(w), Just(h), vec(any::<bool>(), w * h)))
    ) {
        let mut img = BinaryImage::blank(w, h, "m");
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, mask[y * w + x]);
            }
        }
        let fixed = binarize(&img.to_gray(), Binarization::Fixed(128));
        prop_assert_eq!(&fixed.image, &img);
        let mixed = mask.iter().any(|&m| m) && mask.iter().any(|&m| !m);
        if mixed {
            prop_assert_eq!(&binarize(&img.to_gray(), Binarization::Otsu).image, &img);
        }
    }

    #[test]
    fn run_length_marginals(codes in vec(0u8..4, 4..400)) {
        let text = coded(codes.clone());
        let m = run_length_matrix(&text).unwrap();
        let runs = 1 + codes.windows(2).filter(|w| w[0] != w[1]).count() as u64;
        let (count, weighted) = m
            .cells()
            .fold((0, 0), |(c, s), (_, j, p)| (c + p, s + j as u64 * p));
        prop_assert_eq!(count, runs);
        prop_assert_eq!(m.n_runs(), runs);
        prop_assert_eq!(weighted, codes.len() as u64);
        prop_assert_eq!(m.n_symbols(), codes.len() as u64);
    }

    #[test]
    fn short_and_long_run_emphasis_obey_cauchy_schwarz(codes in vec(0u8..4, 4..400)) {
        let f = run_length_features(&run_length_matrix(&coded(codes)).unwrap()).unwrap();
        prop_assert!(f.sre * f.lre >= 1.0 - 1e-12, "sre {} lre {}", f.sre, f.lre);
    }

    #[test]
    fn reversal_reverses_albp_bin_bits(codes in vec(0u8..4, 4..300)) {
        let fwd = albp_histogram(&coded(codes.clone())).unwrap();
        let mut rev = codes;
        rev.reverse();
        let bwd = albp_histogram(&coded(rev)).unwrap();
        for b in 0..16 {
            prop_assert!((fwd.bins[b] - bwd.bins[reverse4(b)]).abs() < 1e-12);
        }
    }

    #[test]
    fn self_concatenation_moves_albp_bins_little(codes in vec(0u8..4, 4..300)) {
        let len = codes.len();
        let once = albp_histogram(&coded(codes.clone())).unwrap();
        let twice = albp_histogram(&coded(codes.repeat(2))).unwrap();
        let bound = 2.0 / (len as f64 - 3.0);
        for b in 0..16 {
            prop_assert!((once.bins[b] - twice.bins[b]).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn alpha_one_dominates_beyond_unit_distance(d in 0.0f64..20.0, s in 0.01f64..10.0) {
        let (w1, w2) = (similarity(d, 1.0, s), similarity(d, 2.0, s));
        prop_assert!(w1 > 0.0 && w1 <= 1.0 && (0.0..=1.0).contains(&w2));
        if d >= 1.0 {
            prop_assert!(w1 >= w2);
        } else {
            prop_assert!(w1 <= w2);
        }
    }

    #[test]
    fn ordering_is_bijection_and_pruning_is_monotone(g in graph(25), t1 in 1usize..30, t2 in 1usize..30) {
        let ordering = order_nodes(&g);
        prop_assert!(ordering.is_bijection());
        prop_assert_eq!(ordering.labels().len(), g.n);
        prop_assert_eq!(&prune_edges(&g, &ordering, g.n.max(1)).unwrap().edges, &g.edges);
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let small = prune_edges(&g, &ordering, lo).unwrap();
        let large = prune_edges(&g, &ordering, hi).unwrap();
        prop_assert!(small.edges.iter().all(|e| large.edges.contains(e)));
    }

    #[test]
    fn evolution_respects_components(g in graph(16), seed in any::<u64>()) {
        let params = GaParams { seed, population_size: 20, generations: 5, ..Default::default() };
        let out = evolve_partition(&g, &params).unwrap();
        let comp = g.components();
        for u in 0..g.n {
            for v in 0..g.n {
                if out.partition.same_cluster(u, v) {
                    prop_assert_eq!(comp[u], comp[v]);
                }
            }
        }
    }

    #[test]
    fn decoded_genomes_link_each_node_to_its_gene(genome in (1usize..20).prop_flat_map(|n| vec(0..n, n))) {
        let p = decode_genome(&genome);
        for (v, &g) in genome.iter().enumerate() {
            prop_assert!(p.same_cluster(v, g));
        }
    }

    #[test]
    fn complete_linkage_merge_heights_never_drop(
        points in (2usize..14).prop_flat_map(|n| vec(vec(-5.0f64..5.0, 3), n))
    ) {
        let d = pairwise_distances(&points).unwrap();
        let start = Partition::singletons(points.len());
        let all = merge_clusters(&start, &d, 1).unwrap();
        prop_assert_eq!(all.partition.k(), 1);
        prop_assert_eq!(all.distances.len(), points.len() - 1);
        prop_assert!(all.distances.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn nmi_is_symmetric_bounded_and_label_free(
        (a, b, pa, pb) in (1usize..5, 1usize..5, 1usize..40).prop_flat_map(|(ka, kb, n)| {
            (
                vec(0..ka, n),
                vec(0..kb, n),
                Just((0..ka).collect::<Vec<_>>()).prop_shuffle(),
                Just((0..kb).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
    ) {
        let (a, b) = (Partition::from_labels(&a), Partition::from_labels(&b));
        let ab = nmi(&Contingency::new(a.labels(), b.labels()));
        let ba = nmi(&Contingency::new(b.labels(), a.labels()));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
        let pa: Vec<usize> = pa.into_iter().filter(|&l| l < a.k()).collect();
        let pb: Vec<usize> = pb.into_iter().filter(|&l| l < b.k()).collect();
        let relabelled = nmi(&Contingency::new(&permuted(a.labels(), &pa), &permuted(b.labels(), &pb)));
        prop_assert!((ab - relabelled).abs() < 1e-12);
    }

    #[test]
    fn matching_is_optimal(
        table in (1usize..6, 1usize..6)
            .prop_flat_map(|(r, c)| vec(vec(0usize..8, c), r))
    ) {
        let m = match_clusters(&Contingency::from_table(table.clone()));
        prop_assert_eq!(m.overlap, brute_overlap(&table));
        let realized: usize = m
            .assignment
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c.map(|c| table[k][c]))
            .sum();
        prop_assert_eq!(realized, m.overlap);
    }

    #[test]
    fn perfect_clustering_scores_one(labels in vec(0usize..4, 1..40)) {
        let truth = Partition::from_labels(&labels);
        let c = Contingency::new(truth.labels(), truth.labels());
        let scores = prf_per_class(&c, &match_clusters(&c));
        prop_assert!(scores.iter().all(|s| s.precision == 1.0 && s.recall == 1.0 && s.f_measure == 1.0));
    }

    #[test]
    fn growing_a_blob_upward_keeps_it_rising(
        y0 in 0usize..40, grow in 0usize..20, y1_extra in 0usize..40,
        top in 5.0f64..30.0, height in 2.0f64..15.0, tau in 0.05f64..0.5,
    ) {
        let band = ReferenceBand::new(top, top + height);
        let y0 = y0 + grow;
        let blob = Blob::new(0, y0, 3, y0 + y1_extra);
        let taller = Blob::new(0, y0 - grow, 3, y0 + y1_extra);
        let before = classify_blob(&blob, &band, tau);
        let after = classify_blob(&taller, &band, tau);
        if matches!(before, LetterClass::Ascender | LetterClass::Full) {
            prop_assert!(matches!(after, LetterClass::Ascender | LetterClass::Full));
        }
    }

    // Very short pages can lack letters that pin down the band (one glyph,
    // or a single line of ascenders), so lengths start at 100.
    #[test]
    fn rendered_codes_survive_encoding_and_shifting(codes in vec(0u8..4, 100..400), dy in 0usize..30) {
        let text = coded(codes);
        let page = render_page(&text, &Layout::default()).unwrap();
        let params = CoderParams::default();
        let plain = encode_document(&page, &params).unwrap();
        prop_assert_eq!(&plain.coded.codes, &text.codes);
        let blobs: usize = plain.lines.iter().map(|l| l.blobs.len()).sum();
        prop_assert_eq!(blobs, plain.coded.len());
        let shifted = encode_document(&page.shifted_down(dy), &params).unwrap();
        prop_assert_eq!(&shifted.coded.codes, &text.codes);
    }
}
