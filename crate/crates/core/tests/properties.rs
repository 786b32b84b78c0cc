use std::collections::HashSet;

use digae::analytics::{hits, pagerank, pearson};
use digae::dataset::{load_citation, load_edgelist, random_digraph, write_citation, write_edgelist, CitationOrientation, Dataset};
use digae::graph::{add_self_loops, build_operator, to_bipartite, DirectedGraph};
use digae::linalg::{FeatureMatrix, Matrix};
use digae::linkpred::{auc, average_precision, make_split_with, split_sizes, SplitOptions};
use digae::model::{
    bipartite_features, block_gnn_step, encode, message_passing_encode, Activation, BlockWeights, Dims, EncodingPair,
    ModelParams,
};
use digae::spectral::{katz_proximity, spectrum_study, truncated_svd, SvdMethod};
use digae::wl::{check_reduction, same_partition, wl_refine_directed, wl_refine_directed_history};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
    (2..=max_n, 0.0..0.5f64, any::<u64>()).prop_map(|(n, p, seed)| random_digraph(n, p, seed).unwrap())
}

fn random_params(depth: usize, dims: Dims, alpha: f64, beta: f64, rng: &mut impl Rng) -> ModelParams {
    let mut p = ModelParams::zeros(depth, dims, alpha, beta).unwrap();
    for w in p.w_s.iter_mut().chain(p.w_t.iter_mut()) {
        *w = rand_matrix(w.rows(), w.cols(), rng);
    }
    p
}

fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().max_abs()
}

/// Brute force over all (positive, negative) pairs, ties count one half.
fn auc_oracle(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in pos {
        for n in neg {
            s += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (pos.len() * neg.len()) as f64
}

/// Precision at every positive, walking a ranking where ties put negatives first.
fn ap_oracle(pos: &[f64], neg: &[f64]) -> f64 {
    let mut items: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let (mut tp, mut total) = (0.0, 0.0);
    for (k, (_, is_pos)) in items.iter().enumerate() {
        if *is_pos {
            tp += 1.0;
            total += tp / (k + 1) as f64;
        }
    }
    total / pos.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_matches_dense_formula(g in graph_strategy(20), alpha in 0.0..1.0f64, beta in 0.0..1.0f64) {
        let aug = add_self_loops(&g);
        let op = build_operator(&aug, alpha, beta).unwrap();
        let a = aug.to_dense();
        let n = g.node_count();
        let dout: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
        let din: Vec<f64> = (0..n).map(|j| a.column(j).iter().sum()).collect();
        let expected = Matrix::from_fn(n, n, |i, j| dout[i].powf(-beta) * a.get(i, j) * din[j].powf(-alpha));
        prop_assert!(max_diff(&op.to_dense(), &expected) < 1e-12);
        let x = rand_matrix(n, 3, &mut ChaCha8Rng::seed_from_u64(n as u64));
        prop_assert!(max_diff(&op.apply(&x).unwrap(), &expected.matmul(&x).unwrap()) < 1e-12);
        prop_assert!(max_diff(&op.apply_transpose(&x).unwrap(), &expected.t_matmul(&x).unwrap()) < 1e-12);
    }

    #[test]
    fn message_passing_equals_matrix_form(
        g in graph_strategy(30),
        depth in 1usize..=2,
        alpha in 0.0..1.0f64,
        beta in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.node_count();
        let dims = Dims { input: 5, hidden: 4, latent: 3 };
        let params = random_params(depth, dims, alpha, beta, &mut rng);
        let x = rand_matrix(n, 5, &mut rng);
        let op = build_operator(&add_self_loops(&g), alpha, beta).unwrap();
        let f = FeatureMatrix::Dense(x.clone());
        let dense = encode(&params, &op, &f, &f).unwrap();
        let mp = message_passing_encode(&params, &g, &EncodingPair::new(x.clone(), x).unwrap()).unwrap();
        prop_assert!(max_diff(&dense.s, &mp.s) < 1e-12);
        prop_assert!(max_diff(&dense.t, &mp.t) < 1e-12);
    }

    #[test]
    fn encoder_is_permutation_equivariant(g in graph_strategy(15), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let params = random_params(2, Dims { input: 4, hidden: 3, latent: 2 }, 0.5, 0.5, &mut rng);
        let x = rand_matrix(n, 4, &mut rng);
        // Node i moves to perm[i].
        let px = Matrix::from_fn(n, 4, |r, c| x.get(perm.iter().position(|&p| p == r).unwrap(), c));
        let z = encode(
            &params,
            &build_operator(&add_self_loops(&g), 0.5, 0.5).unwrap(),
            &FeatureMatrix::Dense(x.clone()),
            &FeatureMatrix::Dense(x),
        ).unwrap();
        let gp = g.permuted(&perm).unwrap();
        let zp = encode(
            &params,
            &build_operator(&add_self_loops(&gp), 0.5, 0.5).unwrap(),
            &FeatureMatrix::Dense(px.clone()),
            &FeatureMatrix::Dense(px),
        ).unwrap();
        for i in 0..n {
            for c in 0..2 {
                prop_assert!((z.s.get(i, c) - zp.s.get(perm[i], c)).abs() < 1e-12);
                prop_assert!((z.t.get(i, c) - zp.t.get(perm[i], c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn block_gnn_keeps_role_zero_pattern(g in graph_strategy(12), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.node_count();
        let e = 3;
        let enc = EncodingPair::new(rand_matrix(n, e, &mut rng), rand_matrix(n, e, &mut rng)).unwrap();
        let w = BlockWeights {
            w1s: rand_matrix(e, e, &mut rng),
            w1t: rand_matrix(e, e, &mut rng),
            w2s: rand_matrix(e, e, &mut rng),
            w2t: rand_matrix(e, e, &mut rng),
        };
        let out = block_gnn_step(&to_bipartite(&g), &bipartite_features(&enc), &w, Activation::Relu).unwrap();
        for v in 0..2 * n {
            for c in 0..2 * e {
                let off_role = (v < n) != (c < e);
                if off_role {
                    prop_assert_eq!(out.get(v, c), 0.0);
                }
            }
        }
    }

    #[test]
    fn block_gnn_without_self_term_is_one_layer_propagation(g in graph_strategy(12), seed in any::<u64>()) {
        // W1 = 0 and α = β = 0 on the raw graph: source rows become A·T·W_T,
        // target rows Aᵀ·S·W_S.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.node_count();
        let e = 3;
        let enc = EncodingPair::new(rand_matrix(n, e, &mut rng), rand_matrix(n, e, &mut rng)).unwrap();
        let (w_s, w_t) = (rand_matrix(e, e, &mut rng), rand_matrix(e, e, &mut rng));
        let w = BlockWeights {
            w1s: Matrix::zeros(e, e),
            w1t: Matrix::zeros(e, e),
            w2s: w_s.clone(),
            w2t: w_t.clone(),
        };
        let out = block_gnn_step(&to_bipartite(&g), &bipartite_features(&enc), &w, Activation::Identity).unwrap();
        let a = g.to_dense();
        let zs = a.matmul(&enc.t.matmul(&w_t).unwrap()).unwrap();
        let zt = a.t_matmul(&enc.s.matmul(&w_s).unwrap()).unwrap();
        for i in 0..n {
            for c in 0..e {
                prop_assert!((out.get(i, c) - zs.get(i, c)).abs() < 1e-12);
                prop_assert!((out.get(i + n, c + e) - zt.get(i, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wl_reduction_holds(g in graph_strategy(40)) {
        prop_assert!(check_reduction(&g));
    }

    #[test]
    fn wl_refinement_is_monotone(g in graph_strategy(30)) {
        let history = wl_refine_directed_history(&g, 100);
        for pair in history.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            // Each new class lies inside an old class.
            let prev_pairs: Vec<(u32, u32)> = prev.source_colors.iter().copied().zip(prev.target_colors.iter().copied()).collect();
            let next_pairs: Vec<(u32, u32)> = next.source_colors.iter().copied().zip(next.target_colors.iter().copied()).collect();
            let joint: Vec<_> = prev_pairs.iter().zip(&next_pairs).collect();
            prop_assert!(same_partition(&joint, &next_pairs));
            prop_assert!(next.source_class_count() >= prev.source_class_count());
            prop_assert!(next.target_class_count() >= prev.target_class_count());
        }
    }

    #[test]
    fn wl_colors_are_permutation_invariant(g in graph_strategy(25), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let a = wl_refine_directed(&g, 100);
        let b = wl_refine_directed(&g.permuted(&perm).unwrap(), 100);
        for i in 0..n {
            prop_assert_eq!(a.source_colors[i], b.source_colors[perm[i]]);
            prop_assert_eq!(a.target_colors[i], b.target_colors[perm[i]]);
        }
    }

    #[test]
    fn auc_and_ap_match_brute_force(
        pos in prop::collection::vec(0u8..6, 1..20),
        neg in prop::collection::vec(0u8..6, 1..20),
    ) {
        // Small integer scores force plenty of ties.
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        prop_assert!((auc(&pos, &neg).unwrap() - auc_oracle(&pos, &neg)).abs() < 1e-12);
        prop_assert!((average_precision(&pos, &neg).unwrap() - ap_oracle(&pos, &neg)).abs() < 1e-12);
    }

    #[test]
    fn split_is_a_partition_with_clean_negatives(
        n in 8usize..40,
        seed in any::<u64>(),
        exclude_reciprocal in any::<bool>(),
    ) {
        let g = random_digraph(n, 0.25, seed).unwrap();
        prop_assume!(g.edge_count() >= 20);
        let s = make_split_with(&g, seed, SplitOptions { exclude_reciprocal }).unwrap();
        let m = g.edge_count();
        let (n_test, n_val) = split_sizes(m);
        prop_assert_eq!(s.test_pos.len(), n_test);
        prop_assert_eq!(s.val_pos.len(), n_val);
        prop_assert_eq!(s.test_neg.len(), n_test);
        prop_assert_eq!(s.val_neg.len(), n_val);
        let mut all: Vec<(usize, usize)> = s.train_edges.iter().chain(&s.val_pos).chain(&s.test_pos).copied().collect();
        all.sort_unstable();
        let mut edges: Vec<(usize, usize)> = g.edge_pairs().collect();
        edges.sort_unstable();
        prop_assert_eq!(all, edges);
        let negs: Vec<(usize, usize)> = s.val_neg.iter().chain(&s.test_neg).copied().collect();
        let distinct: HashSet<_> = negs.iter().copied().collect();
        prop_assert_eq!(distinct.len(), negs.len());
        for &(i, j) in &negs {
            prop_assert!(i != j && !g.has_edge(i, j));
            if exclude_reciprocal {
                prop_assert!(!g.has_edge(j, i));
            }
        }
        prop_assert_eq!(make_split_with(&g, seed, SplitOptions { exclude_reciprocal }).unwrap(), s);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xs in prop::collection::vec(-10.0..10.0f64, 3..30),
        a in 0.1..5.0f64,
        b in -5.0..5.0f64,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + i as f64).collect();
        if let Some(r) = pearson(&xs, &ys) {
            let xs2: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let r2 = pearson(&xs2, &ys).unwrap();
            prop_assert!((r - r2).abs() < 1e-9);
            let neg: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
            prop_assert!((r + pearson(&neg, &ys).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn pagerank_is_a_distribution(g in graph_strategy(30)) {
        let pr = pagerank(&g, 0.85, 1e-13, 100_000).unwrap();
        prop_assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pr.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn hits_on_symmetric_graphs_gives_equal_hubs_and_authorities(n in 2usize..20, seed in any::<u64>()) {
        let base = random_digraph(n, 0.3, seed).unwrap();
        let sym: Vec<(usize, usize)> = base.edge_pairs().flat_map(|(i, j)| [(i, j), (j, i)]).collect();
        let g = DirectedGraph::from_pairs(n, sym).unwrap();
        prop_assume!(g.edge_count() > 0);
        // Self-loops make the iteration aperiodic on bipartite components.
        let g = add_self_loops(&g);
        let (h, a) = hits(&g, 1e-13, 1_000_000).unwrap();
        for i in 0..n {
            prop_assert!((h[i] - a[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn katz_matches_truncated_neumann_series(g in graph_strategy(15)) {
        let a = g.to_dense();
        let n = g.node_count();
        // Decay small enough that 20 terms leave a remainder below 1e-10.
        let decay = 0.3 / n as f64;
        let mut term = a.scale(decay);
        let mut sum = term.clone();
        for _ in 2..=20 {
            term = term.matmul(&a).unwrap().scale(decay);
            sum.axpy(1.0, &term).unwrap();
        }
        prop_assert!(max_diff(&katz_proximity(&g, decay).unwrap(), &sum) < 1e-10);
    }

    #[test]
    fn lanczos_and_randomized_agree(seed in any::<u64>(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Clear spectral gaps so both methods resolve the leading values.
        let u = rand_matrix(40, 8, &mut rng);
        let v = rand_matrix(30, 8, &mut rng);
        let d: Vec<f64> = (0..8).map(|i| 2f64.powi(8 - i)).collect();
        let a = u.scale_columns(&d).unwrap().matmul_t(&v).unwrap();
        let l = truncated_svd(&a, k, SvdMethod::Lanczos, seed).unwrap();
        let r = truncated_svd(&a, k, SvdMethod::Randomized, seed).unwrap();
        for i in 0..k {
            prop_assert!((l.sigma[i] - r.sigma[i]).abs() < 1e-4 * l.sigma[0]);
        }
    }

    #[test]
    fn svd_embeddings_reproduce_the_low_rank_product(seed in any::<u64>(), k in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rand_matrix(25, 25, &mut rng);
        let f = truncated_svd(&a, k, SvdMethod::Randomized, seed).unwrap();
        let z = f.embeddings().unwrap();
        let lhs = z.s.matmul_t(&z.t).unwrap();
        prop_assert!(max_diff(&lhs, &f.reconstruct().unwrap()) < 1e-10);
    }

    #[test]
    fn full_rank_svd_reconstructs(seed in any::<u64>(), method in prop_oneof![Just(SvdMethod::Lanczos), Just(SvdMethod::Randomized)]) {
        let a = rand_matrix(20, 20, &mut ChaCha8Rng::seed_from_u64(seed));
        let f = truncated_svd(&a, 20, method, seed).unwrap();
        prop_assert!(max_diff(&f.reconstruct().unwrap(), &a) < 1e-8);
    }

    #[test]
    fn symmetric_spectrum_is_absolute_eigenvalues(n in 2usize..15, seed in any::<u64>()) {
        let base = random_digraph(n, 0.3, seed).unwrap();
        let sym: Vec<(usize, usize)> = base.edge_pairs().flat_map(|(i, j)| [(i, j), (j, i)]).collect();
        let g = add_self_loops(&DirectedGraph::from_pairs(n, sym).unwrap());
        let spec = spectrum_study(&g, &[(0.5, 0.5)], None).unwrap();
        let dense = build_operator(&g, 0.5, 0.5).unwrap().to_dense();
        let sym_m = nalgebra::DMatrix::from_fn(n, n, |i, j| dense.get(i, j));
        let mut eig: Vec<f64> = sym_m.symmetric_eigenvalues().iter().map(|x| x.abs()).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (s, e) in spec[0].singular_values.iter().zip(&eig) {
            prop_assert!((s - e).abs() < 1e-10);
        }
    }

    #[test]
    fn edgelist_round_trip(g in graph_strategy(30)) {
        let mut buf = Vec::new();
        write_edgelist(&g, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        std::fs::write(&path, buf).unwrap();
        let ds = load_edgelist(&path, Some(g.node_count())).unwrap();
        prop_assert_eq!(ds.graph, g);
    }

    #[test]
    fn citation_round_trip(n in 3usize..25, seed in any::<u64>(), reversed in any::<bool>()) {
        let orientation = if reversed { CitationOrientation::CitedToCiting } else { CitationOrientation::CitingToCited };
        let ds = digae::dataset::synthetic_citation(&digae::dataset::SyntheticSpec {
            nodes: n,
            classes: 3,
            features: 12,
            words_per_node: 3,
            seed,
            ..Default::default()
        }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (content, cites) = (dir.path().join("x.content"), dir.path().join("x.cites"));
        write_citation(
            &ds,
            std::fs::File::create(&content).unwrap(),
            std::fs::File::create(&cites).unwrap(),
            orientation,
        ).unwrap();
        let back: Dataset = load_citation(&content, &cites, orientation).unwrap();
        prop_assert_eq!(&back.graph, &ds.graph);
        prop_assert_eq!(back.features.to_dense(), ds.features.to_dense());
        prop_assert_eq!(&back.node_names, &ds.node_names);
        for i in 0..n {
            prop_assert_eq!(&back.class_names[back.labels[i]], &ds.class_names[ds.labels[i]]);
        }
    }
}
