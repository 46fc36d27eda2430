use mergetree::ensemble::{
    adjusted_rand_index, distance_matrix, fully_correct, kmeans, temporal_reconstruct, temporal_reduce, KmeansOptions,
};
use mergetree::synth::gen_geodesic_series;
use mergetree::{path_mapping_distance, MergeTree, Metric};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64, edges: usize) -> MergeTree {
    mergetree::synth::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), edges)
}

fn members(max: usize) -> impl Strategy<Value = Vec<MergeTree>> {
    prop::collection::vec((any::<u64>(), 1usize..=8), 2..max)
        .prop_map(|v| v.into_iter().map(|(s, e)| tree(s, e)).collect())
}

fn labelings() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..30).prop_flat_map(|n| (prop::collection::vec(0usize..5, n), prop::collection::vec(0usize..5, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ari_bounds_and_symmetry((a, b) in labelings()) {
        let ab = adjusted_rand_index(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&ab), "{}", ab);
        prop_assert!((ab - adjusted_rand_index(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(fully_correct(&a, &b), (ab - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ari_ignores_label_names((a, b) in labelings(), seed: u64) {
        let mut names: Vec<usize> = (0..5).map(|x| 10 + 3 * x).collect();
        names.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let renamed: Vec<usize> = a.iter().map(|&x| names[x]).collect();
        let before = adjusted_rand_index(&a, &b).unwrap();
        let after = adjusted_rand_index(&renamed, &b).unwrap();
        prop_assert!((before - after).abs() <= 1e-12);
        prop_assert!(fully_correct(&renamed, &a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn path_matrix_is_a_metric(trees in members(7)) {
        let m = distance_matrix(&trees, Metric::Path, 1).unwrap();
        let n = trees.len();
        for i in 0..n {
            prop_assert_eq!(m[i][i], 0.0);
            for j in 0..n {
                prop_assert!((m[i][j] - m[j][i]).abs() <= 1e-9);
                for k in 0..n {
                    prop_assert!(m[i][k] <= m[i][j] + m[j][k] + 1e-9);
                }
            }
        }
        prop_assert_eq!(distance_matrix(&trees, Metric::Path, 3).unwrap(), m);
    }

    #[test]
    fn wasserstein_kmeans_energy_never_rises(trees in members(9), k in 1usize..4, seed: u64) {
        prop_assume!(k <= trees.len());
        let options = KmeansOptions { runs: 2, seed, ..KmeansOptions::new(k, Metric::Wasserstein) };
        let r = kmeans(&trees, &options, None).unwrap();
        for run in &r.runs {
            for pair in run.energy_trace.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-9, "{:?}", run.energy_trace);
            }
        }
    }

    #[test]
    fn path_kmeans_terminates(trees in members(9), k in 1usize..4, seed: u64) {
        prop_assume!(k <= trees.len());
        let options = KmeansOptions { runs: 3, seed, max_rounds: 20, ..KmeansOptions::new(k, Metric::Path) };
        let r = kmeans(&trees, &options, None).unwrap();
        prop_assert_eq!(r.assignments.len(), trees.len());
        prop_assert!(r.assignments.iter().all(|&c| c < k));
        prop_assert!(r.centroids.len() <= k);
        for run in &r.runs {
            prop_assert!(run.rounds <= 20);
        }
        let parallel = kmeans(&trees, &KmeansOptions { threads: 3, ..options }, None).unwrap();
        prop_assert_eq!(parallel, r);
    }

    /// Optimal mappings are not unique (leaves moving the same way can be
    /// paired in any order at equal cost), so an interior frame need not
    /// equal the reconstruction from the recomputed geodesic. It is exact
    /// whenever the two agree, and the reconstruction always lies on a
    /// geodesic between the keyframes.
    #[test]
    fn geodesic_series_reconstructs(s1: u64, s2: u64, e1 in 1usize..=8, e2 in 1usize..=8, n in 3usize..8) {
        let series = gen_geodesic_series(&tree(s1, e1), &tree(s2, e2), n).unwrap();
        let r = temporal_reconstruct(&series, &[0, n - 1], Metric::Path).unwrap();
        prop_assert_eq!(r.errors.len(), n);
        let total = path_mapping_distance(&series[0], &series[n - 1]).unwrap().cost;
        for (e, rec) in r.errors.iter().zip(&r.reconstructed) {
            prop_assert!(e.path >= 0.0 && e.wasserstein >= 0.0);
            if e.keyframe {
                prop_assert_eq!(e.path, 0.0);
                prop_assert_eq!(e.wasserstein, 0.0);
            }
            if rec.isomorphic(&series[e.index], 1e-12) {
                prop_assert!(e.path <= 1e-9, "frame {} error {}", e.index, e.path);
            }
            let alpha = e.index as f64 / (n - 1) as f64;
            let from_start = path_mapping_distance(&series[0], rec).unwrap().cost;
            prop_assert!((from_start - alpha * total).abs() <= 1e-7 * total.max(1e-12));
        }
        let keys = temporal_reduce(&series, 2, Metric::Path).unwrap();
        prop_assert_eq!(keys, vec![0, n - 1]);
    }
}
