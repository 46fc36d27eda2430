use mergetree::bdt::branch_decomposition_elder;
use mergetree::tree::Violation;
use mergetree::{join_tree, simplify, split_tree, MergeTree, NodeSpec, ScalarGrid, TreeKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64, edges: usize) -> MergeTree {
    mergetree::synth::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), edges)
}

fn specs(t: &MergeTree) -> Vec<NodeSpec> {
    t.nodes()
        .map(|v| NodeSpec { id: t.label(v), scalar: t.scalar(v), parent: t.parent(v).map(|p| t.label(p)) })
        .collect()
}

/// Small nonconstant grids with values on a coarse lattice, so ties are
/// frequent.
fn grid() -> impl Strategy<Value = ScalarGrid> {
    (1usize..7, 1usize..7).prop_filter("needs two vertices", |(w, h)| w * h > 1).prop_flat_map(|(w, h)| {
        prop::collection::vec(0i32..6, w * h)
            .prop_filter("constant field", |v| v.iter().any(|&x| x != v[0]))
            .prop_map(move |v| ScalarGrid::new(w, h, v.into_iter().map(f64::from).collect()).unwrap())
    })
}

/// Grids whose values are a permutation, so no ties occur.
fn distinct_grid() -> impl Strategy<Value = ScalarGrid> {
    (1usize..7, 1usize..7).prop_filter("needs two vertices", |(w, h)| w * h > 1).prop_flat_map(|(w, h)| {
        Just((0..w * h).map(|i| i as f64).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(move |v| ScalarGrid::new(w, h, v).unwrap())
    })
}

/// Brute-force count of vertices above all their 4-neighbors, ties broken by
/// index.
fn count_maxima(g: &ScalarGrid) -> usize {
    let (w, h) = (g.width(), g.height());
    let vals = g.values();
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut nb = Vec::new();
            if x > 0 {
                nb.push(i - 1);
            }
            if x + 1 < w {
                nb.push(i + 1);
            }
            if y > 0 {
                nb.push(i - w);
            }
            if y + 1 < h {
                nb.push(i + w);
            }
            if nb.iter().all(|&j| vals[i] > vals[j] || (vals[i] == vals[j] && i > j)) {
                count += 1;
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn elder_branches_partition_edges(seed: u64, edges in 1usize..30) {
        let t = tree(seed, edges);
        let bd = branch_decomposition_elder(&t).unwrap();
        let persistence: f64 = bd.branches.iter().map(|b| b.persistence()).sum();
        prop_assert!((persistence - t.total_length()).abs() <= 1e-9 * t.total_length().max(1.0));
        let owners = bd.branch_of_edge(&t);
        for v in t.nodes() {
            prop_assert_eq!(owners[v].is_some(), t.parent(v).is_some());
        }
        prop_assert_eq!(bd.branches.iter().map(|b| b.nodes.len() - 1).sum::<usize>(), t.edge_count());
        prop_assert_eq!(bd.len(), t.leaf_count());
        prop_assert_eq!(bd.main().start(), t.root());
        for (i, b) in bd.branches.iter().enumerate().skip(1) {
            let p = b.parent.unwrap();
            prop_assert!(p < i);
            prop_assert!(bd.branches[p].nodes.contains(&b.start()));
            prop_assert!(t.is_leaf(b.leaf()));
        }
    }

    #[test]
    fn edge_lengths_roundtrip(seed: u64, edges in 1usize..30, root in -5.0f64..5.0) {
        let t = tree(seed, edges);
        let lengths = t.edge_lengths();
        let u = MergeTree::relabel_from_edge_lengths(&t, &lengths, root).unwrap();
        let back = u.edge_lengths();
        for v in t.nodes().filter(|&v| v != t.root()) {
            prop_assert!((back[v] - lengths[v]).abs() <= 1e-12 * (1.0 + root.abs() + t.max_height()));
        }
        prop_assert_eq!(u.scalar(u.root()), root);
    }

    #[test]
    fn valid_trees_report_nothing(seed: u64, edges in 1usize..30) {
        let t = tree(seed, edges);
        prop_assert!(t.validate().is_empty());
        prop_assert!(t.mirrored().validate().is_empty());
    }

    #[test]
    fn breaking_a_clause_is_reported(seed: u64, edges in 1usize..20, which in 0usize..4, pick: prop::sample::Index) {
        let t = tree(seed, edges);
        let mut nodes = specs(&t);
        let next_id = nodes.iter().map(|n| n.id).max().unwrap() + 1;
        let non_root: Vec<usize> = t.nodes().filter(|&v| v != t.root()).collect();
        let v = non_root[pick.index(non_root.len())];
        let expected = match which {
            0 => {
                // child below its parent
                let p = t.parent(v).unwrap();
                nodes[v].scalar = t.scalar(p) - 0.5;
                "NotIncreasing"
            }
            1 => {
                // a single child below a leaf turns it into a degree-two node
                let leaf = t.leaves().next().unwrap();
                nodes.push(NodeSpec { id: next_id, scalar: t.scalar(leaf) + 1.0, parent: Some(t.label(leaf)) });
                "InnerDegreeOne"
            }
            2 => {
                let r = t.root();
                nodes.push(NodeSpec { id: next_id, scalar: t.scalar(r) + 0.1, parent: Some(t.label(r)) });
                "RootDegree"
            }
            _ => {
                nodes[v].scalar = f64::NAN;
                "NonFinite"
            }
        };
        let broken = MergeTree::new(TreeKind::Split, nodes).unwrap();
        let report = broken.validate();
        prop_assert!(!report.is_empty());
        let found = report.iter().any(|r| match r {
            Violation::NotIncreasing { .. } => expected == "NotIncreasing",
            Violation::InnerDegreeOne { .. } => expected == "InnerDegreeOne",
            Violation::RootDegree { .. } => expected == "RootDegree",
            Violation::NonFinite { .. } => expected == "NonFinite",
        });
        prop_assert!(found, "{:?} does not contain {}", report, expected);
    }

    #[test]
    fn split_tree_scalars_come_from_the_grid(g in grid()) {
        let t = split_tree(&g).unwrap();
        prop_assert!(t.is_valid());
        let min = g.values().iter().copied().fold(f64::INFINITY, f64::min);
        for v in t.nodes() {
            if v == t.root() {
                prop_assert!(t.scalar(v) <= min);
            } else {
                prop_assert!(g.values().contains(&t.scalar(v)));
            }
        }
    }

    #[test]
    fn leaves_are_local_maxima(g in distinct_grid()) {
        prop_assert_eq!(split_tree(&g).unwrap().leaf_count(), count_maxima(&g));
        prop_assert_eq!(split_tree(&g).unwrap().leaf_count(), g.local_maxima().len());
    }

    /// Tie-broken maxima on a plateau have zero persistence and disappear
    /// with their zero-length edges.
    #[test]
    fn plateaus_never_add_leaves(g in grid()) {
        prop_assert!(split_tree(&g).unwrap().leaf_count() <= count_maxima(&g));
    }

    #[test]
    fn join_tree_mirrors_split_tree_of_negation(g in grid()) {
        let j = join_tree(&g).unwrap();
        prop_assert_eq!(j.kind(), TreeKind::Join);
        let s = split_tree(&g.negated()).unwrap();
        prop_assert!(j.mirrored() == s);
        for v in j.nodes() {
            prop_assert_eq!(j.scalar(v), -s.scalar(v));
        }
        let max = g.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(j.scalar(j.root()) >= max);
    }

    #[test]
    fn simplify_is_idempotent(seed: u64, edges in 1usize..30, frac in 0.0f64..0.6) {
        let t = tree(seed, edges);
        let s = simplify(&t, frac).unwrap();
        prop_assert!(s.is_valid());
        prop_assert!(s.leaf_count() <= t.leaf_count());
        let again = simplify(&s, frac).unwrap();
        prop_assert!(again.isomorphic(&s, 0.0));
    }

    #[test]
    fn simplify_of_grid_trees_is_idempotent(g in grid(), frac in 0.0f64..0.6) {
        let s = simplify(&split_tree(&g).unwrap(), frac).unwrap();
        prop_assert!(s.is_valid());
        prop_assert!(simplify(&s, frac).unwrap().isomorphic(&s, 0.0));
    }
}
