use mergetree::bdt::Bdt;
use mergetree::io::{
    assignments_csv, bdt_from_json, bdt_to_json, grid_from_text, grid_to_text, labels_from_csv, mapping_from_json,
    mapping_to_json, matrix_csv, tree_from_json, tree_to_json,
};
use mergetree::{path_mapping_distance, MergeTree, NodeSpec, ScalarGrid, TreeKind};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tree with arbitrary finite scalars and shuffled, sparse ids.
fn relabeled(seed: u64, edges: usize, join: bool) -> MergeTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = mergetree::synth::random_tree(&mut rng, edges);
    let mut ids: Vec<i64> = (0..t.len() as i64).map(|i| 7 * i - 40).collect();
    ids.shuffle(&mut rng);
    let scale = 10f64.powi(rng.gen_range(-6..6));
    let offset: f64 = rng.gen_range(-1e3..1e3);
    let mut specs: Vec<NodeSpec> = t
        .nodes()
        .map(|v| NodeSpec {
            id: ids[v],
            scalar: offset + scale * t.scalar(v) * rng.gen_range(1.0..1.0 + 1e-3),
            parent: t.parent(v).map(|p| ids[p]),
        })
        .collect();
    specs.shuffle(&mut rng);
    let kind = if join { TreeKind::Join } else { TreeKind::Split };
    if join {
        for s in &mut specs {
            s.scalar = -s.scalar;
        }
    }
    MergeTree::new(kind, specs).unwrap()
}

fn same_tree(a: &MergeTree, b: &MergeTree) -> bool {
    a.kind() == b.kind()
        && a.len() == b.len()
        && a.nodes().all(|v| {
            let w = match b.node_of_label(a.label(v)) {
                Some(w) => w,
                None => return false,
            };
            a.scalar(v).to_bits() == b.scalar(w).to_bits()
                && a.parent(v).map(|p| a.label(p)) == b.parent(w).map(|p| b.label(p))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn tree_json_roundtrip(seed: u64, edges in 1usize..25, join: bool) {
        let t = relabeled(seed, edges, join);
        prop_assume!(t.is_valid());
        let text = tree_to_json(&t);
        let back = tree_from_json(&text).unwrap();
        prop_assert!(same_tree(&t, &back));
        prop_assert_eq!(tree_to_json(&back), text);
    }

    #[test]
    fn grid_text_roundtrip(w in 1usize..8, h in 1usize..8, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..w * h)
            .map(|_| match rng.gen_range(0..3) {
                0 => rng.gen_range(-1e300..1e300),
                1 => rng.gen_range(-1.0..1.0) * 1e-300,
                _ => f64::from(rng.gen_range(-5..5)),
            })
            .collect();
        let g = ScalarGrid::new(w, h, values).unwrap();
        let back = grid_from_text(&grid_to_text(&g)).unwrap();
        prop_assert_eq!((back.width(), back.height()), (w, h));
        for (a, b) in g.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn bdt_json_roundtrip(seed: u64, edges in 1usize..25) {
        let t = mergetree::synth::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), edges);
        let b = Bdt::from_tree(&t).unwrap();
        prop_assert_eq!(bdt_from_json(&bdt_to_json(&b)).unwrap(), b);
    }

    #[test]
    fn mapping_json_roundtrip(s1: u64, s2: u64, e1 in 1usize..15, e2 in 1usize..15) {
        let (a, b) = (relabeled(s1, e1, false), relabeled(s2, e2, false));
        prop_assume!(a.is_valid() && b.is_valid());
        let r = path_mapping_distance(&a, &b).unwrap();
        let back = mapping_from_json(&mapping_to_json(&r.mapping, &a, &b, Some(r.cost)), &a, &b).unwrap();
        prop_assert_eq!(back, r.mapping);
    }

    #[test]
    fn tables_parse_back(values in prop::collection::vec(0usize..6, 1..20), seed: u64) {
        prop_assert_eq!(labels_from_csv(&assignments_csv(&values)).unwrap(), values.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = values.len();
        let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..100.0)).collect()).collect();
        let text = matrix_csv(&m);
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        prop_assert_eq!(header.len(), n + 1);
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            prop_assert_eq!(cells[0].parse::<usize>().unwrap(), i);
            for (j, c) in cells[1..].iter().enumerate() {
                prop_assert!((c.parse::<f64>().unwrap() - m[i][j]).abs() <= 5e-10);
            }
        }
    }
}
