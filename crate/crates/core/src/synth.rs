//! Seeded synthetic ensembles: the four-hill analytical example, a
//! three-phase clustering ensemble with a maximum swap, and series sampled
//! along a geodesic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bdt::elder_decomposition_unchecked;
use crate::error::{Error, Result};
use crate::extract::{simplify, split_tree, ScalarGrid};
use crate::interp;
use crate::tree::MergeTree;

/// Isotropic Gaussian bump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub sigma: f64,
}

/// Samples the sum of `bumps` on a `width x height` grid.
pub fn render(width: usize, height: usize, bumps: &[Bump]) -> Result<ScalarGrid> {
    let mut values = vec![0.0; width * height];
    for (i, v) in values.iter_mut().enumerate() {
        let (x, y) = ((i % width) as f64, (i / width) as f64);
        for b in bumps {
            let d2 = (x - b.x).powi(2) + (y - b.y).powi(2);
            *v += b.height * (-d2 / (2.0 * b.sigma * b.sigma)).exp();
        }
    }
    ScalarGrid::new(width, height, values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticConfig {
    pub members: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub main_heights: (f64, f64),
    pub side_heights: (f64, f64),
    /// Position jitter in grid cells. Zero disables all per-member variation.
    pub jitter: f64,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            members: 20,
            width: 128,
            height: 128,
            seed: 42,
            main_heights: (0.9, 1.1),
            side_heights: (0.25, 0.4),
            jitter: 2.0,
        }
    }
}

/// Simplification threshold under which every analytical member has nine
/// leaves.
pub const ANALYTIC_THRESHOLD: f64 = 0.02;

const MAIN_SIGMA: f64 = 6.0;
const SIDE_SIGMA: f64 = 2.0;
const SIDE_RADIUS: f64 = 15.0;
/// Main hill centers on a line, in cells of a 128-wide grid. Gaps shrink
/// from left to right so the merge order of the hills is stable.
const MAIN_X: [f64; 4] = [18.0, 54.0, 84.0, 110.0];
/// Directions of the side bumps around the first hill, facing away from
/// its neighbor.
const SIDE_ANGLES: [f64; 5] = [100.0, 140.0, 180.0, 220.0, 260.0];

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticEnsemble {
    pub grids: Vec<ScalarGrid>,
    /// Index of the main hill holding the global maximum, per member.
    pub highest_hill: Vec<usize>,
}

/// Four main Gaussian hills on a line; the leftmost carries five smaller
/// side bumps. Heights and positions vary per member, so the order of the
/// main maxima changes across the ensemble.
pub fn gen_analytical(config: &AnalyticConfig) -> Result<AnalyticEnsemble> {
    let (lo, hi) = config.main_heights;
    let (slo, shi) = config.side_heights;
    let valid = config.members > 0
        && config.width >= 64
        && config.height >= 64
        && lo > 0.0
        && lo <= hi
        && slo > 0.0
        && slo <= shi
        && shi < 0.5 * lo
        && (0.0..=4.0).contains(&config.jitter);
    if !valid {
        return Err(Error::InvalidArgument(
            "analytic config cannot guarantee four separated hills \
             (need a grid of at least 64x64, 0 < side heights < half the main heights, jitter in [0, 4])"
                .into(),
        ));
    }
    let sx = config.width as f64 / 128.0;
    let cy = config.height as f64 / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut grids = Vec::with_capacity(config.members);
    let mut highest_hill = Vec::with_capacity(config.members);
    for _ in 0..config.members {
        let mut bumps = Vec::with_capacity(9);
        let random = config.jitter > 0.0;
        for (h, &x) in MAIN_X.iter().enumerate() {
            let height = if random { rng.gen_range(lo..=hi) } else { hi - (hi - lo) * h as f64 / 3.0 };
            let (dx, dy) = offset(&mut rng, config.jitter);
            bumps.push(Bump { x: x * sx + dx, y: cy + dy, height, sigma: MAIN_SIGMA });
        }
        let (hx, hy) = (bumps[0].x, bumps[0].y);
        for &angle in &SIDE_ANGLES {
            let height = if random { rng.gen_range(slo..=shi) } else { 0.5 * (slo + shi) };
            let (dx, dy) = offset(&mut rng, 0.5 * config.jitter);
            let a = angle.to_radians();
            bumps.push(Bump {
                x: hx + SIDE_RADIUS * a.cos() + dx,
                y: hy - SIDE_RADIUS * a.sin() + dy,
                height,
                sigma: SIDE_SIGMA,
            });
        }
        let grid = render(config.width, config.height, &bumps)?;
        let tree = simplify(&split_tree(&grid)?, ANALYTIC_THRESHOLD)?;
        if tree.leaf_count() != 9 {
            return Err(Error::InvalidArgument(format!(
                "analytic member has {} leaves after simplification instead of 9",
                tree.leaf_count()
            )));
        }
        highest_hill.push(nearest_hill(&grid, &bumps[..4]));
        grids.push(grid);
    }
    Ok(AnalyticEnsemble { grids, highest_hill })
}

fn offset(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
    if radius == 0.0 {
        return (0.0, 0.0);
    }
    (rng.gen_range(-radius..=radius), rng.gen_range(-radius..=radius))
}

/// Main bump closest to the global maximum of the grid.
fn nearest_hill(grid: &ScalarGrid, hills: &[Bump]) -> usize {
    let values = grid.values();
    let top = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b))).unwrap();
    let (x, y) = ((top % grid.width()) as f64, (top / grid.width()) as f64);
    (0..hills.len())
        .min_by(|&a, &b| {
            let da = (hills[a].x - x).hypot(hills[a].y - y);
            let db = (hills[b].x - x).hypot(hills[b].y - y);
            da.total_cmp(&db)
        })
        .unwrap()
}

/// Simplified split trees of the analytical grids.
pub fn analytic_trees(ensemble: &AnalyticEnsemble) -> Result<Vec<MergeTree>> {
    ensemble.grids.iter().map(|g| simplify(&split_tree(g)?, ANALYTIC_THRESHOLD)).collect()
}

/// Main maxima of a tree (elder branches with persistence at least
/// `main_fraction` of the scalar range) and, for each of them, the number
/// of smaller branches whose nearest main ancestor in the BDT it is.
#[derive(Clone, Debug, PartialEq)]
pub struct HillReport {
    pub main_count: usize,
    pub sides_per_main: Vec<usize>,
}

impl HillReport {
    /// Number of main maxima that carry at least one side branch.
    pub fn hosts(&self) -> usize {
        self.sides_per_main.iter().filter(|&&c| c > 0).count()
    }
}

pub fn hill_report(tree: &MergeTree, main_fraction: f64) -> Result<HillReport> {
    tree.ensure_valid()?;
    let bd = elder_decomposition_unchecked(tree);
    let cutoff = main_fraction * tree.scalar_range();
    let is_main: Vec<bool> = bd.branches.iter().map(|b| b.persistence() >= cutoff).collect();
    let mains: Vec<usize> = (0..bd.len()).filter(|&i| is_main[i]).collect();
    let mut sides = vec![0; mains.len()];
    for i in 0..bd.len() {
        if is_main[i] {
            continue;
        }
        let mut p = bd.branches[i].parent;
        while let Some(q) = p {
            if is_main[q] {
                sides[mains.iter().position(|&m| m == q).unwrap()] += 1;
                break;
            }
            p = bd.branches[q].parent;
        }
    }
    Ok(HillReport { main_count: mains.len(), sides_per_main: sides })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapClusters {
    pub grids: Vec<ScalarGrid>,
    pub labels: Vec<usize>,
    /// Phase whose members alternate between two highest maxima.
    pub swap_phase: usize,
}

/// Simplification threshold used for the clustering ensemble.
pub const SWAP_THRESHOLD: f64 = 0.02;

/// Three hills on a line. The third hill sits close to the second and grows
/// from phase to phase; in the last phase the first two hills have nearly
/// equal heights and alternate as the global maximum, which moves the third
/// hill to another level of the branch decomposition tree.
pub fn gen_swap_clusters(phases: usize, per_phase: usize, seed: u64) -> Result<SwapClusters> {
    if !(1..=3).contains(&phases) || per_phase == 0 {
        return Err(Error::InvalidArgument("need 1 to 3 phases with at least one member each".into()));
    }
    const THIRD: [f64; 3] = [0.3, 0.45, 0.7];
    let (width, height) = (96, 48);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grids = Vec::new();
    let mut labels = Vec::new();
    let swap_phase = phases - 1;
    for phase in 0..phases {
        let third = if phase == swap_phase { THIRD[2] } else { THIRD[phase] };
        for m in 0..per_phase {
            let mut jitter = |s: f64| rng.gen_range(-s..=s);
            let (first, second) = if phase == swap_phase {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                (1.0 + sign * 0.03 + jitter(0.01), 1.0 - sign * 0.03 + jitter(0.01))
            } else {
                (1.0 + jitter(0.015), 0.8 + jitter(0.015))
            };
            let bumps = [
                Bump { x: 16.0 + jitter(0.5), y: 24.0 + jitter(0.5), height: first, sigma: MAIN_SIGMA },
                Bump { x: 46.0 + jitter(0.5), y: 24.0 + jitter(0.5), height: second, sigma: MAIN_SIGMA },
                Bump { x: 70.0 + jitter(0.5), y: 24.0 + jitter(0.5), height: third + jitter(0.015), sigma: MAIN_SIGMA },
            ];
            grids.push(render(width, height, &bumps)?);
            labels.push(phase);
        }
    }
    Ok(SwapClusters { grids, labels, swap_phase })
}

/// Simplified split trees of grids.
pub fn trees_of(grids: &[ScalarGrid], threshold: f64) -> Result<Vec<MergeTree>> {
    grids.iter().map(|g| simplify(&split_tree(g)?, threshold)).collect()
}

/// `n` evenly spaced samples of the geodesic from `t0` to `t1`, endpoints
/// included.
pub fn gen_geodesic_series(t0: &MergeTree, t1: &MergeTree, n: usize) -> Result<Vec<MergeTree>> {
    if n < 2 {
        return Err(Error::InvalidArgument("a series needs at least two frames".into()));
    }
    let g = interp::geodesic(t0, t1)?;
    (0..n).map(|i| g.sample(i as f64 / (n - 1) as f64)).collect()
}

/// Random split tree with `edges` edges (two edges are impossible without a
/// degree-two node, so a request for 2 yields 3). Edge lengths are multiples
/// of 0.25 in [0.25, 2], so equal lengths and heights are common.
pub fn random_tree<R: Rng>(rng: &mut R, edges: usize) -> MergeTree {
    let mut parents: Vec<Option<usize>> = vec![None, Some(0)];
    let mut heights = vec![0.0, rng.gen_range(1..=8) as f64 * 0.25];
    let mut children = vec![1usize, 0];
    while parents.len() - 1 < edges.max(1) {
        let missing = edges - (parents.len() - 1);
        let internal: Vec<usize> = (1..parents.len()).filter(|&v| children[v] > 0).collect();
        let split = missing >= 2 && (internal.is_empty() || rng.gen_bool(0.7)) || internal.is_empty();
        let (p, count) = if split {
            let leaves: Vec<usize> = (1..parents.len()).filter(|&v| children[v] == 0).collect();
            (leaves[rng.gen_range(0..leaves.len())], 2)
        } else {
            (internal[rng.gen_range(0..internal.len())], 1)
        };
        for _ in 0..count {
            parents.push(Some(p));
            heights.push(heights[p] + rng.gen_range(1..=8) as f64 * 0.25);
            children.push(0);
            children[p] += 1;
        }
    }
    MergeTree::split(&parents, &heights).expect("generated tree is valid")
}
