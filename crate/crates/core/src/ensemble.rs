//! Ensemble tasks: distance matrices, k-means clustering, the adjusted rand
//! index, and temporal reduction of merge tree time series.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interp::{self, PmOptions};
use crate::metric::Metric;
use crate::pathmap;
use crate::tree::MergeTree;
use crate::wasserstein::{self, BarycenterOptions, NormalizedBdt};

/// Runs `f` on `0..n` with at most `threads` workers; results keep index order.
pub fn par_map<T: Send>(n: usize, threads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = threads.max(1).min(n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let f = &f;
    let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| scope.spawn(move || (w..n).step_by(threads).map(|i| (i, f(i))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, v) in h.join().expect("worker panicked") {
                out[i] = Some(v);
            }
        }
    });
    out.into_iter().map(|v| v.unwrap()).collect()
}

/// Symmetric matrix of pairwise distances with a zero diagonal.
pub fn distance_matrix(trees: &[MergeTree], metric: Metric, threads: usize) -> Result<Vec<Vec<f64>>> {
    let n = trees.len();
    let space = Space::new(trees, metric)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = par_map(pairs.len(), threads, |p| {
        let (i, j) = pairs[p];
        space.member_distance(i, j)
    });
    let mut m = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(values) {
        m[i][j] = d;
        m[j][i] = d;
    }
    Ok(m)
}

/// Members prepared for one metric: trees for the path metric, normalized
/// BDTs for the Wasserstein metric.
enum Space<'a> {
    Path(&'a [MergeTree]),
    Wasserstein(&'a [MergeTree], Vec<NormalizedBdt>),
}

#[derive(Clone, Debug)]
enum Centroid {
    Tree(MergeTree),
    Bdt(NormalizedBdt),
}

impl<'a> Space<'a> {
    fn new(trees: &'a [MergeTree], metric: Metric) -> Result<Self> {
        for t in trees {
            t.ensure_valid()?;
        }
        Ok(match metric {
            Metric::Path => Space::Path(trees),
            Metric::Wasserstein => {
                Space::Wasserstein(trees, trees.iter().map(wasserstein::normalized_bdt).collect::<Result<Vec<_>>>()?)
            }
        })
    }

    fn trees(&self) -> &'a [MergeTree] {
        match self {
            Space::Path(t) | Space::Wasserstein(t, _) => t,
        }
    }

    fn member_distance(&self, i: usize, j: usize) -> f64 {
        match self {
            Space::Path(t) => pathmap::distance_unchecked(&t[i], &t[j]).cost,
            Space::Wasserstein(_, b) => wasserstein::wasserstein_distance(&b[i].bdt, &b[j].bdt).distance,
        }
    }

    fn member(&self, i: usize) -> Centroid {
        match self {
            Space::Path(t) => Centroid::Tree(t[i].clone()),
            Space::Wasserstein(_, b) => Centroid::Bdt(b[i].clone()),
        }
    }

    fn distance(&self, i: usize, c: &Centroid) -> f64 {
        match (self, c) {
            (Space::Path(t), Centroid::Tree(c)) => pathmap::distance_unchecked(c, &t[i]).cost,
            (Space::Wasserstein(_, b), Centroid::Bdt(c)) => {
                wasserstein::wasserstein_distance(&c.bdt, &b[i].bdt).distance
            }
            _ => unreachable!("centroid does not belong to this metric"),
        }
    }

    /// Contribution of one member to the k-means energy.
    fn energy(&self, d: f64) -> f64 {
        match self {
            Space::Path(_) => d,
            Space::Wasserstein(..) => d * d,
        }
    }

    fn barycenter(&self, members: &[usize], init: Centroid, options: &PmOptions) -> Result<Centroid> {
        match (self, init) {
            (Space::Path(t), Centroid::Tree(init)) => {
                let sub: Vec<MergeTree> = members.iter().map(|&i| t[i].clone()).collect();
                Ok(Centroid::Tree(interp::pm_barycenter_from(&sub, init, options)?.tree))
            }
            (Space::Wasserstein(_, b), Centroid::Bdt(init)) => {
                let sub: Vec<NormalizedBdt> = members.iter().map(|&i| b[i].clone()).collect();
                let opts = BarycenterOptions { init: 0, max_iter: options.max_iter, rel_tol: options.rel_tol };
                Ok(Centroid::Bdt(wasserstein::wasserstein_barycenter_from(&sub, init, &opts)?.bdt))
            }
            _ => unreachable!("centroid does not belong to this metric"),
        }
    }

    fn to_tree(&self, c: &Centroid) -> Result<MergeTree> {
        match c {
            Centroid::Tree(t) => Ok(t.clone()),
            Centroid::Bdt(b) => wasserstein::to_tree(b, self.trees()[0].kind()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansOptions {
    pub k: usize,
    pub metric: Metric,
    pub runs: usize,
    pub seed: u64,
    pub max_rounds: usize,
    pub barycenter: PmOptions,
    /// Upper bound on runs executed concurrently. Results do not depend on it.
    pub threads: usize,
}

impl KmeansOptions {
    pub fn new(k: usize, metric: Metric) -> Self {
        KmeansOptions { k, metric, runs: 1, seed: 42, max_rounds: 50, barycenter: PmOptions::default(), threads: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansRun {
    pub seed: u64,
    pub initial: Vec<usize>,
    pub assignments: Vec<usize>,
    pub energy: f64,
    pub rounds: usize,
    /// Energy after every assignment step.
    pub energy_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterResult {
    /// Assignments of the lowest-energy run.
    pub assignments: Vec<usize>,
    pub centroids: Vec<MergeTree>,
    pub runs: Vec<KmeansRun>,
    pub best_run: usize,
    /// Adjusted rand index of the best run against the supplied truth.
    pub ari: Option<f64>,
}

/// k-means with `runs` independent random initializations. Run `r` uses
/// seed `options.seed + r`.
pub fn kmeans(trees: &[MergeTree], options: &KmeansOptions, truth: Option<&[usize]>) -> Result<ClusterResult> {
    let n = trees.len();
    if options.k == 0 || options.k > n {
        return Err(Error::InvalidArgument(format!("k = {} must lie in 1..={n}", options.k)));
    }
    if options.runs == 0 {
        return Err(Error::InvalidArgument("at least one run is required".into()));
    }
    if let Some(t) = truth {
        if t.len() != n {
            return Err(Error::InvalidArgument(format!("{} truth labels for {n} members", t.len())));
        }
    }
    let space = Space::new(trees, options.metric)?;
    let results =
        par_map(options.runs, options.threads, |r| kmeans_run(&space, options, options.seed.wrapping_add(r as u64)));
    let mut runs = Vec::new();
    let mut best: Option<(usize, f64, Vec<Centroid>)> = None;
    for (r, result) in results.into_iter().enumerate() {
        let (run, centroids) = result?;
        if best.as_ref().is_none_or(|(_, e, _)| run.energy < *e) {
            best = Some((r, run.energy, centroids));
        }
        runs.push(run);
    }
    let (best_run, _, centroids) = best.unwrap();
    let assignments = runs[best_run].assignments.clone();
    let ari = truth.map(|t| adjusted_rand_index(&assignments, t)).transpose()?;
    let centroids = centroids.iter().map(|c| space.to_tree(c)).collect::<Result<Vec<_>>>()?;
    Ok(ClusterResult { assignments, centroids, runs, best_run, ari })
}

fn kmeans_run(space: &Space, options: &KmeansOptions, seed: u64) -> Result<(KmeansRun, Vec<Centroid>)> {
    let n = space.trees().len();
    let k = options.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<usize> = sample(&mut rng, n, k).into_vec();
    let mut centroids: Vec<Centroid> = initial.iter().map(|&i| space.member(i)).collect();
    let mut assignments: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut rounds = 0;
    loop {
        let (mut next, mut dist) = assign(space, &centroids);
        repair_empty(space, &mut centroids, &mut next, &mut dist, k);
        let energy: f64 = dist.iter().map(|&d| space.energy(d)).sum();
        trace.push(energy);
        let unchanged = next == assignments;
        assignments = next;
        if unchanged || rounds == options.max_rounds {
            break;
        }
        rounds += 1;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignments[i] == c).collect();
            *centroid = space.barycenter(&members, centroid.clone(), &options.barycenter)?;
        }
    }
    let energy = *trace.last().unwrap();
    Ok((KmeansRun { seed, initial, assignments, energy, rounds, energy_trace: trace }, centroids))
}

/// Nearest centroid per member; ties go to the lower cluster index.
fn assign(space: &Space, centroids: &[Centroid]) -> (Vec<usize>, Vec<f64>) {
    let n = space.trees().len();
    let mut out = vec![0; n];
    let mut dist = vec![f64::INFINITY; n];
    for i in 0..n {
        for (c, centroid) in centroids.iter().enumerate() {
            let d = space.distance(i, centroid);
            if d < dist[i] {
                dist[i] = d;
                out[i] = c;
            }
        }
    }
    (out, dist)
}

/// Every empty cluster takes over the member farthest from its centroid.
fn repair_empty(space: &Space, centroids: &mut [Centroid], assignments: &mut [usize], dist: &mut [f64], k: usize) {
    for c in 0..k {
        if assignments.contains(&c) {
            continue;
        }
        let mut counts = vec![0; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        // only members whose cluster keeps at least one other member
        let far = (0..assignments.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        if let Some(i) = far {
            centroids[c] = space.member(i);
            assignments[i] = c;
            dist[i] = 0.0;
        }
    }
}

/// Adjusted rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("labelings of length {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    let pairs = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // both labelings are trivial (all together or all apart)
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// `true` if the clustering and the ground truth induce the same partition.
pub fn fully_correct(assignments: &[usize], truth: &[usize]) -> bool {
    assignments.len() == truth.len()
        && (0..truth.len())
            .all(|i| (0..truth.len()).all(|j| (assignments[i] == assignments[j]) == (truth[i] == truth[j])))
}

/// Tree at parameter `alpha` between two trees under the metric's own
/// interpolation.
pub fn interpolate(a: &MergeTree, b: &MergeTree, alpha: f64, metric: Metric) -> Result<MergeTree> {
    match metric {
        Metric::Path => interp::geodesic(a, b)?.sample(alpha),
        Metric::Wasserstein => {
            let na = wasserstein::normalized_bdt(a)?;
            let nb = wasserstein::normalized_bdt(b)?;
            wasserstein::to_tree(&wasserstein::wasserstein_interpolate(&na, &nb, alpha)?, a.kind())
        }
    }
}

/// Greedy keyframe selection: repeatedly drops the interior keyframe whose
/// reconstruction from its neighboring keyframes is closest to it, until
/// `keep` frames remain. The first and last frames always stay.
pub fn temporal_reduce(trees: &[MergeTree], keep: usize, metric: Metric) -> Result<Vec<usize>> {
    let n = trees.len();
    if keep < 2 {
        return Err(Error::InvalidArgument("at least two keyframes must be kept".into()));
    }
    if keep > n {
        return Err(Error::InvalidArgument(format!("cannot keep {keep} of {n} frames")));
    }
    let mut keys: Vec<usize> = (0..n).collect();
    let mut cache: HashMap<(usize, usize, usize), f64> = HashMap::new();
    while keys.len() > keep {
        let mut best: Option<(f64, usize)> = None;
        for w in 1..keys.len() - 1 {
            let (l, j, r) = (keys[w - 1], keys[w], keys[w + 1]);
            let err = match cache.get(&(l, j, r)) {
                Some(&e) => e,
                None => {
                    let alpha = (j - l) as f64 / (r - l) as f64;
                    let rec = interpolate(&trees[l], &trees[r], alpha, metric)?;
                    let e = metric.distance(&trees[j], &rec)?;
                    cache.insert((l, j, r), e);
                    e
                }
            };
            if best.is_none_or(|(b, _)| err < b) {
                best = Some((err, w));
            }
        }
        keys.remove(best.unwrap().1);
    }
    Ok(keys)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameError {
    pub index: usize,
    pub keyframe: bool,
    pub path: f64,
    pub wasserstein: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionResult {
    pub keyframes: Vec<usize>,
    pub reconstructed: Vec<MergeTree>,
    pub errors: Vec<FrameError>,
}

/// Rebuilds every frame from its neighboring keyframes and measures the
/// error under both metrics.
pub fn temporal_reconstruct(trees: &[MergeTree], keyframes: &[usize], metric: Metric) -> Result<ReductionResult> {
    let n = trees.len();
    let valid = keyframes.len() >= 2
        && keyframes[0] == 0
        && *keyframes.last().unwrap() == n - 1
        && keyframes.windows(2).all(|w| w[0] < w[1]);
    if !valid {
        return Err(Error::InvalidArgument("keyframes must be increasing and include both ends".into()));
    }
    let mut reconstructed = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    for w in keyframes.windows(2) {
        let (l, r) = (w[0], w[1]);
        let start = if l == 0 { 0 } else { l + 1 };
        for t in start..=r {
            let rec = if t == l || t == r {
                trees[t].clone()
            } else {
                interpolate(&trees[l], &trees[r], (t - l) as f64 / (r - l) as f64, metric)?
            };
            errors.push(FrameError {
                index: t,
                keyframe: keyframes.contains(&t),
                path: Metric::Path.distance(&trees[t], &rec)?,
                wasserstein: Metric::Wasserstein.distance(&trees[t], &rec)?,
            });
            reconstructed.push(rec);
        }
    }
    Ok(ReductionResult { keyframes: keyframes.to_vec(), reconstructed, errors })
}
