//! Geodesics and barycenters under the path mapping distance.
//!
//! A geodesic interpolates along an optimal mapping: matched nodes move
//! linearly, interior path nodes keep their relative position on their path,
//! and unmapped subtrees shrink (deleted side) or grow (inserted side).
//!
//! The barycenter update removes candidate edges no member maps, sets every
//! edge to the mean (or median) of its proportional share of the mapped
//! member paths, and inserts unmapped member content scaled by `1/k`.

use crate::draft::Draft;
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::pathmap::{self, PathMapping};
use crate::tree::{MergeTree, NodeId};
use crate::wasserstein::{self, BarycenterOptions};

#[derive(Clone, Copy, Debug)]
enum Anchor {
    Matched {
        h0: f64,
        h1: f64,
    },
    /// On the mapped pair running from matched node `start` to `end`.
    Interior {
        start: usize,
        end: usize,
        r: f64,
    },
    Deleted {
        len: f64,
    },
    Inserted {
        len: f64,
    },
}

/// Interpolation structure between two trees along a path mapping.
#[derive(Clone, Debug)]
pub struct Geodesic {
    pub t0: MergeTree,
    pub t1: MergeTree,
    pub mapping: PathMapping,
    /// Cost of `mapping`, the length of the geodesic.
    pub cost: f64,
    parent: Vec<Option<usize>>,
    anchor: Vec<Anchor>,
}

/// Geodesic along an optimal path mapping.
pub fn geodesic(t0: &MergeTree, t1: &MergeTree) -> Result<Geodesic> {
    let d = pathmap::path_mapping_distance(t0, t1)?;
    geodesic_with(t0, t1, d.mapping)
}

/// Geodesic along a given (valid, non-empty) mapping.
pub fn geodesic_with(t0: &MergeTree, t1: &MergeTree, mapping: PathMapping) -> Result<Geodesic> {
    if t0.kind() != t1.kind() {
        return Err(Error::InvalidArgument("cannot interpolate between split and join trees".into()));
    }
    let cost = pathmap::path_mapping_cost(&mapping, t0, t1)?;
    if mapping.is_empty() {
        return Err(Error::InvalidMapping("the empty mapping has no geodesic".into()));
    }
    let mut g = Geodesic { t0: t0.clone(), t1: t1.clone(), mapping, cost, parent: Vec::new(), anchor: Vec::new() };
    let mut idx0: Vec<Option<usize>> = vec![None; t0.len()];
    let mut idx1: Vec<Option<usize>> = vec![None; t1.len()];
    idx0[t0.root()] = Some(g.push(None, Anchor::Matched { h0: t0.height(t0.root()), h1: t1.height(t1.root()) }));
    idx1[t1.root()] = idx0[t0.root()];

    let pairs = g.mapping.pairs.clone();
    let mut done = vec![false; pairs.len()];
    let mut progress = true;
    while progress {
        progress = false;
        for (i, pair) in pairs.iter().enumerate() {
            let start = idx0[pair.p1[0]];
            if done[i] || start.is_none() || start != idx1[pair.p2[0]] {
                continue;
            }
            let start = start.unwrap();
            let (e0, e1) = (*pair.p1.last().unwrap(), *pair.p2.last().unwrap());
            let end = g.push(None, Anchor::Matched { h0: t0.height(e0), h1: t1.height(e1) });
            idx0[e0] = Some(end);
            idx1[e1] = Some(end);
            let mut interior: Vec<(f64, bool, NodeId)> = Vec::new();
            let l0 = t0.height(e0) - t0.height(pair.p1[0]);
            let l1 = t1.height(e1) - t1.height(pair.p2[0]);
            for &v in &pair.p1[1..pair.p1.len() - 1] {
                interior.push(((t0.height(v) - t0.height(pair.p1[0])) / l0, false, v));
            }
            for &v in &pair.p2[1..pair.p2.len() - 1] {
                interior.push(((t1.height(v) - t1.height(pair.p2[0])) / l1, true, v));
            }
            interior.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut last = start;
            let mut last_r = f64::NEG_INFINITY;
            for (r, second, v) in interior {
                if r - last_r > MERGE_TOL {
                    last = g.push(Some(last), Anchor::Interior { start, end, r });
                    last_r = r;
                }
                if second {
                    idx1[v] = Some(last);
                } else {
                    idx0[v] = Some(last);
                }
            }
            g.parent[end] = Some(last);
            done[i] = true;
            progress = true;
        }
    }
    if done.iter().any(|d| !d) {
        return Err(Error::InvalidMapping("mapping is not connected to the roots".into()));
    }
    for v in t0.pre_order() {
        if idx0[v].is_none() {
            let p = idx0[t0.parent(v).unwrap()].unwrap();
            idx0[v] = Some(g.push(Some(p), Anchor::Deleted { len: t0.edge_length(v) }));
        }
    }
    for v in t1.pre_order() {
        if idx1[v].is_none() {
            let p = idx1[t1.parent(v).unwrap()].unwrap();
            idx1[v] = Some(g.push(Some(p), Anchor::Inserted { len: t1.edge_length(v) }));
        }
    }
    Ok(g)
}

/// Relative offsets closer than this are treated as the same position.
const MERGE_TOL: f64 = 1e-9;

impl Geodesic {
    fn push(&mut self, parent: Option<usize>, anchor: Anchor) -> usize {
        self.parent.push(parent);
        self.anchor.push(anchor);
        self.parent.len() - 1
    }

    /// Number of nodes of the interpolation structure before cleanup.
    pub fn structure_size(&self) -> usize {
        self.parent.len()
    }

    /// The tree at parameter `alpha`, with zero-length edges and degree-two
    /// nodes removed.
    pub fn sample(&self, alpha: f64) -> Result<MergeTree> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let n = self.parent.len();
        let mut h = vec![0.0; n];
        for (i, a) in self.anchor.iter().enumerate() {
            if let Anchor::Matched { h0, h1 } = *a {
                h[i] = (1.0 - alpha) * h0 + alpha * h1;
            }
        }
        // parents are created before their children
        for (i, a) in self.anchor.iter().enumerate() {
            h[i] = match *a {
                Anchor::Matched { .. } => h[i],
                Anchor::Interior { start, end, r } => h[start] + r * (h[end] - h[start]),
                Anchor::Deleted { len } => h[self.parent[i].unwrap()] + (1.0 - alpha) * len,
                Anchor::Inserted { len } => h[self.parent[i].unwrap()] + alpha * len,
            };
        }
        let mut children = vec![Vec::new(); n];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        let draft = Draft {
            kind: self.t0.kind(),
            parent: self.parent.clone(),
            children,
            height: h,
            alive: vec![true; n],
            root: 0,
        };
        draft.finish_clean()
    }
}

/// Aggregation used by the barycenter update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Mean,
    /// Lower median; never adds content to the candidate.
    Median,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Variant::Mean),
            "median" => Ok(Variant::Median),
            other => Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        }
    }
}

fn lower_median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

/// Working state of one barycenter update. Node ids of the candidate stay
/// valid throughout, so the member mappings can be read directly.
struct Update<'a> {
    draft: Draft,
    trees: &'a [MergeTree],
    mappings: &'a [PathMapping],
}

impl<'a> Update<'a> {
    fn new(b: &MergeTree, trees: &'a [MergeTree], mappings: &'a [PathMapping]) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::EmptyInput);
        }
        if trees.len() != mappings.len() {
            return Err(Error::InvalidArgument(format!("{} trees but {} mappings", trees.len(), mappings.len())));
        }
        for (t, m) in trees.iter().zip(mappings) {
            if t.kind() != b.kind() {
                return Err(Error::InvalidArgument("members and candidate differ in tree kind".into()));
            }
            let violations = pathmap::validate_path_mapping(m, b, t)?;
            if let Some(v) = violations.first() {
                return Err(Error::InvalidMapping(v.to_string()));
            }
        }
        Ok(Update { draft: Draft::from_tree(b), trees, mappings })
    }

    fn k(&self) -> f64 {
        self.trees.len() as f64
    }

    /// Drops candidate edges no member maps. Subtrees below such an edge are
    /// unmapped as well, since mapped paths chain up to the root.
    fn remove_unmatched(&mut self) {
        let n = self.draft.parent.len();
        let mut mapped = vec![false; n];
        for m in self.mappings {
            for (v, &b) in m.mapped_edges_first(n).iter().enumerate() {
                mapped[v] |= b;
            }
        }
        for v in 0..n {
            if v != self.draft.root && self.draft.alive[v] && !mapped[v] {
                self.draft.remove_subtree(v);
            }
        }
    }

    /// Per-member share of each candidate edge, indexed `[edge][member]`.
    fn shares(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.draft.parent.len();
        let mut out = vec![vec![0.0; self.trees.len()]; n];
        for (i, (m, t)) in self.mappings.iter().zip(self.trees).enumerate() {
            for pair in &m.pairs {
                let (s, e) = (pair.p1[0], *pair.p1.last().unwrap());
                let len = self.draft.height[e] - self.draft.height[s];
                if !(len > 0.0) {
                    return Err(Error::DegeneratePath);
                }
                let target = t.height(*pair.p2.last().unwrap()) - t.height(pair.p2[0]);
                for &v in &pair.p1[1..] {
                    out[v][i] = self.draft.edge_length(v) / len * target;
                }
            }
        }
        Ok(out)
    }

    fn relabel(&mut self, variant: Variant) -> Result<()> {
        let shares = self.shares()?;
        let mut roots: Vec<f64> = self.trees.iter().map(|t| t.height(t.root())).collect();
        let k = self.k();
        let root_height = match variant {
            Variant::Mean => roots.iter().sum::<f64>() / k,
            Variant::Median => lower_median(&mut roots),
        };
        let mut lengths = vec![0.0; shares.len()];
        for (v, s) in shares.into_iter().enumerate() {
            let mut s = s;
            lengths[v] = match variant {
                Variant::Mean => s.iter().sum::<f64>() / k,
                Variant::Median => lower_median(&mut s),
            };
        }
        let root = self.draft.root;
        self.draft.height[root] = root_height;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for i in 0..self.draft.children[v].len() {
                let c = self.draft.children[v][i];
                self.draft.height[c] = self.draft.height[v] + lengths[c];
                stack.push(c);
            }
        }
        Ok(())
    }

    /// Node on the candidate path from `start` down to `end` at `height`,
    /// splitting an edge if no node lies there.
    fn node_at(&mut self, start: usize, end: usize, height: f64, tol: f64) -> usize {
        let mut y = end;
        loop {
            let p = self.draft.parent[y].expect("path ends below its start");
            if (self.draft.height[y] - height).abs() <= tol {
                return y;
            }
            if (self.draft.height[p] - height).abs() <= tol {
                return p;
            }
            if self.draft.height[p] < height || p == start {
                return self.draft.split_edge(y, height);
            }
            y = p;
        }
    }

    /// Copies the subtree of member `t` below `v` (edge included) under
    /// candidate node `at`, with all lengths divided by `k`.
    fn graft(&mut self, t: &MergeTree, v: NodeId, at: usize) {
        let k = self.k();
        let mut stack = vec![(v, at)];
        while let Some((u, under)) = stack.pop() {
            let h = self.draft.height[under] + t.edge_length(u) / k;
            let copy = self.draft.add_node(under, h);
            for &c in t.children(u) {
                stack.push((c, copy));
            }
        }
    }

    fn add_unmatched(&mut self) {
        let tol = MERGE_TOL * self.draft.scale();
        for (m, t) in self.mappings.iter().zip(self.trees) {
            let mapped = m.mapped_edges_second(t.len());
            for pair in &m.pairs {
                let (s, e) = (pair.p1[0], *pair.p1.last().unwrap());
                let (s2, e2) = (pair.p2[0], *pair.p2.last().unwrap());
                let len2 = t.height(e2) - t.height(s2);
                for &v in &pair.p2[1..pair.p2.len() - 1] {
                    let r = (t.height(v) - t.height(s2)) / len2;
                    let height = self.draft.height[s] + r * (self.draft.height[e] - self.draft.height[s]);
                    let at = self.node_at(s, e, height, tol);
                    for &c in t.children(v) {
                        if !mapped[c] {
                            self.graft(t, c, at);
                        }
                    }
                }
                for &c in t.children(e2) {
                    if !mapped[c] {
                        self.graft(t, c, e);
                    }
                }
            }
        }
    }

    fn finish(self) -> Result<MergeTree> {
        let tree = self.draft.finish_clean()?;
        tree.ensure_valid()?;
        Ok(tree)
    }
}

/// Removes candidate edges that no member mapping covers and contracts the
/// resulting degree-two nodes.
pub fn remove_unmatched(b: &MergeTree, mappings: &[PathMapping], trees: &[MergeTree]) -> Result<MergeTree> {
    let mut u = Update::new(b, trees, mappings)?;
    u.remove_unmatched();
    u.finish()
}

/// Sets every edge of `b` to the mean of its proportional shares of the
/// mapped member paths (zero for members not mapping it). The root moves to
/// the mean member root. The structure is unchanged.
pub fn relabel_barycenter(b: &MergeTree, mappings: &[PathMapping], trees: &[MergeTree]) -> Result<MergeTree> {
    relabel_with(b, mappings, trees, Variant::Mean)
}

/// As [`relabel_barycenter`] with the lower median instead of the mean.
pub fn relabel_barycenter_median(b: &MergeTree, mappings: &[PathMapping], trees: &[MergeTree]) -> Result<MergeTree> {
    relabel_with(b, mappings, trees, Variant::Median)
}

fn relabel_with(b: &MergeTree, mappings: &[PathMapping], trees: &[MergeTree], variant: Variant) -> Result<MergeTree> {
    let mut u = Update::new(b, trees, mappings)?;
    u.relabel(variant)?;
    for v in b.nodes() {
        if v != b.root() && !(u.draft.edge_length(v) > 0.0) {
            return Err(Error::NonPositiveLength { node: v, length: u.draft.edge_length(v) });
        }
    }
    Ok(b.with_heights(u.draft.height))
}

/// Inserts member path nodes at their relative positions on the mapped
/// candidate paths and grafts unmapped member subtrees scaled by `1/k`.
pub fn add_unmatched(b: &MergeTree, mappings: &[PathMapping], trees: &[MergeTree]) -> Result<MergeTree> {
    let mut u = Update::new(b, trees, mappings)?;
    u.add_unmatched();
    u.finish()
}

/// One full update of the candidate from the given member mappings.
pub fn barycenter_update(
    b: &MergeTree,
    mappings: &[PathMapping],
    trees: &[MergeTree],
    variant: Variant,
) -> Result<MergeTree> {
    let mut u = Update::new(b, trees, mappings)?;
    u.remove_unmatched();
    u.relabel(variant)?;
    if variant == Variant::Mean {
        u.add_unmatched();
    }
    u.finish()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PmOptions {
    pub variant: Variant,
    pub init: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for PmOptions {
    fn default() -> Self {
        PmOptions { variant: Variant::Mean, init: 0, max_iter: 100, rel_tol: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarycenterResult {
    pub tree: MergeTree,
    /// Fréchet energy of every candidate, the initial one included.
    pub energy_trace: Vec<f64>,
    /// Optimal mappings from the final candidate to each member.
    pub mappings: Vec<PathMapping>,
    pub iterations: usize,
    /// Node count of every candidate, the initial one included.
    pub size_trace: Vec<usize>,
}

/// Path mapping barycenter starting from member `options.init`.
pub fn pm_barycenter(trees: &[MergeTree], options: &PmOptions) -> Result<BarycenterResult> {
    if trees.is_empty() {
        return Err(Error::EmptyInput);
    }
    let init = trees
        .get(options.init)
        .ok_or_else(|| Error::InvalidArgument(format!("init index {} out of range", options.init)))?;
    pm_barycenter_from(trees, init.clone(), options)
}

/// Path mapping barycenter from an explicit initial candidate.
pub fn pm_barycenter_from(trees: &[MergeTree], init: MergeTree, options: &PmOptions) -> Result<BarycenterResult> {
    if trees.is_empty() {
        return Err(Error::EmptyInput);
    }
    for t in trees {
        t.ensure_valid()?;
    }
    init.ensure_valid()?;
    let assign = |b: &MergeTree| -> (f64, Vec<PathMapping>) {
        let results: Vec<_> = trees.iter().map(|t| pathmap::distance_unchecked(b, t)).collect();
        (results.iter().map(|r| r.cost).sum(), results.into_iter().map(|r| r.mapping).collect())
    };
    let mut tree = init;
    let (mut energy, mut mappings) = assign(&tree);
    let mut energy_trace = vec![energy];
    let mut size_trace = vec![tree.len()];
    let mut iterations = 0;
    while iterations < options.max_iter {
        tree = barycenter_update(&tree, &mappings, trees, options.variant)?;
        let (e, m) = assign(&tree);
        iterations += 1;
        energy_trace.push(e);
        size_trace.push(tree.len());
        let converged = energy == 0.0 || (energy - e).abs() <= options.rel_tol * energy;
        energy = e;
        mappings = m;
        if converged {
            break;
        }
    }
    Ok(BarycenterResult { tree, energy_trace, mappings, iterations, size_trace })
}

/// Sum of distances (path) or of squared distances (Wasserstein) from `b`
/// to every member.
pub fn frechet_energy(b: &MergeTree, trees: &[MergeTree], metric: Metric) -> Result<f64> {
    let mut total = 0.0;
    for t in trees {
        let d = metric.distance(b, t)?;
        total += match metric {
            Metric::Path => d,
            Metric::Wasserstein => d * d,
        };
    }
    Ok(total)
}

/// Barycenter under either metric, returned as a merge tree with its
/// energy trace. Wasserstein barycenters are computed on normalized BDTs.
pub fn barycenter(trees: &[MergeTree], metric: Metric, options: &PmOptions) -> Result<(MergeTree, Vec<f64>, usize)> {
    match metric {
        Metric::Path => {
            let r = pm_barycenter(trees, options)?;
            Ok((r.tree, r.energy_trace, r.iterations))
        }
        Metric::Wasserstein => {
            let members = trees.iter().map(wasserstein::normalized_bdt).collect::<Result<Vec<_>>>()?;
            let opts = BarycenterOptions { init: options.init, max_iter: options.max_iter, rel_tol: options.rel_tol };
            let r = wasserstein::wasserstein_barycenter(&members, &opts)?;
            let kind = trees[0].kind();
            Ok((wasserstein::to_tree(&r.bdt, kind)?, r.energy_trace, r.iterations))
        }
    }
}
