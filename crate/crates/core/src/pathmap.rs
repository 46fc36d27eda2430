//! The path mapping distance between merge trees.
//!
//! A path mapping pairs monotone paths of two trees such that pairs are
//! one-to-one, paths within a tree share at most one node, and every pair
//! either starts at both roots or continues from the end nodes of another
//! pair. Its cost is the sum of `|len(p1) - len(p2)|` over mapped pairs plus
//! the lengths of all unmapped edges in both trees.
//!
//! Mapped paths always contain at least one edge. A single-node path pair
//! costs nothing on its own and never lowers the optimum: joining it with
//! the pair it hangs off is at least as cheap by the triangle inequality.

use std::fmt;

use crate::assign;
use crate::error::{Error, Result};
use crate::tree::{MergeTree, NodeId};

/// A pair of mapped paths, each listed from its start (closest to the root)
/// to its end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathPair {
    pub p1: Vec<NodeId>,
    pub p2: Vec<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathMapping {
    pub pairs: Vec<PathPair>,
}

impl PathMapping {
    pub fn new(pairs: Vec<PathPair>) -> Self {
        PathMapping { pairs }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// The same mapping read from the other tree's side.
    pub fn swapped(&self) -> PathMapping {
        PathMapping { pairs: self.pairs.iter().map(|p| PathPair { p1: p.p2.clone(), p2: p.p1.clone() }).collect() }
    }

    /// Edges of the first tree covered by mapped paths, indexed by child node.
    pub fn mapped_edges_first(&self, n: usize) -> Vec<bool> {
        mapped_edges(self.pairs.iter().map(|p| p.p1.as_slice()), n)
    }

    /// Edges of the second tree covered by mapped paths, indexed by child node.
    pub fn mapped_edges_second(&self, n: usize) -> Vec<bool> {
        mapped_edges(self.pairs.iter().map(|p| p.p2.as_slice()), n)
    }
}

fn mapped_edges<'a>(paths: impl Iterator<Item = &'a [NodeId]>, n: usize) -> Vec<bool> {
    let mut mapped = vec![false; n];
    for p in paths {
        for &v in p.iter().skip(1) {
            mapped[v] = true;
        }
    }
    mapped
}

/// Which tree a violation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::First => f.write_str("T1"),
            Side::Second => f.write_str("T2"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MappingViolation {
    /// The listed nodes are not a root-to-leaf directed path with at least one edge.
    NotAPath { side: Side, pair: usize },
    /// Two pairs share a path on one side but not on the other.
    NotOneToOne { a: usize, b: usize },
    /// Two mapped paths of one tree share more than one node.
    Overlap { side: Side, a: usize, b: usize },
    /// A pair neither starts at both roots nor continues another pair.
    Disconnected { pair: usize },
}

impl fmt::Display for MappingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MappingViolation::NotAPath { side, pair } => {
                write!(f, "pair {pair}: {side} side is not a monotone path")
            }
            MappingViolation::NotOneToOne { a, b } => {
                write!(f, "pairs {a} and {b} violate one-to-one")
            }
            MappingViolation::Overlap { side, a, b } => {
                write!(f, "pairs {a} and {b}: paths in {side} overlap")
            }
            MappingViolation::Disconnected { pair } => {
                write!(f, "pair {pair} neither starts at the roots nor continues another pair")
            }
        }
    }
}

/// Checks the three path mapping clauses. Unknown node ids are an error;
/// clause violations are reported in the returned list.
pub fn validate_path_mapping(m: &PathMapping, t1: &MergeTree, t2: &MergeTree) -> Result<Vec<MappingViolation>> {
    for pair in &m.pairs {
        for &v in &pair.p1 {
            if v >= t1.len() {
                return Err(Error::UnknownNode(v as i64));
            }
        }
        for &v in &pair.p2 {
            if v >= t2.len() {
                return Err(Error::UnknownNode(v as i64));
            }
        }
    }
    let mut out = Vec::new();
    for (i, pair) in m.pairs.iter().enumerate() {
        if pair.p1.len() < 2 || !t1.is_path(&pair.p1) {
            out.push(MappingViolation::NotAPath { side: Side::First, pair: i });
        }
        if pair.p2.len() < 2 || !t2.is_path(&pair.p2) {
            out.push(MappingViolation::NotAPath { side: Side::Second, pair: i });
        }
    }
    for a in 0..m.pairs.len() {
        for b in a + 1..m.pairs.len() {
            let (pa, pb) = (&m.pairs[a], &m.pairs[b]);
            if (pa.p1 == pb.p1) != (pa.p2 == pb.p2) {
                out.push(MappingViolation::NotOneToOne { a, b });
            }
            if common_nodes(&pa.p1, &pb.p1) > 1 {
                out.push(MappingViolation::Overlap { side: Side::First, a, b });
            }
            if common_nodes(&pa.p2, &pb.p2) > 1 {
                out.push(MappingViolation::Overlap { side: Side::Second, a, b });
            }
        }
    }
    for (i, pair) in m.pairs.iter().enumerate() {
        let (Some(&s1), Some(&s2)) = (pair.p1.first(), pair.p2.first()) else {
            out.push(MappingViolation::Disconnected { pair: i });
            continue;
        };
        let at_roots = s1 == t1.root() && s2 == t2.root();
        let continues = m
            .pairs
            .iter()
            .enumerate()
            .any(|(j, other)| j != i && other.p1.last() == Some(&s1) && other.p2.last() == Some(&s2));
        if !at_roots && !continues {
            out.push(MappingViolation::Disconnected { pair: i });
        }
    }
    Ok(out)
}

fn common_nodes(a: &[NodeId], b: &[NodeId]) -> usize {
    a.iter().filter(|v| b.contains(v)).count()
}

/// Cost of a valid mapping: relabel costs of the mapped pairs plus the
/// lengths of every unmapped edge in either tree.
pub fn path_mapping_cost(m: &PathMapping, t1: &MergeTree, t2: &MergeTree) -> Result<f64> {
    let violations = validate_path_mapping(m, t1, t2)?;
    if let Some(v) = violations.first() {
        return Err(Error::InvalidMapping(v.to_string()));
    }
    Ok(mapping_cost_unchecked(m, t1, t2))
}

pub(crate) fn mapping_cost_unchecked(m: &PathMapping, t1: &MergeTree, t2: &MergeTree) -> f64 {
    let mut cost = 0.0;
    for pair in &m.pairs {
        let l1 = (t1.height(*pair.p1.last().unwrap()) - t1.height(pair.p1[0])).abs();
        let l2 = (t2.height(*pair.p2.last().unwrap()) - t2.height(pair.p2[0])).abs();
        cost += (l1 - l2).abs();
    }
    let mapped1 = m.mapped_edges_first(t1.len());
    let mapped2 = m.mapped_edges_second(t2.len());
    for v in t1.nodes() {
        if v != t1.root() && !mapped1[v] {
            cost += t1.edge_length(v);
        }
    }
    for v in t2.nodes() {
        if v != t2.root() && !mapped2[v] {
            cost += t2.edge_length(v);
        }
    }
    cost
}

/// An optimal mapping together with its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceResult {
    pub cost: f64,
    pub mapping: PathMapping,
}

/// Per-tree data for the dynamic program: post-order positions, subtree
/// ranges and deletion costs.
struct Side1<'a> {
    t: &'a MergeTree,
    post: Vec<NodeId>,
    pos: Vec<usize>,
    /// Post-order position of the first descendant; strict descendants of
    /// `v` occupy `first[v]..pos[v]`.
    first: Vec<usize>,
    /// Cost of deleting the edge above `v` and everything below it.
    drop: Vec<f64>,
}

impl<'a> Side1<'a> {
    fn new(t: &'a MergeTree) -> Self {
        let post = t.post_order();
        let mut pos = vec![0; t.len()];
        for (i, &v) in post.iter().enumerate() {
            pos[v] = i;
        }
        let mut first = vec![0; t.len()];
        for &v in &post {
            first[v] = t.children(v).first().map_or(pos[v], |&c| first[c]);
        }
        let below = t.subtree_lengths();
        let drop = t.nodes().map(|v| t.edge_length(v) + below[v]).collect();
        Side1 { t, post, pos, first, drop }
    }

    fn descendants(&self, v: NodeId) -> &[NodeId] {
        &self.post[self.first[v]..self.pos[v]]
    }

    fn siblings_drop(&self, v: NodeId, keep: NodeId) -> f64 {
        self.t.children(v).iter().filter(|&&c| c != keep).map(|&c| self.drop[c]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Close,
    ExtendFirst(NodeId),
    ExtendSecond(NodeId),
}

/// Dynamic program over pairs of open paths. For fixed path starts `(a, b)`
/// the table holds, for every descendant pair `(x, y)`, the cheapest cost of
/// everything below `a` and `b` given that a mapped pair runs from `a` to
/// `x` and from `b` to `y` (possibly extended further). `best[x][y]` is the
/// cheapest cost below two matched end nodes.
struct Solver<'a> {
    s1: Side1<'a>,
    s2: Side1<'a>,
    best: Vec<f64>,
    n2: usize,
}

struct Table {
    a: NodeId,
    b: NodeId,
    width: usize,
    values: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(t1: &'a MergeTree, t2: &'a MergeTree) -> Self {
        let s1 = Side1::new(t1);
        let s2 = Side1::new(t2);
        let n2 = t2.len();
        let mut solver = Solver { best: vec![0.0; t1.len() * n2], s1, s2, n2 };
        let mut table = Table { a: 0, b: 0, width: 0, values: Vec::new() };
        for i in 0..t1.len() {
            let a = solver.s1.post[i];
            for j in 0..n2 {
                let b = solver.s2.post[j];
                solver.fill(a, b, &mut table);
                let value = solver.assign_children(&table).cost;
                solver.best[a * n2 + b] = value;
            }
        }
        solver
    }

    fn best(&self, x: NodeId, y: NodeId) -> f64 {
        self.best[x * self.n2 + y]
    }

    fn index(&self, table: &Table, x: NodeId, y: NodeId) -> usize {
        (self.s1.pos[x] - self.s1.first[table.a]) * table.width + (self.s2.pos[y] - self.s2.first[table.b])
    }

    fn fill(&self, a: NodeId, b: NodeId, table: &mut Table) {
        let rows = self.s1.descendants(a).len();
        let width = self.s2.descendants(b).len();
        table.a = a;
        table.b = b;
        table.width = width;
        table.values.clear();
        table.values.resize(rows * width, 0.0);
        for &x in self.s1.descendants(a) {
            for &y in self.s2.descendants(b) {
                let (value, _) = self.step(table, x, y);
                let idx = self.index(table, x, y);
                table.values[idx] = value;
            }
        }
    }

    /// Cheapest continuation at `(x, y)`; candidates are tried in a fixed
    /// order and only strict improvements replace the incumbent.
    fn step(&self, table: &Table, x: NodeId, y: NodeId) -> (f64, Step) {
        let (t1, t2) = (self.s1.t, self.s2.t);
        let l1 = t1.height(x) - t1.height(table.a);
        let l2 = t2.height(y) - t2.height(table.b);
        let mut value = (l1 - l2).abs() + self.best(x, y);
        let mut step = Step::Close;
        for &c in t1.children(x) {
            let v = table.values[self.index(table, c, y)] + self.s1.siblings_drop(x, c);
            if v < value {
                value = v;
                step = Step::ExtendFirst(c);
            }
        }
        for &c in t2.children(y) {
            let v = table.values[self.index(table, x, c)] + self.s2.siblings_drop(y, c);
            if v < value {
                value = v;
                step = Step::ExtendSecond(c);
            }
        }
        (value, step)
    }

    fn assign_children(&self, table: &Table) -> assign::Assignment {
        let k1 = self.s1.t.children(table.a);
        let k2 = self.s2.t.children(table.b);
        let pair_cost: Vec<Vec<f64>> =
            k1.iter().map(|&c1| k2.iter().map(|&c2| table.values[self.index(table, c1, c2)]).collect()).collect();
        let row_alone: Vec<f64> = k1.iter().map(|&c| self.s1.drop[c]).collect();
        let col_alone: Vec<f64> = k2.iter().map(|&c| self.s2.drop[c]).collect();
        assign::solve(&pair_cost, &row_alone, &col_alone)
    }

    /// Recovers the mapping pairs below the matched nodes `(a, b)`.
    fn collect(&self, a: NodeId, b: NodeId, out: &mut Vec<PathPair>) {
        let mut table = Table { a: 0, b: 0, width: 0, values: Vec::new() };
        self.fill(a, b, &mut table);
        let assignment = self.assign_children(&table);
        let k1 = self.s1.t.children(a);
        let k2 = self.s2.t.children(b);
        for (i, j) in assignment.pairs {
            let (mut x, mut y) = (k1[i], k2[j]);
            let mut p1 = vec![a, x];
            let mut p2 = vec![b, y];
            loop {
                match self.step(&table, x, y).1 {
                    Step::Close => break,
                    Step::ExtendFirst(c) => {
                        p1.push(c);
                        x = c;
                    }
                    Step::ExtendSecond(c) => {
                        p2.push(c);
                        y = c;
                    }
                }
            }
            out.push(PathPair { p1, p2 });
            self.collect(x, y, out);
        }
    }
}

/// Exact path mapping distance with an optimal mapping as witness.
pub fn path_mapping_distance(t1: &MergeTree, t2: &MergeTree) -> Result<DistanceResult> {
    t1.ensure_valid()?;
    t2.ensure_valid()?;
    Ok(distance_unchecked(t1, t2))
}

pub(crate) fn distance_unchecked(t1: &MergeTree, t2: &MergeTree) -> DistanceResult {
    let solver = Solver::new(t1, t2);
    let cost = solver.best(t1.root(), t2.root());
    let mut pairs = Vec::new();
    solver.collect(t1.root(), t2.root(), &mut pairs);
    DistanceResult { cost, mapping: PathMapping { pairs } }
}

/// Distance value only.
pub fn path_mapping_cost_only(t1: &MergeTree, t2: &MergeTree) -> Result<f64> {
    t1.ensure_valid()?;
    t2.ensure_valid()?;
    let solver = Solver::new(t1, t2);
    Ok(solver.best(t1.root(), t2.root()))
}

/// Largest total edge count accepted by [`brute_force_distance`].
pub const ORACLE_EDGE_LIMIT: usize = 16;

/// Exhaustive oracle: enumerates every valid path mapping and scores it
/// with [`path_mapping_cost`]'s cost function.
pub fn brute_force_distance(t1: &MergeTree, t2: &MergeTree) -> Result<DistanceResult> {
    let edges = t1.edge_count() + t2.edge_count();
    if edges > ORACLE_EDGE_LIMIT {
        return Err(Error::OracleLimit { edges, limit: ORACLE_EDGE_LIMIT });
    }
    t1.ensure_valid()?;
    t2.ensure_valid()?;
    let mut best = DistanceResult { cost: f64::INFINITY, mapping: PathMapping::default() };
    let mut current = Vec::new();
    let mut frontier = vec![(t1.root(), t2.root())];
    enumerate_mappings(t1, t2, &mut frontier, &mut current, &mut |pairs| {
        let m = PathMapping { pairs: pairs.to_vec() };
        let c = mapping_cost_unchecked(&m, t1, t2);
        if c < best.cost {
            best = DistanceResult { cost: c, mapping: m };
        }
    });
    Ok(best)
}

/// Calls `visit` once for every valid path mapping reachable from the
/// matched node pairs in `frontier`.
pub fn enumerate_mappings(
    t1: &MergeTree,
    t2: &MergeTree,
    frontier: &mut Vec<(NodeId, NodeId)>,
    current: &mut Vec<PathPair>,
    visit: &mut dyn FnMut(&[PathPair]),
) {
    let Some((x, y)) = frontier.pop() else {
        visit(current);
        return;
    };
    let k1 = t1.children(x).to_vec();
    let k2 = t2.children(y).to_vec();
    let mut injection = Vec::new();
    let mut used = vec![false; k2.len()];
    for_each_injection(&k1, &k2, 0, &mut used, &mut injection, &mut |inj| {
        choose_ends(t1, t2, x, y, inj, 0, frontier, current, visit);
    });
    frontier.push((x, y));
}

fn for_each_injection(
    k1: &[NodeId],
    k2: &[NodeId],
    i: usize,
    used: &mut Vec<bool>,
    acc: &mut Vec<(NodeId, NodeId)>,
    f: &mut dyn FnMut(&[(NodeId, NodeId)]),
) {
    if i == k1.len() {
        f(acc);
        return;
    }
    for_each_injection(k1, k2, i + 1, used, acc, f);
    for j in 0..k2.len() {
        if !used[j] {
            used[j] = true;
            acc.push((k1[i], k2[j]));
            for_each_injection(k1, k2, i + 1, used, acc, f);
            acc.pop();
            used[j] = false;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn choose_ends(
    t1: &MergeTree,
    t2: &MergeTree,
    x: NodeId,
    y: NodeId,
    inj: &[(NodeId, NodeId)],
    k: usize,
    frontier: &mut Vec<(NodeId, NodeId)>,
    current: &mut Vec<PathPair>,
    visit: &mut dyn FnMut(&[PathPair]),
) {
    if k == inj.len() {
        enumerate_mappings(t1, t2, frontier, current, visit);
        return;
    }
    let (c1, c2) = inj[k];
    for d1 in t1.subtree(c1) {
        for d2 in t2.subtree(c2) {
            current.push(PathPair { p1: path_between(t1, x, d1), p2: path_between(t2, y, d2) });
            frontier.push((d1, d2));
            choose_ends(t1, t2, x, y, inj, k + 1, frontier, current, visit);
            frontier.pop();
            current.pop();
        }
    }
}

/// Nodes from ancestor `top` down to `bottom`.
pub fn path_between(t: &MergeTree, top: NodeId, bottom: NodeId) -> Vec<NodeId> {
    let mut out = vec![bottom];
    let mut v = bottom;
    while v != top {
        v = t.parent(v).expect("top must be an ancestor of bottom");
        out.push(v);
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(len: f64) -> MergeTree {
        MergeTree::split(&[None, Some(0)], &[0.0, len]).unwrap()
    }

    fn fork() -> MergeTree {
        // root edge 2 forking into leaves at +3 and +1
        MergeTree::split(&[None, Some(0), Some(1), Some(1)], &[0.0, 2.0, 5.0, 3.0]).unwrap()
    }

    /// T1 and T3 of the worked barycenter example.
    fn t1() -> MergeTree {
        MergeTree::split(&[None, Some(0), Some(1), Some(1)], &[0.0, 5.0, 11.0, 9.0]).unwrap()
    }

    fn t3() -> MergeTree {
        MergeTree::split(&[None, Some(0), Some(1), Some(2), Some(2), Some(1)], &[0.0, 2.0, 5.5, 9.0, 7.5, 6.0]).unwrap()
    }

    fn pair(p1: &[NodeId], p2: &[NodeId]) -> PathPair {
        PathPair { p1: p1.to_vec(), p2: p2.to_vec() }
    }

    #[test]
    fn empty_mapping_is_valid_and_costs_everything() {
        let m = PathMapping::default();
        assert!(validate_path_mapping(&m, &t1(), &t3()).unwrap().is_empty());
        let c = path_mapping_cost(&m, &t1(), &t3()).unwrap();
        assert_eq!(c, t1().total_length() + t3().total_length());
    }

    #[test]
    fn root_pair_is_valid() {
        let m = PathMapping::new(vec![pair(&[0, 1], &[0, 1])]);
        assert!(validate_path_mapping(&m, &t1(), &t3()).unwrap().is_empty());
    }

    #[test]
    fn overlapping_paths_are_reported() {
        let m = PathMapping::new(vec![pair(&[0, 1, 2], &[0, 1]), pair(&[0, 1, 3], &[0, 1, 5])]);
        let v = validate_path_mapping(&m, &t1(), &t3()).unwrap();
        assert!(v.contains(&MappingViolation::Overlap { side: Side::First, a: 0, b: 1 }));
    }

    #[test]
    fn disconnected_and_unknown_nodes() {
        let m = PathMapping::new(vec![pair(&[1, 2], &[1, 5])]);
        let v = validate_path_mapping(&m, &t1(), &t3()).unwrap();
        assert_eq!(v, vec![MappingViolation::Disconnected { pair: 0 }]);
        let bad = PathMapping::new(vec![pair(&[0, 9], &[0, 1])]);
        assert!(matches!(validate_path_mapping(&bad, &t1(), &t3()), Err(Error::UnknownNode(9))));
        assert!(path_mapping_cost(&m, &t1(), &t3()).is_err());
    }

    #[test]
    fn worked_example_cost() {
        // A1B1-A3B3, B1D1-B3C3D3, B1F1-B3F3, E3 branch deleted
        let m = PathMapping::new(vec![pair(&[0, 1], &[0, 1]), pair(&[1, 2], &[1, 2, 3]), pair(&[1, 3], &[1, 5])]);
        let c = path_mapping_cost(&m, &t1(), &t3()).unwrap();
        assert!((c - 6.0).abs() < 1e-12);
        let d = path_mapping_distance(&t1(), &t3()).unwrap();
        assert!((d.cost - 6.0).abs() < 1e-12);
        assert_eq!(d.mapping, m);
    }

    #[test]
    fn identical_trees_have_zero_distance() {
        for t in [edge(3.0), fork(), t1(), t3()] {
            let d = path_mapping_distance(&t, &t).unwrap();
            assert_eq!(d.cost, 0.0);
            assert_eq!(path_mapping_cost(&d.mapping, &t, &t).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_edges() {
        let d = path_mapping_distance(&edge(5.0), &edge(2.0)).unwrap();
        assert_eq!(d.cost, 3.0);
        assert_eq!(d.mapping.pairs, vec![pair(&[0, 1], &[0, 1])]);
    }

    #[test]
    fn edge_against_fork_matches_oracle() {
        let d = path_mapping_distance(&edge(5.0), &fork()).unwrap();
        let o = brute_force_distance(&edge(5.0), &fork()).unwrap();
        // map the edge onto root..5, delete the leaf edge of length 1
        assert_eq!(o.cost, 1.0);
        assert_eq!(d.cost, o.cost);
    }

    #[test]
    fn oracle_guard() {
        let big = {
            let mut parents = vec![None, Some(0)];
            let mut scalars = vec![0.0, 1.0];
            for i in 0..9 {
                parents.push(Some(1));
                scalars.push(2.0 + i as f64);
            }
            MergeTree::split(&parents, &scalars).unwrap()
        };
        assert!(matches!(brute_force_distance(&big, &big), Err(Error::OracleLimit { .. })));
    }

    #[test]
    fn oracle_is_symmetric_and_bounded() {
        let a = brute_force_distance(&t1(), &t3()).unwrap().cost;
        let b = brute_force_distance(&t3(), &t1()).unwrap().cost;
        assert_eq!(a, b);
        assert!(a <= t1().total_length() + t3().total_length());
    }

    /// Random valid split tree with `edges` edges and integer-ish heights.
    pub(crate) fn random_tree(rng: &mut impl rand::Rng, edges: usize) -> MergeTree {
        let mut parents = vec![None, Some(0)];
        let mut heights = vec![0.0, rng.gen_range(1..4) as f64];
        while parents.len() <= edges {
            let p = rng.gen_range(1..parents.len());
            let h = heights[p] + rng.gen_range(1..6) as f64 * 0.5;
            parents.push(Some(p));
            heights.push(h);
        }
        // nodes with exactly one child get a second one
        let n = parents.len();
        for v in 1..n {
            let kids = parents.iter().filter(|&&q| q == Some(v)).count();
            if kids == 1 {
                parents.push(Some(v));
                heights.push(heights[v] + rng.gen_range(1..4) as f64);
            }
        }
        MergeTree::split(&parents, &heights).unwrap()
    }

    #[test]
    fn dp_matches_oracle_on_random_trees() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 150 {
            let (ea, eb) = (rng.gen_range(1..6), rng.gen_range(1..6));
            let a = random_tree(&mut rng, ea);
            let b = random_tree(&mut rng, eb);
            if a.edge_count() + b.edge_count() > 12 {
                continue;
            }
            let d = path_mapping_distance(&a, &b).unwrap();
            let o = brute_force_distance(&a, &b).unwrap();
            assert!((d.cost - o.cost).abs() < 1e-9, "dp {} oracle {}", d.cost, o.cost);
            let witness = path_mapping_cost(&d.mapping, &a, &b).unwrap();
            assert!((witness - d.cost).abs() < 1e-9);
            checked += 1;
        }
    }
}
