//! Abstract merge trees.
//!
//! A [`MergeTree`] is a rooted unordered tree with one scalar per node. All
//! algorithms in this crate work on the split-tree orientation, where every
//! child lies strictly above its parent. Join trees are stored with negated
//! scalars and a [`TreeKind::Join`] flag; [`MergeTree::scalar`] always returns
//! the original field value while [`MergeTree::height`] returns the
//! split-oriented one.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index, `0..tree.len()`.
pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Split,
    Join,
}

impl TreeKind {
    pub(crate) fn sign(self) -> f64 {
        match self {
            TreeKind::Split => 1.0,
            TreeKind::Join => -1.0,
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeKind::Split => f.write_str("split"),
            TreeKind::Join => f.write_str("join"),
        }
    }
}

/// One node as it appears in serialized form: external id, field scalar and
/// parent id.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    pub id: i64,
    pub scalar: f64,
    pub parent: Option<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeTree {
    kind: TreeKind,
    labels: Vec<i64>,
    height: Vec<f64>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
}

/// A violated clause of the abstract merge tree definition.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// The root must have exactly one child.
    RootDegree {
        node: NodeId,
        degree: usize,
    },
    /// A non-root node with exactly one child.
    InnerDegreeOne {
        node: NodeId,
    },
    /// A child whose (split-oriented) scalar is not strictly above its parent.
    NotIncreasing {
        child: NodeId,
        parent: NodeId,
    },
    NonFinite {
        node: NodeId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootDegree { node, degree } => {
                write!(f, "root {node} has degree {degree}, expected 1")
            }
            Violation::InnerDegreeOne { node } => {
                write!(f, "inner node {node} has exactly one child")
            }
            Violation::NotIncreasing { child, parent } => {
                write!(f, "node {child} is not strictly above its parent {parent}")
            }
            Violation::NonFinite { node } => write!(f, "node {node} has a non-finite scalar"),
        }
    }
}

impl MergeTree {
    /// Builds a tree from serialized node records. Ids may be arbitrary
    /// integers; nodes are indexed in increasing id order. Only structural
    /// problems (duplicate ids, dangling parents, cycles, several roots) are
    /// rejected here; use [`MergeTree::validate`] for the merge tree clauses.
    pub fn new(kind: TreeKind, mut nodes: Vec<NodeSpec>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::MalformedTree("tree has no nodes".into()));
        }
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::MalformedTree(format!("duplicate node id {}", n.id)));
            }
        }
        let mut parent = Vec::with_capacity(nodes.len());
        for n in &nodes {
            match n.parent {
                None => parent.push(None),
                Some(p) => match index.get(&p) {
                    Some(&pi) => parent.push(Some(pi)),
                    None => return Err(Error::MalformedTree(format!("node {} references unknown parent {p}", n.id))),
                },
            }
        }
        let sign = kind.sign();
        let labels = nodes.iter().map(|n| n.id).collect();
        let height = nodes.iter().map(|n| sign * n.scalar).collect();
        Self::from_raw(kind, labels, height, parent)
    }

    /// Convenience constructor with node ids `0..n`.
    pub fn from_parents(kind: TreeKind, parents: &[Option<NodeId>], scalars: &[f64]) -> Result<Self> {
        if parents.len() != scalars.len() {
            return Err(Error::MalformedTree(format!("{} parents but {} scalars", parents.len(), scalars.len())));
        }
        if let Some((i, p)) =
            parents.iter().enumerate().find_map(|(i, p)| p.filter(|&p| p >= parents.len()).map(|p| (i, p)))
        {
            return Err(Error::MalformedTree(format!("node {i} references unknown parent {p}")));
        }
        let sign = kind.sign();
        Self::from_raw(
            kind,
            (0..parents.len() as i64).collect(),
            scalars.iter().map(|s| sign * s).collect(),
            parents.to_vec(),
        )
    }

    /// Split tree with ids `0..n`.
    pub fn split(parents: &[Option<NodeId>], scalars: &[f64]) -> Result<Self> {
        Self::from_parents(TreeKind::Split, parents, scalars)
    }

    pub(crate) fn from_raw(
        kind: TreeKind,
        labels: Vec<i64>,
        height: Vec<f64>,
        parent: Vec<Option<NodeId>>,
    ) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::MalformedTree("tree has no nodes".into()));
        }
        let roots: Vec<NodeId> = (0..n).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::MalformedTree(format!("expected exactly one root, found {}", roots.len())));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = parent[v] {
                children[p].push(v);
            }
        }
        // every node must be reachable from the root, otherwise parents form a cycle
        let mut seen = 0usize;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            seen += 1;
            stack.extend(children[v].iter().copied());
        }
        if seen != n {
            return Err(Error::MalformedTree("parent references form a cycle".into()));
        }
        Ok(Self { kind, labels, height, parent, children, root })
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    /// Children in increasing id order.
    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children[v].is_empty()
    }

    /// Split-oriented scalar (negated field value for join trees).
    pub fn height(&self, v: NodeId) -> f64 {
        self.height[v]
    }

    pub fn heights(&self) -> &[f64] {
        &self.height
    }

    /// Field scalar of a node.
    pub fn scalar(&self, v: NodeId) -> f64 {
        self.kind.sign() * self.height[v]
    }

    /// External id of a node.
    pub fn label(&self, v: NodeId) -> i64 {
        self.labels[v]
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn node_of_label(&self, label: i64) -> Option<NodeId> {
        self.labels.binary_search(&label).ok()
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.len()
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(move |&v| self.is_leaf(v))
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn edge_count(&self) -> usize {
        self.len() - 1
    }

    /// Length of the edge between `child` and its parent; zero for the root.
    pub fn edge_length(&self, child: NodeId) -> f64 {
        match self.parent[child] {
            Some(p) => (self.height[child] - self.height[p]).abs(),
            None => 0.0,
        }
    }

    /// Length of the edge `(u, v)` given in either orientation.
    pub fn edge_length_between(&self, u: NodeId, v: NodeId) -> Result<f64> {
        self.check_node(u)?;
        self.check_node(v)?;
        if self.parent[u] == Some(v) || self.parent[v] == Some(u) {
            Ok((self.height[u] - self.height[v]).abs())
        } else {
            Err(Error::InvalidArgument(format!("({}, {}) is not an edge", self.labels[u], self.labels[v])))
        }
    }

    /// Length of a monotone path given root-to-leaf. A single node has length zero.
    pub fn path_length(&self, path: &[NodeId]) -> Result<f64> {
        for &v in path {
            self.check_node(v)?;
        }
        if path.is_empty() {
            return Err(Error::InvalidArgument("empty path".into()));
        }
        let mut total = 0.0;
        for w in path.windows(2) {
            if self.parent[w[1]] != Some(w[0]) {
                return Err(Error::InvalidArgument(format!(
                    "{} is not a child of {}",
                    self.labels[w[1]], self.labels[w[0]]
                )));
            }
            total += self.edge_length(w[1]);
        }
        Ok(total)
    }

    pub fn is_path(&self, path: &[NodeId]) -> bool {
        !path.is_empty()
            && path.iter().all(|&v| v < self.len())
            && path.windows(2).all(|w| self.parent[w[1]] == Some(w[0]))
    }

    fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(v as i64))
        }
    }

    /// Sum of all edge lengths.
    pub fn total_length(&self) -> f64 {
        self.nodes().map(|v| self.edge_length(v)).sum()
    }

    /// Edge lengths indexed by child node; the root entry is zero.
    pub fn edge_lengths(&self) -> Vec<f64> {
        self.nodes().map(|v| self.edge_length(v)).collect()
    }

    /// Sum of the edges strictly below `v`.
    pub fn subtree_lengths(&self) -> Vec<f64> {
        let mut below = vec![0.0; self.len()];
        for v in self.post_order() {
            for &c in &self.children[v] {
                below[v] += below[c] + self.edge_length(c);
            }
        }
        below
    }

    /// Nodes in post-order (children before parents), children visited by id.
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < self.children[v].len() {
                let c = self.children[v][*next];
                *next += 1;
                stack.push((c, 0));
            } else {
                out.push(v);
                stack.pop();
            }
        }
        out
    }

    /// Nodes in pre-order, children visited by id.
    pub fn pre_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v].iter().rev().copied());
        }
        out
    }

    pub fn min_height(&self) -> f64 {
        self.height.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_height(&self) -> f64 {
        self.height.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Global scalar range of the tree.
    pub fn scalar_range(&self) -> f64 {
        self.max_height() - self.min_height()
    }

    /// Reports every violated clause of the abstract merge tree definition;
    /// an empty list means the tree is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for v in self.nodes() {
            if !self.height[v].is_finite() {
                out.push(Violation::NonFinite { node: v });
            }
        }
        let root_degree = self.children[self.root].len();
        if root_degree != 1 {
            out.push(Violation::RootDegree { node: self.root, degree: root_degree });
        }
        for v in self.nodes() {
            if v != self.root && self.children[v].len() == 1 {
                out.push(Violation::InnerDegreeOne { node: v });
            }
            if let Some(p) = self.parent[v] {
                if !(self.height[v] > self.height[p]) {
                    out.push(Violation::NotIncreasing { child: v, parent: p });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Returns an error carrying every violation when the tree is invalid.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidTree(text.join("; ")))
        }
    }

    /// Same structure with node scalars shifted so that the root sits at `value`.
    pub fn with_root_value(&self, value: f64) -> MergeTree {
        let shift = self.kind.sign() * value - self.height[self.root];
        let mut out = self.clone();
        for h in &mut out.height {
            *h += shift;
        }
        out
    }

    /// Same structure with explicit split-oriented heights.
    pub(crate) fn with_heights(&self, height: Vec<f64>) -> MergeTree {
        debug_assert_eq!(height.len(), self.len());
        MergeTree { height, ..self.clone() }
    }

    /// Same shape with the kind flipped, so every field scalar changes sign
    /// (the join tree of `f` is the split tree of `-f`).
    pub fn mirrored(&self) -> MergeTree {
        let kind = match self.kind {
            TreeKind::Split => TreeKind::Join,
            TreeKind::Join => TreeKind::Split,
        };
        MergeTree { kind, ..self.clone() }
    }

    /// Multiplies all scalars by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> MergeTree {
        self.with_heights(self.height.iter().map(|h| h * factor).collect())
    }

    /// Reconstructs node scalars from edge lengths. `lengths` is indexed by
    /// child node of `structure` (the root entry is ignored) and `root_value`
    /// is the field scalar placed at the root.
    pub fn relabel_from_edge_lengths(structure: &MergeTree, lengths: &[f64], root_value: f64) -> Result<MergeTree> {
        if lengths.len() != structure.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} edge lengths, got {}",
                structure.len(),
                lengths.len()
            )));
        }
        let mut height = vec![0.0; structure.len()];
        height[structure.root] = structure.kind.sign() * root_value;
        for v in structure.pre_order() {
            if let Some(p) = structure.parent[v] {
                let len = lengths[v];
                if !(len > 0.0) || !len.is_finite() {
                    return Err(Error::NonPositiveLength { node: v, length: len });
                }
                height[v] = height[p] + len;
            }
        }
        Ok(structure.with_heights(height))
    }

    /// Nodes of the subtree rooted at `v`, including `v`.
    pub fn subtree(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children[u].iter().rev().copied());
        }
        out
    }

    pub(crate) fn raw_parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    /// Structural and numerical equality up to node ids: same shape with
    /// scalars matching within `tol`.
    pub fn isomorphic(&self, other: &MergeTree, tol: f64) -> bool {
        if self.len() != other.len() || self.kind != other.kind {
            return false;
        }
        let a = self.canonical_form(self.root);
        let b = other.canonical_form(other.root);
        canonical_eq(&a, &b, tol)
    }

    fn canonical_form(&self, v: NodeId) -> Canon {
        let mut kids: Vec<Canon> = self.children[v].iter().map(|&c| self.canonical_form(c)).collect();
        kids.sort_by(canonical_cmp);
        Canon { height: self.height[v], size: 1 + kids.iter().map(|k| k.size).sum::<usize>(), kids }
    }
}

#[derive(Debug)]
struct Canon {
    height: f64,
    size: usize,
    kids: Vec<Canon>,
}

fn canonical_cmp(a: &Canon, b: &Canon) -> std::cmp::Ordering {
    a.height.total_cmp(&b.height).then(a.size.cmp(&b.size)).then_with(|| {
        for (x, y) in a.kids.iter().zip(&b.kids) {
            let o = canonical_cmp(x, y);
            if o.is_ne() {
                return o;
            }
        }
        a.kids.len().cmp(&b.kids.len())
    })
}

fn canonical_eq(a: &Canon, b: &Canon, tol: f64) -> bool {
    if (a.height - b.height).abs() > tol || a.kids.len() != b.kids.len() || a.size != b.size {
        return false;
    }
    // sibling order is by height, which may differ by tol; fall back to a
    // greedy match over unused siblings
    let mut used = vec![false; b.kids.len()];
    'outer: for x in &a.kids {
        for (j, y) in b.kids.iter().enumerate() {
            if !used[j] && canonical_eq(x, y, tol) {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge() -> MergeTree {
        MergeTree::split(&[None, Some(0)], &[0.0, 1.0]).unwrap()
    }

    #[test]
    fn single_edge_is_valid() {
        assert!(single_edge().validate().is_empty());
    }

    #[test]
    fn root_with_two_children_is_reported() {
        let t = MergeTree::split(&[None, Some(0), Some(0)], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.validate(), vec![Violation::RootDegree { node: 0, degree: 2 }]);
    }

    #[test]
    fn inner_node_with_one_child_is_reported() {
        let t = MergeTree::split(&[None, Some(0), Some(1)], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.validate(), vec![Violation::InnerDegreeOne { node: 1 }]);
    }

    #[test]
    fn non_increasing_child_is_reported() {
        let t = MergeTree::split(&[None, Some(0), Some(1), Some(1)], &[0.0, 1.0, 0.5, 2.0]).unwrap();
        assert_eq!(t.validate(), vec![Violation::NotIncreasing { child: 2, parent: 1 }]);
    }

    #[test]
    fn join_trees_use_mirrored_order() {
        let t = MergeTree::from_parents(TreeKind::Join, &[None, Some(0)], &[1.0, 0.0]).unwrap();
        assert!(t.is_valid());
        assert_eq!(t.scalar(1), 0.0);
        assert_eq!(t.height(1), 0.0);
        assert_eq!(t.height(0), -1.0);
        assert_eq!(t.edge_length(1), 1.0);
    }

    #[test]
    fn structural_errors() {
        assert!(MergeTree::split(&[Some(1), Some(0)], &[0.0, 1.0]).is_err());
        assert!(MergeTree::split(&[None, None], &[0.0, 1.0]).is_err());
        let dup = vec![NodeSpec { id: 3, scalar: 0.0, parent: None }, NodeSpec { id: 3, scalar: 1.0, parent: Some(3) }];
        assert!(MergeTree::new(TreeKind::Split, dup).is_err());
    }

    #[test]
    fn arbitrary_ids_are_sorted() {
        let t = MergeTree::new(
            TreeKind::Split,
            vec![NodeSpec { id: 40, scalar: 3.0, parent: Some(7) }, NodeSpec { id: 7, scalar: 0.0, parent: None }],
        )
        .unwrap();
        assert_eq!(t.labels(), &[7, 40]);
        assert_eq!(t.root(), 0);
        assert_eq!(t.node_of_label(40), Some(1));
    }

    #[test]
    fn edge_and_path_lengths() {
        let t = MergeTree::split(&[None, Some(0)], &[5.0, 11.0]).unwrap();
        assert_eq!(t.edge_length_between(0, 1).unwrap(), 6.0);
        assert!(matches!(t.edge_length_between(0, 9), Err(Error::UnknownNode(9))));
        assert_eq!(t.path_length(&[1]).unwrap(), 0.0);
        assert!(matches!(t.path_length(&[0, 5]), Err(Error::UnknownNode(5))));
    }

    #[test]
    fn relabel_from_lengths() {
        let chain = MergeTree::split(&[None, Some(0), Some(1), Some(1)], &[0.0, 2.0, 5.0, 4.0]).unwrap();
        let out = MergeTree::relabel_from_edge_lengths(&chain, &[0.0, 2.0, 3.0, 2.0], 0.0).unwrap();
        assert_eq!(out.heights(), &[0.0, 2.0, 5.0, 4.0]);
        let single = MergeTree::relabel_from_edge_lengths(&single_edge(), &[0.0, 5.0], 0.0).unwrap();
        assert_eq!(single.scalar(1), 5.0);
        assert!(matches!(
            MergeTree::relabel_from_edge_lengths(&single_edge(), &[0.0, 0.0], 0.0),
            Err(Error::NonPositiveLength { .. })
        ));
        let shifted = chain.with_root_value(-1.0);
        assert_eq!(shifted.heights(), &[-1.0, 1.0, 4.0, 3.0]);
    }

    #[test]
    fn isomorphism_ignores_ids() {
        let a = MergeTree::split(&[None, Some(0), Some(1), Some(1)], &[0.0, 2.0, 5.0, 4.0]).unwrap();
        let b = MergeTree::split(&[Some(3), Some(3), None, Some(2)], &[4.0, 5.0, 0.0, 2.0]).unwrap();
        assert!(a.isomorphic(&b, 1e-12));
        let c = b.scaled(2.0);
        assert!(!a.isomorphic(&c, 1e-12));
    }
}
