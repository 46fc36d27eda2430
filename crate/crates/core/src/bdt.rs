//! Branch decompositions and branch decomposition trees (BDTs).
//!
//! Coordinates are split-oriented: a branch is born at the scalar of its
//! first (lowest) node and dies at the scalar of its leaf, so `death >= birth`.
//! For join trees these are the negated field values.

use serde::{Deserialize, Serialize};

use crate::draft::Draft;
use crate::error::{Error, Result};
use crate::tree::{MergeTree, NodeId, TreeKind};

/// A point in the birth/death plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthDeath {
    pub birth: f64,
    pub death: f64,
}

impl BirthDeath {
    pub fn new(birth: f64, death: f64) -> Self {
        BirthDeath { birth, death }
    }

    pub fn persistence(&self) -> f64 {
        (self.death - self.birth).abs()
    }

    pub fn is_diagonal(&self) -> bool {
        self.birth == self.death
    }
}

/// A leaf-terminated path of the tree, listed from its first node to its leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub nodes: Vec<NodeId>,
    pub birth: f64,
    pub death: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl Branch {
    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn leaf(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Branches whose edge sets partition the tree, indexed so that branch 0 is
/// the main branch (starting at the root) and parents precede children.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchDecomposition {
    pub branches: Vec<Branch>,
}

impl BranchDecomposition {
    pub fn main(&self) -> &Branch {
        &self.branches[0]
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Branch index owning each edge, indexed by child node (root: `None`).
    pub fn branch_of_edge(&self, tree: &MergeTree) -> Vec<Option<usize>> {
        let mut owner = vec![None; tree.len()];
        for (i, b) in self.branches.iter().enumerate() {
            for &v in &b.nodes[1..] {
                owner[v] = Some(i);
            }
        }
        owner
    }

    pub fn to_bdt(&self) -> Bdt {
        Bdt {
            nodes: self
                .branches
                .iter()
                .map(|b| BdtNode {
                    point: BirthDeath::new(b.birth, b.death),
                    parent: b.parent,
                    children: b.children.clone(),
                })
                .collect(),
        }
    }
}

/// For every node, the leaf of its subtree with the largest scalar; ties go
/// to the smallest leaf id.
pub(crate) fn elder_leaves(tree: &MergeTree) -> Vec<NodeId> {
    let mut best = vec![0; tree.len()];
    for v in tree.post_order() {
        best[v] = if tree.is_leaf(v) {
            v
        } else {
            let mut b = best[tree.children(v)[0]];
            for &c in &tree.children(v)[1..] {
                if elder_beats(tree, best[c], b) {
                    b = best[c];
                }
            }
            b
        };
    }
    best
}

fn elder_beats(tree: &MergeTree, a: NodeId, b: NodeId) -> bool {
    let (ha, hb) = (tree.height(a), tree.height(b));
    ha > hb || (ha == hb && tree.label(a) < tree.label(b))
}

/// Elder-rule branch decomposition: at every inner node the child subtree
/// holding the highest leaf continues the current branch.
pub fn branch_decomposition_elder(tree: &MergeTree) -> Result<BranchDecomposition> {
    tree.ensure_valid()?;
    Ok(elder_decomposition_unchecked(tree))
}

pub(crate) fn elder_decomposition_unchecked(tree: &MergeTree) -> BranchDecomposition {
    let best = elder_leaves(tree);
    let mut branches: Vec<Branch> = Vec::new();
    // (first node, first child, parent branch); the main branch has no fixed first child
    let mut queue = std::collections::VecDeque::from([(tree.root(), None::<NodeId>, None::<usize>)]);
    while let Some((start, first, parent)) = queue.pop_front() {
        let idx = branches.len();
        let mut nodes = vec![start];
        let mut v = start;
        if let Some(c) = first {
            nodes.push(c);
            v = c;
        }
        let leaf = best[v];
        while !tree.is_leaf(v) {
            let next = *tree.children(v).iter().find(|&&c| best[c] == leaf).unwrap();
            for &c in tree.children(v) {
                if c != next {
                    queue.push_back((v, Some(c), Some(idx)));
                }
            }
            nodes.push(next);
            v = next;
        }
        branches.push(Branch {
            birth: tree.height(start),
            death: tree.height(leaf),
            nodes,
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            branches[p].children.push(idx);
        }
    }
    BranchDecomposition { branches }
}

/// One branch in a [`Bdt`].
#[derive(Clone, Debug, PartialEq)]
pub struct BdtNode {
    pub point: BirthDeath,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Branch decomposition tree: branches as birth/death points, linked by the
/// parent-branch relation. Node 0 is the root (main) branch and parents
/// always precede their children.
#[derive(Clone, Debug, PartialEq)]
pub struct Bdt {
    pub(crate) nodes: Vec<BdtNode>,
}

impl Bdt {
    /// Builds a BDT from `(point, parent)` records. Exactly one record must
    /// have no parent; it becomes node 0. Records are reordered so parents
    /// precede children; the returned tree keeps that order.
    pub fn new(records: &[(BirthDeath, Option<usize>)]) -> Result<Bdt> {
        let n = records.len();
        if n == 0 {
            return Err(Error::MalformedBdt("no branches".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| records[i].1.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::MalformedBdt(format!("expected one root branch, found {}", roots.len())));
        }
        let mut kids = vec![Vec::new(); n];
        for (i, r) in records.iter().enumerate() {
            if let Some(p) = r.1 {
                if p >= n {
                    return Err(Error::MalformedBdt(format!("branch {i} references unknown parent {p}")));
                }
                kids[p].push(i);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut queue = std::collections::VecDeque::from([roots[0]]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            queue.extend(kids[v].iter().copied());
        }
        if order.len() != n {
            return Err(Error::MalformedBdt("parent references form a cycle".into()));
        }
        let mut index = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            index[v] = i;
        }
        let mut out = Bdt { nodes: Vec::with_capacity(n) };
        for &v in &order {
            out.nodes.push(BdtNode {
                point: records[v].0,
                parent: records[v].1.map(|p| index[p]),
                children: kids[v].iter().map(|&c| index[c]).collect(),
            });
        }
        Ok(out)
    }

    /// Elder-rule BDT of a valid merge tree.
    pub fn from_tree(tree: &MergeTree) -> Result<Bdt> {
        Ok(branch_decomposition_elder(tree)?.to_bdt())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn point(&self, i: usize) -> BirthDeath {
        self.nodes[i].point
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.nodes[i].parent
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.nodes[i].children
    }

    pub fn nodes(&self) -> &[BdtNode] {
        &self.nodes
    }

    pub fn records(&self) -> Vec<(BirthDeath, Option<usize>)> {
        self.nodes.iter().map(|n| (n.point, n.parent)).collect()
    }

    /// Every child branch range lies within its parent range.
    pub fn satisfies_nesting(&self, tol: f64) -> bool {
        self.nodes.iter().all(|n| match n.parent {
            None => n.point.death >= n.point.birth - tol,
            Some(p) => {
                let q = self.nodes[p].point;
                n.point.birth >= q.birth - tol && n.point.death <= q.death + tol && n.point.death >= n.point.birth - tol
            }
        })
    }

    /// Inverts the BDT into a merge tree. Each child branch is attached at
    /// its birth value on its parent branch; children sharing a birth value
    /// share a saddle. Zero-persistence branches are dropped together with
    /// their subtrees.
    pub fn to_tree(&self, kind: TreeKind) -> Result<MergeTree> {
        let root = self.nodes[0].point;
        let scale = self.nodes.iter().flat_map(|n| [n.point.birth.abs(), n.point.death.abs()]).fold(1.0, f64::max);
        let tol = 1e-12 * scale;
        if !(root.death - root.birth > tol) {
            return Err(Error::MalformedBdt("root branch has zero persistence".into()));
        }
        let mut draft = Draft::with_root(kind, root.birth);
        // (bdt index, tree node where the branch starts)
        let mut stack = vec![(0usize, draft.root)];
        while let Some((b, start)) = stack.pop() {
            let p = self.nodes[b].point;
            let leaf_path_start = start;
            let mut kids: Vec<usize> = self.nodes[b]
                .children
                .iter()
                .copied()
                .filter(|&c| {
                    let q = self.nodes[c].point;
                    q.death - q.birth > tol
                })
                .collect();
            kids.sort_by(|&x, &y| self.nodes[x].point.birth.total_cmp(&self.nodes[y].point.birth).then(x.cmp(&y)));
            let mut current = leaf_path_start;
            let mut current_height = draft.height[start];
            for c in kids {
                let q = self.nodes[c].point;
                if q.birth < p.birth - tol || q.birth > p.death + tol || q.death > p.death + tol {
                    return Err(Error::MalformedBdt(format!("branch {c} is not nested in its parent {b}")));
                }
                let attach = if q.birth - current_height <= tol {
                    if current == draft.root {
                        return Err(Error::MalformedBdt(format!("branch {c} is born at the root")));
                    }
                    current
                } else {
                    let s = draft.add_node(current, q.birth);
                    current = s;
                    current_height = q.birth;
                    s
                };
                stack.push((c, attach));
            }
            if p.death - current_height <= tol {
                return Err(Error::MalformedBdt(format!("branch {b} ends below its saddles")));
            }
            draft.add_node(current, p.death);
        }
        draft.finish_clean()
    }
}
