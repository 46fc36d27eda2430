//! Mutable working copy of a merge tree used by the editing algorithms
//! (simplification, barycenter updates, geodesic sampling, BDT inversion).

use crate::error::Result;
use crate::tree::{MergeTree, NodeId, TreeKind};

#[derive(Clone, Debug)]
pub(crate) struct Draft {
    pub kind: TreeKind,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub height: Vec<f64>,
    pub alive: Vec<bool>,
    pub root: usize,
}

impl Draft {
    pub fn from_tree(t: &MergeTree) -> Self {
        Draft {
            kind: t.kind(),
            parent: t.raw_parents().to_vec(),
            children: t.nodes().map(|v| t.children(v).to_vec()).collect(),
            height: t.heights().to_vec(),
            alive: vec![true; t.len()],
            root: t.root(),
        }
    }

    pub fn with_root(kind: TreeKind, height: f64) -> Self {
        Draft { kind, parent: vec![None], children: vec![Vec::new()], height: vec![height], alive: vec![true], root: 0 }
    }

    pub fn add_node(&mut self, parent: usize, height: f64) -> usize {
        let id = self.parent.len();
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.height.push(height);
        self.alive.push(true);
        self.children[parent].push(id);
        id
    }

    fn detach(&mut self, v: usize) {
        if let Some(p) = self.parent[v] {
            self.children[p].retain(|&c| c != v);
        }
    }

    pub fn remove_subtree(&mut self, v: usize) {
        self.detach(v);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            self.alive[u] = false;
            stack.append(&mut self.children[u]);
        }
    }

    /// Inserts a node at `height` on the edge between `child` and its parent.
    pub fn split_edge(&mut self, child: usize, height: f64) -> usize {
        let p = self.parent[child].expect("cannot split above the root");
        let mid = self.add_node(p, height);
        self.children[p].retain(|&c| c != child);
        self.parent[child] = Some(mid);
        self.children[mid].push(child);
        mid
    }

    /// Removes a non-root node, handing its children to its parent.
    pub fn contract(&mut self, v: usize) {
        let p = self.parent[v].expect("cannot contract the root");
        self.detach(v);
        let kids = std::mem::take(&mut self.children[v]);
        for &c in &kids {
            self.parent[c] = Some(p);
        }
        self.children[p].extend(kids);
        self.alive[v] = false;
    }

    pub fn edge_length(&self, v: usize) -> f64 {
        match self.parent[v] {
            Some(p) => self.height[v] - self.height[p],
            None => 0.0,
        }
    }

    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                out.push(v);
            } else {
                stack.push((v, true));
                for &c in self.children[v].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Drops zero-length leaf edges, merges zero-length inner edges and
    /// contracts non-root nodes with a single child, until none remain.
    pub fn cleanup(&mut self, tol: f64) {
        loop {
            let mut changed = false;
            for v in self.post_order() {
                if v == self.root || !self.alive[v] {
                    continue;
                }
                let short = self.edge_length(v) <= tol;
                if short && self.children[v].is_empty() {
                    self.remove_subtree(v);
                    changed = true;
                } else if short && self.parent[v] != Some(self.root) {
                    self.contract(v);
                    changed = true;
                }
            }
            for v in self.post_order() {
                if v != self.root && self.children[v].len() == 1 {
                    self.contract(v);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Scale used for zero-length tolerances.
    pub fn scale(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (v, &h) in self.height.iter().enumerate() {
            if self.alive[v] {
                lo = lo.min(h);
                hi = hi.max(h);
            }
        }
        (hi - lo).abs().max(1.0)
    }

    /// Compacts the live nodes into a [`MergeTree`] with ids `0..n` assigned
    /// in pre-order.
    pub fn finish(&self) -> Result<MergeTree> {
        let mut order = Vec::new();
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            let mut kids = self.children[v].clone();
            kids.sort_by(|&a, &b| self.height[a].total_cmp(&self.height[b]).then(a.cmp(&b)));
            stack.extend(kids.into_iter().rev());
        }
        let mut index = vec![usize::MAX; self.parent.len()];
        for (i, &v) in order.iter().enumerate() {
            index[v] = i;
        }
        let parent: Vec<Option<NodeId>> = order.iter().map(|&v| self.parent[v].map(|p| index[p])).collect();
        let height = order.iter().map(|&v| self.height[v]).collect();
        MergeTree::from_raw(self.kind, (0..order.len() as i64).collect(), height, parent)
    }

    pub fn finish_clean(mut self) -> Result<MergeTree> {
        let tol = 1e-12 * self.scale();
        self.cleanup(tol);
        self.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cleanup_contracts_and_drops() {
        // root 0 -> 1 -> {2, 3 (zero length)}; 2 -> 4
        let t = MergeTree::split(&[None, Some(0), Some(1), Some(1), Some(2)], &[0.0, 1.0, 2.0, 1.0, 3.0]).unwrap();
        let out = Draft::from_tree(&t).finish_clean().unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.is_valid());
        assert_eq!(out.heights(), &[0.0, 3.0]);
    }

    #[test]
    fn split_edge_keeps_structure() {
        let t = MergeTree::split(&[None, Some(0)], &[0.0, 4.0]).unwrap();
        let mut d = Draft::from_tree(&t);
        let mid = d.split_edge(1, 1.0);
        d.add_node(mid, 2.0);
        let out = d.finish_clean().unwrap();
        assert!(out.is_valid());
        assert_eq!(out.len(), 4);
        assert_eq!(out.leaf_count(), 2);
    }
}
