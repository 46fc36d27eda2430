//! Merge trees of 2D regular-grid scalar fields, and persistence-driven
//! simplification.
//!
//! Grids use 4-connectivity. Equal values are ordered by linear vertex index
//! (the larger index counts as higher), so every field has a strict total
//! order on its vertices.

use crate::bdt::elder_decomposition_unchecked;
use crate::draft::Draft;
use crate::error::{Error, Result};
use crate::tree::{MergeTree, TreeKind};

/// Row-major scalar samples on a `width x height` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if values.len() != width * height {
            return Err(Error::InvalidGrid(format!("{} values for a {width}x{height} grid", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at index {i}")));
        }
        Ok(ScalarGrid { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn negated(&self) -> ScalarGrid {
        ScalarGrid { values: self.values.iter().map(|v| -v).collect(), ..self.clone() }
    }

    /// 4-neighbors of a linear vertex index.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> {
        let (w, h) = (self.width, self.height);
        let (x, y) = (i % w, i / w);
        let mut out = [usize::MAX; 4];
        if x > 0 {
            out[0] = i - 1;
        }
        if x + 1 < w {
            out[1] = i + 1;
        }
        if y > 0 {
            out[2] = i - w;
        }
        if y + 1 < h {
            out[3] = i + w;
        }
        out.into_iter().filter(|&j| j != usize::MAX)
    }

    /// `true` if vertex `a` is above vertex `b` in the tie-broken order.
    pub fn above(&self, a: usize, b: usize) -> bool {
        let (va, vb) = (self.values[a], self.values[b]);
        va > vb || (va == vb && a > b)
    }

    /// Vertices above all their 4-neighbors under the tie-broken order.
    pub fn local_maxima(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.neighbors(i).all(|j| self.above(i, j))).collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Split tree (superlevel-set merge tree) of a grid field.
///
/// Leaves are the local maxima, inner nodes the merge saddles, and the root
/// sits at the global minimum. Should a saddle lie at the minimum value, the
/// root is placed just below it.
pub fn split_tree(grid: &ScalarGrid) -> Result<MergeTree> {
    let n = grid.values.len();
    if n < 2 {
        return Err(Error::InvalidGrid("a merge tree needs at least two vertices".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| grid.values[b].total_cmp(&grid.values[a]).then(b.cmp(&a)));

    let mut uf = UnionFind::new(n);
    let mut processed = vec![false; n];
    // tree node currently at the bottom of each component, keyed by its uf root
    let mut lowest = vec![usize::MAX; n];
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut height: Vec<f64> = Vec::new();
    let new_node = |h: f64, parent: &mut Vec<Option<usize>>, height: &mut Vec<f64>| {
        parent.push(None);
        height.push(h);
        parent.len() - 1
    };

    for &v in &order {
        let mut comps: Vec<usize> = Vec::with_capacity(4);
        for u in grid.neighbors(v) {
            if processed[u] {
                let r = uf.find(u);
                if !comps.contains(&r) {
                    comps.push(r);
                }
            }
        }
        processed[v] = true;
        match comps.len() {
            0 => {
                lowest[v] = new_node(grid.values[v], &mut parent, &mut height);
            }
            1 => {
                uf.parent[v] = comps[0];
            }
            _ => {
                let s = new_node(grid.values[v], &mut parent, &mut height);
                comps.sort_by_key(|&r| lowest[r]);
                for &r in &comps {
                    parent[lowest[r]] = Some(s);
                    uf.parent[r] = v;
                }
                lowest[v] = s;
            }
        }
    }
    let top = lowest[uf.find(order[n - 1])];
    let min_value = grid.values[order[n - 1]];
    let range = grid.values[order[0]] - min_value;
    if !(range > 0.0) {
        return Err(Error::InvalidGrid("field has zero range".into()));
    }
    let root_value = if height[top] > min_value { min_value } else { min_value - 1e-9 * range.max(1.0) };
    let root = new_node(root_value, &mut parent, &mut height);
    parent[top] = Some(root);
    let tree = MergeTree::from_raw(TreeKind::Split, (0..parent.len() as i64).collect(), height, parent)?;
    // plateaus may produce zero-length edges
    Draft::from_tree(&tree).finish_clean()
}

/// Join tree (sublevel-set merge tree): the split tree of the negated field,
/// stored with the join flag so scalars read back as field values.
pub fn join_tree(grid: &ScalarGrid) -> Result<MergeTree> {
    Ok(split_tree(&grid.negated())?.mirrored())
}

/// Removes elder-rule branches of persistence below `threshold_fraction`
/// times the scalar range, least persistent first, recomputing the
/// decomposition after every removal. The main branch always survives.
pub fn simplify(tree: &MergeTree, threshold_fraction: f64) -> Result<MergeTree> {
    let cutoff = threshold_fraction * tree.scalar_range();
    let mut current = tree.clone();
    loop {
        let bd = elder_decomposition_unchecked(&current);
        // the least persistent branch is always a leaf of the BDT
        let victim =
            bd.branches.iter().skip(1).filter(|b| b.children.is_empty() && b.persistence() < cutoff).min_by(|a, b| {
                a.persistence().total_cmp(&b.persistence()).then(current.label(a.leaf()).cmp(&current.label(b.leaf())))
            });
        let Some(victim) = victim else {
            return Ok(current);
        };
        let mut draft = Draft::from_tree(&current);
        draft.remove_subtree(victim.nodes[1]);
        let saddle = victim.nodes[0];
        if saddle != draft.root && draft.children[saddle].len() == 1 {
            draft.contract(saddle);
        }
        current = draft.finish()?;
    }
}
