//! Wasserstein distance between branch decomposition trees, local
//! normalization, barycenters and geodesics in the normalized space.
//!
//! Assignments are rooted partial isomorphisms: the two main branches are
//! always matched, a branch can only be matched if its parent branches are
//! matched to each other, and every unmatched branch is sent to its
//! diagonal projection.

use crate::assign;
use crate::bdt::{Bdt, BdtNode, BirthDeath};
use crate::error::{Error, Result};
use crate::tree::{MergeTree, TreeKind};

/// Closest point on the diagonal.
pub fn diagonal_projection(b: BirthDeath) -> BirthDeath {
    let m = 0.5 * (b.birth + b.death);
    BirthDeath::new(m, m)
}

/// Euclidean distance in the birth/death plane, zero between two diagonal
/// points.
pub fn ground_distance(a: BirthDeath, b: BirthDeath) -> f64 {
    if a.is_diagonal() && b.is_diagonal() {
        return 0.0;
    }
    (a.birth - b.birth).hypot(a.death - b.death)
}

fn sq(a: BirthDeath, b: BirthDeath) -> f64 {
    let d = ground_distance(a, b);
    d * d
}

/// Squared cost of sending a branch to the diagonal.
fn destroy_cost(b: BirthDeath) -> f64 {
    sq(b, diagonal_projection(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WassersteinResult {
    pub distance: f64,
    /// Matched `(branch of first, branch of second)` pairs, roots first.
    pub pairs: Vec<(usize, usize)>,
}

/// Per-node squared cost of destroying the whole subtree.
fn destroy_subtree(b: &Bdt) -> Vec<f64> {
    let mut out = vec![0.0; b.len()];
    // parents precede children, so a reverse sweep sees children first
    for i in (0..b.len()).rev() {
        out[i] = destroy_cost(b.point(i)) + b.children(i).iter().map(|&c| out[c]).sum::<f64>();
    }
    out
}

/// Constrained Wasserstein distance with a witness assignment.
pub fn wasserstein_distance(b1: &Bdt, b2: &Bdt) -> WassersteinResult {
    let (n1, n2) = (b1.len(), b2.len());
    let del1 = destroy_subtree(b1);
    let del2 = destroy_subtree(b2);
    let mut cost = vec![0.0; n1 * n2];
    let mut choice: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n1 * n2];
    for i in (0..n1).rev() {
        for j in (0..n2).rev() {
            let k1 = b1.children(i);
            let k2 = b2.children(j);
            let pair_cost: Vec<Vec<f64>> =
                k1.iter().map(|&c1| k2.iter().map(|&c2| cost[c1 * n2 + c2]).collect()).collect();
            let row: Vec<f64> = k1.iter().map(|&c| del1[c]).collect();
            let col: Vec<f64> = k2.iter().map(|&c| del2[c]).collect();
            let a = assign::solve(&pair_cost, &row, &col);
            cost[i * n2 + j] = sq(b1.point(i), b2.point(j)) + a.cost;
            choice[i * n2 + j] = a.pairs.iter().map(|&(r, c)| (k1[r], k2[c])).collect();
        }
    }
    let mut pairs = Vec::new();
    let mut stack = vec![(0, 0)];
    while let Some((i, j)) = stack.pop() {
        pairs.push((i, j));
        for &p in choice[i * n2 + j].iter().rev() {
            stack.push(p);
        }
    }
    WassersteinResult { distance: cost[0].max(0.0).sqrt(), pairs }
}

/// Squared distance from a fixed assignment, without optimizing.
pub fn assignment_cost(b1: &Bdt, b2: &Bdt, pairs: &[(usize, usize)]) -> f64 {
    let mut matched1 = vec![false; b1.len()];
    let mut matched2 = vec![false; b2.len()];
    let mut total = 0.0;
    for &(i, j) in pairs {
        matched1[i] = true;
        matched2[j] = true;
        total += sq(b1.point(i), b2.point(j));
    }
    for i in 0..b1.len() {
        if !matched1[i] {
            total += destroy_cost(b1.point(i));
        }
    }
    for j in 0..b2.len() {
        if !matched2[j] {
            total += destroy_cost(b2.point(j));
        }
    }
    total
}

/// A BDT whose non-root branches are expressed relative to their parent
/// branch range. The root branch keeps absolute coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedBdt {
    pub bdt: Bdt,
}

pub fn normalize(b: &Bdt) -> Result<NormalizedBdt> {
    let mut nodes = b.nodes().to_vec();
    for (i, node) in b.nodes().iter().enumerate() {
        if let Some(p) = node.parent {
            let q = b.point(p);
            let range = q.death - q.birth;
            if !(range > 0.0) {
                return Err(Error::DegenerateParent(p));
            }
            nodes[i].point =
                BirthDeath::new((node.point.birth - q.birth) / range, (node.point.death - q.birth) / range);
        }
    }
    Ok(NormalizedBdt { bdt: Bdt { nodes } })
}

pub fn denormalize(n: &NormalizedBdt) -> Bdt {
    let mut nodes: Vec<BdtNode> = n.bdt.nodes().to_vec();
    for i in 0..nodes.len() {
        if let Some(p) = nodes[i].parent {
            let q = nodes[p].point;
            let range = q.death - q.birth;
            let r = nodes[i].point;
            nodes[i].point = BirthDeath::new(q.birth + r.birth * range, q.birth + r.death * range);
        }
    }
    Bdt { nodes }
}

/// Normalized elder-rule BDT of a merge tree.
pub fn normalized_bdt(tree: &MergeTree) -> Result<NormalizedBdt> {
    normalize(&Bdt::from_tree(tree)?)
}

/// Wasserstein distance between two merge trees through their normalized
/// elder-rule BDTs.
pub fn tree_distance(t1: &MergeTree, t2: &MergeTree) -> Result<f64> {
    Ok(wasserstein_distance(&normalized_bdt(t1)?.bdt, &normalized_bdt(t2)?.bdt).distance)
}

/// Merge tree of a normalized BDT.
pub fn to_tree(n: &NormalizedBdt, kind: TreeKind) -> Result<MergeTree> {
    denormalize(n).to_tree(kind)
}

/// Options shared by the barycenter iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycenterOptions {
    pub init: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        BarycenterOptions { init: 0, max_iter: 100, rel_tol: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WassersteinBarycenter {
    pub bdt: NormalizedBdt,
    /// Sum of squared distances, one entry per candidate (initial included).
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
}

/// Barycenter of normalized BDTs by alternating assignments and updates,
/// starting from member `options.init`.
pub fn wasserstein_barycenter(members: &[NormalizedBdt], options: &BarycenterOptions) -> Result<WassersteinBarycenter> {
    let init = members.get(options.init).ok_or(if members.is_empty() {
        Error::EmptyInput
    } else {
        Error::InvalidArgument(format!("init index {} out of range", options.init))
    })?;
    wasserstein_barycenter_from(members, init.clone(), options)
}

/// As [`wasserstein_barycenter`], from an explicit starting candidate.
pub fn wasserstein_barycenter_from(
    members: &[NormalizedBdt],
    init: NormalizedBdt,
    options: &BarycenterOptions,
) -> Result<WassersteinBarycenter> {
    if members.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut candidate = init.bdt;
    let evaluate = |c: &Bdt| -> (f64, Vec<Vec<(usize, usize)>>) {
        let results: Vec<WassersteinResult> = members.iter().map(|m| wasserstein_distance(c, &m.bdt)).collect();
        let energy = results.iter().map(|r| r.distance * r.distance).sum();
        (energy, results.into_iter().map(|r| r.pairs).collect())
    };
    let (mut energy, mut assignments) = evaluate(&candidate);
    let mut trace = vec![energy];
    let mut iterations = 0;
    while iterations < options.max_iter {
        candidate = update(&candidate, members, &assignments);
        let (e, a) = evaluate(&candidate);
        iterations += 1;
        trace.push(e);
        let converged = energy == 0.0 || (energy - e).abs() <= options.rel_tol * energy;
        energy = e;
        assignments = a;
        if converged {
            break;
        }
    }
    Ok(WassersteinBarycenter { bdt: NormalizedBdt { bdt: candidate }, energy_trace: trace, iterations })
}

/// One update: every candidate branch moves to the mean of its matched
/// member branches (diagonal projections where unmatched); member branches
/// hanging unmatched below matched ones are inserted, pulled towards the
/// diagonal by `(k - 1) / k`; diagonal branches are dropped.
fn update(candidate: &Bdt, members: &[NormalizedBdt], assignments: &[Vec<(usize, usize)>]) -> Bdt {
    let k = members.len() as f64;
    let n = candidate.len();
    let mut sums: Vec<(f64, f64)> = vec![(0.0, 0.0); n];
    let mut records: Vec<(BirthDeath, Option<usize>)> = Vec::with_capacity(n);
    let mut inserted: Vec<(BirthDeath, Option<usize>)> = Vec::new();
    for (m, pairs) in members.iter().zip(assignments) {
        let mut of_member = vec![None; m.bdt.len()];
        let mut matched = vec![false; n];
        for &(c, b) in pairs {
            of_member[b] = Some(c);
            matched[c] = true;
            let p = m.bdt.point(b);
            sums[c].0 += p.birth;
            sums[c].1 += p.death;
        }
        for c in 0..n {
            if !matched[c] {
                let d = diagonal_projection(candidate.point(c));
                sums[c].0 += d.birth;
                sums[c].1 += d.death;
            }
        }
        // unmatched member branches: parents precede children, so the parent's
        // new index is known when a child is visited
        let mut new_index: Vec<Option<usize>> = vec![None; m.bdt.len()];
        for b in 0..m.bdt.len() {
            if of_member[b].is_some() {
                continue;
            }
            let Some(parent) = m.bdt.parent(b) else {
                continue;
            };
            // inserted branches are numbered after the `n` candidate branches
            let anchor = match (of_member[parent], new_index[parent]) {
                (Some(c), _) => c,
                (None, Some(i)) => n + i,
                (None, None) => continue,
            };
            let p = m.bdt.point(b);
            let d = diagonal_projection(p);
            let point = BirthDeath::new((p.birth + (k - 1.0) * d.birth) / k, (p.death + (k - 1.0) * d.death) / k);
            new_index[b] = Some(inserted.len());
            inserted.push((point, Some(anchor)));
        }
    }
    for (c, s) in sums.iter().enumerate() {
        records.push((BirthDeath::new(s.0 / k, s.1 / k), candidate.parent(c)));
    }
    records.extend(inserted);
    prune_diagonal(&records)
}

/// Drops non-root branches on the diagonal together with their subtrees.
fn prune_diagonal(records: &[(BirthDeath, Option<usize>)]) -> Bdt {
    let n = records.len();
    let mut keep = vec![true; n];
    // parents always precede their children in `records`
    for i in 0..n {
        if let Some(p) = records[i].1 {
            let pt = records[i].0;
            if !keep[p] || pt.death - pt.birth <= 1e-12 {
                keep[i] = false;
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut out = Vec::new();
    for i in 0..n {
        if keep[i] {
            index[i] = out.len();
            out.push((records[i].0, records[i].1.map(|p| index[p])));
        }
    }
    Bdt::new(&out).expect("pruned records form a rooted tree")
}

/// Point on the Wasserstein geodesic between two normalized BDTs: matched
/// branches move linearly, unmatched ones shrink to or grow from the
/// diagonal.
pub fn wasserstein_interpolate(a: &NormalizedBdt, b: &NormalizedBdt, alpha: f64) -> Result<NormalizedBdt> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let w = wasserstein_distance(&a.bdt, &b.bdt);
    let lerp = |p: BirthDeath, q: BirthDeath| {
        BirthDeath::new((1.0 - alpha) * p.birth + alpha * q.birth, (1.0 - alpha) * p.death + alpha * q.death)
    };
    let mut of_a = vec![None; a.bdt.len()];
    let mut of_b = vec![None; b.bdt.len()];
    let mut records: Vec<(BirthDeath, Option<usize>)> = Vec::new();
    for &(i, j) in &w.pairs {
        of_a[i] = Some(records.len());
        of_b[j] = Some(records.len());
        records.push((lerp(a.bdt.point(i), b.bdt.point(j)), None));
    }
    for &(i, j) in &w.pairs {
        let idx = of_a[i].unwrap();
        records[idx].1 = a.bdt.parent(i).map(|p| of_a[p].unwrap());
        debug_assert_eq!(records[idx].1, b.bdt.parent(j).map(|p| of_b[p].unwrap()));
    }
    for i in 0..a.bdt.len() {
        if of_a[i].is_none() {
            let p = a.bdt.point(i);
            of_a[i] = Some(records.len());
            records.push((lerp(p, diagonal_projection(p)), a.bdt.parent(i).map(|q| of_a[q].unwrap())));
        }
    }
    for j in 0..b.bdt.len() {
        if of_b[j].is_none() {
            let p = b.bdt.point(j);
            of_b[j] = Some(records.len());
            records.push((lerp(diagonal_projection(p), p), b.bdt.parent(j).map(|q| of_b[q].unwrap())));
        }
    }
    Ok(NormalizedBdt { bdt: prune_diagonal(&records) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bdt(records: &[((f64, f64), Option<usize>)]) -> Bdt {
        let r: Vec<(BirthDeath, Option<usize>)> =
            records.iter().map(|&((b, d), p)| (BirthDeath::new(b, d), p)).collect();
        Bdt::new(&r).unwrap()
    }

    #[test]
    fn projections_and_ground_distance() {
        assert_eq!(diagonal_projection(BirthDeath::new(0.0, 4.0)), BirthDeath::new(2.0, 2.0));
        assert_eq!(diagonal_projection(BirthDeath::new(1.0, 1.0)), BirthDeath::new(1.0, 1.0));
        assert_eq!(diagonal_projection(BirthDeath::new(2.0, 6.0)), BirthDeath::new(4.0, 4.0));
        assert_eq!(ground_distance(BirthDeath::new(0.0, 0.0), BirthDeath::new(3.0, 4.0)), 5.0);
        assert_eq!(ground_distance(BirthDeath::new(1.0, 1.0), BirthDeath::new(7.0, 7.0)), 0.0);
    }

    #[test]
    fn single_branches() {
        let a = bdt(&[((0.0, 4.0), None)]);
        let b = bdt(&[((0.0, 2.0), None)]);
        let w = wasserstein_distance(&a, &b);
        assert!((w.distance - 2.0).abs() < 1e-12);
        assert_eq!(w.pairs, vec![(0, 0)]);
        assert_eq!(wasserstein_distance(&a, &a).distance, 0.0);
    }

    #[test]
    fn unmatched_children_go_to_diagonal() {
        let a = bdt(&[((0.0, 10.0), None), ((2.0, 4.0), Some(0))]);
        let b = bdt(&[((0.0, 10.0), None)]);
        let w = wasserstein_distance(&a, &b);
        // (2,4) to (3,3): squared distance 2
        assert!((w.distance - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn normalization_roundtrip() {
        let a = bdt(&[((0.0, 4.0), None), ((1.0, 3.0), Some(0)), ((1.5, 2.5), Some(1))]);
        let n = normalize(&a).unwrap();
        assert_eq!(n.bdt.point(1), BirthDeath::new(0.25, 0.75));
        assert_eq!(n.bdt.point(2), BirthDeath::new(0.25, 0.75));
        let back = denormalize(&n);
        for i in 0..3 {
            assert!((back.point(i).birth - a.point(i).birth).abs() < 1e-12);
            assert!((back.point(i).death - a.point(i).death).abs() < 1e-12);
        }
        let degenerate = bdt(&[((0.0, 4.0), None), ((1.0, 1.0), Some(0)), ((1.0, 1.0), Some(1))]);
        assert!(matches!(normalize(&degenerate), Err(Error::DegenerateParent(1))));
    }

    #[test]
    fn barycenter_of_two_single_branches() {
        let a = normalize(&bdt(&[((0.0, 2.0), None)])).unwrap();
        let b = normalize(&bdt(&[((0.0, 4.0), None)])).unwrap();
        let r = wasserstein_barycenter(&[a.clone(), b], &BarycenterOptions::default()).unwrap();
        assert_eq!(r.bdt.bdt.point(0), BirthDeath::new(0.0, 3.0));
        let single = wasserstein_barycenter(&[a.clone()], &BarycenterOptions::default()).unwrap();
        assert_eq!(single.bdt, a);
        assert_eq!(*single.energy_trace.last().unwrap(), 0.0);
    }

    #[test]
    fn empty_barycenter_is_an_error() {
        assert!(matches!(wasserstein_barycenter(&[], &BarycenterOptions::default()), Err(Error::EmptyInput)));
    }

    #[test]
    fn interpolation_endpoints() {
        let a = normalize(&bdt(&[((0.0, 10.0), None), ((2.0, 6.0), Some(0))])).unwrap();
        let b = normalize(&bdt(&[((0.0, 8.0), None), ((3.0, 7.0), Some(0)), ((4.0, 5.0), Some(0))])).unwrap();
        let start = wasserstein_interpolate(&a, &b, 0.0).unwrap();
        let end = wasserstein_interpolate(&a, &b, 1.0).unwrap();
        assert!(wasserstein_distance(&start.bdt, &a.bdt).distance < 1e-12);
        assert!(wasserstein_distance(&end.bdt, &b.bdt).distance < 1e-12);
        let mid = wasserstein_interpolate(&a, &b, 0.5).unwrap();
        let d = wasserstein_distance(&a.bdt, &b.bdt).distance;
        assert!((wasserstein_distance(&a.bdt, &mid.bdt).distance - 0.5 * d).abs() < 1e-9);
        assert!(wasserstein_interpolate(&a, &b, 1.5).is_err());
    }
}
