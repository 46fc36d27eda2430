//! File formats: trees, BDTs and mappings as JSON, grids as text, Graphviz
//! export, CSV tables and ensemble manifests.
//!
//! Tree JSON:
//!
//! ```json
//! {"kind": "split", "nodes": [{"id": 0, "scalar": 0.0, "parent": null},
//!                             {"id": 1, "scalar": 2.5, "parent": 0}]}
//! ```
//!
//! `kind` defaults to `split`; `parent` is required (`null` for the root).
//! Scalars are written in the shortest form that reads back to the same
//! `f64`, so save followed by load is the identity.
//!
//! Grid text: a `width height` header line followed by `height` rows of
//! `width` whitespace-separated values. Lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bdt::{Bdt, BirthDeath, BranchDecomposition};
use crate::ensemble::FrameError;
use crate::error::{Error, Result};
use crate::extract::ScalarGrid;
use crate::pathmap::{PathMapping, PathPair};
use crate::tree::{MergeTree, NodeSpec, TreeKind};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::File { path: path.display().to_string(), source })
}

fn parse_err(context: &str, msg: impl std::fmt::Display) -> Error {
    if context.is_empty() {
        Error::Parse(msg.to_string())
    } else {
        Error::Parse(format!("{context}: {msg}"))
    }
}

pub fn tree_to_json(tree: &MergeTree) -> String {
    let nodes: Vec<Value> = tree
        .nodes()
        .map(|v| {
            json!({
                "id": tree.label(v),
                "scalar": tree.scalar(v),
                "parent": tree.parent(v).map(|p| tree.label(p)),
            })
        })
        .collect();
    let doc = json!({ "kind": tree.kind(), "nodes": nodes });
    serde_json::to_string_pretty(&doc).expect("tree serializes") + "\n"
}

/// Parses a tree document. Structural errors and merge tree violations are
/// both reported; the returned tree is valid.
pub fn tree_from_json(text: &str) -> Result<MergeTree> {
    tree_from_json_in(text, "")
}

fn tree_from_json_in(text: &str, context: &str) -> Result<MergeTree> {
    let doc: Value = serde_json::from_str(text).map_err(|e| parse_err(context, e))?;
    let obj = doc.as_object().ok_or_else(|| parse_err(context, "expected a JSON object"))?;
    let kind = match obj.get("kind") {
        None => TreeKind::Split,
        Some(k) => serde_json::from_value(k.clone())
            .map_err(|_| parse_err(context, format!("field \"kind\": expected \"split\" or \"join\", got {k}")))?,
    };
    let nodes = obj
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(context, "missing array field \"nodes\""))?;
    let mut specs = Vec::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        let id = n.get("id").and_then(Value::as_i64);
        let name = match id {
            Some(id) => format!("node {id} (entry {i})"),
            None => format!("node entry {i}"),
        };
        let field_err = |msg: &str| parse_err(context, format!("{name}: {msg}"));
        let id = id.ok_or_else(|| field_err("missing or non-integer field \"id\""))?;
        let scalar = n
            .get("scalar")
            .and_then(Value::as_f64)
            .ok_or_else(|| field_err("missing or non-numeric field \"scalar\""))?;
        let parent = match n.get("parent") {
            None => return Err(field_err("missing field \"parent\" (use null for the root)")),
            Some(Value::Null) => None,
            Some(p) => Some(p.as_i64().ok_or_else(|| field_err("field \"parent\" must be an integer or null"))?),
        };
        specs.push(NodeSpec { id, scalar, parent });
    }
    let tree = MergeTree::new(kind, specs).map_err(|e| parse_err(context, e))?;
    tree.ensure_valid().map_err(|e| parse_err(context, e))?;
    Ok(tree)
}

pub fn load_tree(path: impl AsRef<Path>) -> Result<MergeTree> {
    let path = path.as_ref();
    let text = read(path)?;
    tree_from_json_in(&text, &path.display().to_string())
}

pub fn save_tree(tree: &MergeTree, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &tree_to_json(tree))
}

#[derive(Serialize, Deserialize)]
struct BdtDoc {
    branches: Vec<BdtRecord>,
}

#[derive(Serialize, Deserialize)]
struct BdtRecord {
    birth: f64,
    death: f64,
    parent: Option<usize>,
}

pub fn bdt_to_json(bdt: &Bdt) -> String {
    let doc = BdtDoc {
        branches: bdt
            .records()
            .into_iter()
            .map(|(p, parent)| BdtRecord { birth: p.birth, death: p.death, parent })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("bdt serializes") + "\n"
}

pub fn bdt_from_json(text: &str) -> Result<Bdt> {
    let doc: BdtDoc = serde_json::from_str(text).map_err(|e| parse_err("", e))?;
    let records: Vec<_> = doc.branches.into_iter().map(|r| (BirthDeath::new(r.birth, r.death), r.parent)).collect();
    Bdt::new(&records)
}

/// Mapping as pairs of node-id paths, each listed from top to bottom.
pub fn mapping_to_json(mapping: &PathMapping, t1: &MergeTree, t2: &MergeTree, cost: Option<f64>) -> String {
    let labels = |t: &MergeTree, p: &[usize]| p.iter().map(|&v| t.label(v)).collect::<Vec<_>>();
    let pairs: Vec<Value> =
        mapping.pairs.iter().map(|p| json!({ "first": labels(t1, &p.p1), "second": labels(t2, &p.p2) })).collect();
    let mut doc = json!({ "pairs": pairs });
    if let Some(c) = cost {
        doc["cost"] = json!(c);
    }
    serde_json::to_string_pretty(&doc).expect("mapping serializes") + "\n"
}

pub fn mapping_from_json(text: &str, t1: &MergeTree, t2: &MergeTree) -> Result<PathMapping> {
    #[derive(Deserialize)]
    struct Doc {
        pairs: Vec<Pair>,
    }
    #[derive(Deserialize)]
    struct Pair {
        first: Vec<i64>,
        second: Vec<i64>,
    }
    let doc: Doc = serde_json::from_str(text).map_err(|e| parse_err("", e))?;
    let resolve = |t: &MergeTree, ids: &[i64]| -> Result<Vec<usize>> {
        ids.iter().map(|&id| t.node_of_label(id).ok_or(Error::UnknownNode(id))).collect()
    };
    let pairs = doc
        .pairs
        .iter()
        .map(|p| Ok(PathPair { p1: resolve(t1, &p.first)?, p2: resolve(t2, &p.second)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathMapping::new(pairs))
}

pub fn grid_to_text(grid: &ScalarGrid) -> String {
    let mut out = format!("{} {}\n", grid.width(), grid.height());
    for row in grid.values().chunks(grid.width()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn grid_from_text(text: &str) -> Result<ScalarGrid> {
    grid_from_text_in(text, "")
}

fn grid_from_text_in(text: &str, context: &str) -> Result<ScalarGrid> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(context, "empty grid file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| s.parse::<usize>().ok().filter(|&d| d > 0);
    let (width, height) = match dims.as_slice() {
        [w, h] => match (parse_dim(w), parse_dim(h)) {
            (Some(w), Some(h)) => (w, h),
            _ => return Err(parse_err(context, format!("line {hline}: header must be two positive integers"))),
        },
        _ => return Err(parse_err(context, format!("line {hline}: expected header \"width height\""))),
    };
    let mut values = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (n, line) in lines {
        rows += 1;
        if rows > height {
            return Err(parse_err(context, format!("line {n}: more than the {height} rows declared in the header")));
        }
        let before = values.len();
        for (col, tok) in line.split_whitespace().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(context, format!("line {n}, column {}: bad number {tok:?}", col + 1)))?;
            values.push(v);
        }
        let got = values.len() - before;
        if got != width {
            return Err(parse_err(context, format!("line {n}: {got} values, header declares width {width}")));
        }
    }
    if rows != height {
        return Err(parse_err(context, format!("{rows} rows, header declares height {height}")));
    }
    ScalarGrid::new(width, height, values).map_err(|e| parse_err(context, e))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<ScalarGrid> {
    let path = path.as_ref();
    let text = read(path)?;
    grid_from_text_in(&text, &path.display().to_string())
}

pub fn save_grid(grid: &ScalarGrid, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &grid_to_text(grid))
}

/// Optional coloring for [`export_dot`].
#[derive(Clone, Copy, Debug)]
pub enum Highlight<'a> {
    None,
    /// Color the edges of each mapped path; `first` selects which side of
    /// the mapping the exported tree is.
    Mapping {
        mapping: &'a PathMapping,
        first: bool,
    },
    Branches(&'a BranchDecomposition),
}

const UNMAPPED: &str = "gray";

/// Distinct Graphviz HSV color for index `i` (golden-angle hue steps).
fn color(i: usize) -> String {
    format!("{:.3} 0.75 0.85", (i as f64 * 0.618_033_988_749_895).fract())
}

/// Graphviz digraph with one node per tree node, labeled by id and scalar,
/// and one edge per parent link (drawn from parent to child).
pub fn export_dot(tree: &MergeTree, highlight: Highlight<'_>) -> String {
    let mut colors: Vec<Option<String>> = vec![None; tree.len()];
    match highlight {
        Highlight::None => {}
        Highlight::Mapping { mapping, first } => {
            colors = vec![Some(UNMAPPED.to_string()); tree.len()];
            for (i, pair) in mapping.pairs.iter().enumerate() {
                let path = if first { &pair.p1 } else { &pair.p2 };
                for &v in &path[1..] {
                    colors[v] = Some(color(i));
                }
            }
        }
        Highlight::Branches(bd) => {
            for (i, edge) in bd.branch_of_edge(tree).into_iter().enumerate() {
                colors[i] = edge.map(color);
            }
        }
    }
    let mut out = String::from("digraph mergetree {\n  rankdir=BT;\n  node [shape=circle, fontsize=10];\n");
    for v in tree.nodes() {
        let _ = writeln!(out, "  n{} [label=\"{}\\n{}\"];", v, tree.label(v), tree.scalar(v));
    }
    for v in tree.nodes() {
        if let Some(p) = tree.parent(v) {
            match &colors[v] {
                Some(c) => {
                    let _ = writeln!(out, "  n{p} -> n{v} [color=\"{c}\", penwidth=2];");
                }
                None => {
                    let _ = writeln!(out, "  n{p} -> n{v};");
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Fixed precision for human-facing tables.
pub fn fmt9(v: f64) -> String {
    format!("{v:.9}")
}

/// Square matrix with a header row of member indices.
pub fn matrix_csv(m: &[Vec<f64>]) -> String {
    let mut out = String::from("member");
    for j in 0..m.len() {
        let _ = write!(out, ",{j}");
    }
    out.push('\n');
    for (i, row) in m.iter().enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            out.push(',');
            out.push_str(&fmt9(*v));
        }
        out.push('\n');
    }
    out
}

pub fn energy_csv(trace: &[f64]) -> String {
    let mut out = String::from("iteration,energy\n");
    for (i, e) in trace.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt9(*e));
    }
    out
}

pub fn assignments_csv(assignments: &[usize]) -> String {
    let mut out = String::from("member,cluster\n");
    for (i, c) in assignments.iter().enumerate() {
        let _ = writeln!(out, "{i},{c}");
    }
    out
}

pub fn errors_csv(errors: &[FrameError]) -> String {
    let mut out = String::from("index,keyframe,path,wasserstein\n");
    for e in errors {
        let _ = writeln!(out, "{},{},{},{}", e.index, u8::from(e.keyframe), fmt9(e.path), fmt9(e.wasserstein));
    }
    out
}

/// Reads labels from a CSV with either one label per line or
/// `member,label` rows; a non-numeric first line is taken as a header.
pub fn labels_from_csv(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap().trim();
        match field.parse::<usize>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => return Err(Error::Parse(format!("line {}: bad label {field:?}", i + 1))),
        }
    }
    Ok(out)
}

/// List of member files, with optional ground truth and time indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub members: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<usize>>,
}

impl Manifest {
    pub fn check(&self) -> Result<()> {
        for (name, v) in [("labels", &self.labels), ("times", &self.times)] {
            if let Some(v) = v {
                if v.len() != self.members.len() {
                    return Err(Error::Parse(format!(
                        "manifest has {} {name} for {} members",
                        v.len(),
                        self.members.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    /// Loads a manifest; member paths are resolved against its directory and
    /// must exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = read(path)?;
        let mut m: Manifest = serde_json::from_str(&text).map_err(|e| parse_err(&path.display().to_string(), e))?;
        m.check()?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for member in &mut m.members {
            if member.is_relative() {
                *member = dir.join(&*member);
            }
            if !member.exists() {
                return Err(Error::Parse(format!("manifest member {} does not exist", member.display())));
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.check()?;
        write(path.as_ref(), &self.to_json())
    }
}
