//! Merge trees of scalar fields and the distances, geodesics and barycenters
//! built on them.
//!
//! Trees are stored in split orientation: every child sits strictly above its
//! parent. Join trees keep a kind flag and negated heights, so
//! [`MergeTree::scalar`] always reports field values.

pub mod assign;
pub mod bdt;
pub(crate) mod draft;
pub mod ensemble;
pub mod error;
pub mod extract;
pub mod interp;
pub mod io;
pub mod metric;
pub mod pathmap;
pub mod synth;
pub mod tree;
pub mod wasserstein;

pub use bdt::{branch_decomposition_elder, Bdt, BirthDeath, BranchDecomposition};
pub use error::{Error, Result};
pub use extract::{join_tree, simplify, split_tree, ScalarGrid};
pub use interp::{geodesic, pm_barycenter, BarycenterResult, Geodesic, PmOptions, Variant};
pub use metric::Metric;
pub use pathmap::{path_mapping_cost, path_mapping_distance, DistanceResult, PathMapping, PathPair};
pub use tree::{MergeTree, NodeId, NodeSpec, TreeKind};
