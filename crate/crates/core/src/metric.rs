//! Choice of distance for the ensemble tasks.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pathmap;
use crate::tree::MergeTree;
use crate::wasserstein;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Path mapping distance.
    Path,
    /// Wasserstein distance between normalized elder-rule BDTs.
    Wasserstein,
}

impl Metric {
    pub fn distance(self, a: &MergeTree, b: &MergeTree) -> Result<f64> {
        match self {
            Metric::Path => pathmap::path_mapping_cost_only(a, b),
            Metric::Wasserstein => wasserstein::tree_distance(a, b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Path => "path",
            Metric::Wasserstein => "wasserstein",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Metric::Path),
            "wasserstein" => Ok(Metric::Wasserstein),
            other => Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}
