//! Program inputs: `inputs.json` files and seeded random inputs.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use dslice_core::interp::Input;
use rand::Rng;

/// Reads a JSON list of variable-to-integer maps.
pub fn read_inputs(path: &Path) -> Result<Vec<Input>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: expected a list of variable -> integer maps", path.display()))
}

/// `n` inputs assigning each of `vars` a value in `lo..=hi`.
pub fn random_inputs(rng: &mut impl Rng, vars: &BTreeSet<String>, n: usize, lo: i64, hi: i64) -> Vec<Input> {
    (0..n).map(|_| vars.iter().map(|v| (v.clone(), rng.random_range(lo..=hi))).collect()).collect()
}
