//! Loading `.mini` programs from a directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dslice_core::lang::{parse_program, Program};

#[derive(Debug, Clone)]
pub struct CorpusProgram {
    /// File stem; rows and reports are ordered by it.
    pub id: String,
    pub path: PathBuf,
    pub program: Program,
}

pub fn read_program(path: &Path) -> Result<Program> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_program(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Every `.mini` file directly inside `dir`, sorted by id.
pub fn load_dir(dir: &Path) -> Result<Vec<CorpusProgram>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "mini") {
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            out.push(CorpusProgram { id, program: read_program(&path)?, path });
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
