use std::fs::{self, File};
use std::hash::Hasher;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use log::warn;
use spectra_core::graph::{load_edge_list, SignedDiGraph};

use crate::error::CliError;

pub fn load_graph(path: &Path, directed: bool) -> Result<SignedDiGraph, CliError> {
    let file = File::open(path).map_err(|e| CliError::read(path, e))?;
    Ok(load_edge_list(BufReader::new(file), directed)?.graph)
}

/// Drops isolated nodes when asked, reporting how many went.
pub fn maybe_drop_isolated(g: SignedDiGraph, drop: bool) -> SignedDiGraph {
    if !drop {
        return g;
    }
    let (kept, index) = g.drop_isolated();
    let dropped = g.n_nodes() - index.len();
    if dropped > 0 {
        warn!("dropped {dropped} isolated nodes");
    }
    kept
}

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h = FnvHasher::default();
    h.write(bytes);
    format!("{:016x}", h.finish())
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::read(path, e))?;
    Ok(fnv1a_hex(&bytes))
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::write(path, e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))
}

/// `out.csv` with suffix `labels.csv` becomes `out.labels.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
