use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Every report carries what is needed to replay it.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: &'a str,
    pub seed: u64,
    pub tolerance: f64,
    pub result: T,
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| lawprice_core::Error::Parse(format!("serializing report: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes through a temp file in the target directory and renames it into
/// place, so readers never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(lawprice_core::Error::Io)?;
    tmp.write_all(contents.as_bytes()).map_err(lawprice_core::Error::Io)?;
    tmp.as_file().sync_all().map_err(lawprice_core::Error::Io)?;
    tmp.persist(path).map_err(|e| lawprice_core::Error::Io(e.error))?;
    Ok(())
}

/// `report.json` → `report.json.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".{suffix}"));
    path.with_file_name(name)
}
