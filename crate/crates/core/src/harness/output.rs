use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::ErrorTable;
use crate::error::{Error, Result};

/// Git-style content hash: sha256 over `"blob <len>\0" + content`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn tables_to_csv<'a>(tables: impl IntoIterator<Item = &'a ErrorTable>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut any = false;
    for table in tables {
        for row in &table.rows {
            w.serialize(row)?;
            any = true;
        }
    }
    if !any {
        w.write_record(["h", "p", "n_paths", "err", "stderr", "exploded_frac"])?;
    }
    w.into_inner()
        .map_err(|e| Error::io("csv buffer", e.into_error()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Files written so far; removed again unless [`OutputSet::keep`] is called.
#[derive(Debug)]
pub(crate) struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
    keep: bool,
}

impl OutputSet {
    pub(crate) fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            keep: false,
        })
    }

    pub(crate) fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub(crate) fn keep(mut self) {
        self.keep = true;
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.keep {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}
