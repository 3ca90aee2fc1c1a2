//! Atomic output files: every target is checked before anything is written,
//! and each file is written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use divcurl::cvf::FieldFile;
use serde::Serialize;

#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: Option<&Path>, bytes: impl FnOnce() -> Result<Vec<u8>>) -> Result<()> {
        if let Some(path) = path {
            self.files.push((path.to_path_buf(), bytes()?));
        }
        Ok(())
    }

    pub fn add_field(&mut self, path: Option<&Path>, file: &FieldFile) -> Result<()> {
        self.add(path, || Ok(file.to_bytes()?))
    }

    pub fn add_json(&mut self, path: Option<&Path>, value: &impl Serialize) -> Result<()> {
        self.add(path, || {
            let mut text = serde_json::to_vec_pretty(value)?;
            text.push(b'\n');
            Ok(text)
        })
    }

    /// Writes everything, or nothing if any target is unusable.
    pub fn commit(self, force: bool) -> Result<()> {
        for (i, (path, _)) in self.files.iter().enumerate() {
            if self.files[..i].iter().any(|(p, _)| p == path) {
                bail!("{} is named as more than one output", path.display());
            }
            if path.exists() && !force {
                bail!("{} exists; pass --force to overwrite", path.display());
            }
            let dir = parent(path);
            if !dir.is_dir() {
                bail!("directory {} does not exist", dir.display());
            }
        }
        let staged = self
            .files
            .iter()
            .map(|(path, bytes)| {
                let mut tmp = tempfile::NamedTempFile::new_in(parent(path))
                    .with_context(|| format!("creating a temporary file next to {}", path.display()))?;
                tmp.write_all(bytes).with_context(|| format!("writing {}", path.display()))?;
                tmp.as_file().sync_all().with_context(|| format!("syncing {}", path.display()))?;
                Ok((tmp, path))
            })
            .collect::<Result<Vec<_>>>()?;
        for (tmp, path) in staged {
            tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
        }
        Ok(())
    }
}

fn parent(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    FieldFile::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}
