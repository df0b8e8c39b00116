//! Stage manifests: what produced a stage directory and the hash of every file in it.
//!
//! A stage's fingerprint hashes its id, the config sections it reads and the
//! fingerprints of its upstream stages. A downstream stage accepts an
//! upstream directory only if the manifest's fingerprint matches the one the
//! current config implies and every listed file still has its recorded hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FILE_NAME: &str = "manifest.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(Error::io(path))?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub id: String,
    pub fingerprint: String,
    pub upstream: BTreeMap<String, String>,
    /// Relative path → SHA-256.
    pub files: BTreeMap<String, String>,
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for e in fs::read_dir(dir).map_err(Error::io(dir))? {
        let p = e.map_err(Error::io(dir))?.path();
        if p.is_dir() {
            walk(root, &p, out)?;
        } else if p.strip_prefix(root).ok() != Some(Path::new(FILE_NAME)) {
            out.push(p);
        }
    }
    Ok(())
}

impl Manifest {
    /// Hashes every file currently in `dir`.
    pub fn build(dir: &Path, id: &str, fingerprint: &str, upstream: BTreeMap<String, String>) -> Result<Manifest> {
        let mut paths = Vec::new();
        walk(dir, dir, &mut paths)?;
        let mut files = BTreeMap::new();
        for p in paths {
            let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
            files.insert(rel, file_hash(&p)?);
        }
        Ok(Manifest { id: id.into(), fingerprint: fingerprint.into(), upstream, files })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        fs::write(&path, toml::to_string(self).expect("manifest serialises")).map_err(Error::io(path))
    }

    pub fn read(dir: &Path) -> Result<Option<Manifest>> {
        let path = dir.join(FILE_NAME);
        match fs::read_to_string(&path) {
            Ok(text) => toml::from_str(&text).map(Some).map_err(|e| Error::Upstream(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path)(e)),
        }
    }

    /// Checks the directory still holds exactly what the manifest recorded.
    pub fn verify_files(&self, dir: &Path) -> Result<()> {
        for (rel, hash) in &self.files {
            let p = dir.join(rel);
            let actual = fs::read(&p).map_err(|e| Error::Upstream(format!("{}: {e}", p.display())))?;
            if sha256_hex(&actual) != *hash {
                return Err(Error::Upstream(format!("{} changed since stage {} wrote it", p.display(), self.id)));
            }
        }
        Ok(())
    }
}
