//! Staged artifact writing and the content-hashed manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";
const STAGING_NAME: &str = ".staging";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub scenario: String,
    pub method: String,
    pub seed: u64,
    /// SHA-256 of the stored scenario document.
    pub config_hash: String,
    pub artifacts: Vec<ArtifactEntry>,
}

fn failed(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

/// Collects artifacts in a staging directory and moves them into place only
/// once the whole run has succeeded.
pub struct ArtifactWriter {
    out: PathBuf,
    staging: PathBuf,
    entries: Vec<ArtifactEntry>,
    committed: bool,
}

impl ArtifactWriter {
    pub fn create(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| failed(out, e))?;
        let staging = out.join(STAGING_NAME);
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| failed(&staging, e))?;
        }
        fs::create_dir(&staging).map_err(|e| failed(&staging, e))?;
        Ok(Self {
            out: out.to_path_buf(),
            staging,
            entries: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if self.entries.iter().any(|e| e.path == name) {
            return Err(CliError::Failed(format!("artifact {name} written twice")));
        }
        let path = self.staging.join(name);
        let mut f = fs::File::create(&path).map_err(|e| failed(&path, e))?;
        f.write_all(bytes).map_err(|e| failed(&path, e))?;
        self.entries.push(ArtifactEntry {
            path: name.to_owned(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Serializes through `f` into memory, then writes.
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> fluxid_core::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::Failed(format!("{name}: {e}")))?;
        self.write(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    /// Moves every artifact into the output directory and writes the
    /// manifest last.
    pub fn commit(mut self, mut manifest: Manifest) -> Result<Manifest, CliError> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        for e in &self.entries {
            let from = self.staging.join(&e.path);
            let to = self.out.join(&e.path);
            fs::rename(&from, &to).map_err(|err| failed(&to, err))?;
        }
        manifest.artifacts = self.entries.clone();
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Failed(e.to_string()))?;
        text.push('\n');
        let path = self.out.join(MANIFEST_NAME);
        fs::write(&path, text).map_err(|e| failed(&path, e))?;
        fs::remove_dir_all(&self.staging).map_err(|e| failed(&self.staging, e))?;
        self.committed = true;
        Ok(manifest)
    }
}

impl Drop for ArtifactWriter {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub path: String,
    pub problem: String,
}

/// Recomputes every listed hash under `dir`.
pub fn verify_dir(dir: &Path) -> Result<Vec<Mismatch>, CliError> {
    let mpath = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&mpath).map_err(|e| CliError::Invalid(format!("{}: {e}", mpath.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", mpath.display())))?;
    let mut bad = Vec::new();
    for e in &manifest.artifacts {
        match fs::read(dir.join(&e.path)) {
            Err(err) => bad.push(Mismatch {
                path: e.path.clone(),
                problem: format!("unreadable: {err}"),
            }),
            Ok(bytes) if sha256_hex(&bytes) != e.sha256 => bad.push(Mismatch {
                path: e.path.clone(),
                problem: "content hash differs".into(),
            }),
            Ok(_) => {}
        }
    }
    let stored = dir.join(crate::run::SCENARIO_NAME);
    if let Ok(bytes) = fs::read(&stored) {
        if sha256_hex(&bytes) != manifest.config_hash {
            bad.push(Mismatch {
                path: crate::run::SCENARIO_NAME.into(),
                problem: "config hash differs".into(),
            });
        }
    }
    Ok(bad)
}
