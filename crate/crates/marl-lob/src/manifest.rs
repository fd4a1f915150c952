//! The run manifest: what a `run` produced and where, written last so that
//! its presence means every listed artifact exists.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::artifacts::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Config,
    Returns,
    Events,
    Prices,
    Profit,
    Qtable,
    Policy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: ArtifactKind,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episode: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case_id: Option<u8>,
    pub case_name: String,
    pub roster: String,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub adv: f64,
    pub stages: Vec<Stage>,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).context("serialising manifest")?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Loads a manifest from its file or from the directory holding it.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&file).with_context(|| format!("reading manifest {}", file.display()))?;
        let m: RunManifest = toml::from_str(&text).with_context(|| format!("parsing manifest {}", file.display()))?;
        let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, dir))
    }

    /// The most recent episode's artifact of `kind`.
    pub fn latest(&self, kind: ArtifactKind) -> Option<&Artifact> {
        self.artifacts
            .iter()
            .filter(|a| a.kind == kind)
            .max_by_key(|a| a.episode)
    }

    /// Absolute path of the latest `kind` artifact, failing with its name when
    /// the manifest lists none or the file is gone.
    pub fn require(&self, dir: &Path, kind: ArtifactKind) -> Result<PathBuf> {
        let Some(a) = self.latest(kind) else {
            bail!("manifest lists no {kind:?} artifact");
        };
        let p = dir.join(&a.path);
        if !p.is_file() {
            bail!("missing artifact {}", p.display());
        }
        Ok(p)
    }

    pub fn label(&self) -> String {
        match self.case_id {
            Some(id) => format!("case{id} ({})", self.roster),
            None => format!("{} ({})", self.case_name, self.roster),
        }
    }
}
