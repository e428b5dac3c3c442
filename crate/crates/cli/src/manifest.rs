//! Run manifests: the resolved command plus the digest of what it wrote.
//! No timestamps or host details, so a replay reproduces the manifest too.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Command, Failure, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: Command,
    pub output: PathBuf,
    pub sha256: String,
}

impl Manifest {
    pub fn record(config: Command) -> Outcome<Manifest> {
        let output = config.common().out.clone().expect("output path resolved");
        let sha256 = digest(&output)?;
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            output,
            sha256,
        })
    }

    /// `gaps.csv` -> `gaps.manifest.json`
    pub fn path_for(output: &Path) -> PathBuf {
        output.with_extension("manifest.json")
    }

    pub fn write(&self) -> Outcome<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(Self::path_for(&self.output), format!("{text}\n"))?;
        Ok(())
    }

    pub fn read(path: &Path) -> Outcome<Manifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{} is not a run manifest: {e}", path.display())))
    }
}

fn digest(path: &Path) -> Outcome<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
