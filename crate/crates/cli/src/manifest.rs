//! Reproducibility manifests.
//!
//! Every file-writing command leaves a `manifest.json` next to its outputs
//! carrying the fully resolved configuration, the RNG family, timestamps and
//! a SHA-256 digest per output file. `erwlab rerun --manifest <file>`
//! re-executes the recorded configuration; the data files come out
//! byte-identical (manifests differ only in their timestamps).

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use erwlab::oracle::MeetingPrediction;
use erwlab::rng::RNG_FAMILY;

use crate::commands::RunConfig;

pub const STREAM_SCHEME: &str =
    "walk ensemble: replica r -> stream r; pair ensemble: replica r -> streams (2r, 2r+1)";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub rng_family: String,
    pub stream_scheme: String,
    pub started_utc: String,
    pub finished_utc: String,
    /// The fully resolved command configuration; `rerun` replays it.
    pub config: RunConfig,
    /// Oracle tail fit backing meeting-count predictions, when computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meeting_tail_fit: Option<MeetingPrediction>,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut file =
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut total = 0u64;
    loop {
        let read = file.read(&mut buf)?;
        if read == 0 {
            break;
        }
        total += read as u64;
        hasher.update(&buf[..read]);
    }
    Ok((hex::encode(hasher.finalize()), total))
}

impl RunManifest {
    pub fn new(
        config: RunConfig,
        started_utc: String,
        meeting_tail_fit: Option<MeetingPrediction>,
        outputs: &[PathBuf],
    ) -> Result<Self> {
        let digests = outputs
            .iter()
            .map(|path| {
                let (sha256, bytes) = sha256_file(path)?;
                Ok(OutputDigest {
                    file: path
                        .file_name()
                        .expect("output files have names")
                        .to_string_lossy()
                        .into_owned(),
                    sha256,
                    bytes,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tool: "erwlab".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng_family: RNG_FAMILY.to_string(),
            stream_scheme: STREAM_SCHEME.to_string(),
            started_utc,
            finished_utc: chrono::Utc::now().to_rfc3339(),
            config,
            meeting_tail_fit,
            outputs: digests,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut file = File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("malformed manifest {}", path.display()))
    }

    /// Verify that every recorded digest still matches the file on disk.
    pub fn verify_digests(&self, dir: &Path) -> Result<bool> {
        for output in &self.outputs {
            let (sha256, _) = sha256_file(&dir.join(&output.file))?;
            if sha256 != output.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
