use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::Transcript;

/// Current transcript schema major version. Loaders reject any other major.
pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io failure at {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation in {path}: {detail}")]
    SchemaViolation { path: PathBuf, detail: String },
}

#[derive(Serialize, Deserialize)]
struct TranscriptFile {
    schema_version: u32,
    #[serde(flatten)]
    transcript: Transcript,
}

/// File name a transcript persists under: `<run_label>.transcript.json`.
pub fn transcript_file_name(run_label: &str) -> String {
    format!("{run_label}.transcript.json")
}

/// Writes the transcript as a self-contained JSON document under `root`,
/// named by its run label. Serialization is deterministic: saving the same
/// transcript twice yields byte-identical files.
pub fn save_transcript(transcript: &Transcript, root: &Path) -> Result<PathBuf, PersistError> {
    let path = root.join(transcript_file_name(&transcript.run_label));
    let doc = TranscriptFile {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        transcript: transcript.clone(),
    };
    let mut body = serde_json::to_string_pretty(&doc).map_err(|e| PersistError::SchemaViolation {
        path: path.clone(),
        detail: e.to_string(),
    })?;
    body.push('\n');
    let mut file = fs::File::create(&path)
        .map_err(|source| PersistError::IoFailure { path: path.clone(), source })?;
    file.write_all(body.as_bytes())
        .map_err(|source| PersistError::IoFailure { path: path.clone(), source })?;
    Ok(path)
}

/// Loads a transcript previously written by [`save_transcript`].
/// `load(save(t))` structurally equals `t` for every valid transcript.
pub fn load_transcript(path: &Path) -> Result<Transcript, PersistError> {
    let body = fs::read_to_string(path)
        .map_err(|source| PersistError::IoFailure { path: path.to_path_buf(), source })?;

    // Check the version before full decoding so unknown majors are reported
    // as such rather than as arbitrary field errors.
    let probe: serde_json::Value =
        serde_json::from_str(&body).map_err(|e| PersistError::SchemaViolation {
            path: path.to_path_buf(),
            detail: format!("not valid JSON: {e}"),
        })?;
    match probe.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(version) if version == TRANSCRIPT_SCHEMA_VERSION as u64 => {}
        Some(version) => {
            return Err(PersistError::SchemaViolation {
                path: path.to_path_buf(),
                detail: format!("unknown schema_version {version}"),
            })
        }
        None => {
            return Err(PersistError::SchemaViolation {
                path: path.to_path_buf(),
                detail: "missing schema_version".to_string(),
            })
        }
    }

    let doc: TranscriptFile =
        serde_json::from_str(&body).map_err(|e| PersistError::SchemaViolation {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    Ok(doc.transcript)
}
