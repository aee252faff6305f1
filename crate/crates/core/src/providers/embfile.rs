//! Binary embeddings file and its JSON companion manifest.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "ANSL"
//!      4     4  version (u32, = 1)
//!      8     4  kind (u32: 0 = text, 1 = image)
//!     12     4  dim (u32)
//!     16     8  count (u64)
//!     24     8  reserved, zero
//!     32     -  count * dim f32 values, row-major
//! ```
//!
//! The manifest lives next to the binary file at `<path>.json` and maps rows
//! to frames or shot-list ideas.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::write_atomic;
use crate::hygiene::{CorpusKind, HygienePolicy};

pub const MAGIC: [u8; 4] = *b"ANSL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum EmbFileError {
    #[error("not an embeddings file (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported embeddings file version {0}")]
    VersionUnsupported(u32),
    #[error("unknown corpus kind tag {0}")]
    UnknownKind(u32),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("{0} unexpected bytes after payload")]
    TrailingBytes(u64),
    #[error("row {row} has {got} values, expected {expected}")]
    MixedDimensions { row: usize, expected: usize, got: usize },
    #[error("manifest does not match file: {0}")]
    ManifestMismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingsHeader {
    pub kind: CorpusKind,
    pub dim: u32,
    pub count: u64,
}

/// Hygiene settings applied before writing, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HygieneRecord {
    pub applied: bool,
    pub policy: HygienePolicy,
}

/// What one row of the payload refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RowRef {
    pub row: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idea_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingsManifest {
    pub kind: CorpusKind,
    pub dim: usize,
    pub model_id: String,
    pub hygiene: HygieneRecord,
    pub rows: Vec<RowRef>,
}

fn kind_tag(kind: CorpusKind) -> u32 {
    match kind {
        CorpusKind::Text => 0,
        CorpusKind::Image => 1,
    }
}

/// Serializes rows into the binary layout.
pub fn encode(kind: CorpusKind, dim: usize, rows: &[Vec<f32>]) -> Result<Vec<u8>, EmbFileError> {
    for (row, v) in rows.iter().enumerate() {
        if v.len() != dim {
            return Err(EmbFileError::MixedDimensions {
                row,
                expected: dim,
                got: v.len(),
            });
        }
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + rows.len() * dim * 4);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&kind_tag(kind).to_le_bytes());
    buf.extend_from_slice(&(dim as u32).to_le_bytes());
    buf.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    buf.extend_from_slice(&[0u8; 8]);
    for v in rows.iter().flatten() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().expect("4 bytes"))
}

/// Parses the binary layout back into rows.
pub fn decode(bytes: &[u8]) -> Result<(EmbeddingsHeader, Vec<Vec<f32>>), EmbFileError> {
    if bytes.len() < 4 {
        return Err(EmbFileError::TruncatedPayload {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(EmbFileError::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(EmbFileError::TruncatedPayload {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let version = le_u32(&bytes[4..8]);
    if version != VERSION {
        return Err(EmbFileError::VersionUnsupported(version));
    }
    let kind = match le_u32(&bytes[8..12]) {
        0 => CorpusKind::Text,
        1 => CorpusKind::Image,
        other => return Err(EmbFileError::UnknownKind(other)),
    };
    let dim = le_u32(&bytes[12..16]);
    let count = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let expected = (count as u128) * (dim as u128) * 4 + HEADER_LEN as u128;
    let found = bytes.len() as u128;
    if found < expected {
        return Err(EmbFileError::TruncatedPayload {
            expected: expected.min(u64::MAX as u128) as u64,
            found: found as u64,
        });
    }
    if found > expected {
        return Err(EmbFileError::TrailingBytes((found - expected) as u64));
    }
    let payload = &bytes[HEADER_LEN..];
    let rows = if dim == 0 {
        vec![Vec::new(); count as usize]
    } else {
        payload
            .chunks_exact(dim as usize * 4)
            .map(|row| {
                row.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect()
            })
            .collect()
    };
    Ok((EmbeddingsHeader { kind, dim, count }, rows))
}

/// `<path>.json`
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

/// Writes the binary file and its manifest, each atomically.
pub fn write_embeddings(path: &Path, rows: &[Vec<f32>], manifest: &EmbeddingsManifest) -> Result<(), EmbFileError> {
    if manifest.rows.len() != rows.len() {
        return Err(EmbFileError::ManifestMismatch(format!(
            "{} manifest rows for {} vectors",
            manifest.rows.len(),
            rows.len()
        )));
    }
    let bytes = encode(manifest.kind, manifest.dim, rows)?;
    let json = serde_json::to_vec_pretty(manifest).map_err(|source| EmbFileError::Json {
        path: manifest_path(path),
        source,
    })?;
    write_atomic(path, &bytes).map_err(|source| EmbFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mpath = manifest_path(path);
    write_atomic(&mpath, &json).map_err(|source| EmbFileError::Io { path: mpath, source })
}

pub fn read_embeddings(path: &Path) -> Result<(Vec<Vec<f32>>, EmbeddingsManifest), EmbFileError> {
    let bytes = fs::read(path).map_err(|source| EmbFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (header, rows) = decode(&bytes)?;
    let mpath = manifest_path(path);
    let text = fs::read(&mpath).map_err(|source| EmbFileError::Io {
        path: mpath.clone(),
        source,
    })?;
    let manifest: EmbeddingsManifest =
        serde_json::from_slice(&text).map_err(|source| EmbFileError::Json { path: mpath, source })?;
    if manifest.kind != header.kind || manifest.dim != header.dim as usize {
        return Err(EmbFileError::ManifestMismatch(format!(
            "header says {:?}/{} but manifest says {:?}/{}",
            header.kind, header.dim, manifest.kind, manifest.dim
        )));
    }
    if manifest.rows.len() as u64 != header.count {
        return Err(EmbFileError::ManifestMismatch(format!(
            "{} manifest rows for {} vectors",
            manifest.rows.len(),
            header.count
        )));
    }
    Ok((rows, manifest))
}
