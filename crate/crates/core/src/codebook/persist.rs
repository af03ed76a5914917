use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClusterMetric, Codebook};
use crate::error::{Error, Result};

pub const CODEBOOK_FORMAT: &str = "winbow-codebook";
pub const CODEBOOK_VERSION: u32 = 1;

/// On-disk layout; key order is fixed by field order.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CodebookRecord {
    format: String,
    version: u32,
    n: usize,
    dim: usize,
    metric: ClusterMetric,
    seed: u64,
    feature_fingerprint: String,
    #[serde(serialize_with = "crate::json::vec_f64_fixed")]
    centers: Vec<f64>,
}

impl From<&Codebook> for CodebookRecord {
    fn from(b: &Codebook) -> Self {
        CodebookRecord {
            format: CODEBOOK_FORMAT.into(),
            version: CODEBOOK_VERSION,
            n: b.n(),
            dim: b.dim(),
            metric: b.metric(),
            seed: b.seed(),
            feature_fingerprint: b.feature_fingerprint().into(),
            centers: b.centers().iter().flatten().copied().collect(),
        }
    }
}

impl TryFrom<CodebookRecord> for Codebook {
    type Error = Error;

    fn try_from(r: CodebookRecord) -> Result<Self> {
        if r.format != CODEBOOK_FORMAT {
            return Err(Error::CorruptCodebook(format!(
                "unexpected format tag `{}`",
                r.format
            )));
        }
        if r.version != CODEBOOK_VERSION {
            return Err(Error::VersionMismatch {
                found: r.version,
                expected: CODEBOOK_VERSION,
            });
        }
        if r.dim == 0 || r.n.checked_mul(r.dim) != Some(r.centers.len()) {
            return Err(Error::CorruptCodebook(format!(
                "{} center values do not fill {} x {}",
                r.centers.len(),
                r.n,
                r.dim
            )));
        }
        let centers = r.centers.chunks(r.dim).map(<[f64]>::to_vec).collect();
        Codebook::from_centers(centers, r.metric, r.feature_fingerprint, r.seed)
    }
}

impl Codebook {
    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(&CodebookRecord::from(self)).expect("codebook serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // look at the version before the full schema so old files get a clear error
        let head: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptCodebook(e.to_string()))?;
        if let Some(v) = head.get("version").and_then(|v| v.as_u64()) {
            if v != CODEBOOK_VERSION as u64 {
                return Err(Error::VersionMismatch {
                    found: v.min(u32::MAX as u64) as u32,
                    expected: CODEBOOK_VERSION,
                });
            }
        }
        let record: CodebookRecord =
            serde_json::from_value(head).map_err(|e| Error::CorruptCodebook(e.to_string()))?;
        record.try_into()
    }
}

pub fn save_codebook(path: &Path, book: &Codebook) -> Result<()> {
    std::fs::write(path, book.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Codebook::from_json(&text)
}
