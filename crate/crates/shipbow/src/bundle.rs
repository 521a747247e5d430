//! Versioned model persistence.
//!
//! A bundle is a single file with a four-byte magic, a format version and a
//! list of named sections: a JSON manifest (version string, configuration,
//! class names, build log), the codebook as a little-endian f64 matrix with
//! a dimension header, and the classifier as JSON with embedded float
//! arrays. Serialization is deterministic: training twice with the same
//! seeds produces byte-identical files.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::Codebook;
use crate::config::PipelineConfig;
use crate::svm::MulticlassSvmModel;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(String),
    #[error("not a model bundle (bad magic)")]
    BadMagic,
    #[error("unsupported bundle format version {0}")]
    UnsupportedVersion(u32),
    #[error("bundle is corrupt: {0}")]
    Corrupt(String),
}

const MAGIC: &[u8; 4] = b"SBOW";
const FORMAT_VERSION: u32 = 1;
pub const BUNDLE_VERSION_STRING: &str = "shipbow-bundle/1";

const SECTION_MANIFEST: &str = "manifest.json";
const SECTION_CODEBOOK: &str = "codebook.bin";
const SECTION_CLASSIFIER: &str = "classifier.json";

/// A training-time exclusion, kept so no image is silently dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildLogEntry {
    pub path: String,
    pub reason: String,
}

/// Everything needed to classify new images.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub version: String,
    pub config: PipelineConfig,
    pub codebook: Codebook,
    pub classifier: MulticlassSvmModel,
    pub class_names: Vec<String>,
    pub build_log: Vec<BuildLogEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestSection {
    version: String,
    config: PipelineConfig,
    class_names: Vec<String>,
    build_log: Vec<BuildLogEntry>,
}

fn write_section(out: &mut Vec<u8>, name: &str, payload: &[u8]) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
}

impl ModelBundle {
    pub fn to_bytes(&self) -> Result<Vec<u8>, BundleError> {
        let manifest = ManifestSection {
            version: self.version.clone(),
            config: self.config.clone(),
            class_names: self.class_names.clone(),
            build_log: self.build_log.clone(),
        };
        let manifest_json =
            serde_json::to_vec(&manifest).map_err(|e| BundleError::Json(e.to_string()))?;

        let mut codebook_bin = Vec::with_capacity(16 + self.codebook.centers().len() * 8);
        codebook_bin.extend_from_slice(&(self.codebook.k() as u32).to_le_bytes());
        codebook_bin.extend_from_slice(&(self.codebook.dim() as u32).to_le_bytes());
        codebook_bin.extend_from_slice(&self.codebook.seed().to_le_bytes());
        for v in self.codebook.centers() {
            codebook_bin.extend_from_slice(&v.to_le_bytes());
        }

        let classifier_json =
            serde_json::to_vec(&self.classifier).map_err(|e| BundleError::Json(e.to_string()))?;

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&3u32.to_le_bytes());
        write_section(&mut out, SECTION_MANIFEST, &manifest_json);
        write_section(&mut out, SECTION_CODEBOOK, &codebook_bin);
        write_section(&mut out, SECTION_CLASSIFIER, &classifier_json);
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        let bytes = self.to_bytes()?;
        let mut file = std::fs::File::create(path)?;
        file.write_all(&bytes)?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BundleError> {
        let mut cursor = std::io::Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cursor
            .read_exact(&mut magic)
            .map_err(|_| BundleError::BadMagic)?;
        if &magic != MAGIC {
            return Err(BundleError::BadMagic);
        }
        let mut u32_buf = [0u8; 4];
        cursor.read_exact(&mut u32_buf)?;
        let version = u32::from_le_bytes(u32_buf);
        if version != FORMAT_VERSION {
            return Err(BundleError::UnsupportedVersion(version));
        }
        cursor.read_exact(&mut u32_buf)?;
        let n_sections = u32::from_le_bytes(u32_buf);

        let mut manifest: Option<ManifestSection> = None;
        let mut codebook: Option<Codebook> = None;
        let mut classifier: Option<MulticlassSvmModel> = None;
        for _ in 0..n_sections {
            cursor.read_exact(&mut u32_buf)?;
            let name_len = u32::from_le_bytes(u32_buf) as usize;
            let mut name = vec![0u8; name_len];
            cursor.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| BundleError::Corrupt("section name is not UTF-8".into()))?;
            let mut u64_buf = [0u8; 8];
            cursor.read_exact(&mut u64_buf)?;
            let payload_len = u64::from_le_bytes(u64_buf) as usize;
            let mut payload = vec![0u8; payload_len];
            cursor.read_exact(&mut payload)?;
            match name.as_str() {
                SECTION_MANIFEST => {
                    manifest = Some(
                        serde_json::from_slice(&payload)
                            .map_err(|e| BundleError::Json(e.to_string()))?,
                    );
                }
                SECTION_CODEBOOK => {
                    codebook = Some(parse_codebook(&payload)?);
                }
                SECTION_CLASSIFIER => {
                    classifier = Some(
                        serde_json::from_slice(&payload)
                            .map_err(|e| BundleError::Json(e.to_string()))?,
                    );
                }
                // Unknown sections are skipped for forward compatibility.
                _ => {}
            }
        }
        let manifest =
            manifest.ok_or_else(|| BundleError::Corrupt("missing manifest section".into()))?;
        let codebook =
            codebook.ok_or_else(|| BundleError::Corrupt("missing codebook section".into()))?;
        let classifier =
            classifier.ok_or_else(|| BundleError::Corrupt("missing classifier section".into()))?;

        let bundle = Self {
            version: manifest.version,
            config: manifest.config,
            codebook,
            classifier,
            class_names: manifest.class_names,
            build_log: manifest.build_log,
        };
        bundle.check_consistency()?;
        Ok(bundle)
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    fn check_consistency(&self) -> Result<(), BundleError> {
        if self.codebook.k() != self.config.nbins {
            return Err(BundleError::Corrupt(format!(
                "codebook has {} centers but config.nbins is {}",
                self.codebook.k(),
                self.config.nbins
            )));
        }
        if self.class_names != self.classifier.class_names {
            return Err(BundleError::Corrupt(
                "classifier class names disagree with manifest".into(),
            ));
        }
        for pair in &self.classifier.pairwise {
            for sv in &pair.model.support_vectors {
                if sv.len() != self.config.nbins {
                    return Err(BundleError::Corrupt(format!(
                        "support vector dimension {} does not match nbins {}",
                        sv.len(),
                        self.config.nbins
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_codebook(payload: &[u8]) -> Result<Codebook, BundleError> {
    if payload.len() < 16 {
        return Err(BundleError::Corrupt("codebook section truncated".into()));
    }
    let k = u32::from_le_bytes(payload[0..4].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(payload[4..8].try_into().unwrap()) as usize;
    let seed = u64::from_le_bytes(payload[8..16].try_into().unwrap());
    let expected = 16 + k * dim * 8;
    if payload.len() != expected {
        return Err(BundleError::Corrupt(format!(
            "codebook payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let centers: Vec<f64> = payload[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Codebook::from_parts(k, dim, centers, seed)
        .ok_or_else(|| BundleError::Corrupt("codebook matrix is invalid".into()))
}
