//! Pipeline configuration: one JSON tree covering every stage, with
//! defaults for all unspecified keys.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptor::ProviderConfig;
use crate::scalespace::ScaleSpaceParams;
use crate::selection::SelectionParams;
use crate::svm::SvmParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}")]
    Io(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// SVM settings as configured; `gamma` defaults to `1 / nbins` when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Option<f64>,
    pub kkt_tol: f64,
    pub max_passes: usize,
    /// Pick `c` and `gamma` by cross-validated grid search at train time.
    pub grid_search: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            kkt_tol: 1e-3,
            max_passes: 200,
            grid_search: false,
        }
    }
}

/// How a dataset root is split into train and test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub split_seed: u64,
    pub train_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            split_seed: 7,
            // 1000 train out of 1400.
            train_fraction: 1000.0 / 1400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub scale_space: ScaleSpaceParams,
    pub selection: SelectionParams,
    pub provider: ProviderConfig,
    /// Vocabulary size (number of k-means centers).
    pub nbins: usize,
    pub kmeans_seed: u64,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub svm: SvmConfig,
    pub dataset: DatasetConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scale_space: ScaleSpaceParams::default(),
            selection: SelectionParams::default(),
            provider: ProviderConfig::default(),
            nbins: 50,
            kmeans_seed: 1,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-6,
            svm: SvmConfig::default(),
            dataset: DatasetConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Concrete SVM parameters with the `1 / nbins` gamma fallback applied.
    pub fn resolved_svm_params(&self) -> SvmParams {
        SvmParams {
            c: self.svm.c,
            gamma: self.svm.gamma.unwrap_or(1.0 / self.nbins as f64),
            kkt_tol: self.svm.kkt_tol,
            max_passes: self.svm.max_passes,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.nbins < 2 {
            return fail(format!("nbins must be >= 2, got {}", self.nbins));
        }
        let ss = &self.scale_space;
        if ss.octaves < 1 || ss.scales_per_octave < 1 {
            return fail("scale_space octaves and scales_per_octave must be >= 1".into());
        }
        if ss.base_sigma <= 0.0 {
            return fail(format!("base_sigma must be > 0, got {}", ss.base_sigma));
        }
        if !(ss.contrast_threshold > 0.0 && ss.contrast_threshold <= 1.0) {
            return fail(format!(
                "contrast_threshold must be in (0, 1], got {}",
                ss.contrast_threshold
            ));
        }
        if ss.edge_ratio <= 1.0 {
            return fail(format!("edge_ratio must be > 1, got {}", ss.edge_ratio));
        }
        let sel = &self.selection;
        if sel.dist_th <= 0.0 {
            return fail(format!("dist_th must be > 0, got {}", sel.dist_th));
        }
        if sel.top_n < 1 {
            return fail("top_n must be >= 1".into());
        }
        if sel.base_patch >= sel.enlarged_patch {
            return fail(format!(
                "base_patch ({}) must be smaller than enlarged_patch ({})",
                sel.base_patch, sel.enlarged_patch
            ));
        }
        if self.provider.output_dim < 1 {
            return fail("provider output_dim must be >= 1".into());
        }
        if self.svm.c <= 0.0 {
            return fail(format!("svm c must be > 0, got {}", self.svm.c));
        }
        if let Some(g) = self.svm.gamma {
            if g <= 0.0 {
                return fail(format!("svm gamma must be > 0, got {g}"));
            }
        }
        if self.svm.kkt_tol <= 0.0 {
            return fail("svm kkt_tol must be > 0".into());
        }
        let frac = self.dataset.train_fraction;
        if !(frac > 0.0 && frac < 1.0) {
            return fail(format!("train_fraction must be in (0, 1), got {frac}"));
        }
        Ok(())
    }
}
