//! Patch descriptors behind a pluggable provider interface.
//!
//! Two providers share the same 128-dimensional output so every downstream
//! stage is provider-agnostic: [`deep`] runs a pretrained convolutional
//! network from an ONNX file and returns its penultimate-layer activations;
//! the hand-crafted provider is a deterministic color/gradient descriptor
//! that needs no model file, which keeps tests and CI self-contained.

pub mod deep;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{extract_patch, Patch, RasterError, RgbImage};
use crate::selection::{SelectionParams, SelectionResult};

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("model file missing: {0}")]
    ModelFileMissing(String),
    #[error("invalid model format: {0}")]
    ModelFormatInvalid(String),
    #[error("dimension mismatch: model declares {declared}, config expects {expected}")]
    DimensionMismatch { declared: usize, expected: usize },
    #[error("patch side {side} too small, need at least {min}")]
    PatchTooSmall { side: u32, min: u32 },
    #[error("inference failure: {0}")]
    InferenceFailure(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Fixed-dimension real feature vector for one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    values: Vec<f32>,
}

impl Descriptor {
    pub fn new(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Deep,
    Handcrafted,
}

/// Descriptor provider selection and, for the deep provider, how to load
/// and feed the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// ONNX file, deep provider only.
    pub model_path: Option<PathBuf>,
    /// Network input side; patches are resized to this.
    pub input_side: u32,
    /// Expected descriptor width.
    pub output_dim: usize,
    /// Output tensor to read; defaults to the model's declared output.
    pub output_name: Option<String>,
    /// Per-channel normalization applied after scaling pixels to [0, 1].
    pub channel_mean: [f32; 3],
    pub channel_std: [f32; 3],
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Handcrafted,
            model_path: None,
            input_side: 224,
            output_dim: HANDCRAFTED_DIM,
            output_name: None,
            channel_mean: [0.0; 3],
            channel_std: [1.0; 3],
        }
    }
}

/// Turns RGB patches into fixed-dimension descriptors.
///
/// `describe` must be a pure function of the patch: repeated calls return
/// bit-identical vectors. Providers that cannot serve overlapping calls
/// return `false` from `concurrent_safe` and callers serialize access.
pub trait DescriptorProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn concurrent_safe(&self) -> bool {
        true
    }
    fn describe(&self, patch: &Patch) -> Result<Descriptor, DescriptorError>;
}

/// Instantiate the provider named by the config.
pub fn load_provider(
    config: &ProviderConfig,
) -> Result<Box<dyn DescriptorProvider>, DescriptorError> {
    match config.kind {
        ProviderKind::Handcrafted => {
            if config.output_dim != HANDCRAFTED_DIM {
                return Err(DescriptorError::DimensionMismatch {
                    declared: HANDCRAFTED_DIM,
                    expected: config.output_dim,
                });
            }
            Ok(Box::new(HandcraftedProvider))
        }
        ProviderKind::Deep => Ok(Box::new(deep::DeepProvider::load(config)?)),
    }
}

/// Describe every selected keypoint in selection order: first-pass entries
/// use `base_patch`, augmented entries `enlarged_patch`.
pub fn describe_selection(
    provider: &dyn DescriptorProvider,
    image: &RgbImage,
    result: &SelectionResult,
    params: &SelectionParams,
) -> Result<Vec<Descriptor>, DescriptorError> {
    let mut out = Vec::with_capacity(result.selected.len());
    for entry in &result.selected {
        let side = if entry.enlarged {
            params.enlarged_patch
        } else {
            params.base_patch
        };
        let kp = &entry.point.keypoint;
        let mut patch = extract_patch(image, (kp.x.round() as i64, kp.y.round() as i64), side)?;
        patch.enlarged = entry.enlarged;
        out.push(provider.describe(&patch)?);
    }
    Ok(out)
}

pub const HANDCRAFTED_DIM: usize = 128;
const MIN_PATCH_SIDE: u32 = 8;
const COLOR_BINS_PER_CHANNEL: usize = 16;
const GRID_CELLS: usize = 8;
const ORIENTATION_BINS: usize = 16;

/// Deterministic 128-dim descriptor: a 48-bin RGB histogram (16 bins per
/// channel), an 8x8 grid of mean gradient magnitude and a 16-bin
/// magnitude-weighted gradient orientation histogram, L2-normalized as a
/// whole. Mirrors the deep provider's width so both share the codebook and
/// classifier code paths.
pub struct HandcraftedProvider;

impl DescriptorProvider for HandcraftedProvider {
    fn dim(&self) -> usize {
        HANDCRAFTED_DIM
    }

    fn describe(&self, patch: &Patch) -> Result<Descriptor, DescriptorError> {
        if patch.side < MIN_PATCH_SIDE {
            return Err(DescriptorError::PatchTooSmall {
                side: patch.side,
                min: MIN_PATCH_SIDE,
            });
        }
        let side = patch.side as usize;
        let n_pixels = (side * side) as f32;
        let mut values = vec![0.0f32; HANDCRAFTED_DIM];

        // Block 1: per-channel color histogram as frequencies, so the
        // block scale is independent of the patch side and comparable to
        // the gradient blocks.
        for px in patch.pixels.chunks_exact(3) {
            for (c, &v) in px.iter().enumerate() {
                let bin = v as usize * COLOR_BINS_PER_CHANNEL / 256;
                values[c * COLOR_BINS_PER_CHANNEL + bin] += 1.0;
            }
        }
        for v in values[..3 * COLOR_BINS_PER_CHANNEL].iter_mut() {
            *v /= n_pixels;
        }

        // Luminance plane for the gradient blocks.
        let lum: Vec<f32> = patch
            .pixels
            .chunks_exact(3)
            .map(|px| {
                ((0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64) / 255.0)
                    as f32
            })
            .collect();
        let grad = |x: usize, y: usize| -> (f32, f32) {
            let at = |x: usize, y: usize| lum[y * side + x];
            let gx = if x == 0 {
                at(1, y) - at(0, y)
            } else if x == side - 1 {
                at(side - 1, y) - at(side - 2, y)
            } else {
                (at(x + 1, y) - at(x - 1, y)) * 0.5
            };
            let gy = if y == 0 {
                at(x, 1) - at(x, 0)
            } else if y == side - 1 {
                at(x, side - 1) - at(x, side - 2)
            } else {
                (at(x, y + 1) - at(x, y - 1)) * 0.5
            };
            (gx, gy)
        };

        // Block 2: 8x8 grid of mean gradient magnitude.
        // Block 3: orientation histogram weighted by magnitude.
        let grid_base = 3 * COLOR_BINS_PER_CHANNEL;
        let orient_base = grid_base + GRID_CELLS * GRID_CELLS;
        let mut cell_counts = [0u32; GRID_CELLS * GRID_CELLS];
        for y in 0..side {
            let cy = y * GRID_CELLS / side;
            for x in 0..side {
                let cx = x * GRID_CELLS / side;
                let (gx, gy) = grad(x, y);
                let mag = (gx * gx + gy * gy).sqrt();
                values[grid_base + cy * GRID_CELLS + cx] += mag;
                cell_counts[cy * GRID_CELLS + cx] += 1;
                if mag > 0.0 {
                    let theta = gy.atan2(gx);
                    let unit = (theta + std::f32::consts::PI) / (2.0 * std::f32::consts::PI);
                    let bin = ((unit * ORIENTATION_BINS as f32) as usize).min(ORIENTATION_BINS - 1);
                    values[orient_base + bin] += mag;
                }
            }
        }
        for (i, &count) in cell_counts.iter().enumerate() {
            if count > 0 {
                values[grid_base + i] /= count as f32;
            }
        }
        // Orientation block as per-pixel averages, same scale logic.
        for v in values[orient_base..].iter_mut() {
            *v /= n_pixels;
        }

        let norm = values.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v = (*v as f64 / norm) as f32;
            }
        }
        Ok(Descriptor::new(values))
    }
}
