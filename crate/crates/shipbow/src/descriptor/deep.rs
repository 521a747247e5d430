//! ONNX-backed descriptor provider.
//!
//! Loads a pretrained network from an ONNX file, pins its input to
//! `1x3xSxS`, optionally reselects the output by name so the penultimate
//! layer can be read on models that still carry a classifier head, and
//! verifies that the declared output width matches the configured
//! descriptor dimension. Patches are resized to the network input side with
//! bilinear interpolation and normalized per channel before the forward
//! pass.

use std::sync::Arc;

use tract_onnx::prelude::*;

use super::{Descriptor, DescriptorError, DescriptorProvider, ProviderConfig};
use crate::raster::Patch;

pub struct DeepProvider {
    plan: Arc<TypedRunnableModel>,
    input_side: u32,
    dim: usize,
    mean: [f32; 3],
    std: [f32; 3],
}

impl DeepProvider {
    pub fn load(config: &ProviderConfig) -> Result<Self, DescriptorError> {
        let path = config
            .model_path
            .as_ref()
            .ok_or_else(|| DescriptorError::ModelFileMissing("no model_path configured".into()))?;
        if !path.exists() {
            return Err(DescriptorError::ModelFileMissing(
                path.display().to_string(),
            ));
        }
        let side = config.input_side as usize;
        let mut model = tract_onnx::onnx()
            .model_for_path(path)
            .map_err(|e| DescriptorError::ModelFormatInvalid(e.to_string()))?
            .with_input_fact(
                0,
                InferenceFact::dt_shape(f32::datum_type(), tvec![1, 3, side, side]),
            )
            .map_err(|e| DescriptorError::ModelFormatInvalid(e.to_string()))?;
        if let Some(name) = &config.output_name {
            model = model
                .with_outputs_by_name([name])
                .map_err(|e| DescriptorError::ModelFormatInvalid(e.to_string()))?;
        }
        let typed = model
            .into_optimized()
            .map_err(|e| DescriptorError::ModelFormatInvalid(e.to_string()))?;
        let declared = declared_output_width(&typed)?;
        if declared != config.output_dim {
            return Err(DescriptorError::DimensionMismatch {
                declared,
                expected: config.output_dim,
            });
        }
        let plan = typed
            .into_runnable()
            .map_err(|e| DescriptorError::ModelFormatInvalid(e.to_string()))?;
        Ok(Self {
            plan,
            input_side: config.input_side,
            dim: config.output_dim,
            mean: config.channel_mean,
            std: config.channel_std,
        })
    }
}

fn declared_output_width(model: &TypedModel) -> Result<usize, DescriptorError> {
    let fact = model
        .output_fact(0)
        .map_err(|e| DescriptorError::ModelFormatInvalid(e.to_string()))?;
    let dims = fact.shape.as_concrete().ok_or_else(|| {
        DescriptorError::ModelFormatInvalid("output shape is not fully determined".into())
    })?;
    Ok(dims.iter().product())
}

impl DescriptorProvider for DeepProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    // SimplePlan::run spawns a fresh state per call.
    fn concurrent_safe(&self) -> bool {
        true
    }

    fn describe(&self, patch: &Patch) -> Result<Descriptor, DescriptorError> {
        if patch.side < super::MIN_PATCH_SIDE {
            return Err(DescriptorError::PatchTooSmall {
                side: patch.side,
                min: super::MIN_PATCH_SIDE,
            });
        }
        let side = self.input_side;
        let buffer: image::RgbImage =
            image::ImageBuffer::from_raw(patch.side, patch.side, patch.pixels.clone())
                .expect("patch buffer length is side*side*3");
        let resized = if patch.side == side {
            buffer
        } else {
            image::imageops::resize(&buffer, side, side, image::imageops::FilterType::Triangle)
        };
        let input = tract_ndarray::Array4::from_shape_fn(
            (1, 3, side as usize, side as usize),
            |(_, c, y, x)| {
                let v = resized.get_pixel(x as u32, y as u32)[c] as f32 / 255.0;
                (v - self.mean[c]) / self.std[c]
            },
        );
        let outputs = self
            .plan
            .run(tvec!(input.into_tensor().into_tvalue()))
            .map_err(|e| DescriptorError::InferenceFailure(e.to_string()))?;
        let values: Vec<f32> = outputs[0]
            .to_plain_array_view::<f32>()
            .map_err(|e| DescriptorError::InferenceFailure(e.to_string()))?
            .iter()
            .copied()
            .collect();
        if values.len() != self.dim {
            return Err(DescriptorError::InferenceFailure(format!(
                "network returned {} values, expected {}",
                values.len(),
                self.dim
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(DescriptorError::InferenceFailure(
                "network returned non-finite activations".into(),
            ));
        }
        Ok(Descriptor::new(values))
    }
}
