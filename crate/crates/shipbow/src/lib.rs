//! Ship classification from natural imagery based on silhouette profiles.
//!
//! The pipeline detects difference-of-Gaussians keypoints, ranks them by the
//! gradient energy of a small window around each point, greedily keeps a
//! spatially dispersed subset, describes an RGB patch around every kept point
//! with a pluggable descriptor provider (a pretrained ONNX network or a
//! deterministic hand-crafted descriptor), quantizes the descriptors against
//! a k-means codebook into bag-of-words histograms, and classifies the
//! histograms with a one-vs-one RBF-SVM trained from scratch.
//!
//! Every stage is exposed on its own so the pieces can be reused or swapped:
//!
//! - [`raster`] — image decoding, grayscale conversion, gradient fields and
//!   patch extraction
//! - [`scalespace`] — DoG pyramid construction and keypoint detection
//! - [`selection`] — gradient-ranked, dispersion-constrained keypoint
//!   selection with enlarged-patch augmentation
//! - [`descriptor`] — patch descriptor providers (hand-crafted and ONNX)
//! - [`codebook`] — k-means visual vocabulary and histogram encoding
//! - [`svm`] — SMO-trained binary and one-vs-one multiclass RBF-SVM
//! - [`dataset`] — directory-per-class dataset scanning and seeded splits
//! - [`pipeline`] — training, prediction, evaluation and parameter sweeps
//! - [`bundle`] — versioned model persistence
//! - [`synthetic`] — procedural silhouette dataset generator for tests and
//!   demos
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `shipbow` binary for a thin command-line front end.

pub mod bundle;
pub mod codebook;
pub mod config;
pub mod dataset;
pub mod descriptor;
pub mod overlay;
pub mod pipeline;
pub mod raster;
pub mod scalespace;
pub mod selection;
pub mod svm;
pub mod synthetic;

pub use bundle::ModelBundle;
pub use codebook::{BowHistogram, Codebook};
pub use config::PipelineConfig;
pub use dataset::{DatasetManifest, Split};
pub use descriptor::{Descriptor, DescriptorProvider, ProviderConfig};
pub use pipeline::EvalReport;
pub use raster::{GradientField, GrayImage, Patch, RgbImage};
pub use scalespace::{Keypoint, ScaleSpaceParams};
pub use selection::{ScoredKeypoint, SelectionParams, SelectionResult};
pub use svm::{MulticlassSvmModel, SvmParams};
