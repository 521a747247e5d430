//! End-to-end orchestration: descriptor extraction, training, prediction,
//! evaluation and parameter sweeps.

use std::path::Path;

use thiserror::Error;

use crate::bundle::{BuildLogEntry, ModelBundle, BundleError, BUNDLE_VERSION_STRING};
use crate::codebook::{kmeans_fit, BowHistogram, CodebookError};
use crate::config::{ConfigError, PipelineConfig};
use crate::dataset::{DatasetError, DatasetManifest, Split};
use crate::descriptor::{
    describe_selection, load_provider, Descriptor, DescriptorError, DescriptorProvider,
};
use crate::raster::{gradient_magnitude, load_image, to_grayscale, RasterError, RgbImage};
use crate::scalespace::{detect_keypoints, ScaleSpaceError};
use crate::selection::{
    augment_remainder, greedy_select, score_and_sort, ScoredKeypoint, SelectionError,
};
use crate::svm::{train_multiclass, SvmError, SvmParams};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no keypoints detected in {path}")]
    ZeroKeypoints { path: String },
    #[error("requested split contains no images")]
    EmptySplit,
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    ScaleSpace(#[from] ScaleSpaceError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

impl PipelineError {
    /// True for the "image is valid but has no usable structure" case that
    /// evaluation counts as a misclassification instead of aborting.
    pub fn is_zero_keypoints(&self) -> bool {
        matches!(self, PipelineError::ZeroKeypoints { .. })
    }
}

/// Detection + scoring output for one image, reusable across selection
/// parameter settings.
pub struct ScoredImage {
    pub image: RgbImage,
    pub ordered: Vec<ScoredKeypoint>,
}

/// Load an image and run detection and gradient scoring, the parts of the
/// per-image pipeline that do not depend on the selection parameters.
pub fn score_image(path: &Path, config: &PipelineConfig) -> Result<ScoredImage, PipelineError> {
    let image = load_image(path)?;
    let gray = to_grayscale(&image);
    let keypoints = detect_keypoints(&gray, &config.scale_space)?;
    if keypoints.is_empty() {
        return Err(PipelineError::ZeroKeypoints {
            path: path.display().to_string(),
        });
    }
    let field = gradient_magnitude(&gray)?;
    let ordered = score_and_sort(&field, &keypoints, config.selection.score_half_width)?;
    Ok(ScoredImage { image, ordered })
}

fn describe_scored(
    scored: &ScoredImage,
    config: &PipelineConfig,
    provider: &dyn DescriptorProvider,
) -> Result<Vec<Descriptor>, PipelineError> {
    let selection = augment_remainder(
        greedy_select(&scored.ordered, &config.selection),
        &config.selection,
    );
    Ok(describe_selection(
        provider,
        &scored.image,
        &selection,
        &config.selection,
    )?)
}

/// Full per-image descriptor extraction: load, grayscale, detect, score,
/// select, augment, describe.
pub fn extract_image_descriptors(
    path: &Path,
    config: &PipelineConfig,
    provider: &dyn DescriptorProvider,
) -> Result<Vec<Descriptor>, PipelineError> {
    let scored = score_image(path, config)?;
    describe_scored(&scored, config, provider)
}

/// Train the whole pipeline on the manifest's train split.
pub fn train_pipeline(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
) -> Result<ModelBundle, PipelineError> {
    config.validate()?;
    let provider = load_provider(&config.provider)?;
    train_pipeline_with(manifest, config, provider.as_ref())
}

/// Training against an already-loaded provider.
pub fn train_pipeline_with(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    provider: &dyn DescriptorProvider,
) -> Result<ModelBundle, PipelineError> {
    let mut per_image: Vec<(String, Vec<Descriptor>)> = Vec::new();
    let mut build_log: Vec<BuildLogEntry> = Vec::new();
    for entry in manifest.entries_for(Split::Train) {
        match extract_image_descriptors(&entry.path, config, provider) {
            Ok(descriptors) => per_image.push((entry.class.clone(), descriptors)),
            Err(e) if e.is_zero_keypoints() => build_log.push(BuildLogEntry {
                path: entry.path.display().to_string(),
                reason: "no keypoints detected".into(),
            }),
            Err(e) => return Err(e),
        }
    }

    // The pooled descriptor set, in manifest order.
    let fea: Vec<Descriptor> = per_image
        .iter()
        .flat_map(|(_, ds)| ds.iter().cloned())
        .collect();
    let codebook = kmeans_fit(
        &fea,
        config.nbins,
        config.kmeans_seed,
        config.kmeans_max_iter,
        config.kmeans_tol,
    )?;

    let mut histograms: Vec<Vec<f64>> = Vec::with_capacity(per_image.len());
    let mut labels: Vec<String> = Vec::with_capacity(per_image.len());
    for (class, descriptors) in &per_image {
        let hist = codebook.encode_bow(descriptors)?;
        histograms.push(hist.frequencies().to_vec());
        labels.push(class.clone());
    }

    let svm_params = if config.svm.grid_search {
        grid_search_svm(&histograms, &labels, config)?
    } else {
        config.resolved_svm_params()
    };
    let classifier = train_multiclass(&histograms, &labels, &svm_params)?;

    Ok(ModelBundle {
        version: BUNDLE_VERSION_STRING.into(),
        config: config.clone(),
        codebook: codebook.clone(),
        classifier: classifier.clone(),
        class_names: classifier.class_names.clone(),
        build_log,
    })
}

/// Encode one already-described image against a bundle's codebook.
fn encode(bundle: &ModelBundle, descriptors: &[Descriptor]) -> Result<BowHistogram, PipelineError> {
    Ok(bundle.codebook.encode_bow(descriptors)?)
}

/// Classify a single image with the bundle's own provider configuration.
pub fn predict_image(bundle: &ModelBundle, path: &Path) -> Result<String, PipelineError> {
    let provider = load_provider(&bundle.config.provider)?;
    predict_image_with(bundle, provider.as_ref(), path)
}

/// Classify a single image against an already-loaded provider.
pub fn predict_image_with(
    bundle: &ModelBundle,
    provider: &dyn DescriptorProvider,
    path: &Path,
) -> Result<String, PipelineError> {
    let descriptors = extract_image_descriptors(path, &bundle.config, provider)?;
    let hist = encode(bundle, &descriptors)?;
    Ok(bundle.classifier.predict(hist.frequencies())?.to_string())
}

/// Per-image evaluation outcome fed into [`EvalReport::from_outcomes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageOutcome {
    pub path: String,
    pub true_label: String,
    /// `Ok(predicted_class)` or `Err(reason)` for images that produced no
    /// usable keypoints.
    pub outcome: Result<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerImageResult {
    pub path: String,
    pub true_label: String,
    pub predicted: String,
}

/// Evaluation summary: the error metric, per-image decisions, a confusion
/// matrix over successful predictions and the list of failed images.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    pub error: f64,
    pub classes: Vec<String>,
    pub per_image: Vec<PerImageResult>,
    /// Row-major `k x k`, rows = true class, columns = predicted class.
    pub confusion: Vec<usize>,
    pub failures: Vec<(String, String)>,
}

impl EvalReport {
    /// Assemble the report from raw outcomes. Failed images count as
    /// misclassified; the error is `1 - accuracy` so the two always sum to
    /// one exactly.
    pub fn from_outcomes(
        classes: &[String],
        outcomes: Vec<ImageOutcome>,
    ) -> Result<Self, PipelineError> {
        if outcomes.is_empty() {
            return Err(PipelineError::EmptySplit);
        }
        let k = classes.len();
        let class_index = |name: &str| classes.iter().position(|c| c == name);
        let total = outcomes.len();
        let mut matches = 0usize;
        let mut per_image = Vec::new();
        let mut confusion = vec![0usize; k * k];
        let mut failures = Vec::new();
        for o in outcomes {
            match o.outcome {
                Ok(predicted) => {
                    if predicted == o.true_label {
                        matches += 1;
                    }
                    if let (Some(t), Some(p)) =
                        (class_index(&o.true_label), class_index(&predicted))
                    {
                        confusion[t * k + p] += 1;
                    }
                    per_image.push(PerImageResult {
                        path: o.path,
                        true_label: o.true_label,
                        predicted,
                    });
                }
                Err(reason) => failures.push((o.path, reason)),
            }
        }
        let accuracy = matches as f64 / total as f64;
        Ok(Self {
            total,
            error: 1.0 - accuracy,
            classes: classes.to_vec(),
            per_image,
            confusion,
            failures,
        })
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let correct = self
            .per_image
            .iter()
            .filter(|r| r.predicted == r.true_label)
            .count();
        writeln!(
            out,
            "Er {:.4} ({:.2}%)  [{} correct / {} images, {} failures]",
            self.error,
            self.error * 100.0,
            correct,
            self.total,
            self.failures.len()
        )
        .unwrap();
        writeln!(out, "confusion (rows = true, columns = predicted):").unwrap();
        let name_width = self
            .classes
            .iter()
            .map(|c| c.len())
            .max()
            .unwrap_or(4)
            .max(4);
        write!(out, "{:name_width$}", "").unwrap();
        for c in &self.classes {
            write!(out, "  {c:>name_width$}").unwrap();
        }
        out.push('\n');
        for (t, row_class) in self.classes.iter().enumerate() {
            write!(out, "{row_class:name_width$}").unwrap();
            for p in 0..self.classes.len() {
                write!(
                    out,
                    "  {:>name_width$}",
                    self.confusion[t * self.classes.len() + p]
                )
                .unwrap();
            }
            out.push('\n');
        }
        if !self.failures.is_empty() {
            writeln!(out, "failures (counted as misclassified):").unwrap();
            for (path, reason) in &self.failures {
                writeln!(out, "  {path}: {reason}").unwrap();
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "Er,{:.6}", self.error).unwrap();
        write!(out, "class").unwrap();
        for c in &self.classes {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for (t, row_class) in self.classes.iter().enumerate() {
            write!(out, "{row_class}").unwrap();
            for p in 0..self.classes.len() {
                write!(out, ",{}", self.confusion[t * self.classes.len() + p]).unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "failures,{}", self.failures.len()).unwrap();
        out
    }
}

/// Evaluate a bundle on one split of a manifest.
pub fn evaluate(
    bundle: &ModelBundle,
    manifest: &DatasetManifest,
    split: Split,
) -> Result<EvalReport, PipelineError> {
    let provider = load_provider(&bundle.config.provider)?;
    evaluate_with(bundle, provider.as_ref(), manifest, split)
}

pub fn evaluate_with(
    bundle: &ModelBundle,
    provider: &dyn DescriptorProvider,
    manifest: &DatasetManifest,
    split: Split,
) -> Result<EvalReport, PipelineError> {
    let mut outcomes = Vec::new();
    for entry in manifest.entries_for(split) {
        let outcome = match predict_image_with(bundle, provider, &entry.path) {
            Ok(predicted) => Ok(predicted),
            Err(e) if e.is_zero_keypoints() => Err("no keypoints detected".to_string()),
            Err(e) => return Err(e),
        };
        outcomes.push(ImageOutcome {
            path: entry.path.display().to_string(),
            true_label: entry.class.clone(),
            outcome,
        });
    }
    EvalReport::from_outcomes(&manifest.classes, outcomes)
}

/// One parameter-sweep setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub dist_th: f64,
    pub min_over: usize,
    pub top_n: usize,
    pub nbins: usize,
}

/// The nine-row default sweep grid.
pub fn default_sweep_grid() -> Vec<GridPoint> {
    [
        (10.0, 2, 150, 100),
        (5.0, 2, 150, 100),
        (15.0, 2, 150, 100),
        (20.0, 2, 150, 100),
        (15.0, 3, 150, 100),
        (15.0, 2, 120, 100),
        (15.0, 2, 100, 100),
        (15.0, 2, 100, 70),
        (15.0, 2, 100, 50),
    ]
    .into_iter()
    .map(|(dist_th, min_over, top_n, nbins)| GridPoint {
        dist_th,
        min_over,
        top_n,
        nbins,
    })
    .collect()
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: GridPoint,
    /// `(Er_train, Er_test)` or the failure message for this row.
    pub outcome: Result<(f64, f64), String>,
}

/// Train and evaluate once per grid row. Detection and gradient scoring are
/// shared across rows since the grid only varies selection and vocabulary
/// parameters. A failing row is reported in its outcome, not fatal.
pub fn sweep(
    manifest: &DatasetManifest,
    base_config: &PipelineConfig,
    grid: &[GridPoint],
) -> Result<Vec<SweepRow>, PipelineError> {
    if grid.is_empty() {
        return Err(PipelineError::EmptyGrid);
    }
    base_config.validate()?;
    let provider = load_provider(&base_config.provider)?;

    // Cache the selection-independent half of the per-image pipeline.
    let mut scored: Vec<(usize, Result<ScoredImage, String>)> = Vec::new();
    for (i, entry) in manifest.entries.iter().enumerate() {
        let r = match score_image(&entry.path, base_config) {
            Ok(s) => Ok(s),
            Err(e) if e.is_zero_keypoints() => Err("no keypoints detected".to_string()),
            Err(e) => return Err(e),
        };
        scored.push((i, r));
    }

    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        let mut config = base_config.clone();
        config.selection.dist_th = point.dist_th;
        config.selection.min_over = point.min_over;
        config.selection.top_n = point.top_n;
        config.nbins = point.nbins;
        let outcome = sweep_row(manifest, &config, provider.as_ref(), &scored);
        rows.push(SweepRow {
            point: *point,
            outcome,
        });
    }
    Ok(rows)
}

fn sweep_row(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    provider: &dyn DescriptorProvider,
    scored: &[(usize, Result<ScoredImage, String>)],
) -> Result<(f64, f64), String> {
    // Train on the train split.
    let mut per_image: Vec<(String, Vec<Descriptor>)> = Vec::new();
    let mut descriptors_by_entry: Vec<Option<Vec<Descriptor>>> = vec![None; manifest.entries.len()];
    for &(i, ref r) in scored {
        if let Ok(s) = r {
            let ds = describe_scored(s, config, provider).map_err(|e| e.to_string())?;
            descriptors_by_entry[i] = Some(ds);
        }
    }
    for (i, entry) in manifest.entries.iter().enumerate() {
        if entry.split == Split::Train {
            if let Some(ds) = &descriptors_by_entry[i] {
                per_image.push((entry.class.clone(), ds.clone()));
            }
        }
    }
    let fea: Vec<Descriptor> = per_image
        .iter()
        .flat_map(|(_, ds)| ds.iter().cloned())
        .collect();
    let codebook = kmeans_fit(
        &fea,
        config.nbins,
        config.kmeans_seed,
        config.kmeans_max_iter,
        config.kmeans_tol,
    )
    .map_err(|e| e.to_string())?;
    let mut histograms = Vec::new();
    let mut labels = Vec::new();
    for (class, ds) in &per_image {
        histograms.push(
            codebook
                .encode_bow(ds)
                .map_err(|e| e.to_string())?
                .frequencies()
                .to_vec(),
        );
        labels.push(class.clone());
    }
    let svm_params = if config.svm.grid_search {
        grid_search_svm(&histograms, &labels, config).map_err(|e| e.to_string())?
    } else {
        config.resolved_svm_params()
    };
    let classifier = train_multiclass(&histograms, &labels, &svm_params).map_err(|e| e.to_string())?;

    // Evaluate both splits from the cached descriptors.
    let eval_split = |split: Split| -> Result<f64, String> {
        let mut outcomes = Vec::new();
        for (i, entry) in manifest.entries.iter().enumerate() {
            if entry.split != split {
                continue;
            }
            let outcome = match &descriptors_by_entry[i] {
                Some(ds) => {
                    let hist = codebook.encode_bow(ds).map_err(|e| e.to_string())?;
                    let predicted = classifier
                        .predict(hist.frequencies())
                        .map_err(|e| e.to_string())?;
                    Ok(predicted.to_string())
                }
                None => Err("no keypoints detected".to_string()),
            };
            outcomes.push(ImageOutcome {
                path: entry.path.display().to_string(),
                true_label: entry.class.clone(),
                outcome,
            });
        }
        EvalReport::from_outcomes(&manifest.classes, outcomes)
            .map(|r| r.error)
            .map_err(|e| e.to_string())
    };
    let er_train = eval_split(Split::Train)?;
    let er_test = eval_split(Split::Test)?;
    Ok((er_train, er_test))
}

fn format_metric(dist_th: f64) -> String {
    if dist_th.fract() == 0.0 {
        format!("{:.0}", dist_th)
    } else {
        format!("{}", dist_th)
    }
}

/// Render sweep rows as CSV with the fixed column set
/// `DistTH,minOver,TopN,Nbins,Er_train,Er_test`; error values are percent.
pub fn sweep_rows_to_csv(rows: &[SweepRow]) -> String {
    use std::fmt::Write;
    let mut out = String::from("DistTH,minOver,TopN,Nbins,Er_train,Er_test\n");
    for row in rows {
        let p = &row.point;
        match &row.outcome {
            Ok((er_train, er_test)) => writeln!(
                out,
                "{},{},{},{},{:.2},{:.2}",
                format_metric(p.dist_th),
                p.min_over,
                p.top_n,
                p.nbins,
                er_train * 100.0,
                er_test * 100.0
            )
            .unwrap(),
            Err(reason) => writeln!(
                out,
                "{},{},{},{},error,{}",
                format_metric(p.dist_th),
                p.min_over,
                p.top_n,
                p.nbins,
                reason.replace(',', ";")
            )
            .unwrap(),
        }
    }
    out
}

/// Cross-validated grid search over `c` and `gamma`. Three deterministic
/// stratified folds; ties resolve to the earliest grid entry.
pub fn grid_search_svm(
    histograms: &[Vec<f64>],
    labels: &[String],
    config: &PipelineConfig,
) -> Result<SvmParams, PipelineError> {
    let base = config.resolved_svm_params();
    let c_grid = [1.0, 10.0, 100.0];
    let gamma_grid = [
        1.0 / config.nbins as f64,
        1.0,
        4.0,
        16.0,
        64.0,
    ];
    const FOLDS: usize = 3;

    // Stratified fold assignment: the i-th occurrence of a class goes to
    // fold i mod FOLDS.
    let mut seen: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    let fold_of: Vec<usize> = labels
        .iter()
        .map(|l| {
            let c = seen.entry(l.as_str()).or_insert(0);
            let f = *c % FOLDS;
            *c += 1;
            f
        })
        .collect();

    let mut best: Option<(usize, SvmParams)> = None;
    for &c in &c_grid {
        for &gamma in &gamma_grid {
            let params = SvmParams { c, gamma, ..base };
            let mut correct = 0usize;
            for fold in 0..FOLDS {
                let mut train_x = Vec::new();
                let mut train_y = Vec::new();
                let mut test_x = Vec::new();
                let mut test_y = Vec::new();
                for i in 0..histograms.len() {
                    if fold_of[i] == fold {
                        test_x.push(histograms[i].clone());
                        test_y.push(labels[i].clone());
                    } else {
                        train_x.push(histograms[i].clone());
                        train_y.push(labels[i].clone());
                    }
                }
                let distinct = {
                    let mut t = train_y.clone();
                    t.sort();
                    t.dedup();
                    t.len()
                };
                if distinct < 2 {
                    continue;
                }
                let model = train_multiclass(&train_x, &train_y, &params)?;
                for (x, y) in test_x.iter().zip(&test_y) {
                    if model.predict(x)? == y.as_str() {
                        correct += 1;
                    }
                }
            }
            let better = match &best {
                Some((best_correct, _)) => correct > *best_correct,
                None => true,
            };
            if better {
                best = Some((correct, params));
            }
        }
    }
    Ok(best.map(|(_, p)| p).unwrap_or(base))
}
