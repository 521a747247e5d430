//! Directory-per-class dataset layout and seeded stratified splits.
//!
//! Expected layout: `<root>/<class_name>/*.{png,jpg,jpeg}`. Every class is
//! split independently so the train/test ratio holds per class, and the
//! shuffle is driven by a caller-provided seed so the same root and seed
//! always produce the same manifest.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset root is not a directory: {0}")]
    NotADirectory(String),
    #[error("no class directories found under {0}")]
    NoClasses(String),
    #[error("class '{class}' has {count} images, need at least 2")]
    EmptyClass { class: String, count: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}', expected train|test")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub class: String,
    pub split: Split,
}

/// All images of a dataset with their class labels and split assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub classes: Vec<String>,
    pub entries: Vec<DatasetEntry>,
}

impl DatasetManifest {
    pub fn entries_for(&self, split: Split) -> impl Iterator<Item = &DatasetEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count_for(&self, split: Split) -> usize {
        self.entries_for(split).count()
    }
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("png") | Some("jpg") | Some("jpeg")
    )
}

/// Scan `root` and assign a stratified random split per class.
///
/// `train_fraction` of every class (rounded, but always leaving at least
/// one image on each side) goes to the train split.
pub fn scan_dataset(
    root: &Path,
    split_seed: u64,
    train_fraction: f64,
) -> Result<DatasetManifest, DatasetError> {
    if !root.is_dir() {
        return Err(DatasetError::NotADirectory(root.display().to_string()));
    }
    let mut class_dirs: Vec<(String, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(root)? {
        let entry = entry?;
        if entry.path().is_dir() {
            class_dirs.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
        }
    }
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(DatasetError::NoClasses(root.display().to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    let mut classes = Vec::with_capacity(class_dirs.len());
    let mut entries = Vec::new();
    for (class, dir) in class_dirs {
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && is_image_file(p))
            .collect();
        files.sort();
        if files.len() < 2 {
            return Err(DatasetError::EmptyClass {
                class,
                count: files.len(),
            });
        }
        files.shuffle(&mut rng);
        let n = files.len();
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
        for (i, path) in files.into_iter().enumerate() {
            entries.push(DatasetEntry {
                path,
                class: class.clone(),
                split: if i < n_train { Split::Train } else { Split::Test },
            });
        }
        classes.push(class);
    }
    Ok(DatasetManifest { classes, entries })
}
