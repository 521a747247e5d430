//! End-to-end run: generate a small synthetic dataset, train the full
//! pipeline with the hand-crafted provider and print evaluation reports
//! for both splits.
//!
//! ```bash
//! cargo run --release --example train_and_evaluate
//! ```

use shipbow::config::PipelineConfig;
use shipbow::dataset::{scan_dataset, Split};
use shipbow::pipeline::{evaluate, train_pipeline};
use shipbow::synthetic::generate_dataset;

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    generate_dataset(dir.path(), 42, 24).expect("write dataset");

    let mut config = PipelineConfig::default();
    config.dataset.train_fraction = 2.0 / 3.0;
    config.svm.c = 10.0;
    config.svm.gamma = Some(32.0);

    let manifest = scan_dataset(
        dir.path(),
        config.dataset.split_seed,
        config.dataset.train_fraction,
    )
    .expect("scan dataset");
    println!(
        "dataset: {} train / {} test images, classes {:?}",
        manifest.count_for(Split::Train),
        manifest.count_for(Split::Test),
        manifest.classes
    );

    let start = std::time::Instant::now();
    let bundle = train_pipeline(&manifest, &config).expect("train");
    println!(
        "trained in {:.1}s ({} words, {} pairwise models)",
        start.elapsed().as_secs_f64(),
        bundle.codebook.k(),
        bundle.classifier.pairwise.len()
    );

    for split in [Split::Train, Split::Test] {
        let report = evaluate(&bundle, &manifest, split).expect("evaluate");
        println!("--- {split:?} ---");
        print!("{}", report.to_text());
    }
}
