//! Train on a tiny synthetic dataset, persist the bundle, reload it and
//! classify a fresh image — the full save/load/predict loop.
//!
//! ```bash
//! cargo run --release --example classify_image
//! ```

use rand::SeedableRng;
use shipbow::config::PipelineConfig;
use shipbow::dataset::scan_dataset;
use shipbow::pipeline::{predict_image, train_pipeline};
use shipbow::synthetic::{generate_dataset, render_ship, ShipClass};
use shipbow::ModelBundle;

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    generate_dataset(dir.path(), 42, 12).expect("write dataset");

    let mut config = PipelineConfig::default();
    config.dataset.train_fraction = 2.0 / 3.0;
    config.svm.c = 10.0;
    config.svm.gamma = Some(32.0);
    let manifest = scan_dataset(dir.path(), 7, config.dataset.train_fraction).unwrap();
    let bundle = train_pipeline(&manifest, &config).expect("train");

    let path = dir.path().join("model.sbow");
    bundle.save(&path).expect("save bundle");
    let reloaded = ModelBundle::load(&path).expect("load bundle");
    println!(
        "bundle round trip ok: {} bytes, version {}",
        std::fs::metadata(&path).unwrap().len(),
        reloaded.version
    );

    // A brand-new image the model has never seen.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(777);
    let fresh = render_ship(ShipClass::Sailboat, &mut rng);
    let fresh_path = dir.path().join("fresh.png");
    fresh.save_png(&fresh_path).unwrap();
    let class = predict_image(&reloaded, &fresh_path).expect("predict");
    println!("fresh sailboat render classified as: {class}");
}
