//! Describe patches with a pretrained ONNX network instead of the
//! hand-crafted descriptor. Needs a model file with a 128-wide output;
//! point `SHIPBOW_ONNX_MODEL` at it (the `make_tiny_onnx` example writes a
//! self-contained test model).
//!
//! ```bash
//! SHIPBOW_ONNX_MODEL=model.onnx cargo run --release --example onnx_descriptors
//! ```

use rand::SeedableRng;
use shipbow::descriptor::{load_provider, ProviderConfig, ProviderKind};
use shipbow::raster::extract_patch;
use shipbow::synthetic::{render_ship, ShipClass};

fn main() {
    let Ok(model_path) = std::env::var("SHIPBOW_ONNX_MODEL") else {
        println!("SHIPBOW_ONNX_MODEL not set; skipping the deep-provider demo");
        return;
    };
    let config = ProviderConfig {
        kind: ProviderKind::Deep,
        model_path: Some(model_path.into()),
        ..ProviderConfig::default()
    };
    let provider = load_provider(&config).expect("load ONNX model");
    println!("loaded deep provider, descriptor dimension {}", provider.dim());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let image = render_ship(ShipClass::Tanker, &mut rng);
    let patch = extract_patch(&image, (64, 80), 64).unwrap();
    let d = provider.describe(&patch).expect("forward pass");
    println!(
        "first activations: {:?}",
        &d.values()[..8.min(d.values().len())]
    );
    println!(
        "finite: {}, dim: {}",
        d.values().iter().all(|v| v.is_finite()),
        d.dim()
    );
}
