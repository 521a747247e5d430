//! Turn selected keypoints into 128-dim descriptors with the hand-crafted
//! provider (no model file needed).
//!
//! ```bash
//! cargo run --release --example describe_patches
//! ```

use rand::SeedableRng;
use shipbow::descriptor::{describe_selection, load_provider, ProviderConfig};
use shipbow::raster::{gradient_magnitude, to_grayscale};
use shipbow::scalespace::{detect_keypoints, ScaleSpaceParams};
use shipbow::selection::{augment_remainder, greedy_select, score_and_sort, SelectionParams};
use shipbow::synthetic::{render_ship, ShipClass};

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let image = render_ship(ShipClass::Sailboat, &mut rng);
    let gray = to_grayscale(&image);
    let keypoints = detect_keypoints(&gray, &ScaleSpaceParams::default()).unwrap();
    let field = gradient_magnitude(&gray).unwrap();
    let params = SelectionParams::default();
    let ordered = score_and_sort(&field, &keypoints, params.score_half_width).unwrap();
    let selection = augment_remainder(greedy_select(&ordered, &params), &params);

    let provider = load_provider(&ProviderConfig::default()).unwrap();
    let descriptors = describe_selection(provider.as_ref(), &image, &selection, &params).unwrap();

    println!(
        "described {} patches, dimension {}",
        descriptors.len(),
        provider.dim()
    );
    let d = &descriptors[0];
    let norm: f32 = d.values().iter().map(|v| v * v).sum::<f32>().sqrt();
    println!("first descriptor: L2 norm {norm:.6}");
    println!("  color block    : {:?}", &d.values()[..8]);
    println!("  gradient block : {:?}", &d.values()[48..56]);
    println!("  orientation    : {:?}", &d.values()[112..120]);
}
