//! Write a PNG showing detected keypoints (blue), first-pass selections
//! (green) and enlarged augmentations (red) for one synthetic image.
//!
//! ```bash
//! cargo run --release --example keypoint_overlay -- [out.png]
//! ```

use rand::SeedableRng;
use shipbow::overlay::render_keypoint_overlay;
use shipbow::raster::{gradient_magnitude, to_grayscale};
use shipbow::scalespace::{detect_keypoints, ScaleSpaceParams};
use shipbow::selection::{augment_remainder, greedy_select, score_and_sort, SelectionParams};
use shipbow::synthetic::{render_ship, ShipClass};

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("shipbow-overlay.png"));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let image = render_ship(ShipClass::Container, &mut rng);
    let gray = to_grayscale(&image);
    let keypoints = detect_keypoints(&gray, &ScaleSpaceParams::default()).unwrap();
    let field = gradient_magnitude(&gray).unwrap();
    let params = SelectionParams::default();
    let ordered = score_and_sort(&field, &keypoints, params.score_half_width).unwrap();
    let selection = augment_remainder(greedy_select(&ordered, &params), &params);

    let detected: Vec<_> = ordered.iter().map(|s| s.keypoint).collect();
    let overlay = render_keypoint_overlay(&image, &detected, &selection);
    overlay.save_png(&out).expect("write png");
    println!(
        "{} detected, {} selected, {} enlarged -> {}",
        detected.len(),
        selection.found_n,
        selection.remain_n,
        out.display()
    );
}
