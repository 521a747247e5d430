//! Detect scale-space keypoints on a synthetic vessel image and print them.
//!
//! ```bash
//! cargo run --release --example detect_keypoints
//! ```

use rand::SeedableRng;
use shipbow::raster::to_grayscale;
use shipbow::scalespace::{detect_keypoints, ScaleSpaceParams};
use shipbow::synthetic::{render_ship, ShipClass};

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let image = render_ship(ShipClass::Container, &mut rng);
    let gray = to_grayscale(&image);

    let params = ScaleSpaceParams::default();
    let keypoints = detect_keypoints(&gray, &params).expect("image large enough");

    println!(
        "{} keypoints on a {}x{} container ship render",
        keypoints.len(),
        image.width(),
        image.height()
    );
    println!("{:>8} {:>8} {:>8} {:>10}", "x", "y", "sigma", "response");
    for kp in keypoints.iter().take(15) {
        println!(
            "{:8.2} {:8.2} {:8.2} {:10.4}",
            kp.x, kp.y, kp.sigma, kp.dog_response
        );
    }
    if keypoints.len() > 15 {
        println!("... and {} more", keypoints.len() - 15);
    }
}
