//! Gradient-ranked, dispersion-constrained keypoint selection on a
//! synthetic image: shows how the greedy pass spreads points out and how
//! the enlarged-patch augmentation tops the set up to TopN.
//!
//! ```bash
//! cargo run --release --example select_dispersed
//! ```

use rand::SeedableRng;
use shipbow::raster::{gradient_magnitude, to_grayscale};
use shipbow::scalespace::{detect_keypoints, ScaleSpaceParams};
use shipbow::selection::{augment_remainder, greedy_select, score_and_sort, SelectionParams};
use shipbow::synthetic::{render_ship, ShipClass};

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let image = render_ship(ShipClass::Tanker, &mut rng);
    let gray = to_grayscale(&image);
    let keypoints = detect_keypoints(&gray, &ScaleSpaceParams::default()).unwrap();
    let field = gradient_magnitude(&gray).unwrap();

    let params = SelectionParams::default();
    let ordered = score_and_sort(&field, &keypoints, params.score_half_width).unwrap();
    println!(
        "detected {} keypoints, best window score {:.3}",
        ordered.len(),
        ordered.first().map(|s| s.score).unwrap_or(0.0)
    );

    let first_pass = greedy_select(&ordered, &params);
    println!(
        "greedy pass kept {} of a requested {} (dist_th {}, min_over {})",
        first_pass.found_n, params.top_n, params.dist_th, params.min_over
    );

    let full = augment_remainder(first_pass, &params);
    println!(
        "after augmentation: {} first-pass + {} enlarged re-selections",
        full.found_n, full.remain_n
    );

    // Smallest pairwise distance among the first-pass selections.
    let mut min_dist = f64::INFINITY;
    let first: Vec<_> = full.selected.iter().filter(|s| !s.enlarged).collect();
    for i in 0..first.len() {
        for j in i + 1..first.len() {
            let a = &first[i].point.keypoint;
            let b = &first[j].point.keypoint;
            let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt() as f64;
            min_dist = min_dist.min(d);
        }
    }
    println!("closest pair among first-pass selections: {min_dist:.1} px");
}
