//! Train the one-vs-one RBF-SVM on toy 2-D clusters and inspect the
//! pairwise models and votes.
//!
//! ```bash
//! cargo run --release --example train_svm
//! ```

use rand::{Rng, SeedableRng};
use shipbow::svm::{train_multiclass, SvmParams};

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
    let centers = [
        (0.0, 0.0, "buoy"),
        (5.0, 0.0, "ferry"),
        (2.5, 4.5, "trawler"),
    ];
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for &(cx, cy, name) in &centers {
        for _ in 0..40 {
            x.push(vec![
                cx + rng.random_range(-1.0..1.0),
                cy + rng.random_range(-1.0..1.0),
            ]);
            labels.push(name.to_string());
        }
    }

    let params = SvmParams {
        c: 10.0,
        gamma: 0.5,
        ..SvmParams::default()
    };
    let model = train_multiclass(&x, &labels, &params).unwrap();

    println!("classes: {:?}", model.class_names);
    for pair in &model.pairwise {
        println!(
            "  {} vs {}: {} support vectors, bias {:+.4}",
            model.class_names[pair.class_a],
            model.class_names[pair.class_b],
            pair.model.support_vectors.len(),
            pair.model.bias
        );
    }

    let mut correct = 0;
    for (xi, li) in x.iter().zip(&labels) {
        if model.predict(xi).unwrap() == li.as_str() {
            correct += 1;
        }
    }
    println!("training accuracy: {}/{}", correct, x.len());
    for &(cx, cy, name) in &centers {
        println!(
            "  query at ({cx:.1}, {cy:.1}) -> {} (expected {name})",
            model.predict(&[cx, cy]).unwrap()
        );
    }
}
