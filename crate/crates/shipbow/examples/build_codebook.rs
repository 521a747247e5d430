//! Fit a k-means visual vocabulary over descriptors pooled from a few
//! synthetic images, then encode one image as a bag-of-words histogram.
//!
//! ```bash
//! cargo run --release --example build_codebook
//! ```

use rand::SeedableRng;
use shipbow::codebook::kmeans_fit;
use shipbow::config::PipelineConfig;
use shipbow::descriptor::{describe_selection, load_provider};
use shipbow::raster::{gradient_magnitude, to_grayscale, RgbImage};
use shipbow::scalespace::detect_keypoints;
use shipbow::selection::{augment_remainder, greedy_select, score_and_sort};
use shipbow::synthetic::{render_ship, ShipClass};

fn image_descriptors(
    image: &RgbImage,
    config: &PipelineConfig,
    provider: &dyn shipbow::DescriptorProvider,
) -> Vec<shipbow::Descriptor> {
    let gray = to_grayscale(image);
    let keypoints = detect_keypoints(&gray, &config.scale_space).unwrap();
    let field = gradient_magnitude(&gray).unwrap();
    let ordered = score_and_sort(&field, &keypoints, config.selection.score_half_width).unwrap();
    let selection = augment_remainder(greedy_select(&ordered, &config.selection), &config.selection);
    describe_selection(provider, image, &selection, &config.selection).unwrap()
}

fn main() {
    let config = PipelineConfig::default();
    let provider = load_provider(&config.provider).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);

    // Pool the Fea set across a handful of images of each class.
    let mut fea = Vec::new();
    let mut per_image = Vec::new();
    for class in ShipClass::all() {
        for _ in 0..3 {
            let image = render_ship(class, &mut rng);
            let ds = image_descriptors(&image, &config, provider.as_ref());
            fea.extend(ds.iter().cloned());
            per_image.push((class, ds));
        }
    }
    println!("pooled {} descriptors from {} images", fea.len(), per_image.len());

    let codebook = kmeans_fit(
        &fea,
        config.nbins,
        config.kmeans_seed,
        config.kmeans_max_iter,
        config.kmeans_tol,
    )
    .unwrap();
    println!("fitted codebook: {} words of dimension {}", codebook.k(), codebook.dim());

    let (class, ds) = &per_image[0];
    let hist = codebook.encode_bow(ds).unwrap();
    let sum: f64 = hist.frequencies().iter().sum();
    let peak = hist
        .frequencies()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    println!(
        "bow histogram of a {} image: sum {:.6}, strongest word {} at {:.3}",
        class.name(),
        sum,
        peak.0,
        peak.1
    );
}
