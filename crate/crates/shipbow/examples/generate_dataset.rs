//! Generate the synthetic silhouette dataset on disk.
//!
//! ```bash
//! cargo run --release --example generate_dataset -- [out_dir]
//! ```

use shipbow::synthetic::{generate_dataset, CLASSES};

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("shipbow-synthetic"));
    let files = generate_dataset(&out, 42, 12).expect("write dataset");
    println!("wrote {} images under {}", files.len(), out.display());
    for class in CLASSES {
        println!("  {}/", out.join(class).display());
    }
}
