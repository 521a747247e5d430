//! Run a small parameter sweep on a synthetic dataset and print the CSV
//! table (DistTH,minOver,TopN,Nbins,Er_train,Er_test).
//!
//! ```bash
//! cargo run --release --example sweep_parameters
//! ```

use shipbow::config::PipelineConfig;
use shipbow::dataset::scan_dataset;
use shipbow::pipeline::{sweep, sweep_rows_to_csv, GridPoint};
use shipbow::synthetic::generate_dataset;

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    generate_dataset(dir.path(), 42, 15).expect("write dataset");

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

    let grid = vec![
        GridPoint { dist_th: 15.0, min_over: 2, top_n: 100, nbins: 50 },
        GridPoint { dist_th: 15.0, min_over: 2, top_n: 60, nbins: 30 },
        GridPoint { dist_th: 10.0, min_over: 1, top_n: 60, nbins: 30 },
    ];
    let rows = sweep(&manifest, &config, &grid).expect("sweep");
    print!("{}", sweep_rows_to_csv(&rows));
}
