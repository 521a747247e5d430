//! Thin command-line front end over the shipbow library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shipbow::config::PipelineConfig;
use shipbow::dataset::{scan_dataset, Split};
use shipbow::overlay::render_keypoint_overlay;
use shipbow::pipeline::{
    self, default_sweep_grid, sweep_rows_to_csv, GridPoint, PipelineError,
};
use shipbow::selection::{augment_remainder, greedy_select};
use shipbow::ModelBundle;

#[derive(Parser)]
#[command(name = "shipbow", version, about = "Ship classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a directory-per-class dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// JSON configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Pick SVM c and gamma by cross-validated grid search.
        #[arg(long)]
        svm_grid: bool,
    },
    /// Classify one image; prints the class name.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        image: PathBuf,
    },
    /// Evaluate a model on the train or test split of a dataset.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        split: Split,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Train and evaluate across a parameter grid; emits CSV.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        /// Grid CSV with columns DistTH,minOver,TopN,Nbins; the built-in
        /// nine-row grid applies when omitted.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a keypoint overlay PNG for one image.
    InspectKeypoints {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the synthetic silhouette dataset.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 90)]
        per_class: usize,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, Box<dyn std::error::Error>> {
    Ok(match path {
        Some(p) => PipelineConfig::from_json_file(p)?,
        None => PipelineConfig::default(),
    })
}

fn parse_grid_csv(path: &PathBuf) -> Result<Vec<GridPoint>, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)?;
    let mut grid = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 4 {
            return Err(format!("grid line {}: expected 4 columns", lineno + 1).into());
        }
        // Skip a header row.
        if fields[0].parse::<f64>().is_err() {
            continue;
        }
        grid.push(GridPoint {
            dist_th: fields[0].parse()?,
            min_over: fields[1].parse()?,
            top_n: fields[2].parse()?,
            nbins: fields[3].parse()?,
        });
    }
    if grid.is_empty() {
        return Err("grid file contains no parameter rows".into());
    }
    Ok(grid)
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Train {
            data,
            config,
            out,
            svm_grid,
        } => {
            let mut config = load_config(&config)?;
            if svm_grid {
                config.svm.grid_search = true;
            }
            let manifest = scan_dataset(
                &data,
                config.dataset.split_seed,
                config.dataset.train_fraction,
            )?;
            let bundle = pipeline::train_pipeline(&manifest, &config)?;
            bundle.save(&out)?;
            eprintln!(
                "trained on {} images ({} classes), wrote {}",
                manifest.count_for(Split::Train),
                bundle.class_names.len(),
                out.display()
            );
            if !bundle.build_log.is_empty() {
                eprintln!("excluded {} images:", bundle.build_log.len());
                for entry in &bundle.build_log {
                    eprintln!("  {}: {}", entry.path, entry.reason);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { bundle, image } => {
            let bundle = ModelBundle::load(&bundle)?;
            match pipeline::predict_image(&bundle, &image) {
                Ok(class) => {
                    println!("{class}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) if e.is_zero_keypoints() => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Evaluate {
            bundle,
            data,
            split,
            format,
        } => {
            let bundle = ModelBundle::load(&bundle)?;
            let manifest = scan_dataset(
                &data,
                bundle.config.dataset.split_seed,
                bundle.config.dataset.train_fraction,
            )?;
            let report = pipeline::evaluate(&bundle, &manifest, split)?;
            match format {
                OutputFormat::Text => print!("{}", report.to_text()),
                OutputFormat::Csv => print!("{}", report.to_csv()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            data,
            grid,
            config,
            out,
        } => {
            let config = load_config(&config)?;
            let grid = match &grid {
                Some(path) => parse_grid_csv(path)?,
                None => default_sweep_grid(),
            };
            let manifest = scan_dataset(
                &data,
                config.dataset.split_seed,
                config.dataset.train_fraction,
            )?;
            let rows = pipeline::sweep(&manifest, &config, &grid)?;
            let csv = sweep_rows_to_csv(&rows);
            match out {
                Some(path) => std::fs::write(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::InspectKeypoints { image, config, out } => {
            let config = load_config(&config)?;
            let scored = match pipeline::score_image(&image, &config) {
                Ok(s) => s,
                Err(PipelineError::ZeroKeypoints { path }) => {
                    eprintln!("no keypoints detected in {path}");
                    return Ok(ExitCode::from(2));
                }
                Err(e) => return Err(e.into()),
            };
            let detected: Vec<_> = scored.ordered.iter().map(|s| s.keypoint).collect();
            let selection = augment_remainder(
                greedy_select(&scored.ordered, &config.selection),
                &config.selection,
            );
            let overlay = render_keypoint_overlay(&scored.image, &detected, &selection);
            overlay.save_png(&out)?;
            eprintln!(
                "{}: {} detected, {} selected (+{} enlarged) -> {}",
                image.display(),
                detected.len(),
                selection.found_n,
                selection.remain_n,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::GenSynthetic {
            out,
            seed,
            per_class,
        } => {
            let files = shipbow::synthetic::generate_dataset(&out, seed, per_class)?;
            eprintln!(
                "wrote {} images across {} classes under {}",
                files.len(),
                shipbow::synthetic::CLASSES.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
