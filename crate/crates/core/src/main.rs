use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aliassr::eval::{
    evaluate_split, render_previews, render_report, run_cross_spectral_experiment,
    run_table1_experiment, EvalReport, ExperimentOptions,
};
use aliassr::net::checkpoint::{file_hash, load_checkpoint, save_checkpoint};
use aliassr::net::model::ModelSpec;
use aliassr::net::train::{train, write_loss_csv, TrainConfig};
use aliassr::pairing::{run_pairing, PairingOptions};
use aliassr::sim::{build_synthetic_dataset, AcquisitionConfig, Manifest, Split};
use aliassr::{corpus, Error};

#[derive(Parser)]
#[command(
    name = "aliassr",
    version,
    about = "x2 super-resolution study toolkit for aliased, band-shifted satellite-like imagery"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize an LR/HR crop dataset under one acquisition configuration.
    Simulate {
        /// Directory of HR ground-truth images (*.png or *.ras)
        #[arg(long)]
        hr_dir: PathBuf,
        /// Configuration id: {alias|noalias}:{none|fixed|random}
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// LR crop size in pixels
        #[arg(long, default_value_t = 64)]
        crop: usize,
        #[arg(long, default_value_t = 8)]
        max_crops: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Additive Gaussian noise level as a fraction of the 12-bit range
        #[arg(long, default_value_t = 0.001)]
        noise: f64,
        /// Scene-level test fraction (0 disables split assignment)
        #[arg(long, default_value_t = 0.0)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        val_fraction: f64,
    },
    /// Build registered LR/HR pairs from a pairing list (equalize, register,
    /// filter by score, split).
    Pair {
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.55)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        crop: usize,
        #[arg(long, default_value_t = 8)]
        max_crops: usize,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0.1)]
        val_fraction: f64,
    },
    /// Train a model on the train split of a dataset manifest.
    Train {
        /// Manifest file or dataset directory
        #[arg(long)]
        manifest: PathBuf,
        /// Model profile: tiny | paper
        #[arg(long, default_value = "tiny")]
        spec: String,
        #[arg(long, default_value_t = 3000)]
        iters: usize,
        #[arg(long, default_value_t = 2)]
        batch: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Checkpoint output path
        #[arg(long)]
        out: PathBuf,
        /// LR patch size sampled per batch element
        #[arg(long, default_value_t = 16)]
        crop: usize,
        /// Train on a single band of multi-band pairs (0-based)
        #[arg(long)]
        band: Option<usize>,
    },
    /// Evaluate a checkpoint on one split of a manifest.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Split: test | train | val
        #[arg(long, default_value = "test")]
        split: String,
        /// Report output path (JSON)
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        band: Option<usize>,
    },
    /// Run the six-configuration alias/shift study end to end.
    Table1 {
        #[arg(long)]
        hr_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3000)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        crop: usize,
        #[arg(long, default_value_t = 8)]
        max_crops: usize,
        #[arg(long, default_value_t = 0.001)]
        noise: f64,
        /// Concurrent training jobs
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Cross-spectral ablation: joint RGB model vs per-band models.
    Xspectral {
        /// Dataset directory or manifest file (needs split tags)
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1500)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Re-render tables and previews from a table1 output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a procedural HR ground-truth corpus.
    Corpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 24)]
        count: usize,
        #[arg(long, default_value_t = 192)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn manifest_location(path: &Path) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.to_path_buf(), path.join("manifest.json"))
    } else {
        (
            path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            path.to_path_buf(),
        )
    }
}

fn parse_split(s: &str) -> Result<Split, Error> {
    match s {
        "test" => Ok(Split::Test),
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        _ => Err(Error::invalid(format!("unknown split `{s}`"))),
    }
}

fn run(cmd: Cmd) -> Result<(), Error> {
    match cmd {
        Cmd::Simulate {
            hr_dir,
            config,
            out,
            crop,
            max_crops,
            seed,
            noise,
            test_fraction,
            val_fraction,
        } => {
            let mut cfg = AcquisitionConfig::parse_id(&config, seed)?;
            cfg.noise_level = noise;
            let mut manifest = build_synthetic_dataset(&hr_dir, &cfg, &out, crop, max_crops, seed)?;
            if test_fraction > 0.0 || val_fraction > 0.0 {
                let mut rng = aliassr::raster::Rng::with_stream(seed, u64::MAX);
                aliassr::pairing::assemble_splits(
                    &mut manifest.pairs,
                    test_fraction,
                    val_fraction,
                    &mut rng,
                )?;
                manifest.save(out.join("manifest.json"))?;
            }
            println!(
                "wrote {} pairs under {} ({} inputs skipped)",
                manifest.pairs.len(),
                out.display(),
                manifest.skipped.len()
            );
            Ok(())
        }
        Cmd::Pair {
            list,
            out,
            threshold,
            seed,
            crop,
            max_crops,
            test_fraction,
            val_fraction,
        } => {
            let opts = PairingOptions {
                threshold,
                crop,
                max_crops,
                test_fraction,
                val_fraction,
                seed,
            };
            let manifest = run_pairing(&list, &out, &opts)?;
            println!(
                "kept {} pairs under {} ({} scenes skipped or filtered)",
                manifest.pairs.len(),
                out.display(),
                manifest.skipped.len()
            );
            Ok(())
        }
        Cmd::Train {
            manifest,
            spec,
            iters,
            batch,
            lr,
            seed,
            out,
            crop,
            band,
        } => {
            let (dir, file) = manifest_location(&manifest);
            let manifest = Manifest::load(&file)?;
            let in_bands = if band.is_some() { 1 } else { 3 };
            let spec = ModelSpec::parse(&spec, in_bands)?;
            let cfg = TrainConfig {
                lr,
                batch,
                iters,
                seed,
                crop,
                band,
                ..Default::default()
            };
            let outcome = train(&dir, &manifest, &spec, &cfg)?;
            save_checkpoint(&out, &spec, &outcome.params)?;
            let loss_path = out.with_extension("loss.csv");
            write_loss_csv(&loss_path, &outcome.loss_history)?;
            println!(
                "trained {} iterations, final loss {:.6}; checkpoint {}",
                iters,
                outcome.loss_history.last().copied().unwrap_or(f64::NAN),
                out.display()
            );
            Ok(())
        }
        Cmd::Eval {
            ckpt,
            manifest,
            split,
            report,
            band,
        } => {
            let (dir, file) = manifest_location(&manifest);
            let manifest = Manifest::load(&file)?;
            let split = parse_split(&split)?;
            let (spec, params) = load_checkpoint(&ckpt)?;
            let started = std::time::Instant::now();
            let eval = evaluate_split(&dir, &manifest, split, &spec, &params, band)?;
            let out = EvalReport {
                config: match &manifest.config {
                    aliassr::sim::ManifestConfig::Synthetic(c) => c.id(),
                    aliassr::sim::ManifestConfig::Paired { .. } => "paired".to_string(),
                },
                checkpoint_hash: file_hash(&ckpt)?,
                splits: vec![eval],
                runtime_seconds: started.elapsed().as_secs_f64(),
            };
            out.save(&report)?;
            let s = &out.splits[0];
            println!(
                "{:?} split: mean PSNR {:.3} dB over {} pairs ({:.1}s)",
                s.split,
                s.mean_psnr,
                s.per_pair.len(),
                out.runtime_seconds
            );
            Ok(())
        }
        Cmd::Table1 {
            hr_dir,
            out,
            iters,
            seed,
            crop,
            max_crops,
            noise,
            workers,
        } => {
            let mut opts = ExperimentOptions {
                iters,
                seed,
                crop,
                max_crops,
                noise_level: noise,
                ..Default::default()
            };
            if let Some(w) = workers {
                opts.workers = w.max(1);
            }
            let reports = run_table1_experiment(&hr_dir, &out, &opts)?;
            println!("table written to {}", out.join("table1.txt").display());
            for r in &reports {
                let test = r
                    .split(Split::Test)
                    .map(|s| s.mean_psnr)
                    .unwrap_or(f64::NAN);
                println!("{:<16} test {:.2} dB", r.config, test);
            }
            Ok(())
        }
        Cmd::Xspectral {
            manifest,
            out,
            iters,
            seed,
            workers,
        } => {
            let (dir, _) = manifest_location(&manifest);
            let mut opts = ExperimentOptions {
                iters,
                seed,
                ..Default::default()
            };
            if let Some(w) = workers {
                opts.workers = w.max(1);
            }
            let report = run_cross_spectral_experiment(&dir, &out, &opts)?;
            println!(
                "joint {:.3} dB vs per-band ensemble {:.3} dB (gap {:+.3} dB)",
                report.joint_test_psnr, report.ensemble_test_psnr, report.gap_db
            );
            Ok(())
        }
        Cmd::Report { input, out } => {
            let reports_dir = input.join("reports");
            let mut reports = Vec::new();
            if reports_dir.is_dir() {
                let mut paths: Vec<PathBuf> = std::fs::read_dir(&reports_dir)?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|e| e == "json"))
                    .collect();
                paths.sort();
                for p in paths {
                    reports.push(EvalReport::load(&p)?);
                }
            }
            render_report(&reports, &out)?;
            // Previews when datasets and checkpoints are still around.
            let datasets = input.join("datasets");
            if datasets.is_dir() {
                let mut cells = Vec::new();
                for r in &reports {
                    let stem = r.config.replace(':', "_");
                    let dir = datasets.join(&stem);
                    let manifest_path = dir.join("manifest.json");
                    if manifest_path.exists() {
                        cells.push((r.config.clone(), dir, Manifest::load(&manifest_path)?));
                    }
                }
                if !cells.is_empty() && input.join("models").is_dir() {
                    render_previews(&input, &cells, 2)?;
                    // Rendered previews live next to the models; copy the
                    // directory reference into the report output for
                    // discoverability when the caller separated them.
                    if out != input {
                        let src = input.join("previews");
                        if src.is_dir() {
                            let dst = out.join("previews");
                            std::fs::create_dir_all(&dst)?;
                            for e in std::fs::read_dir(&src)? {
                                let p = e?.path();
                                if let Some(name) = p.file_name() {
                                    std::fs::copy(&p, dst.join(name))?;
                                }
                            }
                        }
                    }
                }
            }
            println!("report rendered to {}", out.display());
            Ok(())
        }
        Cmd::Corpus {
            out,
            count,
            size,
            seed,
        } => {
            if size % 2 != 0 {
                return Err(Error::invalid("corpus size must be even"));
            }
            let paths = corpus::generate_corpus(&out, count, size, seed)?;
            println!("wrote {} scenes to {}", paths.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // usage error.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Divergence(msg)) => {
            eprintln!("error: training diverged: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
