//! Metrics, tiled inference, the comparative experiments (six-configuration
//! alias/shift grid, cross-spectral ablation), and report rendering.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::net::checkpoint::{file_hash, load_checkpoint, save_checkpoint};
use crate::net::model::{predict, ModelParams, ModelSpec};
use crate::net::train::{raster_to_tensor, tensor_to_raster, train, write_loss_csv, TrainConfig};
use crate::pairing::assemble_splits;
use crate::raster::{read_raster, write_png_preview, Raster, Rng, DN_PEAK};
use crate::sim::{build_synthetic_dataset, AcquisitionConfig, Manifest, Split};
use crate::{Error, Result};

/// Peak signal-to-noise ratio in dB over all bands jointly, with the 12-bit
/// peak by default. Identical inputs yield the infinity sentinel.
pub fn psnr(pred: &Raster, reference: &Raster, peak: f64) -> Result<f64> {
    if pred.bands() != reference.bands()
        || pred.height() != reference.height()
        || pred.width() != reference.width()
    {
        return Err(Error::dimension(format!(
            "psnr shape mismatch: {}x{}x{} vs {}x{}x{}",
            pred.bands(),
            pred.height(),
            pred.width(),
            reference.bands(),
            reference.height(),
            reference.width()
        )));
    }
    let mut se = 0.0f64;
    for (&a, &b) in pred.data().iter().zip(reference.data()) {
        let d = a as f64 - b as f64;
        se += d * d;
    }
    let mse = se / pred.data().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// x2 super-resolve a raster, tiling large scenes and blending the tile
/// overlaps with feathered weights. Small scenes take the direct path.
pub fn infer(
    spec: &ModelSpec,
    params: &ModelParams<f32>,
    lr: &Raster,
    tile: usize,
    overlap: usize,
) -> Result<Raster> {
    if lr.bands() != spec.in_bands {
        return Err(Error::dimension(format!(
            "input has {} bands but the checkpoint expects {}",
            lr.bands(),
            spec.in_bands
        )));
    }
    let (h, w) = (lr.height(), lr.width());
    if h <= tile && w <= tile {
        let out = predict(spec, params, &raster_to_tensor(lr))?;
        return tensor_to_raster(&out);
    }
    if overlap < 8 {
        return Err(Error::invalid("tiled inference needs overlap >= 8"));
    }
    let tile = tile.min(h).min(w);
    let step = tile - overlap;

    let origins = |extent: usize| -> Vec<usize> {
        let mut v = Vec::new();
        let mut at = 0;
        loop {
            let clamped = at.min(extent.saturating_sub(tile));
            v.push(clamped);
            if clamped + tile >= extent {
                break;
            }
            at += step;
        }
        v.dedup();
        v
    };

    let bands = lr.bands();
    let (oh, ow) = (2 * h, 2 * w);
    let mut num = vec![0.0f64; bands * oh * ow];
    let mut den = vec![0.0f64; oh * ow];

    // Tile edges that face a neighboring tile see zero padding instead of
    // real context, so the outer half of the overlap is discarded and the
    // inner half feathered; image borders keep full weight. With HR overlap
    // V, a discarded point sits >= V/2 inside the neighboring tile, so
    // coverage never drops to zero.
    let v = 2 * overlap; // HR-grid overlap
    let ramp = |t: usize, len: usize, lo_edge: bool, hi_edge: bool| -> f64 {
        let profile = |d: usize| -> f64 {
            if d < v / 2 {
                0.0
            } else if d < v {
                (d - v / 2 + 1) as f64 / (v / 2 + 1) as f64
            } else {
                1.0
            }
        };
        let mut weight = 1.0f64;
        if !lo_edge {
            weight = weight.min(profile(t));
        }
        if !hi_edge {
            weight = weight.min(profile(len - 1 - t));
        }
        weight
    };

    for &r0 in &origins(h) {
        for &c0 in &origins(w) {
            let tile_lr = lr.crop(r0, c0, tile, tile)?;
            let pred = predict(spec, params, &raster_to_tensor(&tile_lr))?;
            let sr = tensor_to_raster(&pred)?;
            for b in 0..bands {
                let src = sr.band(b);
                for y in 0..2 * tile {
                    let gy = 2 * r0 + y;
                    let wy = ramp(y, 2 * tile, r0 == 0, r0 + tile == h);
                    if wy == 0.0 {
                        continue;
                    }
                    for x in 0..2 * tile {
                        let gx = 2 * c0 + x;
                        let wx = ramp(x, 2 * tile, c0 == 0, c0 + tile == w);
                        let wgt = wy * wx;
                        num[(b * oh + gy) * ow + gx] += wgt * src[y * 2 * tile + x] as f64;
                        if b == 0 {
                            den[gy * ow + gx] += wgt;
                        }
                    }
                }
            }
        }
    }
    let mut data = vec![0.0f32; bands * oh * ow];
    for b in 0..bands {
        for i in 0..oh * ow {
            data[b * oh * ow + i] = (num[b * oh * ow + i] / den[i]) as f32;
        }
    }
    Raster::new(bands, oh, ow, data)
}

/// Per-split evaluation results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitEval {
    pub split: Split,
    pub mean_psnr: f64,
    pub per_pair: Vec<f64>,
}

/// Evaluation of one trained model over its dataset splits. The wall-clock
/// runtime is kept out of the serialized form so that reports are
/// byte-identical across reruns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: String,
    pub checkpoint_hash: String,
    pub splits: Vec<SplitEval>,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl EvalReport {
    pub fn split(&self, split: Split) -> Option<&SplitEval> {
        self.splits.iter().find(|s| s.split == split)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format(format!("report serialization: {e}")))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<EvalReport> {
        let text = fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("bad report: {e}")))
    }
}

/// Evaluate a model over one split of a manifest. Multi-band pairs can be
/// restricted to a single band to evaluate per-channel models.
pub fn evaluate_split(
    manifest_dir: &Path,
    manifest: &Manifest,
    split: Split,
    spec: &ModelSpec,
    params: &ModelParams<f32>,
    band: Option<usize>,
) -> Result<SplitEval> {
    let records = manifest.split_pairs(split);
    let mut per_pair = Vec::with_capacity(records.len());
    for rec in records {
        let mut lr = read_raster(manifest_dir.join(&rec.lr_path))?;
        let mut hr = read_raster(manifest_dir.join(&rec.hr_path))?;
        if let Some(b) = band {
            lr = lr.single_band(b)?;
            hr = hr.single_band(b)?;
        }
        let sr = infer(spec, params, &lr, 256, 8)?;
        per_pair.push(psnr(&sr, &hr, DN_PEAK as f64)?);
    }
    let mean = if per_pair.is_empty() {
        f64::NAN
    } else {
        per_pair.iter().sum::<f64>() / per_pair.len() as f64
    };
    Ok(SplitEval {
        split,
        mean_psnr: mean,
        per_pair,
    })
}

/// Evaluate one model over train/val/test.
pub fn evaluate_all_splits(
    manifest_dir: &Path,
    manifest: &Manifest,
    spec: &ModelSpec,
    params: &ModelParams<f32>,
    config_id: &str,
    checkpoint_hash: &str,
) -> Result<EvalReport> {
    let start = std::time::Instant::now();
    let mut splits = Vec::new();
    for split in [Split::Test, Split::Train, Split::Val] {
        splits.push(evaluate_split(
            manifest_dir,
            manifest,
            split,
            spec,
            params,
            None,
        )?);
    }
    Ok(EvalReport {
        config: config_id.to_string(),
        checkpoint_hash: checkpoint_hash.to_string(),
        splits,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Settings shared by the comparative experiments.
#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub iters: usize,
    pub seed: u64,
    /// LR crop size of the dataset pairs.
    pub crop: usize,
    pub max_crops: usize,
    pub noise_level: f64,
    pub batch: usize,
    /// LR patch size sampled during training.
    pub train_crop: usize,
    pub learning_rate: f64,
    pub test_fraction: f64,
    pub val_fraction: f64,
    /// Concurrent experiment cells (each cell runs sequentially inside).
    pub workers: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            iters: 3000,
            seed: 0,
            crop: 64,
            max_crops: 8,
            noise_level: 0.001,
            batch: 2,
            train_crop: 16,
            learning_rate: 4e-4,
            test_fraction: 0.2,
            val_fraction: 0.1,
            workers: std::thread::available_parallelism()
                .map(|n| n.get().min(2))
                .unwrap_or(1),
        }
    }
}

impl ExperimentOptions {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.learning_rate,
            batch: self.batch,
            iters: self.iters,
            seed: self.seed,
            crop: self.train_crop,
            ..Default::default()
        }
    }
}

/// Run a batch of independent training jobs, at most `workers` at a time.
/// The in-kernel rayon paths are disabled for the duration so that each job
/// stays on one core; results are independent of scheduling either way.
fn run_jobs<J, F>(jobs: Vec<J>, workers: usize, run: F) -> Result<()>
where
    J: Send,
    F: Fn(J) -> Result<()> + Sync,
{
    let was_parallel = crate::par::is_parallel();
    crate::par::set_parallel(false);
    let queue = Mutex::new(VecDeque::from(jobs));
    let failures: Mutex<Vec<Error>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let job = queue.lock().unwrap().pop_front();
                let Some(job) = job else { break };
                if let Err(e) = run(job) {
                    failures.lock().unwrap().push(e);
                }
            });
        }
    });
    crate::par::set_parallel(was_parallel);
    match failures.into_inner().unwrap().into_iter().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Six-configuration alias/shift study: builds one synthetic dataset per
/// configuration from the same corpus and seed (identical crops and splits),
/// trains one model per cell with the same budget, and evaluates each on its
/// own train/val/test splits.
pub fn run_table1_experiment(
    hr_dir: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    opts: &ExperimentOptions,
) -> Result<Vec<EvalReport>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir.join("datasets"))?;
    fs::create_dir_all(out_dir.join("models"))?;
    fs::create_dir_all(out_dir.join("reports"))?;

    let configs = AcquisitionConfig::all_six(opts.seed);
    // Datasets: identical crop geometry and split assignment across cells.
    let mut manifests = Vec::new();
    for cfg in &configs {
        let mut cfg = cfg.clone();
        cfg.noise_level = opts.noise_level;
        let dir = out_dir.join("datasets").join(cfg.id().replace(':', "_"));
        let mut manifest =
            build_synthetic_dataset(&hr_dir, &cfg, &dir, opts.crop, opts.max_crops, opts.seed)?;
        let mut split_rng = Rng::with_stream(opts.seed, u64::MAX);
        assemble_splits(
            &mut manifest.pairs,
            opts.test_fraction,
            opts.val_fraction,
            &mut split_rng,
        )?;
        manifest.save(dir.join("manifest.json"))?;
        manifests.push((cfg, dir, manifest));
    }

    let spec = ModelSpec::tiny(3);
    let train_cfg = opts.train_config();
    let jobs: Vec<usize> = (0..manifests.len()).collect();
    run_jobs(jobs, opts.workers, |idx| {
        let (cfg, dir, manifest) = &manifests[idx];
        let started = std::time::Instant::now();
        let outcome = train(dir, manifest, &spec, &train_cfg)?;
        let stem = cfg.id().replace(':', "_");
        let ckpt = out_dir.join("models").join(format!("{stem}.srw"));
        save_checkpoint(&ckpt, &spec, &outcome.params)?;
        write_loss_csv(out_dir.join("models").join(format!("{stem}_loss.csv")), &outcome.loss_history)?;
        eprintln!(
            "trained {} in {:.0}s (final loss {:.5})",
            cfg.id(),
            started.elapsed().as_secs_f64(),
            outcome.loss_history.last().copied().unwrap_or(f64::NAN)
        );
        Ok(())
    })?;

    let mut reports = Vec::new();
    for (cfg, dir, manifest) in &manifests {
        let stem = cfg.id().replace(':', "_");
        let ckpt = out_dir.join("models").join(format!("{stem}.srw"));
        let (spec, params) = load_checkpoint(&ckpt)?;
        let report = evaluate_all_splits(
            dir,
            manifest,
            &spec,
            &params,
            &cfg.id(),
            &file_hash(&ckpt)?,
        )?;
        eprintln!(
            "evaluated {} in {:.0}s (test {:.2} dB)",
            cfg.id(),
            report.runtime_seconds,
            report.split(Split::Test).map(|s| s.mean_psnr).unwrap_or(f64::NAN)
        );
        report.save(out_dir.join("reports").join(format!("{stem}.json")))?;
        reports.push(report);
    }
    render_report(&reports, out_dir)?;
    render_previews(out_dir, &manifests.iter().map(|(c, d, m)| (c.id(), d.clone(), m.clone())).collect::<Vec<_>>(), 2)?;
    Ok(reports)
}

/// Cross-spectral ablation: a joint RGB model against three single-band
/// models under the same budget, compared on the test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossSpectralReport {
    pub joint_test_psnr: f64,
    pub ensemble_test_psnr: f64,
    pub gap_db: f64,
    pub per_band_test_psnr: Vec<f64>,
}

pub fn run_cross_spectral_experiment(
    manifest_dir: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    opts: &ExperimentOptions,
) -> Result<CrossSpectralReport> {
    let manifest_dir = manifest_dir.as_ref();
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir.join("models"))?;
    let manifest = Manifest::load(manifest_dir.join("manifest.json"))?;
    let train_cfg = opts.train_config();

    // Jobs: None = joint RGB; Some(b) = dedicated single-band model.
    let jobs: Vec<Option<usize>> = vec![None, Some(0), Some(1), Some(2)];
    let results: Mutex<Vec<(Option<usize>, PathBuf)>> = Mutex::new(Vec::new());
    run_jobs(jobs, opts.workers, |band| {
        let spec = match band {
            None => ModelSpec::tiny(3),
            Some(_) => ModelSpec::tiny(1),
        };
        let cfg = TrainConfig {
            band,
            ..train_cfg.clone()
        };
        let started = std::time::Instant::now();
        let outcome = train(manifest_dir, &manifest, &spec, &cfg)?;
        let name = match band {
            None => "joint_rgb".to_string(),
            Some(b) => format!("band{b}"),
        };
        let ckpt = out_dir.join("models").join(format!("{name}.srw"));
        save_checkpoint(&ckpt, &spec, &outcome.params)?;
        write_loss_csv(out_dir.join("models").join(format!("{name}_loss.csv")), &outcome.loss_history)?;
        eprintln!("trained {name} in {:.0}s", started.elapsed().as_secs_f64());
        results.lock().unwrap().push((band, ckpt));
        Ok(())
    })?;

    let results = results.into_inner().unwrap();
    let find = |band: Option<usize>| -> Result<(ModelSpec, ModelParams<f32>)> {
        let (_, path) = results
            .iter()
            .find(|(b, _)| *b == band)
            .ok_or_else(|| Error::invalid("missing trained model"))?;
        load_checkpoint(path)
    };

    let (joint_spec, joint_params) = find(None)?;
    let joint =
        evaluate_split(manifest_dir, &manifest, Split::Test, &joint_spec, &joint_params, None)?;

    let mut band_models = Vec::new();
    let mut per_band_psnr = Vec::new();
    for b in 0..3 {
        let (spec, params) = find(Some(b))?;
        let eval =
            evaluate_split(manifest_dir, &manifest, Split::Test, &spec, &params, Some(b))?;
        per_band_psnr.push(eval.mean_psnr);
        band_models.push((spec, params));
    }

    // Ensemble: each band super-resolved by its dedicated model, restacked.
    let records = manifest.split_pairs(Split::Test);
    let mut per_pair = Vec::new();
    for rec in records {
        let lr = read_raster(manifest_dir.join(&rec.lr_path))?;
        let hr = read_raster(manifest_dir.join(&rec.hr_path))?;
        let mut planes = Vec::new();
        for (b, (spec, params)) in band_models.iter().enumerate() {
            let sr = infer(spec, params, &lr.single_band(b)?, 256, 8)?;
            planes.push(sr.plane(0));
        }
        let stacked = Raster::from_planes(&planes)?;
        per_pair.push(psnr(&stacked, &hr, DN_PEAK as f64)?);
    }
    let ensemble_mean = per_pair.iter().sum::<f64>() / per_pair.len().max(1) as f64;

    let report = CrossSpectralReport {
        joint_test_psnr: joint.mean_psnr,
        ensemble_test_psnr: ensemble_mean,
        gap_db: joint.mean_psnr - ensemble_mean,
        per_band_test_psnr: per_band_psnr,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::format(format!("report serialization: {e}")))?;
    text.push('\n');
    fs::write(out_dir.join("cross_spectral.json"), text)?;
    Ok(report)
}

const CELL_ORDER: [&str; 6] = [
    "noalias:none",
    "noalias:fixed",
    "noalias:random",
    "alias:none",
    "alias:fixed",
    "alias:random",
];

/// Write the CSV table and plain-text grid for a set of cell reports.
pub fn render_report(reports: &[EvalReport], out_dir: impl AsRef<Path>) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports to render"));
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let by_id = |id: &str| reports.iter().find(|r| r.config == id);

    let mut csv = String::from("config,test_psnr_db,train_psnr_db,val_psnr_db\n");
    let mut rows = Vec::new();
    for id in CELL_ORDER {
        if let Some(r) = by_id(id) {
            let get = |s: Split| r.split(s).map(|e| e.mean_psnr).unwrap_or(f64::NAN);
            csv.push_str(&format!(
                "{id},{:.4},{:.4},{:.4}\n",
                get(Split::Test),
                get(Split::Train),
                get(Split::Val)
            ));
            rows.push((id, get(Split::Test), get(Split::Train), get(Split::Val)));
        }
    }
    // Configurations outside the canonical grid still land in the CSV.
    for r in reports {
        if !CELL_ORDER.contains(&r.config.as_str()) {
            let get = |s: Split| r.split(s).map(|e| e.mean_psnr).unwrap_or(f64::NAN);
            csv.push_str(&format!(
                "{},{:.4},{:.4},{:.4}\n",
                r.config,
                get(Split::Test),
                get(Split::Train),
                get(Split::Val)
            ));
        }
    }
    fs::write(out_dir.join("table1.csv"), csv)?;

    let mut text = String::new();
    text.push_str("                          PSNR (dB)\n");
    text.push_str("                 test     train    val\n");
    for (id, test, tr, val) in &rows {
        let (group, mode) = id.split_once(':').unwrap_or(("", *id));
        text.push_str(&format!(
            "{:<8} {:<7} {:>8.2} {:>8.2} {:>8.2}\n",
            group, mode, test, tr, val
        ));
    }
    fs::write(out_dir.join("table1.txt"), text)?;
    Ok(())
}

/// Side-by-side LR | SR | HR preview panels for a few test pairs per cell.
pub fn render_previews(
    out_dir: &Path,
    cells: &[(String, PathBuf, Manifest)],
    per_cell: usize,
) -> Result<()> {
    fs::create_dir_all(out_dir.join("previews"))?;
    for (id, dir, manifest) in cells {
        let stem = id.replace(':', "_");
        let ckpt = out_dir.join("models").join(format!("{stem}.srw"));
        if !ckpt.exists() {
            continue;
        }
        let (spec, params) = load_checkpoint(&ckpt)?;
        for (k, rec) in manifest
            .split_pairs(Split::Test)
            .iter()
            .take(per_cell)
            .enumerate()
        {
            let lr = read_raster(dir.join(&rec.lr_path))?;
            let hr = read_raster(dir.join(&rec.hr_path))?;
            let sr = infer(&spec, &params, &lr, 256, 8)?;
            let tri = triptych(&lr, &sr, &hr)?;
            write_png_preview(
                &tri,
                out_dir.join("previews").join(format!("{stem}_{k:02}.png")),
            )?;
        }
    }
    Ok(())
}

/// Margin between triptych panels, in pixels.
pub const TRIPTYCH_MARGIN: usize = 4;

/// Compose (LR upsampled | SR | HR) into one raster of height 2H and width
/// 3 * 2W + 2 margins.
pub fn triptych(lr: &Raster, sr: &Raster, hr: &Raster) -> Result<Raster> {
    let zeros = ModelParams::<f32>::zeros(&ModelSpec {
        in_bands: lr.bands(),
        features: 4,
        num_rrdb: 1,
        growth: 2,
    });
    // A zero network predicts exactly the bicubic upsample of its input.
    let lr_up = infer(
        &ModelSpec {
            in_bands: lr.bands(),
            features: 4,
            num_rrdb: 1,
            growth: 2,
        },
        &zeros,
        lr,
        4096,
        8,
    )?;
    let (h, w) = (sr.height(), sr.width());
    if lr_up.height() != h || hr.height() != h || lr_up.width() != w || hr.width() != w {
        return Err(Error::dimension("triptych panels disagree on size"));
    }
    let bands = sr.bands();
    let out_w = 3 * w + 2 * TRIPTYCH_MARGIN;
    let mut data = vec![DN_PEAK; bands * h * out_w];
    for (panel, raster) in [(0usize, &lr_up), (1, sr), (2, hr)] {
        let x0 = panel * (w + TRIPTYCH_MARGIN);
        for b in 0..bands {
            let src = raster.band(b);
            for y in 0..h {
                let dst = (b * h + y) * out_w + x0;
                for x in 0..w {
                    data[dst + x] = src[y * w + x].clamp(0.0, DN_PEAK);
                }
            }
        }
    }
    Raster::new(bands, h, out_w, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::model::ModelParams;

    fn const_raster(v: f32) -> Raster {
        Raster::filled(3, 8, 8, v).unwrap()
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = const_raster(100.0);
        assert!(psnr(&a, &a, DN_PEAK as f64).unwrap().is_infinite());
    }

    #[test]
    fn psnr_constant_offset_closed_form() {
        for c in [1.0f32, 2.0, 16.0] {
            let a = const_raster(1000.0);
            let b = const_raster(1000.0 + c);
            let got = psnr(&a, &b, DN_PEAK as f64).unwrap();
            let want = 20.0 * (4095.0f64 / c as f64).log10();
            assert!((got - want).abs() < 1e-6, "c={c}: {got} vs {want}");
        }
    }

    #[test]
    fn psnr_full_range_error_is_zero_db() {
        let a = const_raster(0.0);
        let b = const_raster(DN_PEAK);
        let got = psnr(&a, &b, DN_PEAK as f64).unwrap();
        assert!(got.abs() < 1e-9, "{got}");
    }

    #[test]
    fn psnr_is_symmetric() {
        let mut rng = Rng::from_seed(3);
        let a = Raster::new(1, 6, 6, (0..36).map(|_| rng.uniform() as f32 * 100.0).collect())
            .unwrap();
        let b = Raster::new(1, 6, 6, (0..36).map(|_| rng.uniform() as f32 * 100.0).collect())
            .unwrap();
        assert_eq!(
            psnr(&a, &b, DN_PEAK as f64).unwrap(),
            psnr(&b, &a, DN_PEAK as f64).unwrap()
        );
    }

    #[test]
    fn psnr_improves_as_pred_approaches_ref() {
        let mut rng = Rng::from_seed(4);
        let reference =
            Raster::new(1, 8, 8, (0..64).map(|_| rng.uniform() as f32 * 4000.0).collect())
                .unwrap();
        let noise: Vec<f32> = (0..64).map(|_| (rng.normal() * 50.0) as f32).collect();
        let mut last = f64::NEG_INFINITY;
        for blend in [1.0f32, 0.5, 0.25, 0.1] {
            let pred = Raster::new(
                1,
                8,
                8,
                reference
                    .data()
                    .iter()
                    .zip(&noise)
                    .map(|(&r, &n)| r + blend * n)
                    .collect(),
            )
            .unwrap();
            let p = psnr(&pred, &reference, DN_PEAK as f64).unwrap();
            assert!(p > last, "averaging toward ref must not decrease PSNR");
            last = p;
        }
    }

    #[test]
    fn infer_constant_zero_model_is_identity_at_2x() {
        let spec = ModelSpec {
            in_bands: 3,
            features: 4,
            num_rrdb: 1,
            growth: 2,
        };
        let params = ModelParams::<f32>::zeros(&spec);
        let lr = const_raster(1234.0);
        let out = infer(&spec, &params, &lr, 64, 8).unwrap();
        assert_eq!((out.height(), out.width()), (16, 16));
        for &v in out.data() {
            assert!((v - 1234.0).abs() < 0.5, "{v}");
        }
    }

    #[test]
    fn tiled_matches_untiled_on_interior() {
        let spec = ModelSpec {
            in_bands: 3,
            features: 8,
            num_rrdb: 1,
            growth: 4,
        };
        let mut rng = Rng::from_seed(9);
        let params = ModelParams::<f32>::init(&spec, &mut rng);
        let lr = Raster::new(
            3,
            48,
            48,
            (0..3 * 48 * 48)
                .map(|_| (rng.uniform() * 4000.0) as f32)
                .collect(),
        )
        .unwrap();
        let whole = infer(&spec, &params, &lr, 64, 8).unwrap();
        let tiled = infer(&spec, &params, &lr, 32, 8).unwrap();
        assert_eq!(tiled.height(), 96);
        // Compare on the normalized scale away from image borders.
        for b in 0..3 {
            for y in 16..80 {
                for x in 16..80 {
                    let a = whole.band(b)[y * 96 + x] / DN_PEAK;
                    let t = tiled.band(b)[y * 96 + x] / DN_PEAK;
                    assert!(
                        (a - t).abs() < 1e-3,
                        "band {b} ({y},{x}): {a} vs {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn triptych_layout() {
        let lr = const_raster(500.0);
        let sr = Raster::filled(3, 16, 16, 600.0).unwrap();
        let hr = Raster::filled(3, 16, 16, 700.0).unwrap();
        let t = triptych(&lr, &sr, &hr).unwrap();
        assert_eq!(t.height(), 16);
        assert_eq!(t.width(), 3 * 16 + 2 * TRIPTYCH_MARGIN);
        assert!((t.band(0)[0] - 500.0).abs() < 0.01);
        let mid = 16 + TRIPTYCH_MARGIN;
        assert_eq!(t.band(0)[mid], 600.0);
        assert_eq!(t.band(0)[2 * (16 + TRIPTYCH_MARGIN)], 700.0);
        // Margin columns are white.
        assert_eq!(t.band(0)[16], DN_PEAK);
    }

    #[test]
    fn render_report_empty_is_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(render_report(&[], dir.path()).is_err());
    }

    #[test]
    fn zero_iteration_training_scores_the_bicubic_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let hr_dir = dir.path().join("hr");
        crate::corpus::generate_corpus(&hr_dir, 4, 64, 3).unwrap();
        let opts = ExperimentOptions {
            iters: 0,
            seed: 3,
            crop: 8,
            max_crops: 2,
            workers: 1,
            ..Default::default()
        };
        let reports = run_table1_experiment(&hr_dir, dir.path().join("run"), &opts).unwrap();
        assert_eq!(reports.len(), 6);
        for report in &reports {
            assert_eq!(report.splits.len(), 3);
            // The untrained model must equal the pure bicubic skip on every
            // test pair of its own dataset.
            let stem = report.config.replace(':', "_");
            let ds = dir.path().join("run").join("datasets").join(&stem);
            let manifest = Manifest::load(ds.join("manifest.json")).unwrap();
            let spec = ModelSpec::tiny(3);
            let zeros = ModelParams::<f32>::zeros(&spec);
            let baseline =
                evaluate_split(&ds, &manifest, Split::Test, &spec, &zeros, None).unwrap();
            let got = report.split(Split::Test).unwrap();
            for (a, b) in got.per_pair.iter().zip(&baseline.per_pair) {
                assert!(
                    (a - b).abs() < 1e-9,
                    "{}: {a} vs bicubic baseline {b}",
                    report.config
                );
            }
        }
    }
}
