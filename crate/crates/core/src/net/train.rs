//! Seeded training loop over a dataset manifest: random LR/HR patch batches,
//! L1 loss on the normalized [0, 1] scale, Adam updates.

use std::path::Path;

use crate::net::adam::{adam_step, AdamConfig, AdamState};
use crate::net::model::{bind_params, model_forward, ModelParams, ModelSpec};
use crate::net::tape::Tape;
use crate::net::tensor::Tensor;
use crate::raster::{read_raster, Raster, Rng, DN_PEAK};
use crate::sim::{Manifest, Split};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch: usize,
    pub iters: usize,
    pub seed: u64,
    /// LR-grid patch size sampled per batch element.
    pub crop: usize,
    /// Restrict training to one band of multi-band pairs.
    pub band: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch: 4,
            iters: 3000,
            seed: 0,
            crop: 16,
            band: None,
        }
    }
}

impl TrainConfig {
    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// An LR/HR pair loaded into normalized tensors (C, H, W as N=1).
pub struct LoadedPair {
    pub lr: Tensor<f32>,
    pub hr: Tensor<f32>,
}

/// Normalize a raster into a (1, C, H, W) tensor on [0, 1].
pub fn raster_to_tensor(r: &Raster) -> Tensor<f32> {
    let scale = 1.0 / DN_PEAK;
    Tensor::from_vec(
        [1, r.bands(), r.height(), r.width()],
        r.data().iter().map(|&v| v * scale).collect(),
    )
}

/// Back from the normalized scale to a DN raster.
pub fn tensor_to_raster(t: &Tensor<f32>) -> Result<Raster> {
    let [n, c, h, w] = t.shape();
    if n != 1 {
        return Err(Error::dimension("expected a single-sample tensor"));
    }
    Raster::new(
        c,
        h,
        w,
        t.data()
            .iter()
            .map(|&v| (v * DN_PEAK).clamp(-DN_PEAK, 2.0 * DN_PEAK))
            .collect(),
    )
}

/// Load the pairs of one split, optionally restricted to one band.
pub fn load_split_pairs(
    manifest_dir: &Path,
    manifest: &Manifest,
    split: Split,
    band: Option<usize>,
) -> Result<Vec<LoadedPair>> {
    let records = manifest.split_pairs(split);
    let mut out = Vec::with_capacity(records.len());
    for rec in records {
        let lr = read_raster(manifest_dir.join(&rec.lr_path))?;
        let hr = read_raster(manifest_dir.join(&rec.hr_path))?;
        if hr.height() != 2 * lr.height() || hr.width() != 2 * lr.width() {
            return Err(Error::dimension(format!(
                "{}: HR is not 2x the LR grid",
                rec.hr_path
            )));
        }
        let (lr, hr) = match band {
            Some(b) => (lr.single_band(b)?, hr.single_band(b)?),
            None => (lr, hr),
        };
        out.push(LoadedPair {
            lr: raster_to_tensor(&lr),
            hr: raster_to_tensor(&hr),
        });
    }
    Ok(out)
}

/// Training output: final parameters plus the per-iteration loss curve.
pub struct TrainOutcome {
    pub params: ModelParams<f32>,
    pub loss_history: Vec<f64>,
}

fn gather_patch(
    src: &Tensor<f32>,
    dst: &mut Tensor<f32>,
    sample: usize,
    row: usize,
    col: usize,
    size: usize,
) {
    let [_, c, _, w] = src.shape();
    let dw = dst.shape()[3];
    for ch in 0..c {
        let plane = src.channel(0, ch);
        for y in 0..size {
            let s = (row + y) * w + col;
            let d = dst.offset(sample, ch, y, 0);
            dst.data_mut()[d..d + dw].copy_from_slice(&plane[s..s + size]);
        }
    }
}

/// Train a model from the train split of `manifest`. Deterministic for a
/// fixed config; aborts with a diagnostic if the loss leaves the finite
/// range.
pub fn train(
    manifest_dir: &Path,
    manifest: &Manifest,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let pairs = load_split_pairs(manifest_dir, manifest, Split::Train, cfg.band)?;
    if pairs.is_empty() {
        return Err(Error::invalid("manifest has no training pairs"));
    }
    for p in &pairs {
        let [_, c, h, w] = p.lr.shape();
        if c != spec.in_bands {
            return Err(Error::dimension(format!(
                "pair has {c} bands, model expects {}",
                spec.in_bands
            )));
        }
        if cfg.crop > h.min(w) {
            return Err(Error::invalid(format!(
                "training crop {} exceeds LR pair size {h}x{w}",
                cfg.crop
            )));
        }
    }

    let mut rng = Rng::with_stream(cfg.seed, 0x7261696e); // sampling stream
    let mut init_rng = Rng::with_stream(cfg.seed, 0x696e6974); // init stream
    let mut params = ModelParams::<f32>::init(spec, &mut init_rng);
    let mut state = AdamState::new(&params);
    let adam_cfg = cfg.adam();

    let c = spec.in_bands;
    let mut history = Vec::with_capacity(cfg.iters);
    let mut lr_batch = Tensor::zeros([cfg.batch, c, cfg.crop, cfg.crop]);
    let mut hr_batch = Tensor::zeros([cfg.batch, c, 2 * cfg.crop, 2 * cfg.crop]);

    for iter in 0..cfg.iters {
        for s in 0..cfg.batch {
            let k = rng.below(pairs.len());
            let [_, _, h, w] = pairs[k].lr.shape();
            let row = rng.below(h - cfg.crop + 1);
            let col = rng.below(w - cfg.crop + 1);
            gather_patch(&pairs[k].lr, &mut lr_batch, s, row, col, cfg.crop);
            gather_patch(&pairs[k].hr, &mut hr_batch, s, 2 * row, 2 * col, 2 * cfg.crop);
        }

        let mut tape = Tape::new();
        let bound = bind_params(&mut tape, &params);
        let x = tape.leaf(lr_batch.clone(), false);
        let target = tape.leaf(hr_batch.clone(), false);
        let pred = model_forward(&mut tape, spec, &bound, x)?;
        let loss = tape.l1_loss(pred, target)?;
        let loss_value = tape.value(loss).data()[0] as f64;
        if !loss_value.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite loss at iteration {iter}"
            )));
        }
        history.push(loss_value);

        let mut grads = tape.backward(loss)?;
        let grad_list: Vec<Option<Tensor<f32>>> =
            bound.ids().iter().map(|&id| grads.take(id)).collect();
        adam_step(&mut params, &grad_list, &mut state, &adam_cfg)?;
    }

    Ok(TrainOutcome {
        params,
        loss_history: history,
    })
}

/// Write the loss curve as `iteration,loss` CSV.
pub fn write_loss_csv(path: impl AsRef<Path>, history: &[f64]) -> Result<()> {
    let mut text = String::from("iteration,loss\n");
    for (i, loss) in history.iter().enumerate() {
        text.push_str(&format!("{i},{loss}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::write_raster;
    use crate::sim::{AcquisitionConfig, ManifestConfig, PairRecord, ShiftMode};
    use std::fs;

    fn tiny_spec() -> ModelSpec {
        ModelSpec {
            in_bands: 3,
            features: 8,
            num_rrdb: 1,
            growth: 4,
        }
    }

    fn fixture_manifest(dir: &Path) -> Manifest {
        fs::create_dir_all(dir.join("pairs")).unwrap();
        let mut rng = Rng::from_seed(8);
        let hr = Raster::new(
            3,
            32,
            32,
            (0..3 * 32 * 32)
                .map(|_| (rng.uniform() * 4000.0) as f32)
                .collect(),
        )
        .unwrap();
        let lr = {
            let planes: Vec<_> = (0..3)
                .map(|b| {
                    crate::signal::decimate2(
                        &crate::signal::blur(
                            &hr.plane(b),
                            &crate::signal::gaussian_kernel(0.7).unwrap(),
                        ),
                        0,
                        0,
                    )
                    .unwrap()
                })
                .collect();
            Raster::from_planes(&planes).unwrap()
        };
        write_raster(&lr, dir.join("pairs/p_lr.ras")).unwrap();
        write_raster(&hr, dir.join("pairs/p_hr.ras")).unwrap();
        Manifest {
            config: ManifestConfig::Synthetic(AcquisitionConfig::new(true, ShiftMode::None, 0)),
            seed: 0,
            skipped: vec![],
            pairs: vec![PairRecord {
                lr_path: "pairs/p_lr.ras".into(),
                hr_path: "pairs/p_hr.ras".into(),
                source_image: "fixture".into(),
                crop_origin: (0, 0),
                shift_table: None,
                score: None,
                shift: None,
                eq: None,
                split: None,
            }],
        }
    }

    #[test]
    fn zero_learning_rate_keeps_params_and_flat_loss() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = fixture_manifest(dir.path());
        // Full-size crops on a single pair: every batch is identical, so
        // the loss curve must be exactly flat.
        let cfg = TrainConfig {
            lr: 0.0,
            iters: 5,
            batch: 2,
            crop: 16,
            seed: 1,
            ..Default::default()
        };
        let spec = tiny_spec();
        let out = train(dir.path(), &manifest, &spec, &cfg).unwrap();
        let mut init_rng = Rng::with_stream(1, 0x696e6974);
        let want = ModelParams::<f32>::init(&spec, &mut init_rng);
        assert_eq!(out.params, want, "params must not move at lr 0");
        let first = out.loss_history[0];
        for &l in &out.loss_history {
            assert_eq!(l, first, "loss must be flat at lr 0");
        }
    }

    #[test]
    fn same_config_gives_identical_history() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = fixture_manifest(dir.path());
        let cfg = TrainConfig {
            iters: 8,
            batch: 2,
            crop: 8,
            seed: 9,
            ..Default::default()
        };
        let spec = tiny_spec();
        let a = train(dir.path(), &manifest, &spec, &cfg).unwrap();
        let b = train(dir.path(), &manifest, &spec, &cfg).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn loss_decreases_on_single_pair() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = fixture_manifest(dir.path());
        let cfg = TrainConfig {
            lr: 1e-3,
            iters: 60,
            batch: 2,
            crop: 8,
            seed: 4,
            ..Default::default()
        };
        let out = train(dir.path(), &manifest, &tiny_spec(), &cfg).unwrap();
        let head: f64 = out.loss_history[..10].iter().sum::<f64>() / 10.0;
        let tail: f64 = out.loss_history[50..].iter().sum::<f64>() / 10.0;
        assert!(
            tail < head,
            "loss should trend down: head {head:.5} tail {tail:.5}"
        );
    }

    #[test]
    fn empty_manifest_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = Manifest {
            config: ManifestConfig::Paired { threshold: 0.55 },
            seed: 0,
            skipped: vec![],
            pairs: vec![],
        };
        assert!(train(dir.path(), &manifest, &tiny_spec(), &TrainConfig::default()).is_err());
    }

    #[test]
    fn batch_loss_equals_mean_of_sample_losses() {
        // Permutation/batching invariance of the L1 objective.
        let spec = ModelSpec {
            in_bands: 1,
            features: 4,
            num_rrdb: 1,
            growth: 2,
        };
        let mut rng = Rng::from_seed(5);
        let params = ModelParams::<f32>::init(&spec, &mut rng);
        let mk = |rng: &mut Rng, shape: [usize; 4]| {
            let n = shape.iter().product();
            Tensor::from_vec(shape, (0..n).map(|_| rng.uniform() as f32).collect())
        };
        let xs: Vec<_> = (0..3).map(|_| mk(&mut rng, [1, 1, 6, 6])).collect();
        let ts: Vec<_> = (0..3).map(|_| mk(&mut rng, [1, 1, 12, 12])).collect();

        let loss_of = |x: Tensor<f32>, t: Tensor<f32>| -> f64 {
            let mut tape = Tape::new();
            let bound = bind_params(&mut tape, &params);
            let xi = tape.leaf(x, false);
            let ti = tape.leaf(t, false);
            let pred = model_forward(&mut tape, &spec, &bound, xi).unwrap();
            let l = tape.l1_loss(pred, ti).unwrap();
            tape.value(l).data()[0] as f64
        };

        let mut xb = Tensor::zeros([3, 1, 6, 6]);
        let mut tb = Tensor::zeros([3, 1, 12, 12]);
        for s in 0..3 {
            let xoff = xb.offset(s, 0, 0, 0);
            xb.data_mut()[xoff..xoff + 36].copy_from_slice(xs[s].data());
            let toff = tb.offset(s, 0, 0, 0);
            tb.data_mut()[toff..toff + 144].copy_from_slice(ts[s].data());
        }
        let batched = loss_of(xb, tb);
        let mean: f64 = (0..3)
            .map(|s| loss_of(xs[s].clone(), ts[s].clone()))
            .sum::<f64>()
            / 3.0;
        assert!(
            (batched - mean).abs() < 1e-6,
            "batched {batched} vs mean {mean}"
        );
    }
}
