//! Dataset-construction protocol for real or pseudo-real LR/HR pairs:
//! radiometric equalization, phase-correlation registration, spline
//! re-registration, score-based filtering, and scene-disjoint split
//! assembly.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::raster::{extract_crops, read_raster, write_raster, Plane, Raster, Rng};
use crate::signal::{decimate2, fft2, ifft2, spline_shift, Spectrum};
use crate::sim::{EqCoeffs, Manifest, ManifestConfig, PairRecord, Split, REFERENCE_BAND};
use crate::{Error, Result};

/// Default phase-correlation score below which pairs are removed.
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.55;

/// Estimated translation and correlation-peak score of a registration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    /// Shift (dr, dc) of the second image relative to the first, in pixels
    /// of the correlated grid.
    pub shift: (f64, f64),
    /// Correlation peak, normalized so autocorrelation scores 1.0.
    pub score: f64,
}

/// Map each band of `src` onto the mean/std of the matching band of `reference`.
/// Degenerate source bands (std below 1e-9) are mapped by offset only.
pub fn equalize(src: &Raster, reference: &Raster) -> Result<(Raster, Vec<EqCoeffs>)> {
    if src.bands() != reference.bands() {
        return Err(Error::dimension(format!(
            "band count mismatch: {} vs {}",
            src.bands(),
            reference.bands()
        )));
    }
    let mut planes = Vec::with_capacity(src.bands());
    let mut coeffs = Vec::with_capacity(src.bands());
    for b in 0..src.bands() {
        let sp = src.plane(b);
        let rp = reference.plane(b);
        let (mean_src, std_src) = (sp.mean(), sp.variance().sqrt());
        let (mean_ref, std_ref) = (rp.mean(), rp.variance().sqrt());
        let (gain, offset) = if std_src < 1e-9 {
            (1.0, mean_ref - mean_src)
        } else {
            let g = std_ref / std_src;
            (g, mean_ref - g * mean_src)
        };
        let mut out = sp;
        for v in out.data_mut() {
            *v = (gain * *v as f64 + offset) as f32;
        }
        planes.push(out);
        coeffs.push(EqCoeffs { gain, offset });
    }
    Ok((Raster::from_planes(&planes)?, coeffs))
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// Mean-subtracted, Hann-windowed copy.
fn windowed(p: &Plane) -> Plane {
    let (h, w) = (p.height(), p.width());
    let mean = p.mean();
    let wh = hann(h);
    let ww = hann(w);
    Plane::from_fn(h, w, |i, j| {
        ((p.get(i, j) as f64 - mean) * wh[i] * ww[j]) as f32
    })
}

/// Normalized cross-power spectrum F(a) conj(F(b)) / |F(a) conj(F(b))|.
fn cross_power(a: &Spectrum, b: &Spectrum) -> Spectrum {
    let data: Vec<Complex<f64>> = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let p = x * y.conj();
            let m = p.norm();
            if m > 1e-12 {
                p / m
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    Spectrum::from_data(a.height(), a.width(), data)
}

fn peak_of(surface: &Plane) -> (usize, usize, f64) {
    let (mut bi, mut bj, mut bv) = (0usize, 0usize, f64::NEG_INFINITY);
    for i in 0..surface.height() {
        for j in 0..surface.width() {
            let v = surface.get(i, j) as f64;
            if v > bv {
                (bi, bj, bv) = (i, j, v);
            }
        }
    }
    (bi, bj, bv)
}

/// Correlation mass over the peak and its 4-neighborhood (circular). A
/// subpixel shift spreads the peak of a whitened spectrum over axis-adjacent
/// bins; summing the cross window makes the score shift-invariant, and the
/// raw (signed) neighbors keep the noise floor low.
fn peak_mass(surface: &Plane, pi: usize, pj: usize) -> f64 {
    let (h, w) = (surface.height() as i64, surface.width() as i64);
    const CROSS: [(i64, i64); 5] = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)];
    let mut mass = 0.0;
    for (di, dj) in CROSS {
        let i = (pi as i64 + di).rem_euclid(h) as usize;
        let j = (pj as i64 + dj).rem_euclid(w) as usize;
        mass += surface.get(i, j) as f64;
    }
    mass.max(0.0)
}

/// Two-tap subpixel refinement along one axis. For the Dirichlet-shaped
/// peak of a whitened pure translation, delta = r1 / (r1 + r0) is exact.
fn two_tap_offset(prev: f64, center: f64, next: f64) -> f64 {
    let (side, neighbor) = if next >= prev { (1.0, next) } else { (-1.0, prev) };
    let neighbor = neighbor.max(0.0);
    if neighbor + center <= 1e-12 {
        return 0.0;
    }
    (side * neighbor / (neighbor + center)).clamp(-0.5, 0.5)
}

/// Translation estimate between two same-sized planes via the normalized
/// cross-power spectrum, Hann windowing, and per-axis two-tap subpixel
/// refinement. Returns the shift of `b` relative to `a`: positive (dr, dc)
/// means `b(i, j) ~ a(i - dr, j - dc)`. Wrap-around is resolved to the
/// smallest magnitude, then clamped into [-8, 8] per axis.
pub fn phase_correlate(a: &Plane, b: &Plane) -> Result<RegistrationResult> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::dimension(format!(
            "phase correlation needs equal dims, got {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    if a.variance() < 1e-12 || b.variance() < 1e-12 {
        return Err(Error::invalid("phase correlation on zero-variance input"));
    }
    let (h, w) = (a.height(), a.width());
    let wa = fft2(&windowed(a))?;
    let wb = fft2(&windowed(b))?;

    let surface = ifft2(&cross_power(&wa, &wb))?;
    let auto = ifft2(&cross_power(&wa, &wa))?;
    let (pi, pj, peak) = peak_of(&surface);
    let (ai, aj, _) = peak_of(&auto);
    let auto_mass = peak_mass(&auto, ai, aj);
    let score = if auto_mass > 0.0 {
        (peak_mass(&surface, pi, pj) / auto_mass).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let at = |i: i64, j: i64| -> f64 {
        let ii = i.rem_euclid(h as i64) as usize;
        let jj = j.rem_euclid(w as i64) as usize;
        surface.get(ii, jj) as f64
    };
    let (pi64, pj64) = (pi as i64, pj as i64);
    let di = two_tap_offset(at(pi64 - 1, pj64), peak, at(pi64 + 1, pj64));
    let dj = two_tap_offset(at(pi64, pj64 - 1), peak, at(pi64, pj64 + 1));

    // Peak appears at index -shift (mod N).
    let wrap = |p: usize, n: usize| -> f64 {
        let p = p as f64;
        if p > n as f64 / 2.0 {
            p - n as f64
        } else {
            p
        }
    };
    let dr = (-(wrap(pi, h) + di)).clamp(-8.0, 8.0);
    let dc = (-(wrap(pj, w) + dj)).clamp(-8.0, 8.0);
    Ok(RegistrationResult {
        shift: (dr, dc),
        score,
    })
}

/// Shift below which a pair counts as already registered and the HR raster
/// is passed through untouched.
const REGISTER_EPSILON: f64 = 0.05;

/// Re-register an HR raster onto its LR counterpart. The shift is estimated
/// between `lr` and the 2x-decimated green-band view of `hr_resampled`, then
/// every HR band is spline-shifted by twice the negated estimate (the HR
/// grid is twice as fine), zero-filling uncovered borders.
pub fn register_pair(lr: &Raster, hr_resampled: &Raster) -> Result<(Raster, RegistrationResult)> {
    if hr_resampled.height() != 2 * lr.height()
        || hr_resampled.width() != 2 * lr.width()
        || hr_resampled.bands() != lr.bands()
    {
        return Err(Error::dimension(
            "register_pair expects HR at exactly 2x the LR grid",
        ));
    }
    let green = REFERENCE_BAND.min(lr.bands() - 1);
    let hr_view = decimate2(&hr_resampled.plane(green), 0, 0)?;
    let result = phase_correlate(&lr.plane(green), &hr_view)?;
    let (dr, dc) = result.shift;
    if dr.abs() < REGISTER_EPSILON && dc.abs() < REGISTER_EPSILON {
        return Ok((hr_resampled.clone(), result));
    }
    let planes: Vec<Plane> = (0..hr_resampled.bands())
        .map(|b| spline_shift(&hr_resampled.plane(b), -2.0 * dr, -2.0 * dc))
        .collect();
    Ok((Raster::from_planes(&planes)?, result))
}

/// Partition records by score: kept when `score >= threshold` (the boundary
/// is inclusive), rejected otherwise. Records without a score are rejected.
pub fn filter_pairs(
    records: Vec<PairRecord>,
    threshold: f64,
) -> (Vec<PairRecord>, Vec<PairRecord>) {
    records
        .into_iter()
        .partition(|r| r.score.unwrap_or(0.0) >= threshold)
}

/// Scene counts chosen by [`assemble_splits`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSummary {
    pub train_scenes: usize,
    pub val_scenes: usize,
    pub test_scenes: usize,
}

/// Assign splits at scene granularity: all crops of a scene land in the same
/// split, so test and train sources stay disjoint. Fractions are rounded to
/// whole scenes (at least one scene per requested split).
pub fn assemble_splits(
    records: &mut [PairRecord],
    test_fraction: f64,
    val_fraction: f64,
    rng: &mut Rng,
) -> Result<SplitSummary> {
    let mut scenes: Vec<String> = {
        let set: std::collections::BTreeSet<&str> =
            records.iter().map(|r| r.source_image.as_str()).collect();
        set.into_iter().map(String::from).collect()
    };
    if scenes.is_empty() {
        return Err(Error::invalid("no records to split"));
    }
    let n = scenes.len();
    let want = |frac: f64| -> usize {
        if frac <= 0.0 {
            0
        } else {
            ((n as f64 * frac).round() as usize).max(1)
        }
    };
    let n_test = want(test_fraction);
    let n_val = want(val_fraction);
    if n_test + n_val >= n {
        return Err(Error::invalid(format!(
            "{n} scenes cannot supply {n_test} test + {n_val} val + >=1 train"
        )));
    }
    rng.shuffle(&mut scenes);
    let mut assignment: HashMap<&str, Split> = HashMap::new();
    for (i, scene) in scenes.iter().enumerate() {
        let split = if i < n_test {
            Split::Test
        } else if i < n_test + n_val {
            Split::Val
        } else {
            Split::Train
        };
        assignment.insert(scene.as_str(), split);
    }
    for r in records.iter_mut() {
        r.split = Some(assignment[r.source_image.as_str()]);
    }
    Ok(SplitSummary {
        train_scenes: n - n_test - n_val,
        val_scenes: n_val,
        test_scenes: n_test,
    })
}

/// One entry of the pairing list file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingInput {
    pub lr_path: String,
    pub hr_path: String,
    pub scene_id: String,
    #[serde(default)]
    pub date: String,
}

/// Options for [`run_pairing`].
#[derive(Debug, Clone)]
pub struct PairingOptions {
    pub threshold: f64,
    pub crop: usize,
    pub max_crops: usize,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for PairingOptions {
    fn default() -> Self {
        PairingOptions {
            threshold: DEFAULT_SCORE_THRESHOLD,
            crop: 64,
            max_crops: 8,
            test_fraction: 0.2,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Full pairing pipeline over a list file: equalize each HR scene to its LR
/// counterpart, register, drop scenes scoring below the threshold, extract
/// crop pairs, assign scene-disjoint splits, and write dataset + manifest.
pub fn run_pairing(
    list_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    opts: &PairingOptions,
) -> Result<Manifest> {
    let list_path = list_path.as_ref();
    let out_dir = out_dir.as_ref();
    let text = fs::read_to_string(list_path)
        .map_err(|e| Error::format(format!("cannot read {}: {e}", list_path.display())))?;
    let inputs: Vec<PairingInput> = serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("{}: bad pairing list: {e}", list_path.display())))?;
    if inputs.is_empty() {
        return Err(Error::invalid("pairing list is empty"));
    }
    let base = list_path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(out_dir.join("pairs"))?;

    let mut scene_records = Vec::new();
    let mut skipped = Vec::new();
    for (idx, input) in inputs.iter().enumerate() {
        let loaded = (|| -> Result<(Raster, Raster)> {
            Ok((
                read_raster(base.join(&input.lr_path))?,
                read_raster(base.join(&input.hr_path))?,
            ))
        })();
        let (lr, hr) = match loaded {
            Ok(pair) => pair,
            Err(e) => {
                eprintln!("warning: skipping scene {}: {e}", input.scene_id);
                skipped.push(input.scene_id.clone());
                continue;
            }
        };
        let (hr_eq, coeffs) = equalize(&hr, &lr)?;
        let (hr_reg, reg) = register_pair(&lr, &hr_eq)?;
        scene_records.push((idx, input, lr, hr_reg, reg, coeffs));
    }

    // Scene-level filtering before any crops are emitted.
    let (kept, rejected): (Vec<_>, Vec<_>) = scene_records
        .into_iter()
        .partition(|(_, _, _, _, reg, _)| reg.score >= opts.threshold);
    for (_, input, _, _, reg, _) in &rejected {
        eprintln!(
            "info: removed scene {} (score {:.3} below {})",
            input.scene_id, reg.score, opts.threshold
        );
    }
    let rejected_ids: Vec<String> = rejected
        .iter()
        .map(|(_, input, _, _, _, _)| input.scene_id.clone())
        .collect();

    let mut pairs = Vec::new();
    for (idx, input, lr, hr_reg, reg, coeffs) in kept {
        let mut crop_rng = Rng::with_stream(opts.seed, idx as u64);
        let crops = extract_crops(&lr, &hr_reg, opts.crop, opts.max_crops, &mut crop_rng)?;
        for (c, (spec, lr_crop, hr_crop)) in crops.into_iter().enumerate() {
            let lr_rel = format!("pairs/scene{idx:03}_crop{c:02}_lr.ras");
            let hr_rel = format!("pairs/scene{idx:03}_crop{c:02}_hr.ras");
            write_raster(&lr_crop, out_dir.join(&lr_rel))?;
            write_raster(&hr_crop, out_dir.join(&hr_rel))?;
            pairs.push(PairRecord {
                lr_path: lr_rel,
                hr_path: hr_rel,
                source_image: input.scene_id.clone(),
                crop_origin: (spec.row, spec.col),
                shift_table: None,
                score: Some(reg.score),
                shift: Some(reg.shift),
                eq: Some(coeffs.clone()),
                split: None,
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::invalid("no pairs survived registration filtering"));
    }
    let mut split_rng = Rng::with_stream(opts.seed, u64::MAX);
    assemble_splits(
        &mut pairs,
        opts.test_fraction,
        opts.val_fraction,
        &mut split_rng,
    )?;

    skipped.extend(rejected_ids);
    let manifest = Manifest {
        config: ManifestConfig::Paired {
            threshold: opts.threshold,
        },
        seed: opts.seed,
        skipped,
        pairs,
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}
