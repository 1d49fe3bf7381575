//! Acquisition simulator: synthesizes LR imagery from HR ground truth under
//! six configurations — {alias, no alias} x {no shift, fixed shift, random
//! shift} — and materializes LR/HR crop datasets with a JSON manifest.
//!
//! The LR recipe per band: integer shift on the HR grid, Gaussian blur
//! (heavy for the alias-free regime, light for the aliased one), 2x
//! decimation, half-pixel compensation of the shift on the LR grid, then
//! additive Gaussian noise.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::raster::{extract_crops, read_png, read_raster, write_raster, Raster, Rng};
use crate::signal::{add_noise, blur, decimate2, gaussian_kernel, shift_integer, spline_shift};
use crate::{Error, Result};

/// Heavy pre-decimation blur: the decimated signal is alias-free.
pub const SIGMA_NO_ALIAS: f64 = 2.4;
/// Light pre-decimation blur: high frequencies fold into the LR grid.
/// Matches a high-MTF sensor (about 0.29 modulation left at Nyquist).
pub const SIGMA_ALIAS: f64 = 0.5;
/// Default additive noise, as a fraction of the 12-bit range.
pub const DEFAULT_NOISE_LEVEL: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    None,
    Fixed,
    Random,
}

impl ShiftMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShiftMode::None => "none",
            ShiftMode::Fixed => "fixed",
            ShiftMode::Random => "random",
        }
    }
}

/// One of the six degradation scenarios plus its blur/noise parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub alias: bool,
    pub shift_mode: ShiftMode,
    pub sigma_alias: f64,
    pub sigma_noalias: f64,
    pub noise_level: f64,
    pub seed: u64,
}

impl AcquisitionConfig {
    pub fn new(alias: bool, shift_mode: ShiftMode, seed: u64) -> Self {
        AcquisitionConfig {
            alias,
            shift_mode,
            sigma_alias: SIGMA_ALIAS,
            sigma_noalias: SIGMA_NO_ALIAS,
            noise_level: DEFAULT_NOISE_LEVEL,
            seed,
        }
    }

    /// The six canonical configurations, alias-major.
    pub fn all_six(seed: u64) -> Vec<AcquisitionConfig> {
        let mut out = Vec::new();
        for alias in [false, true] {
            for mode in [ShiftMode::None, ShiftMode::Fixed, ShiftMode::Random] {
                out.push(AcquisitionConfig::new(alias, mode, seed));
            }
        }
        out
    }

    pub fn sigma(&self) -> f64 {
        if self.alias {
            self.sigma_alias
        } else {
            self.sigma_noalias
        }
    }

    /// Short identifier, e.g. `alias:fixed`.
    pub fn id(&self) -> String {
        format!(
            "{}:{}",
            if self.alias { "alias" } else { "noalias" },
            self.shift_mode.as_str()
        )
    }

    /// Parse an identifier of the form `{alias|noalias}:{none|fixed|random}`.
    pub fn parse_id(s: &str, seed: u64) -> Result<Self> {
        let (a, m) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("bad config id `{s}`")))?;
        let alias = match a {
            "alias" => true,
            "noalias" => false,
            _ => return Err(Error::invalid(format!("bad alias flag `{a}`"))),
        };
        let shift_mode = match m {
            "none" => ShiftMode::None,
            "fixed" => ShiftMode::Fixed,
            "random" => ShiftMode::Random,
            _ => return Err(Error::invalid(format!("bad shift mode `{m}`"))),
        };
        Ok(AcquisitionConfig::new(alias, shift_mode, seed))
    }
}

/// Per-band integer offsets in HR pixels, components in {-1, 0, +1}.
/// Bands follow raster order (R, G, B); green is the reference and always
/// carries (0, 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandShiftTable {
    pub offsets: Vec<(i32, i32)>,
}

impl BandShiftTable {
    pub fn zeros(bands: usize) -> Self {
        BandShiftTable {
            offsets: vec![(0, 0); bands],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.offsets.iter().all(|&o| o == (0, 0))
    }
}

/// Index of the reference (green) band in RGB order.
pub const REFERENCE_BAND: usize = 1;

/// Build the per-dataset or per-image shift table for a 3-band RGB raster.
///
/// `None` gives all zeros; `Fixed` gives the constant table
/// R=(+1,0), G=(0,0), B=(0,+1); `Random` draws the non-reference components
/// uniformly from {-1,+1}.
pub fn make_shift_table(mode: ShiftMode, rng: &mut Rng) -> BandShiftTable {
    match mode {
        ShiftMode::None => BandShiftTable::zeros(3),
        ShiftMode::Fixed => BandShiftTable {
            offsets: vec![(1, 0), (0, 0), (0, 1)],
        },
        ShiftMode::Random => {
            let draw = |rng: &mut Rng| if rng.below(2) == 0 { -1 } else { 1 };
            let r = (draw(rng), draw(rng));
            let b = (draw(rng), draw(rng));
            BandShiftTable {
                offsets: vec![r, (0, 0), b],
            }
        }
    }
}

/// Synthesize the LR counterpart of `hr` under `cfg` with the given shift
/// table. Output dimensions are half the HR dimensions.
pub fn simulate_lr(
    hr: &Raster,
    cfg: &AcquisitionConfig,
    shifts: &BandShiftTable,
    rng: &mut Rng,
) -> Result<Raster> {
    if hr.height() % 2 != 0 || hr.width() % 2 != 0 {
        return Err(Error::dimension(format!(
            "HR dimensions must be even, got {}x{}",
            hr.height(),
            hr.width()
        )));
    }
    if hr.bands() != shifts.offsets.len() {
        return Err(Error::dimension(format!(
            "shift table has {} entries for {} bands",
            shifts.offsets.len(),
            hr.bands()
        )));
    }
    let kernel = gaussian_kernel(cfg.sigma())?;
    let mut planes = Vec::with_capacity(hr.bands());
    for b in 0..hr.bands() {
        let (dr, dc) = shifts.offsets[b];
        let mut p = hr.plane(b);
        if (dr, dc) != (0, 0) {
            p = shift_integer(&p, dr, dc);
        }
        p = blur(&p, &kernel);
        p = decimate2(&p, 0, 0)?;
        if (dr, dc) != (0, 0) {
            p = spline_shift(&p, -(dr as f64) / 2.0, -(dc as f64) / 2.0);
        }
        p = add_noise(&p, cfg.noise_level, rng)?;
        planes.push(p);
    }
    Raster::from_planes(&planes)
}

/// Scene-disjoint dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Per-band linear map `out = gain * src + offset` recorded by equalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqCoeffs {
    pub gain: f64,
    pub offset: f64,
}

/// One LR/HR crop pair. Synthetic datasets populate `shift_table`; the
/// pairing pipeline populates `score`, `shift` and `eq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub lr_path: String,
    pub hr_path: String,
    pub source_image: String,
    pub crop_origin: (usize, usize),
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shift_table: Option<BandShiftTable>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shift: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eq: Option<Vec<EqCoeffs>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<Split>,
}

/// How a manifest's pairs were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifestConfig {
    Synthetic(AcquisitionConfig),
    Paired { threshold: f64 },
}

/// Dataset manifest; all paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ManifestConfig,
    pub seed: u64,
    #[serde(default)]
    pub skipped: Vec<String>,
    pub pairs: Vec<PairRecord>,
}

impl Manifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format(format!("manifest serialization: {e}")))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::format(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::format(format!("{}: bad manifest: {e}", path.display())))
    }

    /// Pairs belonging to a split; records without a split tag count as train.
    pub fn split_pairs(&self, split: Split) -> Vec<&PairRecord> {
        self.pairs
            .iter()
            .filter(|p| p.split.unwrap_or(Split::Train) == split)
            .collect()
    }
}

/// List the HR images (`.png` or `.ras`) of a directory in name order.
pub fn list_hr_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut set = BTreeSet::new();
    for entry in fs::read_dir(dir)
        .map_err(|e| Error::format(format!("cannot read {}: {e}", dir.display())))?
    {
        let path = entry?.path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("png") | Some("ras") => {
                set.insert(path);
            }
            _ => {}
        }
    }
    Ok(set.into_iter().collect())
}

fn read_hr_image(path: &Path) -> Result<Raster> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => read_png(path),
        _ => read_raster(path),
    }
}

/// Build a synthetic LR/HR crop dataset from every readable HR image in
/// `hr_dir`. Deterministic for a given seed: per-image RNG substreams keep
/// crop geometry identical across configurations, so only the degradation
/// differs between datasets built from the same corpus and seed.
pub fn build_synthetic_dataset(
    hr_dir: impl AsRef<Path>,
    cfg: &AcquisitionConfig,
    out_dir: impl AsRef<Path>,
    crop: usize,
    max_crops: usize,
    seed: u64,
) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    let images = list_hr_images(&hr_dir)?;
    if images.is_empty() {
        return Err(Error::invalid(format!(
            "no HR images (*.png, *.ras) in {}",
            hr_dir.as_ref().display()
        )));
    }
    fs::create_dir_all(out_dir.join("pairs"))?;

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    // Fixed-mode datasets share one constant table.
    let fixed_table = make_shift_table(ShiftMode::Fixed, &mut Rng::from_seed(seed));

    for (idx, path) in images.iter().enumerate() {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let hr = match read_hr_image(path) {
            Ok(hr) if hr.height() % 2 == 0 && hr.width() % 2 == 0 && hr.bands() == 3 => hr,
            Ok(_) => {
                eprintln!("warning: skipping {name}: need even-sized 3-band image");
                skipped.push(name);
                continue;
            }
            Err(e) => {
                eprintln!("warning: skipping {name}: {e}");
                skipped.push(name);
                continue;
            }
        };

        // Stream 2k: crop geometry (config-independent).
        // Stream 2k+1: shift draws and noise.
        let mut crop_rng = Rng::with_stream(seed, 2 * idx as u64);
        let mut degrade_rng = Rng::with_stream(seed, 2 * idx as u64 + 1);

        let table = match cfg.shift_mode {
            ShiftMode::None => BandShiftTable::zeros(3),
            ShiftMode::Fixed => fixed_table.clone(),
            ShiftMode::Random => make_shift_table(ShiftMode::Random, &mut degrade_rng),
        };
        let lr = simulate_lr(&hr, cfg, &table, &mut degrade_rng)?;
        let crops = extract_crops(&lr, &hr, crop, max_crops, &mut crop_rng)?;

        for (c, (spec, lr_crop, hr_crop)) in crops.into_iter().enumerate() {
            let lr_rel = format!("pairs/img{idx:03}_crop{c:02}_lr.ras");
            let hr_rel = format!("pairs/img{idx:03}_crop{c:02}_hr.ras");
            write_raster(&lr_crop, out_dir.join(&lr_rel))?;
            write_raster(&hr_crop, out_dir.join(&hr_rel))?;
            pairs.push(PairRecord {
                lr_path: lr_rel,
                hr_path: hr_rel,
                source_image: name.clone(),
                crop_origin: (spec.row, spec.col),
                shift_table: Some(table.clone()),
                score: None,
                shift: None,
                eq: None,
                split: None,
            });
        }
    }

    let manifest = Manifest {
        config: ManifestConfig::Synthetic(cfg.clone()),
        seed,
        skipped,
        pairs,
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Plane;

    #[test]
    fn shift_table_modes() {
        let mut rng = Rng::from_seed(7);
        let none = make_shift_table(ShiftMode::None, &mut rng);
        assert_eq!(none.offsets, vec![(0, 0), (0, 0), (0, 0)]);

        let fixed = make_shift_table(ShiftMode::Fixed, &mut rng);
        assert_eq!(fixed.offsets, vec![(1, 0), (0, 0), (0, 1)]);
        let fixed2 = make_shift_table(ShiftMode::Fixed, &mut Rng::from_seed(123));
        assert_eq!(fixed, fixed2);
    }

    #[test]
    fn random_shift_table_draws() {
        let mut rng = Rng::from_seed(7);
        let t1 = make_shift_table(ShiftMode::Random, &mut rng);
        let t2 = make_shift_table(ShiftMode::Random, &mut rng);
        for t in [&t1, &t2] {
            assert_eq!(t.offsets[REFERENCE_BAND], (0, 0));
            for &(dr, dc) in [&t.offsets[0], &t.offsets[2]] {
                assert!(dr == -1 || dr == 1);
                assert!(dc == -1 || dc == 1);
            }
        }
        // Replaying the stream reproduces both tables.
        let mut rng = Rng::from_seed(7);
        assert_eq!(make_shift_table(ShiftMode::Random, &mut rng), t1);
        assert_eq!(make_shift_table(ShiftMode::Random, &mut rng), t2);
    }

    fn noise_free(mut cfg: AcquisitionConfig) -> AcquisitionConfig {
        cfg.noise_level = 0.0;
        cfg
    }

    #[test]
    fn constant_hr_gives_constant_lr() {
        let hr = Raster::filled(3, 32, 32, 1234.5).unwrap();
        for cfg in AcquisitionConfig::all_six(3) {
            let cfg = noise_free(cfg);
            let mut rng = Rng::from_seed(1);
            let table = make_shift_table(cfg.shift_mode, &mut rng);
            let lr = simulate_lr(&hr, &cfg, &table, &mut rng).unwrap();
            assert_eq!((lr.height(), lr.width()), (16, 16));
            for &v in lr.data() {
                assert!((v - 1234.5).abs() < 1e-2, "{}: {v}", cfg.id());
            }
        }
    }

    #[test]
    fn no_shift_pipeline_matches_hand_composition() {
        let mut rng = Rng::from_seed(5);
        let hr = Raster::from_planes(&[Plane::from_fn(16, 16, |i, j| {
            if (i, j) == (8, 8) {
                1000.0
            } else {
                0.0
            }
        })])
        .unwrap();
        let cfg = noise_free(AcquisitionConfig::new(true, ShiftMode::None, 0));
        let table = BandShiftTable::zeros(1);
        let lr = simulate_lr(&hr, &cfg, &table, &mut rng).unwrap();

        let kernel = gaussian_kernel(cfg.sigma_alias).unwrap();
        let want = decimate2(&blur(&hr.plane(0), &kernel), 0, 0).unwrap();
        for (a, b) in lr.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn fixed_shift_compensation_aligns_bandlimited_content() {
        // Horizontal sinusoid, identical across bands. With heavy blur the
        // content is band-limited, so the half-pixel compensation restores
        // inter-band agreement.
        let p = Plane::from_fn(64, 64, |_, j| {
            2048.0 + 1024.0 * (std::f32::consts::TAU * j as f32 / 8.0).sin()
        });
        let hr = Raster::from_planes(&[p.clone(), p.clone(), p]).unwrap();
        let cfg = noise_free(AcquisitionConfig::new(false, ShiftMode::Fixed, 0));
        let table = make_shift_table(ShiftMode::Fixed, &mut Rng::from_seed(0));
        let lr = simulate_lr(&hr, &cfg, &table, &mut Rng::from_seed(0)).unwrap();
        for b in [0, 2] {
            for i in 8..24 {
                for j in 8..24 {
                    let reference = lr.plane(REFERENCE_BAND).get(i, j);
                    let got = lr.plane(b).get(i, j);
                    assert!(
                        (got - reference).abs() / reference.abs() < 2e-2,
                        "band {b} ({i},{j}): {got} vs {reference}"
                    );
                }
            }
        }
    }

    #[test]
    fn band_count_mismatch_rejected() {
        let hr = Raster::filled(3, 8, 8, 1.0).unwrap();
        let cfg = AcquisitionConfig::new(true, ShiftMode::None, 0);
        let table = BandShiftTable::zeros(2);
        assert!(simulate_lr(&hr, &cfg, &table, &mut Rng::from_seed(0)).is_err());
        let odd = Raster::filled(3, 9, 8, 1.0).unwrap();
        let table3 = BandShiftTable::zeros(3);
        assert!(simulate_lr(&odd, &cfg, &table3, &mut Rng::from_seed(0)).is_err());
    }

    #[test]
    fn six_configs_are_distinguishable() {
        let mut content_rng = Rng::from_seed(11);
        let hr = Raster::new(
            3,
            32,
            32,
            (0..3 * 32 * 32)
                .map(|_| (content_rng.uniform() * 4095.0) as f32)
                .collect(),
        )
        .unwrap();
        let mut outputs = Vec::new();
        for cfg in AcquisitionConfig::all_six(9) {
            let cfg = noise_free(cfg);
            let mut rng = Rng::from_seed(9);
            let table = make_shift_table(cfg.shift_mode, &mut rng);
            outputs.push(simulate_lr(&hr, &cfg, &table, &mut rng).unwrap());
        }
        for i in 0..outputs.len() {
            for j in i + 1..outputs.len() {
                let diff: f64 = outputs[i]
                    .data()
                    .iter()
                    .zip(outputs[j].data())
                    .map(|(a, b)| (a - b).abs() as f64)
                    .sum();
                assert!(diff > 1.0, "configs {i} and {j} coincide");
            }
        }
    }

    #[test]
    fn config_id_roundtrip() {
        for cfg in AcquisitionConfig::all_six(4) {
            let parsed = AcquisitionConfig::parse_id(&cfg.id(), 4).unwrap();
            assert_eq!(parsed, cfg);
        }
        assert!(AcquisitionConfig::parse_id("alias", 0).is_err());
        assert!(AcquisitionConfig::parse_id("alias:diagonal", 0).is_err());
    }

    #[test]
    fn dataset_build_shapes_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let hr_dir = dir.path().join("hr");
        fs::create_dir_all(&hr_dir).unwrap();
        let mut rng = Rng::from_seed(2);
        let data: Vec<f32> = (0..3 * 128 * 128)
            .map(|_| (rng.uniform() * 4095.0) as f32)
            .collect();
        let hr = Raster::new(3, 128, 128, data).unwrap();
        write_raster(&hr, hr_dir.join("scene.ras")).unwrap();

        let cfg = AcquisitionConfig::new(true, ShiftMode::Random, 17);
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        let man_a = build_synthetic_dataset(&hr_dir, &cfg, &out_a, 32, 4, 17).unwrap();
        build_synthetic_dataset(&hr_dir, &cfg, &out_b, 32, 4, 17).unwrap();

        assert_eq!(man_a.pairs.len(), 4);
        for p in &man_a.pairs {
            let lr = read_raster(out_a.join(&p.lr_path)).unwrap();
            let hr_crop = read_raster(out_a.join(&p.hr_path)).unwrap();
            assert_eq!((lr.height(), lr.width()), (32, 32));
            assert_eq!((hr_crop.height(), hr_crop.width()), (64, 64));
            let table = p.shift_table.as_ref().unwrap();
            assert_eq!(table.offsets[REFERENCE_BAND], (0, 0));
            assert!(!table.is_zero());
        }

        // Byte-identical trees for the same seed.
        for rel in ["manifest.json", &man_a.pairs[0].lr_path, &man_a.pairs[0].hr_path] {
            let a = fs::read(out_a.join(rel)).unwrap();
            let b = fs::read(out_b.join(rel)).unwrap();
            assert_eq!(a, b, "{rel} differs between identical builds");
        }

        // No-shift datasets record all-zero tables.
        let cfg_none = AcquisitionConfig::new(false, ShiftMode::None, 17);
        let man_none =
            build_synthetic_dataset(&hr_dir, &cfg_none, dir.path().join("c"), 32, 4, 17).unwrap();
        assert!(man_none.pairs.iter().all(|p| p
            .shift_table
            .as_ref()
            .unwrap()
            .is_zero()));
    }

    #[test]
    fn empty_input_dir_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let hr_dir = dir.path().join("hr");
        fs::create_dir_all(&hr_dir).unwrap();
        let cfg = AcquisitionConfig::new(true, ShiftMode::None, 0);
        assert!(build_synthetic_dataset(&hr_dir, &cfg, dir.path().join("o"), 16, 1, 0).is_err());
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = Manifest {
            config: ManifestConfig::Synthetic(AcquisitionConfig::new(true, ShiftMode::Fixed, 5)),
            seed: 5,
            skipped: vec!["bad.png".into()],
            pairs: vec![PairRecord {
                lr_path: "pairs/a_lr.ras".into(),
                hr_path: "pairs/a_hr.ras".into(),
                source_image: "scene.png".into(),
                crop_origin: (0, 32),
                shift_table: Some(make_shift_table(ShiftMode::Fixed, &mut Rng::from_seed(0))),
                score: Some(0.9),
                shift: Some((0.25, -0.5)),
                eq: Some(vec![EqCoeffs {
                    gain: 1.1,
                    offset: -3.0,
                }]),
                split: Some(Split::Test),
            }],
        };
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let back = Manifest::load(&path).unwrap();
        assert_eq!(manifest, back);
    }
}
