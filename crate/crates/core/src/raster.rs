//! Image data model and bit-exact file I/O.
//!
//! A [`Raster`] is a multi-band planar f32 image on a 12-bit DN scale
//! (nominal peak 4095.0). The native on-disk format is `RAS1`: a 24-byte
//! little-endian header (magic `RAS1`, version, bands, height, width,
//! reserved) followed by the planar binary32 payload. 8/16-bit PNG can be
//! imported as ground truth and 8-bit PNG previews exported.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::Path;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Nominal peak of the DN scale (12 bits).
pub const DN_PEAK: f32 = 4095.0;

const RAS1_MAGIC: &[u8; 4] = b"RAS1";
const RAS1_VERSION: u32 = 1;
/// Refuse to allocate rasters beyond this element count (2^31).
const MAX_ELEMS: u64 = 1 << 31;

/// Multi-band planar image, band-major `(band, row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    bands: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Raster {
    /// Build a raster from planar data, validating shape and finiteness.
    pub fn new(bands: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if bands == 0 || height == 0 || width == 0 {
            return Err(Error::dimension("raster dimensions must be nonzero"));
        }
        let n = bands as u64 * height as u64 * width as u64;
        if n > MAX_ELEMS {
            return Err(Error::dimension(format!("raster too large: {n} elements")));
        }
        if data.len() as u64 != n {
            return Err(Error::dimension(format!(
                "data length {} does not match {bands}x{height}x{width}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("raster contains non-finite values"));
        }
        Ok(Raster {
            bands,
            height,
            width,
            data,
        })
    }

    pub fn filled(bands: usize, height: usize, width: usize, value: f32) -> Result<Self> {
        Self::new(bands, height, width, vec![value; bands * height * width])
    }

    /// Assemble from per-band planes (all must share dimensions).
    pub fn from_planes(planes: &[Plane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::dimension("no planes given"))?;
        let (h, w) = (first.height(), first.width());
        let mut data = Vec::with_capacity(planes.len() * h * w);
        for p in planes {
            if p.height() != h || p.width() != w {
                return Err(Error::dimension("plane dimensions differ"));
            }
            data.extend_from_slice(p.data());
        }
        Self::new(planes.len(), h, w, data)
    }

    pub fn bands(&self) -> usize {
        self.bands
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn band(&self, b: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[b * n..(b + 1) * n]
    }

    /// Copy band `b` out as a standalone plane.
    pub fn plane(&self, b: usize) -> Plane {
        Plane::from_vec(self.height, self.width, self.band(b).to_vec())
    }

    pub fn planes(&self) -> Vec<Plane> {
        (0..self.bands).map(|b| self.plane(b)).collect()
    }

    /// Extract a single-band raster (for per-channel experiments).
    pub fn single_band(&self, b: usize) -> Result<Raster> {
        if b >= self.bands {
            return Err(Error::dimension(format!("band {b} out of range")));
        }
        Raster::new(1, self.height, self.width, self.band(b).to_vec())
    }

    pub fn crop(&self, row: usize, col: usize, h: usize, w: usize) -> Result<Raster> {
        if row + h > self.height || col + w > self.width {
            return Err(Error::dimension("crop exceeds raster bounds"));
        }
        let mut data = Vec::with_capacity(self.bands * h * w);
        for b in 0..self.bands {
            let src = self.band(b);
            for i in 0..h {
                let off = (row + i) * self.width + col;
                data.extend_from_slice(&src[off..off + w]);
            }
        }
        Raster::new(self.bands, h, w, data)
    }
}

/// Single 2-D band used by the signal kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Plane {
    pub fn zeros(height: usize, width: usize) -> Self {
        Plane {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        Plane {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), height * width, "plane data length mismatch");
        Plane {
            height,
            width,
            data,
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Plane {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn data(&self) -> &[f32] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f32) {
        self.data[i * self.width + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data
            .iter()
            .map(|&v| {
                let d = v as f64 - m;
                d * d
            })
            .sum::<f64>()
            / self.data.len() as f64
    }
}

/// Crop placement on the LR grid; the HR counterpart covers exactly the
/// 2x-scaled footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CropSpec {
    pub row: usize,
    pub col: usize,
    pub size: usize,
}

/// Seedable, portable RNG (ChaCha8). Identical seed and stream produce the
/// identical draw sequence on every platform.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent substream of the same seed. Parallel workers must each own
    /// their own stream; streams are never shared.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Rng { inner }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.inner.gen()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Standard normal via Box-Muller (platform-independent).
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i + 1);
            slice.swap(i, j);
        }
    }
}

/// Read a `RAS1` raster.
pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let mut file = fs::File::open(path)
        .map_err(|e| Error::format(format!("cannot open {}: {e}", path.display())))?;
    let mut header = [0u8; 24];
    file.read_exact(&mut header)
        .map_err(|_| Error::format(format!("{}: truncated header", path.display())))?;
    if &header[0..4] != RAS1_MAGIC {
        return Err(Error::format(format!("{}: bad magic", path.display())));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != RAS1_VERSION {
        return Err(Error::format(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let (bands, height, width) = (word(8) as u64, word(12) as u64, word(16) as u64);
    let n = bands
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .filter(|&v| v <= MAX_ELEMS)
        .ok_or_else(|| Error::format(format!("{}: dimension overflow", path.display())))?;
    let mut payload = vec![0u8; (n * 4) as usize];
    file.read_exact(&mut payload)
        .map_err(|_| Error::format(format!("{}: truncated payload", path.display())))?;
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Raster::new(bands as usize, height as usize, width as usize, data)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

/// Write a `RAS1` raster. Byte output is deterministic for identical input.
pub fn write_raster(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + r.data.len() * 4);
    buf.extend_from_slice(RAS1_MAGIC);
    buf.extend_from_slice(&RAS1_VERSION.to_le_bytes());
    buf.extend_from_slice(&(r.bands as u32).to_le_bytes());
    buf.extend_from_slice(&(r.height as u32).to_le_bytes());
    buf.extend_from_slice(&(r.width as u32).to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    for v in &r.data {
        if !v.is_finite() {
            return Err(Error::invalid("raster contains non-finite values"));
        }
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Import an 8- or 16-bit grayscale/RGB PNG onto the 12-bit DN scale.
pub fn read_png(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::format(format!("cannot decode {}: {e}", path.display())))?;
    use image::DynamicImage::*;
    let (bands, height, width, data): (usize, usize, usize, Vec<f32>) = match img {
        ImageLuma8(im) => {
            let (w, h) = im.dimensions();
            let scale = DN_PEAK / 255.0;
            (
                1,
                h as usize,
                w as usize,
                im.into_raw().iter().map(|&v| v as f32 * scale).collect(),
            )
        }
        ImageLuma16(im) => {
            let (w, h) = im.dimensions();
            let scale = DN_PEAK / 65535.0;
            (
                1,
                h as usize,
                w as usize,
                im.into_raw().iter().map(|&v| v as f32 * scale).collect(),
            )
        }
        ImageRgb8(im) => {
            let (w, h) = im.dimensions();
            let scale = DN_PEAK / 255.0;
            let raw = im.into_raw();
            let n = (w * h) as usize;
            let mut data = vec![0.0f32; 3 * n];
            for (i, px) in raw.chunks_exact(3).enumerate() {
                for b in 0..3 {
                    data[b * n + i] = px[b] as f32 * scale;
                }
            }
            (3, h as usize, w as usize, data)
        }
        ImageRgb16(im) => {
            let (w, h) = im.dimensions();
            let scale = DN_PEAK / 65535.0;
            let raw = im.into_raw();
            let n = (w * h) as usize;
            let mut data = vec![0.0f32; 3 * n];
            for (i, px) in raw.chunks_exact(3).enumerate() {
                for b in 0..3 {
                    data[b * n + i] = px[b] as f32 * scale;
                }
            }
            (3, h as usize, w as usize, data)
        }
        _ => {
            return Err(Error::format(format!(
                "{}: unsupported PNG layout (need 8/16-bit gray or RGB)",
                path.display()
            )))
        }
    };
    Raster::new(bands, height, width, data)
}

/// Export an 8-bit PNG preview: values mapped 0..4095 -> 0..255, clamped.
pub fn write_png_preview(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let to_u8 = |v: f32| -> u8 { (v.clamp(0.0, DN_PEAK) * (255.0 / DN_PEAK)).round() as u8 };
    let (w, h) = (r.width as u32, r.height as u32);
    match r.bands {
        1 => {
            let buf: Vec<u8> = r.band(0).iter().map(|&v| to_u8(v)).collect();
            let im = image::GrayImage::from_raw(w, h, buf)
                .ok_or_else(|| Error::dimension("preview buffer mismatch"))?;
            im.save(path.as_ref())
                .map_err(|e| Error::format(format!("PNG write failed: {e}")))
        }
        3 => {
            let n = r.height * r.width;
            let mut buf = vec![0u8; 3 * n];
            for b in 0..3 {
                let src = r.band(b);
                for i in 0..n {
                    buf[i * 3 + b] = to_u8(src[i]);
                }
            }
            let im = image::RgbImage::from_raw(w, h, buf)
                .ok_or_else(|| Error::dimension("preview buffer mismatch"))?;
            im.save(path.as_ref())
                .map_err(|e| Error::format(format!("PNG write failed: {e}")))
        }
        b => Err(Error::dimension(format!("cannot preview {b}-band raster"))),
    }
}

/// Extract up to `max_crops` LR/HR crop pairs. Candidate origins lie on a
/// uniform grid of stride `size`; the grid is shuffled and drawn without
/// replacement, so no two crops share an origin.
pub fn extract_crops(
    lr: &Raster,
    hr: &Raster,
    size: usize,
    max_crops: usize,
    rng: &mut Rng,
) -> Result<Vec<(CropSpec, Raster, Raster)>> {
    if hr.height != 2 * lr.height || hr.width != 2 * lr.width || hr.bands != lr.bands {
        return Err(Error::dimension(format!(
            "HR {}x{}x{} is not the 2x counterpart of LR {}x{}x{}",
            hr.bands, hr.height, hr.width, lr.bands, lr.height, lr.width
        )));
    }
    if size == 0 || size > lr.height.min(lr.width) {
        return Err(Error::dimension(format!(
            "crop size {size} does not fit {}x{}",
            lr.height, lr.width
        )));
    }
    let mut origins = Vec::new();
    let mut row = 0;
    while row + size <= lr.height {
        let mut col = 0;
        while col + size <= lr.width {
            origins.push((row, col));
            col += size;
        }
        row += size;
    }
    rng.shuffle(&mut origins);
    origins.truncate(max_crops);
    origins
        .into_iter()
        .map(|(row, col)| {
            let spec = CropSpec { row, col, size };
            let lr_crop = lr.crop(row, col, size, size)?;
            let hr_crop = hr.crop(2 * row, 2 * col, 2 * size, 2 * size)?;
            Ok((spec, lr_crop, hr_crop))
        })
        .collect()
}
