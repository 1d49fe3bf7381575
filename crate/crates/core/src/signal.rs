//! Numerical kernels shared by the acquisition simulator and the
//! registration pipeline: separable Gaussian blur, decimation, integer and
//! subpixel shifts, cubic B-spline resampling with zero fill, 2-D FFT, and
//! seeded Gaussian noise.
//!
//! Boundary policy: mirror for blur, edge replication for integer shifts,
//! zero fill for spline resampling.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::par;
use crate::raster::{Plane, Rng, DN_PEAK};
use crate::{Error, Result};

/// Odd, symmetric, unit-gain 1-D convolution kernel.
#[derive(Debug, Clone)]
pub struct Kernel1D {
    taps: Vec<f64>,
    sigma: f64,
}

impl Kernel1D {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn radius(&self) -> usize {
        self.taps.len() / 2
    }
}

/// Discrete Gaussian, radius `ceil(4*sigma)` per side, normalized to unit sum.
/// `sigma == 0` yields the identity kernel.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel1D> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(Kernel1D {
            taps: vec![1.0],
            sigma,
        });
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(Kernel1D { taps, sigma })
}

/// Mirror (reflect-about-edge) index into [0, n).
#[inline]
fn mirror(i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * n - 2;
    let mut m = i % period;
    if m < 0 {
        m += period;
    }
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// 1-D convolution of each length-`w` row in `buf`, mirror boundary.
fn convolve_rows(buf: &mut [f64], w: usize, taps: &[f64]) {
    let r = taps.len() as i64 / 2;
    par::for_each_chunk_mut(buf, w, |_, row| {
        let src: Vec<f64> = row.to_vec();
        for (j, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * src[mirror(j as i64 + k as i64 - r, w)];
            }
            *out = acc;
        }
    });
}

fn transpose(buf: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; buf.len()];
    for i in 0..h {
        for j in 0..w {
            out[j * h + i] = buf[i * w + j];
        }
    }
    out
}

/// Separable convolution, rows then columns, mirror boundary. Constant
/// inputs pass through unchanged (kernels have unit DC gain).
pub fn blur(band: &Plane, kernel: &Kernel1D) -> Plane {
    if kernel.taps.len() == 1 && kernel.taps[0] == 1.0 {
        return band.clone();
    }
    let (h, w) = (band.height(), band.width());
    let mut buf: Vec<f64> = band.data().iter().map(|&v| v as f64).collect();
    convolve_rows(&mut buf, w, &kernel.taps);
    let mut t = transpose(&buf, h, w);
    convolve_rows(&mut t, h, &kernel.taps);
    let back = transpose(&t, w, h);
    Plane::from_vec(h, w, back.iter().map(|&v| v as f32).collect())
}

/// Keep every second sample: output `(i, j) = input(2i + phase_row, 2j + phase_col)`.
pub fn decimate2(band: &Plane, phase_row: usize, phase_col: usize) -> Result<Plane> {
    let (h, w) = (band.height(), band.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dimension(format!(
            "decimate2 requires even dimensions, got {h}x{w}"
        )));
    }
    assert!(phase_row < 2 && phase_col < 2, "phases must be 0 or 1");
    let mut out = Plane::zeros(h / 2, w / 2);
    for i in 0..h / 2 {
        for j in 0..w / 2 {
            out.set(i, j, band.get(2 * i + phase_row, 2 * j + phase_col));
        }
    }
    Ok(out)
}

/// Whole-pixel translation with edge replication:
/// output `(i, j) = input(i - dr, j - dc)`.
pub fn shift_integer(band: &Plane, dr: i32, dc: i32) -> Plane {
    debug_assert!(dr.abs() <= 4 && dc.abs() <= 4);
    let (h, w) = (band.height(), band.width());
    Plane::from_fn(h, w, |i, j| {
        let si = (i as i64 - dr as i64).clamp(0, h as i64 - 1) as usize;
        let sj = (j as i64 - dc as i64).clamp(0, w as i64 - 1) as usize;
        band.get(si, sj)
    })
}

// Cubic B-spline prefilter pole.
const SPLINE_POLE: f64 = -0.26794919243112270647; // sqrt(3) - 2

/// In-place recursive prefilter turning samples into cubic B-spline
/// coefficients (mirror boundary, truncated-series initialization).
fn spline_prefilter_1d(c: &mut [f64]) {
    let n = c.len();
    if n == 1 {
        return;
    }
    let z = SPLINE_POLE;
    let gain = (1.0 - z) * (1.0 - 1.0 / z);
    for v in c.iter_mut() {
        *v *= gain;
    }
    // Causal init: sum over the mirrored extension until |z|^k underflows.
    let horizon = ((1e-14f64).ln() / z.abs().ln()).ceil() as usize;
    let horizon = horizon.min(n);
    let mut sum = c[0];
    let mut zk = z;
    for k in 1..horizon {
        sum += zk * c[k];
        zk *= z;
    }
    c[0] = sum;
    for k in 1..n {
        c[k] += z * c[k - 1];
    }
    c[n - 1] = (z / (z * z - 1.0)) * (z * c[n - 2] + c[n - 1]);
    for k in (0..n - 1).rev() {
        c[k] = z * (c[k + 1] - c[k]);
    }
}

#[inline]
fn bspline_weights(f: f64) -> [f64; 4] {
    let f2 = f * f;
    let f3 = f2 * f;
    let omf = 1.0 - f;
    [
        omf * omf * omf / 6.0,
        2.0 / 3.0 - f2 + 0.5 * f3,
        2.0 / 3.0 - omf * omf + 0.5 * omf * omf * omf,
        f3 / 6.0,
    ]
}

/// Subpixel translation by cubic B-spline interpolation:
/// output `(i, j) = input(i - dr, j - dc)`, zeros where the source location
/// falls outside the input footprint. The footprint extends half a pixel
/// beyond the outer sample centers, so half-pixel compensation shifts never
/// zero a border that the image actually covers.
pub fn spline_shift(band: &Plane, dr: f64, dc: f64) -> Plane {
    debug_assert!(dr.abs() <= 8.0 && dc.abs() <= 8.0);
    let (h, w) = (band.height(), band.width());
    let mut coef: Vec<f64> = band.data().iter().map(|&v| v as f64).collect();
    par::for_each_chunk_mut(&mut coef, w, |_, row| spline_prefilter_1d(row));
    let mut t = transpose(&coef, h, w);
    par::for_each_chunk_mut(&mut t, h, |_, col| spline_prefilter_1d(col));
    let coef = transpose(&t, w, h);

    let mut out = Plane::zeros(h, w);
    par::for_each_chunk_mut(out.data_mut(), w, |i, row| {
        let y = i as f64 - dr;
        if y < -0.5 || y > (h - 1) as f64 + 0.5 {
            return; // whole row outside: stays zero
        }
        let iy = y.floor() as i64;
        let wy = bspline_weights(y - iy as f64);
        let ry: [usize; 4] = std::array::from_fn(|k| mirror(iy - 1 + k as i64, h));
        for (j, out_v) in row.iter_mut().enumerate() {
            let x = j as f64 - dc;
            if x < -0.5 || x > (w - 1) as f64 + 0.5 {
                continue;
            }
            let ix = x.floor() as i64;
            let wx = bspline_weights(x - ix as f64);
            let mut acc = 0.0;
            for (k, &yy) in ry.iter().enumerate() {
                let base = yy * w;
                let mut row_acc = 0.0;
                for (l, &wxl) in wx.iter().enumerate() {
                    row_acc += wxl * coef[base + mirror(ix - 1 + l as i64, w)];
                }
                acc += wy[k] * row_acc;
            }
            *out_v = acc as f32;
        }
    });
    out
}

/// Complex 2-D spectrum with the same dimensions as its source band.
#[derive(Debug, Clone)]
pub struct Spectrum {
    height: usize,
    width: usize,
    data: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn data(&self) -> &[Complex<f64>] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex<f64>] {
        &mut self.data
    }

    pub fn from_data(height: usize, width: usize, data: Vec<Complex<f64>>) -> Self {
        assert_eq!(data.len(), height * width);
        Spectrum {
            height,
            width,
            data,
        }
    }
}

fn fft_pass(data: &mut [Complex<f64>], h: usize, w: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    par::for_each_chunk_mut(data, w, |_, row| row_fft.process(row));
    let mut t: Vec<Complex<f64>> = vec![Complex::default(); data.len()];
    for i in 0..h {
        for j in 0..w {
            t[j * h + i] = data[i * w + j];
        }
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    par::for_each_chunk_mut(&mut t, h, |_, col| col_fft.process(col));
    for j in 0..w {
        for i in 0..h {
            data[i * w + j] = t[j * h + i];
        }
    }
}

/// Forward 2-D DFT (unnormalized; the inverse carries the 1/N factor).
pub fn fft2(band: &Plane) -> Result<Spectrum> {
    let (h, w) = (band.height(), band.width());
    if h == 0 || w == 0 {
        return Err(Error::dimension("fft2 on zero-sized input"));
    }
    let mut data: Vec<Complex<f64>> = band
        .data()
        .iter()
        .map(|&v| Complex::new(v as f64, 0.0))
        .collect();
    fft_pass(&mut data, h, w, false);
    Ok(Spectrum {
        height: h,
        width: w,
        data,
    })
}

/// Inverse 2-D DFT scaled by `1/(h*w)`; returns the real part.
pub fn ifft2(spec: &Spectrum) -> Result<Plane> {
    let (h, w) = (spec.height, spec.width);
    if h == 0 || w == 0 {
        return Err(Error::dimension("ifft2 on zero-sized input"));
    }
    let mut data = spec.data.clone();
    fft_pass(&mut data, h, w, true);
    let norm = 1.0 / (h * w) as f64;
    Ok(Plane::from_vec(
        h,
        w,
        data.iter().map(|c| (c.re * norm) as f32).collect(),
    ))
}

/// Additive zero-mean Gaussian noise, standard deviation `level * 4095`.
/// Deterministic for a fixed RNG state.
pub fn add_noise(band: &Plane, level: f64, rng: &mut Rng) -> Result<Plane> {
    if level < 0.0 || !level.is_finite() {
        return Err(Error::invalid(format!("noise level must be >= 0, got {level}")));
    }
    if level == 0.0 {
        return Ok(band.clone());
    }
    let sigma = level * DN_PEAK as f64;
    let mut out = band.clone();
    for v in out.data_mut() {
        *v = (*v as f64 + sigma * rng.normal()) as f32;
    }
    Ok(out)
}

/// Fraction of non-DC spectral energy above half-Nyquist of the 2x-decimated
/// grid, i.e. in bins with `|f| > 0.25` cycles/px along either axis.
pub fn alias_energy_ratio(band: &Plane) -> Result<f64> {
    let spec = fft2(band)?;
    let (h, w) = (spec.height, spec.width);
    let mut total = 0.0;
    let mut high = 0.0;
    for i in 0..h {
        let fr = freq(i, h);
        for j in 0..w {
            if i == 0 && j == 0 {
                continue;
            }
            let e = spec.data[i * w + j].norm_sqr();
            total += e;
            if fr > 0.25 || freq(j, w) > 0.25 {
                high += e;
            }
        }
    }
    Ok(if total > 0.0 { high / total } else { 0.0 })
}

#[inline]
fn freq(k: usize, n: usize) -> f64 {
    let k = k.min(n - k);
    k as f64 / n as f64
}
