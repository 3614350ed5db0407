//! 2D DFT utilities and the log-Gabor quadrature filter bank.
//!
//! Conventions: the forward transform is unnormalized, the inverse carries the
//! `1/(W·H)` factor. Frequency index `k` of an `n`-point axis maps to `k/n`
//! cycles per pixel when `2k < n` and to `(k - n)/n` otherwise, so the
//! Nyquist bin of an even axis is on the negative side. Filtering is circular
//! convolution.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::image::GrayImage;
use crate::kvconfig::KvConfig;

/// A complex row-major grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

/// Planned 2D transforms for one grid size.
#[derive(Clone)]
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg("transform size must be positive"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        })
    }

    fn run(&self, buf: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(buf.len(), w * h);
        // rustfft processes consecutive chunks of the plan length.
        row.process(buf);
        let mut t = transpose(buf, w, h);
        col.process(&mut t);
        let back = transpose(&t, h, w);
        buf.copy_from_slice(&back);
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform including the `1/(W·H)` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let s = 1.0 / (self.width * self.height) as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }
}

fn transpose(src: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = src[y * w + x];
        }
    }
    out
}

/// Forward 2D DFT of a real grid.
pub fn dft2(width: usize, height: usize, grid: &[f64]) -> Result<Spectrum> {
    if grid.len() != width * height {
        return Err(Error::arg(format!(
            "grid has {} samples, expected {width}x{height}",
            grid.len()
        )));
    }
    let mut data: Vec<Complex64> = grid.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft2::new(width, height)?.forward(&mut data);
    Ok(Spectrum {
        width,
        height,
        data,
    })
}

/// Normalized inverse 2D DFT.
pub fn idft2(spec: &Spectrum) -> Result<Vec<Complex64>> {
    let mut data = spec.data.clone();
    Fft2::new(spec.width, spec.height)?.inverse(&mut data);
    Ok(data)
}

/// Signed frequency (cycles/pixel) of DFT bin `k` on an `n`-point axis.
#[inline]
pub fn frequency(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64 / n as f64
    } else {
        (k as f64 - n as f64) / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBankConfig {
    pub n_scales: usize,
    pub n_orientations: usize,
    /// Wavelength in pixels of the finest scale.
    pub min_wavelength: f64,
    /// Ratio between successive wavelengths.
    pub scale_multiplier: f64,
    /// Radial bandwidth: ratio of the log-Gaussian's sigma to the centre frequency.
    pub sigma_on_f: f64,
    /// Ratio of orientation spacing to the angular Gaussian's sigma.
    pub d_theta_sigma: f64,
}

impl Default for FilterBankConfig {
    fn default() -> Self {
        Self {
            n_scales: 4,
            n_orientations: 4,
            min_wavelength: 6.0,
            scale_multiplier: 2.0,
            sigma_on_f: 0.55,
            d_theta_sigma: 1.2,
        }
    }
}

impl FilterBankConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_scales < 1 || self.n_orientations < 1 {
            return Err(Error::arg("need at least one scale and one orientation"));
        }
        if !(self.min_wavelength >= 2.0) {
            return Err(Error::arg(format!(
                "min_wavelength {} is below the Nyquist limit of 2",
                self.min_wavelength
            )));
        }
        if !(self.scale_multiplier > 1.0 && self.scale_multiplier.is_finite()) {
            return Err(Error::arg("scale_multiplier must exceed 1"));
        }
        if !(self.sigma_on_f > 0.0 && self.sigma_on_f < 1.0) {
            return Err(Error::arg("sigma_on_f must lie in (0, 1)"));
        }
        if !(self.d_theta_sigma > 0.0 && self.d_theta_sigma.is_finite()) {
            return Err(Error::arg("d_theta_sigma must be positive"));
        }
        Ok(())
    }

    pub fn wavelength(&self, scale: usize) -> f64 {
        self.min_wavelength * self.scale_multiplier.powi(scale as i32)
    }

    /// Orientation angle of filter `j`, in radians.
    pub fn orientation_angle(&self, j: usize) -> f64 {
        j as f64 * PI / self.n_orientations as f64
    }

    pub fn angular_sigma(&self) -> f64 {
        PI / self.n_orientations as f64 / self.d_theta_sigma
    }

    /// Reads the keys `scales`, `orientations`, `min_wavelength`, `mult`,
    /// `sigma_on_f`, `d_theta_sigma`; missing keys keep their defaults and
    /// unrelated keys are ignored.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let d = Self::default();
        let c = Self {
            n_scales: cfg.get("scales")?.unwrap_or(d.n_scales),
            n_orientations: cfg.get("orientations")?.unwrap_or(d.n_orientations),
            min_wavelength: cfg.get("min_wavelength")?.unwrap_or(d.min_wavelength),
            scale_multiplier: cfg.get("mult")?.unwrap_or(d.scale_multiplier),
            sigma_on_f: cfg.get("sigma_on_f")?.unwrap_or(d.sigma_on_f),
            d_theta_sigma: cfg.get("d_theta_sigma")?.unwrap_or(d.d_theta_sigma),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn write_kv(&self, cfg: &mut KvConfig) {
        cfg.set("scales", self.n_scales);
        cfg.set("orientations", self.n_orientations);
        cfg.set("min_wavelength", self.min_wavelength);
        cfg.set("mult", self.scale_multiplier);
        cfg.set("sigma_on_f", self.sigma_on_f);
        cfg.set("d_theta_sigma", self.d_theta_sigma);
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut cfg = KvConfig::new();
        self.write_kv(&mut cfg);
        cfg
    }
}

/// Radial log-Gaussian at frequency radius `f`, centred on `f0`.
pub fn radial_log_gabor(f: f64, f0: f64, sigma_on_f: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    let l = (f / f0).ln();
    let s = sigma_on_f.ln();
    (-(l * l) / (2.0 * s * s)).exp()
}

/// Precomputed frequency-domain transfer functions.
///
/// Filters are stored orientation-major: index `j * n_scales + s`.
#[derive(Debug, Clone)]
pub struct FilterBank {
    config: FilterBankConfig,
    width: usize,
    height: usize,
    transfer: Vec<Vec<f64>>,
    fft: Fft2,
}

impl FilterBank {
    pub fn config(&self) -> &FilterBankConfig {
        &self.config
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.transfer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transfer.is_empty()
    }

    pub fn transfer(&self, scale: usize, orientation: usize) -> &[f64] {
        &self.transfer[orientation * self.config.n_scales + scale]
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }
}

pub fn build_bank(config: FilterBankConfig, width: usize, height: usize) -> Result<FilterBank> {
    config.validate()?;
    if width < 4 || height < 4 {
        return Err(Error::Size(format!(
            "filter bank needs at least 4x4, got {width}x{height}"
        )));
    }
    let n = width * height;
    let mut radius = Vec::with_capacity(n);
    let mut sin_t = Vec::with_capacity(n);
    let mut cos_t = Vec::with_capacity(n);
    for ky in 0..height {
        // Image rows grow downwards; flip so angles are counter-clockwise.
        let fy = -frequency(ky, height);
        for kx in 0..width {
            let fx = frequency(kx, width);
            let theta = fy.atan2(fx);
            radius.push(fx.hypot(fy));
            sin_t.push(theta.sin());
            cos_t.push(theta.cos());
        }
    }

    let ang_sigma = config.angular_sigma();
    let mut transfer = Vec::with_capacity(config.n_scales * config.n_orientations);
    for j in 0..config.n_orientations {
        let angle = config.orientation_angle(j);
        let (sa, ca) = angle.sin_cos();
        let spread: Vec<f64> = (0..n)
            .map(|i| {
                let ds = sin_t[i] * ca - cos_t[i] * sa;
                let dc = cos_t[i] * ca + sin_t[i] * sa;
                let d = ds.atan2(dc).abs();
                (-(d * d) / (2.0 * ang_sigma * ang_sigma)).exp()
            })
            .collect();
        for s in 0..config.n_scales {
            let f0 = 1.0 / config.wavelength(s);
            let mut t: Vec<f64> = (0..n)
                .map(|i| radial_log_gabor(radius[i], f0, config.sigma_on_f) * spread[i])
                .collect();
            t[0] = 0.0;
            transfer.push(t);
        }
    }
    Ok(FilterBank {
        config,
        width,
        height,
        transfer,
        fft: Fft2::new(width, height)?,
    })
}

/// Even (real) and odd (imaginary) responses of one log-Gabor filter.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResponse {
    pub scale: usize,
    pub orientation: usize,
    pub width: usize,
    pub height: usize,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

impl QuadratureResponse {
    pub fn amplitude(&self) -> Vec<f64> {
        self.even
            .iter()
            .zip(&self.odd)
            .map(|(e, o)| e.hypot(*o))
            .collect()
    }
}

pub fn apply_bank(img: &GrayImage, bank: &FilterBank) -> Result<Vec<QuadratureResponse>> {
    apply_bank_with(img, bank, Exec::default())
}

/// Filters `img` with every filter of `bank`, in bank order.
///
/// The image mean is removed first; the filters are zero at DC so this only
/// suppresses leakage.
pub fn apply_bank_with(img: &GrayImage, bank: &FilterBank, exec: Exec) -> Result<Vec<QuadratureResponse>> {
    if img.dims() != bank.dims() {
        return Err(Error::dims(img.dims(), bank.dims()));
    }
    let (w, h) = bank.dims();
    let data = img.data();
    // a rounded mean would leave ~1e-17 residue on flat input
    let mean = if data.iter().all(|&v| v == data[0]) {
        data[0]
    } else {
        crate::numeric::mean(data)
    };
    let mut spectrum: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    bank.fft.forward(&mut spectrum);

    let ns = bank.config.n_scales;
    Ok(exec.map(bank.transfer.len(), |idx| {
        let t = &bank.transfer[idx];
        let mut buf: Vec<Complex64> = spectrum.iter().zip(t).map(|(c, &g)| c * g).collect();
        bank.fft.inverse(&mut buf);
        QuadratureResponse {
            scale: idx % ns,
            orientation: idx / ns,
            width: w,
            height: h,
            even: buf.iter().map(|c| c.re).collect(),
            odd: buf.iter().map(|c| c.im).collect(),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h).map(|_| rng.gen::<f64>()).collect();
        GrayImage::new(w, h, data, 1.0).unwrap()
    }

    #[test]
    fn constant_grid_has_only_dc() {
        let s = dft2(6, 5, &[2.5; 30]).unwrap();
        assert!((s.data[0] - Complex64::new(75.0, 0.0)).norm() < 1e-12);
        assert!(s.data[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn inverse_and_parseval() {
        let img = noise(32, 32, 1);
        let s = dft2(32, 32, img.data()).unwrap();
        let back = idft2(&s).unwrap();
        for (a, b) in img.data().iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-10 * a.abs().max(1.0));
            assert!(b.im.abs() < 1e-10);
        }
        let lhs: f64 = img.data().iter().map(|v| v * v).sum();
        let rhs: f64 = s.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / 1024.0;
        assert!(((lhs - rhs) / lhs).abs() < 1e-8);
    }

    #[test]
    fn odd_sizes_invert() {
        let img = noise(7, 9, 3);
        let back = idft2(&dft2(7, 9, img.data()).unwrap()).unwrap();
        for (a, b) in img.data().iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-12);
        }
    }

    #[test]
    fn frequency_grid_puts_nyquist_negative() {
        assert_eq!(frequency(0, 8), 0.0);
        assert_eq!(frequency(3, 8), 0.375);
        assert_eq!(frequency(4, 8), -0.5);
        assert_eq!(frequency(7, 8), -0.125);
        assert_eq!(frequency(2, 5), 0.4);
        assert_eq!(frequency(3, 5), -0.4);
    }

    #[test]
    fn radial_peak_and_dc() {
        assert_eq!(radial_log_gabor(1.0 / 6.0, 1.0 / 6.0, 0.55), 1.0);
        assert_eq!(radial_log_gabor(0.0, 1.0 / 6.0, 0.55), 0.0);
        assert!(radial_log_gabor(0.3, 1.0 / 6.0, 0.55) < 1.0);
    }

    #[test]
    fn bank_shape_and_range() {
        let bank = build_bank(FilterBankConfig::default(), 64, 64).unwrap();
        assert_eq!(bank.len(), 16);
        for j in 0..4 {
            for s in 0..4 {
                let t = bank.transfer(s, j);
                assert_eq!(t.len(), 64 * 64);
                assert_eq!(t[0], 0.0);
                assert!(t.iter().all(|&v| (0.0..=1.0).contains(&v)));
                assert!(t.iter().cloned().fold(0.0, f64::max) > 0.5);
            }
        }
    }

    #[test]
    fn bad_configs_rejected() {
        let base = FilterBankConfig::default();
        for bad in [
            FilterBankConfig { n_scales: 0, ..base },
            FilterBankConfig { n_orientations: 0, ..base },
            FilterBankConfig { min_wavelength: 1.5, ..base },
            FilterBankConfig { scale_multiplier: 1.0, ..base },
            FilterBankConfig { sigma_on_f: 1.0, ..base },
            FilterBankConfig { sigma_on_f: 0.0, ..base },
        ] {
            assert!(build_bank(bad, 16, 16).is_err(), "{bad:?}");
        }
        assert!(matches!(build_bank(base, 3, 16), Err(Error::Size(_))));
    }

    #[test]
    fn kv_round_trip() {
        let c = FilterBankConfig {
            n_scales: 3,
            n_orientations: 6,
            min_wavelength: 3.0,
            scale_multiplier: 2.1,
            sigma_on_f: 0.65,
            d_theta_sigma: 1.5,
        };
        assert_eq!(FilterBankConfig::from_kv(&c.to_kv()).unwrap(), c);
        let empty = KvConfig::new();
        assert_eq!(FilterBankConfig::from_kv(&empty).unwrap(), FilterBankConfig::default());
    }

    #[test]
    fn constant_image_gives_zero_response() {
        let bank = build_bank(FilterBankConfig::default(), 32, 32).unwrap();
        let img = GrayImage::filled(32, 32, 200.0, 255.0).unwrap();
        for r in apply_bank(&img, &bank).unwrap() {
            assert!(r.even.iter().chain(&r.odd).all(|v| v.abs() < 1e-9 * 255.0));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let bank = build_bank(FilterBankConfig::default(), 32, 32).unwrap();
        let img = GrayImage::filled(16, 32, 0.0, 1.0).unwrap();
        assert!(matches!(apply_bank(&img, &bank), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn linearity_and_shift_covariance() {
        let bank = build_bank(FilterBankConfig::default(), 32, 24).unwrap();
        let a = noise(32, 24, 10);
        let b = noise(32, 24, 11);
        let combo = GrayImage::new(
            32,
            24,
            a.data().iter().zip(b.data()).map(|(x, y)| 2.0 * x - 0.5 * y).collect(),
            1.0,
        )
        .unwrap();
        let ra = apply_bank(&a, &bank).unwrap();
        let rb = apply_bank(&b, &bank).unwrap();
        let rc = apply_bank(&combo, &bank).unwrap();
        for ((x, y), z) in ra.iter().zip(&rb).zip(&rc) {
            for i in 0..x.even.len() {
                let e = 2.0 * x.even[i] - 0.5 * y.even[i];
                let o = 2.0 * x.odd[i] - 0.5 * y.odd[i];
                assert!((e - z.even[i]).abs() < 1e-8 * (1.0 + e.abs()));
                assert!((o - z.odd[i]).abs() < 1e-8 * (1.0 + o.abs()));
            }
        }

        let shifted = a.shifted(5, -3);
        let rs = apply_bank(&shifted, &bank).unwrap();
        for (r, s) in ra.iter().zip(&rs) {
            let even = GrayImage::new(32, 24, r.even.clone(), 1.0).unwrap().shifted(5, -3);
            for (p, q) in even.data().iter().zip(&s.even) {
                assert!((p - q).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_identical() {
        let bank = build_bank(FilterBankConfig::default(), 40, 40).unwrap();
        let img = noise(40, 40, 5);
        let a = apply_bank_with(&img, &bank, Exec::Sequential).unwrap();
        let b = apply_bank_with(&img, &bank, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
