//! Image quality (PSNR, SSIM) and depth error (RMSE, MAE, SqRel) metrics.

use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::image::{GrayImage, Raster};
use crate::numeric::pairwise_sum;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub sq_rel: f64,
    pub n_valid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageMetrics {
    /// Decibels; `+inf` for identical inputs.
    pub psnr: f64,
    pub ssim: f64,
}

/// Least-squares scale `s` minimizing `Σ (s·p - g)²` over the mask.
pub fn lsq_scale(pred: &[f64], gt: &[f64], mask: &[bool]) -> f64 {
    let mut num = Vec::new();
    let mut den = Vec::new();
    for i in 0..pred.len() {
        if mask[i] {
            num.push(pred[i] * gt[i]);
            den.push(pred[i] * pred[i]);
        }
    }
    let d = pairwise_sum(&den);
    if d > 0.0 {
        pairwise_sum(&num) / d
    } else {
        1.0
    }
}

/// Depth errors over the pixels where `mask` is true (all pixels when `None`).
///
/// With `align_scale`, `pred` is first multiplied by the least-squares scale
/// against `gt`.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap, mask: Option<&[bool]>, align_scale: bool) -> Result<DepthMetrics> {
    if pred.dims() != gt.dims() {
        return Err(Error::dims(pred.dims(), gt.dims()));
    }
    let n = gt.data().len();
    let all;
    let mask = match mask {
        Some(m) => {
            if m.len() != n {
                return Err(Error::arg(format!("mask has {} entries, expected {n}", m.len())));
            }
            m
        }
        None => {
            all = vec![true; n];
            &all
        }
    };
    let (p, g) = (pred.data(), gt.data());
    let mut sq = Vec::new();
    let mut abs = Vec::new();
    let mut rel = Vec::new();
    let scale = if align_scale { lsq_scale(p, g, mask) } else { 1.0 };
    for i in 0..n {
        if !mask[i] {
            continue;
        }
        if !(g[i] > 0.0) {
            return Err(Error::Domain(format!("ground truth {} at index {i} is not positive", g[i])));
        }
        let e = scale * p[i] - g[i];
        sq.push(e * e);
        abs.push(e.abs());
        rel.push(e * e / g[i]);
    }
    if sq.is_empty() {
        return Err(Error::arg("validity mask selects no pixels"));
    }
    let k = sq.len() as f64;
    Ok(DepthMetrics {
        rmse: (pairwise_sum(&sq) / k).sqrt(),
        mae: pairwise_sum(&abs) / k,
        sq_rel: pairwise_sum(&rel) / k,
        n_valid: sq.len(),
    })
}

/// Mask of pixels with positive ground truth.
pub fn positive_mask(gt: &DepthMap) -> Vec<bool> {
    gt.data().iter().map(|&v| v > 0.0).collect()
}

/// PSNR in dB over all channels; `+inf` when the inputs are identical.
pub fn psnr<R: Raster + ?Sized>(a: &R, b: &R) -> Result<f64> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    if a.max_value() != b.max_value() {
        return Err(Error::arg(format!(
            "max_value differs: {} vs {}",
            a.max_value(),
            b.max_value()
        )));
    }
    let sq: Vec<f64> = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    let mse = pairwise_sum(&sq) / sq.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (a.max_value() * a.max_value() / mse).log10())
}

/// Normalized 1D Gaussian taps for the SSIM window.
pub fn ssim_taps() -> [f64; SSIM_WINDOW] {
    let mut t = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as f64;
    for (i, v) in t.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = t.iter().sum();
    for v in t.iter_mut() {
        *v /= s;
    }
    t
}

/// Valid-mode separable filtering: output is (w - 10) × (h - 10).
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW], exec: Exec) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut tmp = vec![0.0; ow * h];
    exec.fill_rows(&mut tmp, ow, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let base = y * w + x;
            *o = taps.iter().enumerate().map(|(i, t)| t * src[base + i]).sum();
        }
    });
    let mut out = vec![0.0; ow * oh];
    exec.fill_rows(&mut out, ow, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * tmp[(y + i) * ow + x])
                .sum();
        }
    });
    out
}

pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    ssim_with(a, b, Exec::default())
}

/// Mean SSIM over all 11×11 Gaussian windows (σ = 1.5) that fit inside the
/// image, with `K₁ = 0.01`, `K₂ = 0.03` and `L = max_value`.
pub fn ssim_with(a: &GrayImage, b: &GrayImage, exec: Exec) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    if a.max_value() != b.max_value() {
        return Err(Error::arg("SSIM inputs must share max_value"));
    }
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Size(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let l = a.max_value();
    let c1 = (SSIM_K1 * l).powi(2);
    let c2 = (SSIM_K2 * l).powi(2);
    let taps = ssim_taps();
    let (x, y) = (a.data(), b.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mx = filter_valid(x, w, h, &taps, exec);
    let my = filter_valid(y, w, h, &taps, exec);
    let sxx = filter_valid(&xx, w, h, &taps, exec);
    let syy = filter_valid(&yy, w, h, &taps, exec);
    let sxy = filter_valid(&xy, w, h, &taps, exec);
    let map: Vec<f64> = (0..mx.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .collect();
    Ok(pairwise_sum(&map) / map.len() as f64)
}

pub fn image_metrics(a: &GrayImage, b: &GrayImage) -> Result<ImageMetrics> {
    Ok(ImageMetrics {
        psnr: psnr(a, b)?,
        ssim: ssim(a, b)?,
    })
}
