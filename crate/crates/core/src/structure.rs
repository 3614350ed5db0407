//! Phase-congruency structural loss and the FSIM-style similarity maps.
//!
//! `pc_loss = 1 - Σ S_PC·S_G·PC_m / Σ PC_m` with
//! `S_PC = (2·p₁·p₂ + T₁) / (p₁² + p₂² + T₁)`, `S_G` likewise on gradient
//! magnitudes with `T₂`, and `PC_m = max(p₁, p₂)`. Gradients use the Scharr
//! operator (normalized by 16) on images rescaled to `[0, 255]`, the scale
//! `T₂ = 160` assumes.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::image::{normalize, GrayImage};
use crate::numeric::{clamp_index, mean, pairwise_sum};
use crate::phase::{compute_pc_with, PcResult};
use crate::spectral::FilterBank;

pub const DEFAULT_T1: f64 = 0.85;
pub const DEFAULT_T2: f64 = 160.0;

/// Scharr derivative kernel along x, already divided by 16.
pub const SCHARR_X: [[f64; 3]; 3] = [
    [-3.0 / 16.0, 0.0, 3.0 / 16.0],
    [-10.0 / 16.0, 0.0, 10.0 / 16.0],
    [-3.0 / 16.0, 0.0, 3.0 / 16.0],
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityParams {
    pub t1: f64,
    pub t2: f64,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self {
            t1: DEFAULT_T1,
            t2: DEFAULT_T2,
        }
    }
}

impl SimilarityParams {
    fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0 && self.t2 > 0.0 && self.t1.is_finite() && self.t2.is_finite()) {
            return Err(Error::arg(format!(
                "stabilizers must be positive, got t1={} t2={}",
                self.t1, self.t2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f64>,
    pub operator_name: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMaps {
    pub width: usize,
    pub height: usize,
    pub s_pc: Vec<f64>,
    pub s_g: Vec<f64>,
    pub pc_m: Vec<f64>,
    pub t1: f64,
    pub t2: f64,
}

/// Applies a 3×3 kernel with replicate padding.
pub(crate) fn correlate3(img: &GrayImage, k: &[[f64; 3]; 3], exec: Exec) -> Vec<f64> {
    let (w, h) = img.dims();
    let mut out = vec![0.0; w * h];
    exec.fill_rows(&mut out, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            // Row partials first: antisymmetric kernels then cancel exactly
            // on flat input.
            let mut acc = 0.0;
            for (dy, kr) in k.iter().enumerate() {
                let sy = clamp_index(y as isize + dy as isize - 1, h);
                let mut part = 0.0;
                for (dx, &kv) in kr.iter().enumerate() {
                    if kv != 0.0 {
                        let sx = clamp_index(x as isize + dx as isize - 1, w);
                        part += kv * img.get(sx, sy);
                    }
                }
                acc += part;
            }
            *o = acc;
        }
    });
    out
}

pub(crate) fn transpose3(k: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for (i, row) in k.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j][i] = v;
        }
    }
    t
}

pub fn gradient_magnitude(img: &GrayImage) -> GradientMap {
    gradient_magnitude_with(img, Exec::default())
}

/// Scharr gradient magnitude in the image's own intensity units.
pub fn gradient_magnitude_with(img: &GrayImage, exec: Exec) -> GradientMap {
    let gx = correlate3(img, &SCHARR_X, exec);
    let gy = correlate3(img, &transpose3(&SCHARR_X), exec);
    GradientMap {
        width: img.width(),
        height: img.height(),
        magnitude: gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect(),
        operator_name: "scharr",
    }
}

#[inline]
pub fn similarity(a: f64, b: f64, t: f64) -> f64 {
    (2.0 * a * b + t) / (a * a + b * b + t)
}

pub fn similarity_maps(
    dims: (usize, usize),
    pc_gen: &[f64],
    pc_real: &[f64],
    g_gen: &[f64],
    g_real: &[f64],
    params: SimilarityParams,
) -> Result<SimilarityMaps> {
    params.validate()?;
    let n = dims.0 * dims.1;
    for (name, g) in [("pc_gen", pc_gen), ("pc_real", pc_real), ("g_gen", g_gen), ("g_real", g_real)] {
        if g.len() != n {
            return Err(Error::arg(format!(
                "{name} has {} samples, expected {}x{}",
                g.len(),
                dims.0,
                dims.1
            )));
        }
    }
    Ok(SimilarityMaps {
        width: dims.0,
        height: dims.1,
        s_pc: (0..n).map(|i| similarity(pc_gen[i], pc_real[i], params.t1)).collect(),
        s_g: (0..n).map(|i| similarity(g_gen[i], g_real[i], params.t2)).collect(),
        pc_m: (0..n).map(|i| pc_gen[i].max(pc_real[i])).collect(),
        t1: params.t1,
        t2: params.t2,
    })
}

/// Everything computed on the way to the loss.
#[derive(Debug, Clone)]
pub struct PcLossReport {
    pub loss: f64,
    pub fsim: f64,
    pub mean_s_pc: f64,
    pub mean_s_g: f64,
    pub maps: SimilarityMaps,
    pub pc_gen: PcResult,
    pub pc_real: PcResult,
}

/// Computes the loss and its intermediates for a generated/real pair.
pub fn pc_loss_report(
    img_gen: &GrayImage,
    img_real: &GrayImage,
    bank: &FilterBank,
    epsilon: f64,
    params: SimilarityParams,
    exec: Exec,
) -> Result<PcLossReport> {
    if img_gen.dims() != img_real.dims() {
        return Err(Error::dims(img_gen.dims(), img_real.dims()));
    }
    let side = |img: &GrayImage| -> Result<(PcResult, GradientMap)> {
        let pc = compute_pc_with(img, bank, epsilon, exec)?;
        let g = gradient_magnitude_with(&normalize(img, 255.0)?, exec);
        Ok((pc, g))
    };
    let (a, b) = exec.join(|| side(img_gen), || side(img_real));
    let (pc_gen, g_gen) = a?;
    let (pc_real, g_real) = b?;
    let maps = similarity_maps(
        img_gen.dims(),
        &pc_gen.pc,
        &pc_real.pc,
        &g_gen.magnitude,
        &g_real.magnitude,
        params,
    )?;
    let den = pairwise_sum(&maps.pc_m);
    if !(den > 0.0) {
        return Err(Error::Degenerate(
            "phase congruency is zero everywhere in both images".into(),
        ));
    }
    let weighted: Vec<f64> = (0..maps.pc_m.len())
        .map(|i| maps.s_pc[i] * maps.s_g[i] * maps.pc_m[i])
        .collect();
    let fsim = pairwise_sum(&weighted) / den;
    Ok(PcLossReport {
        loss: 1.0 - fsim,
        fsim,
        mean_s_pc: mean(&maps.s_pc),
        mean_s_g: mean(&maps.s_g),
        maps,
        pc_gen,
        pc_real,
    })
}

/// Phase congruency loss with the default stabilizers.
pub fn pc_loss(img_gen: &GrayImage, img_real: &GrayImage, bank: &FilterBank, epsilon: f64) -> Result<f64> {
    pc_loss_report(img_gen, img_real, bank, epsilon, SimilarityParams::default(), Exec::default()).map(|r| r.loss)
}

/// The FSIM index, `1 - pc_loss`.
pub fn fsim_score(img_gen: &GrayImage, img_real: &GrayImage, bank: &FilterBank, epsilon: f64) -> Result<f64> {
    pc_loss_report(img_gen, img_real, bank, epsilon, SimilarityParams::default(), Exec::default()).map(|r| r.fsim)
}
