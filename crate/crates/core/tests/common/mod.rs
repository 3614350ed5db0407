//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the library's numerical routines;
//! they only borrow its data types.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use pcstruct::{DepthEncoding, DepthMap, FilterBankConfig, GrayImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_gray(w: usize, h: usize, max_value: f64, seed: u64) -> GrayImage {
    let mut r = rng(seed);
    let data = (0..w * h).map(|_| r.gen_range(0..=max_value as u32) as f64).collect();
    GrayImage::new(w, h, data, max_value).unwrap()
}

/// Smooth random blobs plus a checkerboard; has structure at several scales.
pub fn textured(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut r = rng(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..16)
        .map(|_| {
            (
                r.gen_range(0.0..w as f64),
                r.gen_range(0.0..h as f64),
                r.gen_range(1.5..6.0),
                r.gen_range(-90.0..90.0),
            )
        })
        .collect();
    GrayImage::from_fn(w, h, 255.0, |x, y| {
        let mut v = 128.0;
        for &(cx, cy, s, a) in &blobs {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            v += a * (-d2 / (2.0 * s * s)).exp();
        }
        v + if (x / 6 + y / 6) % 2 == 0 { 15.0 } else { -15.0 }
    })
    .unwrap()
}

pub fn random_depth(w: usize, h: usize, seed: u64) -> DepthMap {
    let mut r = rng(seed);
    let data = (0..w * h).map(|_| r.gen_range(0.0..4.0)).collect();
    DepthMap::new(w, h, data, DepthEncoding::MetricMm).unwrap()
}

/// Direct O(N²)-per-axis DFT along rows then columns. `sign` is -1 for the
/// forward transform and +1 for the (unnormalized) inverse.
pub fn naive_dft2(w: usize, h: usize, input: &[Complex64], sign: f64) -> Vec<Complex64> {
    let mut rows = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        for k in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in 0..w {
                let ang = sign * 2.0 * PI * (k * x % w) as f64 / w as f64;
                acc += input[y * w + x] * Complex64::new(ang.cos(), ang.sin());
            }
            rows[y * w + k] = acc;
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for x in 0..w {
        for k in 0..h {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..h {
                let ang = sign * 2.0 * PI * (k * y % h) as f64 / h as f64;
                acc += rows[y * w + x] * Complex64::new(ang.cos(), ang.sin());
            }
            out[k * w + x] = acc;
        }
    }
    out
}

fn signed_freq(k: usize, n: usize) -> f64 {
    let k = k as f64;
    let n = n as f64;
    if k < n / 2.0 {
        k / n
    } else {
        k / n - 1.0
    }
}

/// Log-Gabor transfer function written out from its definition.
pub fn oracle_transfer(cfg: &FilterBankConfig, w: usize, h: usize, scale: usize, orient: usize) -> Vec<f64> {
    let f0 = 1.0 / (cfg.min_wavelength * cfg.scale_multiplier.powf(scale as f64));
    let angle0 = orient as f64 * PI / cfg.n_orientations as f64;
    let sigma_theta = PI / (cfg.n_orientations as f64 * cfg.d_theta_sigma);
    let mut out = vec![0.0; w * h];
    for ky in 0..h {
        for kx in 0..w {
            if kx == 0 && ky == 0 {
                continue;
            }
            let u = signed_freq(kx, w);
            let v = -signed_freq(ky, h);
            let r = (u * u + v * v).sqrt();
            let radial = (-((r / f0).ln().powi(2)) / (2.0 * cfg.sigma_on_f.ln().powi(2))).exp();
            let mut d = v.atan2(u) - angle0;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            out[ky * w + kx] = radial * (-(d * d) / (2.0 * sigma_theta * sigma_theta)).exp();
        }
    }
    out
}

/// Phase congruency computed with the naive DFT and explicit loops.
/// Returns (pc, per-orientation energies, total amplitude).
pub fn oracle_pc(img: &GrayImage, cfg: &FilterBankConfig, epsilon: f64) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let (w, h) = img.dims();
    let n = w * h;
    let unit: Vec<f64> = img.data().iter().map(|v| v / img.max_value()).collect();
    let mut total = 0.0;
    for v in &unit {
        total += v;
    }
    let mean = total / n as f64;
    let input: Vec<Complex64> = unit.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    let spec = naive_dft2(w, h, &input, -1.0);
    let mut amp = vec![0.0; n];
    let mut energies = Vec::new();
    for j in 0..cfg.n_orientations {
        let mut sum_e = vec![0.0; n];
        let mut sum_o = vec![0.0; n];
        for s in 0..cfg.n_scales {
            let t = oracle_transfer(cfg, w, h, s, j);
            let filtered: Vec<Complex64> = spec.iter().zip(&t).map(|(c, g)| c * g).collect();
            let resp = naive_dft2(w, h, &filtered, 1.0);
            for i in 0..n {
                let c = resp[i] / n as f64;
                sum_e[i] += c.re;
                sum_o[i] += c.im;
                amp[i] += (c.re * c.re + c.im * c.im).sqrt();
            }
        }
        energies.push((0..n).map(|i| (sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]).sqrt()).collect());
    }
    let pc = (0..n)
        .map(|i| {
            let e: f64 = energies.iter().map(|g: &Vec<f64>| g[i]).sum();
            e / (epsilon + amp[i])
        })
        .collect();
    (pc, energies, amp)
}

/// Scharr/16 gradient magnitude with clamp-to-edge sampling.
pub fn oracle_scharr(img: &GrayImage) -> Vec<f64> {
    let (w, h) = img.dims();
    let px = |x: i64, y: i64| img.get(x.clamp(0, w as i64 - 1) as usize, y.clamp(0, h as i64 - 1) as usize);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = (3.0 * (px(x + 1, y - 1) - px(x - 1, y - 1))
                + 10.0 * (px(x + 1, y) - px(x - 1, y))
                + 3.0 * (px(x + 1, y + 1) - px(x - 1, y + 1)))
                / 16.0;
            let gy = (3.0 * (px(x - 1, y + 1) - px(x - 1, y - 1))
                + 10.0 * (px(x, y + 1) - px(x, y - 1))
                + 3.0 * (px(x + 1, y + 1) - px(x + 1, y - 1)))
                / 16.0;
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

/// Pixel-loop FSIM: Σ S_PC·S_G·max(pc) / Σ max(pc).
pub fn oracle_fsim(pc_a: &[f64], pc_b: &[f64], g_a: &[f64], g_b: &[f64], t1: f64, t2: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..pc_a.len() {
        let s_pc = (2.0 * pc_a[i] * pc_b[i] + t1) / (pc_a[i].powi(2) + pc_b[i].powi(2) + t1);
        let s_g = (2.0 * g_a[i] * g_b[i] + t2) / (g_a[i].powi(2) + g_b[i].powi(2) + t2);
        let m = if pc_a[i] > pc_b[i] { pc_a[i] } else { pc_b[i] };
        num += s_pc * s_g * m;
        den += m;
    }
    num / den
}

/// Full pixel-loop FSIM between two images.
pub fn oracle_fsim_images(a: &GrayImage, b: &GrayImage, cfg: &FilterBankConfig, epsilon: f64) -> f64 {
    let (pa, _, _) = oracle_pc(a, cfg, epsilon);
    let (pb, _, _) = oracle_pc(b, cfg, epsilon);
    let to255 = |img: &GrayImage| {
        GrayImage::new(
            img.width(),
            img.height(),
            img.data().iter().map(|v| v * 255.0 / img.max_value()).collect(),
            255.0,
        )
        .unwrap()
    };
    let ga = oracle_scharr(&to255(a));
    let gb = oracle_scharr(&to255(b));
    oracle_fsim(&pa, &pb, &ga, &gb, 0.85, 160.0)
}

/// SSIM with explicit 11×11 windows, two-pass variances.
pub fn oracle_ssim(a: &GrayImage, b: &GrayImage) -> f64 {
    let (w, h) = a.dims();
    let l = a.max_value();
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
    let mut win = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (i, row) in win.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let mut acc = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let wt = win[i][j] / total;
                    mx += wt * a.get(x0 + j, y0 + i);
                    my += wt * b.get(x0 + j, y0 + i);
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let wt = win[i][j] / total;
                    let dx = a.get(x0 + j, y0 + i) - mx;
                    let dy = b.get(x0 + j, y0 + i) - my;
                    vx += wt * dx * dx;
                    vy += wt * dy * dy;
                    cxy += wt * dx * dy;
                }
            }
            acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    acc / count as f64
}

pub fn oracle_psnr(a: &[f64], b: &[f64], max_value: f64) -> f64 {
    let mut sse = 0.0;
    for i in 0..a.len() {
        sse += (a[i] - b[i]).powi(2);
    }
    let mse = sse / a.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * max_value.log10() - 10.0 * mse.log10()
    }
}

/// Central finite differences of `f` with respect to every sample of `d`.
pub fn finite_difference(d: &DepthMap, h: f64, f: impl Fn(&DepthMap) -> f64) -> Vec<f64> {
    let (w, ht) = d.dims();
    (0..w * ht)
        .map(|i| {
            let mut plus = d.data().to_vec();
            let mut minus = d.data().to_vec();
            plus[i] += h;
            minus[i] -= h;
            let p = DepthMap::new(w, ht, plus, d.encoding()).unwrap();
            let m = DepthMap::new(w, ht, minus, d.encoding()).unwrap();
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

/// Largest pointwise relative error, with `floor` guarding near-zero entries.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
