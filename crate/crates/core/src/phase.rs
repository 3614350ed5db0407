//! Phase congruency from log-Gabor quadrature responses.
//!
//! For every orientation the local energy is the magnitude of the summed
//! (even, odd) response vector across scales. The map is the total energy
//! over all orientations divided by `epsilon` plus the summed amplitudes of
//! every filter. The triangle inequality keeps the ratio in `[0, 1)`.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::image::GrayImage;
use crate::numeric::median;
use crate::spectral::{apply_bank_with, FilterBank, QuadratureResponse};

/// Default stabilizer, relative to images normalized to `[0, 1]`.
pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct PcResult {
    pub width: usize,
    pub height: usize,
    pub pc: Vec<f64>,
    /// One energy grid per orientation (after noise removal, if any).
    pub orientation_energy: Vec<Vec<f64>>,
    pub total_amplitude: Vec<f64>,
    pub epsilon: f64,
}

impl PcResult {
    pub fn pc_image(&self) -> GrayImage {
        GrayImage::new(self.width, self.height, self.pc.clone(), 1.0)
            .expect("pc grid is finite and sized")
    }

    /// Largest violation of `pc·(ε + ΣA) = Σ_j E_j` over the grid.
    pub fn consistency_error(&self) -> f64 {
        (0..self.pc.len())
            .map(|i| {
                let e: f64 = self.orientation_energy.iter().map(|g| g[i]).sum();
                (self.pc[i] * (self.epsilon + self.total_amplitude[i]) - e).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// How the noise floor is chosen for [`compute_pc_noise_compensated`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMethod {
    /// Rayleigh fit to the median finest-scale amplitude; the threshold is the
    /// estimated noise-energy mean plus `k` standard deviations.
    MedianRayleigh { k: f64 },
    /// A fixed energy threshold, in normalized-intensity units.
    Fixed(f64),
}

impl Default for NoiseMethod {
    fn default() -> Self {
        NoiseMethod::MedianRayleigh { k: 2.0 }
    }
}

/// Vector-sum magnitude across scales for one orientation.
pub fn local_energy(responses: &[&QuadratureResponse]) -> Result<Vec<f64>> {
    let first = responses
        .first()
        .ok_or_else(|| Error::arg("local energy needs at least one scale"))?;
    let n = first.even.len();
    if responses.iter().any(|r| r.even.len() != n || r.odd.len() != n) {
        return Err(Error::arg("responses differ in size"));
    }
    Ok((0..n)
        .map(|i| {
            let (mut e, mut o) = (0.0, 0.0);
            for r in responses {
                e += r.even[i];
                o += r.odd[i];
            }
            e.hypot(o)
        })
        .collect())
}

fn check_inputs(img: &GrayImage, bank: &FilterBank, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::arg(format!("epsilon must be positive, got {epsilon}")));
    }
    if img.dims() != bank.dims() {
        return Err(Error::dims(img.dims(), bank.dims()));
    }
    Ok(())
}

fn normalized_responses(img: &GrayImage, bank: &FilterBank, exec: Exec) -> Result<Vec<QuadratureResponse>> {
    let unit = crate::image::normalize(img, 1.0)?;
    apply_bank_with(&unit, bank, exec)
}

fn by_orientation(responses: &[QuadratureResponse], n_scales: usize) -> Vec<Vec<&QuadratureResponse>> {
    responses
        .chunks(n_scales)
        .map(|c| c.iter().collect())
        .collect()
}

fn assemble(
    img: &GrayImage,
    responses: &[QuadratureResponse],
    energy: Vec<Vec<f64>>,
    epsilon: f64,
) -> PcResult {
    let n = img.data().len();
    let mut total_amplitude = vec![0.0; n];
    for r in responses {
        for (i, a) in total_amplitude.iter_mut().enumerate() {
            *a += r.even[i].hypot(r.odd[i]);
        }
    }
    let pc = (0..n)
        .map(|i| {
            let e: f64 = energy.iter().map(|g| g[i]).sum();
            e / (epsilon + total_amplitude[i])
        })
        .collect();
    PcResult {
        width: img.width(),
        height: img.height(),
        pc,
        orientation_energy: energy,
        total_amplitude,
        epsilon,
    }
}

pub fn compute_pc(img: &GrayImage, bank: &FilterBank, epsilon: f64) -> Result<PcResult> {
    compute_pc_with(img, bank, epsilon, Exec::default())
}

/// Phase congruency of `img`, normalized to `[0, 1]` before filtering.
pub fn compute_pc_with(img: &GrayImage, bank: &FilterBank, epsilon: f64, exec: Exec) -> Result<PcResult> {
    check_inputs(img, bank, epsilon)?;
    let responses = normalized_responses(img, bank, exec)?;
    let groups = by_orientation(&responses, bank.config().n_scales);
    let energy = exec
        .map_slice(&groups, |g| local_energy(g))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(img, &responses, energy, epsilon))
}

/// Noise floor for one orientation under the Rayleigh model.
///
/// `finest_amplitude` is the amplitude grid of the smallest scale.
pub fn rayleigh_noise_threshold(finest_amplitude: &[f64], n_scales: usize, scale_multiplier: f64, k: f64) -> f64 {
    let tau = median(finest_amplitude) / (4.0f64).ln().sqrt();
    // Amplitude noise at coarser scales falls off as 1/mult per octave step.
    let r = 1.0 / scale_multiplier;
    let total_tau = tau * (1.0 - r.powi(n_scales as i32)) / (1.0 - r);
    let mean = total_tau * (std::f64::consts::PI / 2.0).sqrt();
    let sigma = total_tau * ((4.0 - std::f64::consts::PI) / 2.0).sqrt();
    mean + k * sigma
}

pub fn compute_pc_noise_compensated(
    img: &GrayImage,
    bank: &FilterBank,
    epsilon: f64,
    noise: NoiseMethod,
) -> Result<PcResult> {
    compute_pc_noise_compensated_with(img, bank, epsilon, noise, Exec::default())
}

/// Like [`compute_pc`], with each orientation's energy reduced by a noise
/// threshold and floored at zero before the division.
pub fn compute_pc_noise_compensated_with(
    img: &GrayImage,
    bank: &FilterBank,
    epsilon: f64,
    noise: NoiseMethod,
    exec: Exec,
) -> Result<PcResult> {
    check_inputs(img, bank, epsilon)?;
    match noise {
        NoiseMethod::MedianRayleigh { k } if !(k >= 0.0 && k.is_finite()) => {
            return Err(Error::arg(format!("noise k must be non-negative, got {k}")))
        }
        NoiseMethod::Fixed(t) if !(t >= 0.0 && t.is_finite()) => {
            return Err(Error::arg(format!("noise threshold must be non-negative, got {t}")))
        }
        _ => {}
    }
    let cfg = *bank.config();
    let responses = normalized_responses(img, bank, exec)?;
    let groups = by_orientation(&responses, cfg.n_scales);
    let energy = exec
        .map_slice(&groups, |g| -> Result<Vec<f64>> {
            let mut e = local_energy(g)?;
            let t = match noise {
                NoiseMethod::MedianRayleigh { k } => {
                    rayleigh_noise_threshold(&g[0].amplitude(), cfg.n_scales, cfg.scale_multiplier, k)
                }
                NoiseMethod::Fixed(t) => t,
            };
            for v in e.iter_mut() {
                *v = (*v - t).max(0.0);
            }
            Ok(e)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(img, &responses, energy, epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_bank, FilterBankConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn qr(even: f64, odd: f64) -> QuadratureResponse {
        QuadratureResponse {
            scale: 0,
            orientation: 0,
            width: 1,
            height: 1,
            even: vec![even],
            odd: vec![odd],
        }
    }

    #[test]
    fn local_energy_examples() {
        assert_eq!(local_energy(&[&qr(3.0, 4.0)]).unwrap(), vec![5.0]);
        assert_eq!(local_energy(&[&qr(0.0, 0.0), &qr(0.0, 0.0)]).unwrap(), vec![0.0]);
        assert_eq!(local_energy(&[&qr(2.0, 0.0), &qr(-2.0, 0.0)]).unwrap(), vec![0.0]);
        assert!(matches!(local_energy(&[]), Err(Error::Argument(_))));
    }

    fn step(w: usize, h: usize, col: usize) -> GrayImage {
        GrayImage::from_fn(w, h, 255.0, |x, _| if x >= col { 200.0 } else { 50.0 }).unwrap()
    }

    #[test]
    fn constant_image_has_zero_pc() {
        let bank = build_bank(FilterBankConfig::default(), 32, 32).unwrap();
        let img = GrayImage::filled(32, 32, 90.0, 255.0).unwrap();
        let r = compute_pc(&img, &bank, DEFAULT_EPSILON).unwrap();
        assert!(r.pc.iter().all(|&v| v < 1e-6));
        let n = compute_pc_noise_compensated(&img, &bank, DEFAULT_EPSILON, NoiseMethod::default()).unwrap();
        assert!(n.pc.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn epsilon_must_be_positive() {
        let bank = build_bank(FilterBankConfig::default(), 16, 16).unwrap();
        let img = GrayImage::filled(16, 16, 0.0, 1.0).unwrap();
        assert!(compute_pc(&img, &bank, 0.0).is_err());
        assert!(compute_pc(&img, &bank, -1.0).is_err());
        assert!(compute_pc_noise_compensated(&img, &bank, 0.0, NoiseMethod::default()).is_err());
    }

    #[test]
    fn step_edge_is_located() {
        let bank = build_bank(FilterBankConfig::default(), 64, 64).unwrap();
        let r = compute_pc(&step(64, 64, 29), &bank, DEFAULT_EPSILON).unwrap();
        assert!(r.consistency_error() < 1e-8);
        for y in 0..64 {
            let row = &r.pc[y * 64..(y + 1) * 64];
            // Ignore the wrap-around edge at column 0.
            let (arg, _) = row[8..56]
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i + 8, v) } else { acc });
            assert!((arg as isize - 29).abs() <= 1, "row {y}: argmax {arg}");
        }
    }

    #[test]
    fn noise_compensation_near_raw_at_clean_edge() {
        let bank = build_bank(FilterBankConfig::default(), 64, 64).unwrap();
        let img = step(64, 64, 32);
        let raw = compute_pc(&img, &bank, DEFAULT_EPSILON).unwrap();
        let comp = compute_pc_noise_compensated(&img, &bank, DEFAULT_EPSILON, NoiseMethod::default()).unwrap();
        assert!(comp.consistency_error() < 1e-8);
        for y in 0..64 {
            for x in [31, 32] {
                let (a, b) = (raw.pc[y * 64 + x], comp.pc[y * 64 + x]);
                assert!((a - b).abs() <= 0.05 * a, "({x},{y}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn noise_compensation_suppresses_noise() {
        let bank = build_bank(FilterBankConfig::default(), 64, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = Normal::new(128.0, 20.0).unwrap();
        let data = (0..64 * 64).map(|_| normal.sample(&mut rng)).collect();
        let img = GrayImage::new(64, 64, data, 255.0).unwrap();
        let raw = compute_pc(&img, &bank, DEFAULT_EPSILON).unwrap();
        let comp = compute_pc_noise_compensated(&img, &bank, DEFAULT_EPSILON, NoiseMethod::default()).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&comp.pc) < mean(&raw.pc));
    }

    #[test]
    fn sequential_and_parallel_identical() {
        let bank = build_bank(FilterBankConfig::default(), 48, 40).unwrap();
        let img = GrayImage::from_fn(48, 40, 255.0, |x, y| ((x * 7 + y * 13) % 31) as f64).unwrap();
        let a = compute_pc_with(&img, &bank, DEFAULT_EPSILON, Exec::Sequential).unwrap();
        let b = compute_pc_with(&img, &bank, DEFAULT_EPSILON, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
