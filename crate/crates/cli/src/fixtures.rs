//! Seeded synthetic inputs: a step edge, a low-contrast vessel texture next
//! to a blank region, an endoscopy-like colour frame and a few depth maps.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use pcstruct::depth::DEPTH_16BIT_MAX;
use pcstruct::{ColorImage, DepthEncoding, DepthMap, GrayImage};

pub const STEP_SIZE: usize = 64;
pub const STEP_EDGE_X: usize = 32;
pub const VASCULAR_SIZE: usize = 128;
/// Columns `[0, VASCULAR_SPLIT)` hold vessels; the rest is blank.
pub const VASCULAR_SPLIT: usize = 64;
pub const FRAME_SIZE: usize = 96;
pub const DEPTH_SIZE: usize = 48;

struct Vessel {
    points: Vec<(f64, f64)>,
    width: f64,
}

/// Smoothly wandering polylines that start inside `[0, x_max) × [0, h)`.
fn vessels(rng: &mut ChaCha8Rng, count: usize, x_max: f64, h: f64, width: (f64, f64)) -> Vec<Vessel> {
    let turn = Normal::new(0.0, 0.18).unwrap();
    (0..count)
        .map(|_| {
            let (mut x, mut y) = (rng.gen_range(0.0..x_max), rng.gen_range(0.0..h));
            let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut points = vec![(x, y)];
            for _ in 0..90 {
                heading += turn.sample(rng);
                x += 1.5 * heading.cos();
                y += 1.5 * heading.sin();
                if !(0.0..x_max).contains(&x) || !(0.0..h).contains(&y) {
                    break;
                }
                points.push((x, y));
            }
            Vessel {
                points,
                width: rng.gen_range(width.0..width.1),
            }
        })
        .collect()
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Per-pixel vessel strength in `[0, 1]` (the strongest covering vessel).
fn vessel_field(vs: &[Vessel], w: usize, h: usize) -> Vec<f64> {
    let mut field = vec![0.0f64; w * h];
    for v in vs {
        let reach = 3.0 * v.width + 1.0;
        for seg in v.points.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let x0 = (a.0.min(b.0) - reach).floor().max(0.0) as usize;
            let x1 = ((a.0.max(b.0) + reach).ceil() as usize).min(w - 1);
            let y0 = (a.1.min(b.1) - reach).floor().max(0.0) as usize;
            let y1 = ((a.1.max(b.1) + reach).ceil() as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let d = segment_distance((x as f64, y as f64), a, b);
                    let s = (-d * d / (2.0 * v.width * v.width)).exp();
                    let f = &mut field[y * w + x];
                    *f = f.max(s);
                }
            }
        }
    }
    field
}

fn noisy(rng: &mut ChaCha8Rng, sigma: f64, n: usize) -> Vec<f64> {
    let g = Normal::new(0.0, sigma).unwrap();
    (0..n).map(|_| g.sample(rng)).collect()
}

fn quantize(v: f64, max: f64) -> f64 {
    v.round().clamp(0.0, max)
}

/// Dark/bright vertical step at `STEP_EDGE_X` with mild noise.
pub fn step_edge(seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = STEP_SIZE * STEP_SIZE;
    let noise = noisy(&mut rng, 1.5, n);
    GrayImage::from_fn(STEP_SIZE, STEP_SIZE, 255.0, |x, y| {
        let base = if x < STEP_EDGE_X { 70.0 } else { 180.0 };
        quantize(base + noise[y * STEP_SIZE + x], 255.0)
    })
    .expect("fixture is well formed")
}

/// Faint vessels under smooth vertical shading on the left half, the same
/// shading and noise with no structure on the right half.
pub fn vascular(seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a5c);
    let (w, h) = (VASCULAR_SIZE, VASCULAR_SIZE);
    let vs = vessels(&mut rng, 9, VASCULAR_SPLIT as f64 - 4.0, h as f64, (0.7, 1.6));
    let field = vessel_field(&vs, w, h);
    let noise = noisy(&mut rng, 2.0, w * h);
    GrayImage::from_fn(w, h, 255.0, |x, y| {
        let shade = 90.0 + 60.0 * (y as f64 / h as f64) + 10.0 * (y as f64 / 9.0).sin();
        quantize(shade - 7.0 * field[y * w + x] + noise[y * w + x], 255.0)
    })
    .expect("fixture is well formed")
}

fn frame(seed: u64, vessel_gain: f64, noise_seed: u64) -> ColorImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf165);
    let n = FRAME_SIZE;
    let vs = vessels(&mut rng, 7, n as f64, n as f64, (0.8, 2.2));
    let field = vessel_field(&vs, n, n);
    let mut nrng = ChaCha8Rng::seed_from_u64(noise_seed);
    let noise = noisy(&mut nrng, 2.5, 3 * n * n);
    let mut data = Vec::with_capacity(3 * n * n);
    for y in 0..n {
        for x in 0..n {
            let (dx, dy) = (x as f64 - 0.4 * n as f64, y as f64 - 0.45 * n as f64);
            let r2 = (dx * dx + dy * dy) / (n * n) as f64;
            let shade = 0.45 + 0.55 * (-r2 / 0.18).exp();
            let spec = 90.0 * (-((dx - 8.0).powi(2) + (dy + 6.0).powi(2)) / 30.0).exp();
            let v = vessel_gain * field[y * n + x];
            let rgb = [205.0 * (1.0 - 0.25 * v), 120.0 * (1.0 - 0.55 * v), 105.0 * (1.0 - 0.5 * v)];
            for (c, base) in rgb.iter().enumerate() {
                let i = 3 * (y * n + x) + c;
                data.push(quantize(base * shade + spec + noise[i], 255.0));
            }
        }
    }
    ColorImage::new(n, n, data, 255.0).expect("fixture is well formed")
}

/// Tissue-coloured frame with vessels, vignetting and a specular highlight.
pub fn endoscopy_frame(seed: u64) -> ColorImage {
    frame(seed, 1.0, seed.wrapping_add(1))
}

/// The same scene with fainter vessels and fresh noise, standing in for a
/// generated counterpart of [`endoscopy_frame`].
pub fn endoscopy_frame_generated(seed: u64) -> ColorImage {
    frame(seed, 0.6, seed.wrapping_add(2))
}

fn depth16(f: impl Fn(usize, usize) -> f64) -> DepthMap {
    DepthMap::from_fn(DEPTH_SIZE, DEPTH_SIZE, DepthEncoding::Positive16Bit, |x, y| {
        quantize(f(x, y), DEPTH_16BIT_MAX)
    })
    .expect("fixture is well formed")
}

/// Constant depth.
pub fn depth_plane() -> DepthMap {
    depth16(|_, _| 20000.0)
}

/// Depth increasing by one code per column.
pub fn depth_ramp() -> DepthMap {
    depth16(|x, _| 20000.0 + x as f64)
}

/// A smooth bowl quantized to coarse steps, with stair-step plateaus.
pub fn depth_stairs() -> DepthMap {
    let c = DEPTH_SIZE as f64 / 2.0;
    depth16(|x, y| {
        let r2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2);
        let smooth = 12000.0 + 4.0 * r2;
        (smooth / 500.0).floor() * 500.0
    })
}
