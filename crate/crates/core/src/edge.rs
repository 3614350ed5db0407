//! Classical edge operators: Roberts, Prewitt, Sobel, Laplacian and Canny.
//!
//! All kernels use replicate padding. Magnitudes are in the input's
//! intensity units; Canny returns a 0/1 map.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::image::GrayImage;
use crate::numeric::clamp_index;
use crate::structure::{correlate3, transpose3};

const PREWITT_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]];
const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    /// Gaussian pre-smoothing sigma, in pixels.
    pub sigma: f64,
    /// Hysteresis thresholds as fractions of the maximum gradient magnitude.
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low: 0.1,
            high: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeOperator {
    Roberts,
    Prewitt,
    Sobel,
    Canny(CannyParams),
    Laplacian,
}

impl EdgeOperator {
    pub const NAMES: [&'static str; 5] = ["roberts", "prewitt", "sobel", "canny", "laplacian"];

    pub fn name(&self) -> &'static str {
        match self {
            EdgeOperator::Roberts => "roberts",
            EdgeOperator::Prewitt => "prewitt",
            EdgeOperator::Sobel => "sobel",
            EdgeOperator::Canny(_) => "canny",
            EdgeOperator::Laplacian => "laplacian",
        }
    }

    /// The five operators, Canny with `canny` parameters.
    pub fn all(canny: CannyParams) -> [EdgeOperator; 5] {
        [
            EdgeOperator::Roberts,
            EdgeOperator::Prewitt,
            EdgeOperator::Sobel,
            EdgeOperator::Canny(canny),
            EdgeOperator::Laplacian,
        ]
    }
}

impl fmt::Display for EdgeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "roberts" => EdgeOperator::Roberts,
            "prewitt" => EdgeOperator::Prewitt,
            "sobel" => EdgeOperator::Sobel,
            "canny" => EdgeOperator::Canny(CannyParams::default()),
            "laplacian" => EdgeOperator::Laplacian,
            _ => return Err(Error::arg(format!("unknown edge operator {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub operator: EdgeOperator,
}

impl EdgeMap {
    pub fn is_binary(&self) -> bool {
        matches!(self.operator, EdgeOperator::Canny(_))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

fn magnitude(gx: &[f64], gy: &[f64]) -> Vec<f64> {
    gx.iter().zip(gy).map(|(a, b)| a.hypot(*b)).collect()
}

fn roberts(img: &GrayImage, exec: Exec) -> Vec<f64> {
    let (w, h) = img.dims();
    let mut out = vec![0.0; w * h];
    exec.fill_rows(&mut out, w, |y, row| {
        let y1 = clamp_index(y as isize + 1, h);
        for (x, o) in row.iter_mut().enumerate() {
            let x1 = clamp_index(x as isize + 1, w);
            let a = img.get(x, y) - img.get(x1, y1);
            let b = img.get(x1, y) - img.get(x, y1);
            *o = a.hypot(b);
        }
    });
    out
}

/// |4-neighbour Laplacian|, summed as `(up + down) + (left + right) - 4·c`
/// so flat input gives exactly zero.
fn laplacian(img: &GrayImage, exec: Exec) -> Vec<f64> {
    let (w, h) = img.dims();
    let mut out = vec![0.0; w * h];
    exec.fill_rows(&mut out, w, |y, row| {
        let up = clamp_index(y as isize - 1, h);
        let down = clamp_index(y as isize + 1, h);
        for (x, o) in row.iter_mut().enumerate() {
            let left = clamp_index(x as isize - 1, w);
            let right = clamp_index(x as isize + 1, w);
            let ring = (img.get(x, up) + img.get(x, down)) + (img.get(left, y) + img.get(right, y));
            *o = (ring - 4.0 * img.get(x, y)).abs();
        }
    });
    out
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian blur with replicate padding.
pub fn gaussian_blur(img: &GrayImage, sigma: f64, exec: Exec) -> Result<GrayImage> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = img.dims();
    let mut tmp = vec![0.0; w * h];
    exec.fill_rows(&mut tmp, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * img.get(clamp_index(x as isize + i as isize - r, w), y))
                .sum();
        }
    });
    let mut out = vec![0.0; w * h];
    exec.fill_rows(&mut out, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[clamp_index(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    });
    GrayImage::new(w, h, out, img.max_value())
}

/// Neighbour offsets along the quantized gradient direction.
fn direction_offsets(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (1, 0)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

fn canny(img: &GrayImage, p: CannyParams, exec: Exec) -> Result<Vec<f64>> {
    let smooth = gaussian_blur(img, p.sigma, exec)?;
    let gx = correlate3(&smooth, &SOBEL_X, exec);
    let gy = correlate3(&smooth, &transpose3(&SOBEL_X), exec);
    // Blur rounding leaves ~1e-16 ripples on flat regions; drop them.
    let floor = 1e-10 * img.max_value();
    let mag: Vec<f64> = magnitude(&gx, &gy)
        .into_iter()
        .map(|m| if m < floor { 0.0 } else { m })
        .collect();
    let (w, h) = img.dims();
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // Non-maximum suppression; ties go to the pixel on the negative side so
    // a symmetric ridge stays one pixel wide.
    let mut thin = vec![0.0; w * h];
    exec.fill_rows(&mut thin, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let i = y * w + x;
            let m = mag[i];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = direction_offsets(gx[i], gy[i]);
            let (xi, yi) = (x as isize, y as isize);
            if m > at(xi - dx, yi - dy) && m >= at(xi + dx, yi + dy) {
                *o = m;
            }
        }
    });

    let max = thin.iter().cloned().fold(0.0, f64::max);
    let mut out = vec![0.0; w * h];
    if max <= 0.0 {
        return Ok(out);
    }
    let (low, high) = (p.low * max, p.high * max);
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= high && m > 0.0 {
            out[i] = 1.0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0.0 && thin[j] >= low && thin[j] > 0.0 {
                    out[j] = 1.0;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(out)
}

pub fn edge_detect(img: &GrayImage, op: EdgeOperator) -> Result<EdgeMap> {
    edge_detect_with(img, op, Exec::default())
}

pub fn edge_detect_with(img: &GrayImage, op: EdgeOperator, exec: Exec) -> Result<EdgeMap> {
    let values = match op {
        EdgeOperator::Roberts => roberts(img, exec),
        EdgeOperator::Prewitt => magnitude(
            &correlate3(img, &PREWITT_X, exec),
            &correlate3(img, &transpose3(&PREWITT_X), exec),
        ),
        EdgeOperator::Sobel => magnitude(
            &correlate3(img, &SOBEL_X, exec),
            &correlate3(img, &transpose3(&SOBEL_X), exec),
        ),
        EdgeOperator::Laplacian => laplacian(img, exec),
        EdgeOperator::Canny(p) => {
            if !(p.low >= 0.0 && p.low < p.high && p.high <= 1.0) {
                return Err(Error::arg(format!(
                    "canny thresholds need 0 <= low < high <= 1, got {} / {}",
                    p.low, p.high
                )));
            }
            canny(img, p, exec)?
        }
    };
    Ok(EdgeMap {
        width: img.width(),
        height: img.height(),
        values,
        operator: op,
    })
}
