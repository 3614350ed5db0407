//! Depth maps: inverse-depth encoding, surface normals, the normal
//! consistency loss and its gradient, and stair-step diagnostics.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::image::GrayImage;
use crate::numeric::pairwise_sum;

/// Full scale of 16-bit depth codes.
pub const DEPTH_16BIT_MAX: f64 = 65535.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthEncoding {
    /// Raw 16-bit depth codes in `[0, 65535]`.
    Positive16Bit,
    /// `1 - code/65535`, in `[0, 1]`; near surfaces are bright.
    InverseUnit,
    /// Metric depth in millimetres (any finite value).
    MetricMm,
}

impl DepthEncoding {
    pub fn name(self) -> &'static str {
        match self {
            DepthEncoding::Positive16Bit => "positive_16bit",
            DepthEncoding::InverseUnit => "inverse_unit",
            DepthEncoding::MetricMm => "metric_mm",
        }
    }

    fn tag(self) -> u32 {
        match self {
            DepthEncoding::Positive16Bit => 0,
            DepthEncoding::InverseUnit => 1,
            DepthEncoding::MetricMm => 2,
        }
    }

    fn from_tag(t: u32) -> Option<Self> {
        match t {
            0 => Some(DepthEncoding::Positive16Bit),
            1 => Some(DepthEncoding::InverseUnit),
            2 => Some(DepthEncoding::MetricMm),
            _ => None,
        }
    }

    fn range(self) -> Option<(f64, f64)> {
        match self {
            DepthEncoding::Positive16Bit => Some((0.0, DEPTH_16BIT_MAX)),
            DepthEncoding::InverseUnit => Some((0.0, 1.0)),
            DepthEncoding::MetricMm => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
    encoding: DepthEncoding,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>, encoding: DepthEncoding) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::arg(format!(
                "depth map {width}x{height} with {} samples",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite depth at index {i}")));
        }
        if let Some((lo, hi)) = encoding.range() {
            if let Some(i) = data.iter().position(|v| !(lo..=hi).contains(v)) {
                return Err(Error::Domain(format!(
                    "depth {} at index {i} outside {} range [{lo}, {hi}]",
                    data[i],
                    encoding.name()
                )));
            }
        }
        Ok(Self {
            width,
            height,
            data,
            encoding,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        encoding: DepthEncoding,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data, encoding)
    }

    /// Wraps a 16-bit gray image as depth codes.
    pub fn from_gray_16bit(img: &GrayImage) -> Result<Self> {
        if img.max_value() != DEPTH_16BIT_MAX {
            return Err(Error::arg(format!(
                "16-bit depth expects maxval 65535, found {}",
                img.max_value()
            )));
        }
        Self::new(img.width(), img.height(), img.data().to_vec(), DepthEncoding::Positive16Bit)
    }

    pub fn to_gray_16bit(&self) -> Result<GrayImage> {
        if self.encoding != DepthEncoding::Positive16Bit {
            return Err(Error::Encoding {
                expected: DepthEncoding::Positive16Bit.name(),
                found: self.encoding.name(),
            });
        }
        GrayImage::new(self.width, self.height, self.data.clone(), DEPTH_16BIT_MAX)
    }

    /// Same values, relabelled as metric depth.
    pub fn as_metric(&self) -> Self {
        Self {
            encoding: DepthEncoding::MetricMm,
            ..self.clone()
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn encoding(&self) -> DepthEncoding {
        self.encoding
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

fn expect_encoding(d: &DepthMap, e: DepthEncoding) -> Result<()> {
    if d.encoding != e {
        return Err(Error::Encoding {
            expected: e.name(),
            found: d.encoding.name(),
        });
    }
    Ok(())
}

/// `D₋ = 1 - D₊ / 65535`.
pub fn invert_depth(d: &DepthMap) -> Result<DepthMap> {
    expect_encoding(d, DepthEncoding::Positive16Bit)?;
    DepthMap::new(
        d.width,
        d.height,
        d.data.iter().map(|v| 1.0 - v / DEPTH_16BIT_MAX).collect(),
        DepthEncoding::InverseUnit,
    )
}

/// `D₊ = (1 - D₋) · 65535`, not quantized.
pub fn revert_depth(d: &DepthMap) -> Result<DepthMap> {
    expect_encoding(d, DepthEncoding::InverseUnit)?;
    DepthMap::new(
        d.width,
        d.height,
        d.data
            .iter()
            .map(|v| ((1.0 - v) * DEPTH_16BIT_MAX).clamp(0.0, DEPTH_16BIT_MAX))
            .collect(),
        DepthEncoding::Positive16Bit,
    )
}

/// Magic bytes of the raw float depth container.
pub const RAW_MAGIC: &[u8; 4] = b"PCSD";

/// Serializes as the raw float container: a 16-byte little-endian header
/// (`"PCSD"`, encoding tag, width, height as `u32`) then `f32` samples,
/// row-major, little-endian.
pub fn encode_depth_raw(d: &DepthMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * d.data.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&d.encoding.tag().to_le_bytes());
    out.extend_from_slice(&(d.width as u32).to_le_bytes());
    out.extend_from_slice(&(d.height as u32).to_le_bytes());
    for &v in &d.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_depth_raw(bytes: &[u8]) -> Result<DepthMap> {
    if bytes.len() < 16 {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: "raw depth header needs 16 bytes".into(),
        });
    }
    if &bytes[..4] != RAW_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad raw depth magic".into(),
        });
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let encoding = DepthEncoding::from_tag(word(4)).ok_or_else(|| Error::Parse {
        offset: 4,
        message: format!("unknown depth encoding tag {}", word(4)),
    })?;
    let (w, h) = (word(8) as usize, word(12) as usize);
    let expected = w * h * 4;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    DepthMap::new(w, h, data, encoding)
}

/// Reads a 16-bit PGM (as positive codes) or a raw float container,
/// detected from the leading magic bytes.
pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(RAW_MAGIC) {
        decode_depth_raw(&bytes)
    } else {
        let img = crate::pnm::decode_pnm(&bytes)?;
        match img {
            crate::pnm::PnmImage::Gray(g) => DepthMap::from_gray_16bit(&g),
            crate::pnm::PnmImage::Color(_) => Err(Error::arg("depth maps must be single-channel")),
        }
    }
}

/// Writes positive 16-bit maps as PGM and everything else as raw float.
pub fn write_depth(d: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match d.encoding {
        DepthEncoding::Positive16Bit => crate::pnm::encode_pnm(&d.to_gray_16bit()?)?,
        _ => encode_depth_raw(d),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub width: usize,
    pub height: usize,
    /// Unit vectors, +z toward the camera.
    pub normals: Vec<[f64; 3]>,
}

/// Finite-difference stencil along one axis: central inside, one-sided at
/// the two ends. Returns `(lo, hi, weight)` with `d = weight · (v[hi] - v[lo])`.
#[inline]
fn stencil(i: usize, n: usize) -> (usize, usize, f64) {
    if i == 0 {
        (0, 1, 1.0)
    } else if i == n - 1 {
        (n - 2, n - 1, 1.0)
    } else {
        (i - 1, i + 1, 0.5)
    }
}

/// Unnormalized normals `(-∂D/∂x, -∂D/∂y, step_scale)`.
fn raw_normals(d: &DepthMap, step_scale: f64) -> Vec<[f64; 3]> {
    let (w, h) = d.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (ylo, yhi, wy) = stencil(y, h);
        for x in 0..w {
            let (xlo, xhi, wx) = stencil(x, w);
            let dx = wx * (d.get(xhi, y) - d.get(xlo, y));
            let dy = wy * (d.get(x, yhi) - d.get(x, ylo));
            out.push([-dx, -dy, step_scale]);
        }
    }
    out
}

fn check_geometry(d: &DepthMap, step_scale: f64) -> Result<()> {
    if d.width < 2 || d.height < 2 {
        return Err(Error::Size(format!(
            "normals need at least 2x2, got {}x{}",
            d.width, d.height
        )));
    }
    if !(step_scale > 0.0 && step_scale.is_finite()) {
        return Err(Error::arg(format!("step_scale must be positive, got {step_scale}")));
    }
    Ok(())
}

pub fn normals_from_depth(d: &DepthMap, step_scale: f64) -> Result<NormalMap> {
    check_geometry(d, step_scale)?;
    let normals = raw_normals(d, step_scale)
        .into_iter()
        .map(|n| {
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            [n[0] / len, n[1] / len, n[2] / len]
        })
        .collect();
    Ok(NormalMap {
        width: d.width,
        height: d.height,
        normals,
    })
}

fn check_pair(a: &DepthMap, b: &DepthMap, step_scale: f64) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    if a.encoding != b.encoding {
        return Err(Error::Encoding {
            expected: a.encoding.name(),
            found: b.encoding.name(),
        });
    }
    check_geometry(a, step_scale)
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Mean over pixels of `1 - cos(n_sim, n_rec)`.
pub fn normal_loss(d_sim: &DepthMap, d_rec: &DepthMap, step_scale: f64) -> Result<f64> {
    check_pair(d_sim, d_rec, step_scale)?;
    let a = raw_normals(d_sim, step_scale);
    let b = raw_normals(d_rec, step_scale);
    let terms: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(p, q)| 1.0 - dot(p, q) / (dot(p, p).sqrt() * dot(q, q).sqrt()))
        .collect();
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

/// Exact gradient of [`normal_loss`] with respect to every `d_rec` sample.
///
/// Back-propagates `∂(1 - cos)/∂b = -(â - cos·b̂)/|b|` through the
/// finite-difference stencil that produced each rec normal `b`.
pub fn normal_loss_gradient(d_sim: &DepthMap, d_rec: &DepthMap, step_scale: f64) -> Result<Vec<f64>> {
    check_pair(d_sim, d_rec, step_scale)?;
    let (w, h) = d_rec.dims();
    let n = (w * h) as f64;
    let a = raw_normals(d_sim, step_scale);
    let b = raw_normals(d_rec, step_scale);
    let mut grad = vec![0.0; w * h];
    for y in 0..h {
        let (ylo, yhi, wy) = stencil(y, h);
        for x in 0..w {
            let i = y * w + x;
            let (p, q) = (&a[i], &b[i]);
            let (la, lb) = (dot(p, p).sqrt(), dot(q, q).sqrt());
            let cos = dot(p, q) / (la * lb);
            // ∂term/∂b_k for k in {x, y}; the z component is constant.
            let g = |k: usize| -(p[k] / (la * lb) - cos * q[k] / (lb * lb)) / n;
            // b_x = -wx·(D[xhi] - D[xlo]), b_y likewise.
            let (xlo, xhi, wx) = stencil(x, w);
            let gx = g(0);
            grad[y * w + xhi] -= gx * wx;
            grad[y * w + xlo] += gx * wx;
            let gy = g(1);
            grad[yhi * w + x] -= gy * wy;
            grad[ylo * w + x] += gy * wy;
        }
    }
    Ok(grad)
}

/// A line through a depth map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSpec {
    Row(usize),
    Segment { x0: usize, y0: usize, x1: usize, y1: usize },
}

impl std::str::FromStr for LineSpec {
    type Err = Error;

    /// `row:R` or `seg:x0,y0,x1,y1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::arg(format!("bad line spec {s:?}; expected row:R or seg:x0,y0,x1,y1"));
        if let Some(r) = s.strip_prefix("row:") {
            return r.trim().parse().map(LineSpec::Row).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("seg:") {
            let v: Vec<usize> = rest
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if let [x0, y0, x1, y1] = v[..] {
                return Ok(LineSpec::Segment { x0, y0, x1, y1 });
            }
        }
        Err(bad())
    }
}

/// One sample along a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub x: usize,
    pub y: usize,
    pub value: f64,
}

/// Integer points from (x0, y0) to (x1, y1) inclusive, Bresenham order.
pub fn bresenham(x0: usize, y0: usize, x1: usize, y1: usize) -> Vec<(usize, usize)> {
    let (mut x, mut y) = (x0 as i64, y0 as i64);
    let (x1, y1) = (x1 as i64, y1 as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut pts = Vec::new();
    loop {
        pts.push((x as usize, y as usize));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    pts
}

pub fn extract_profile(d: &DepthMap, line: LineSpec) -> Result<Vec<ProfilePoint>> {
    let (w, h) = d.dims();
    let pts = match line {
        LineSpec::Row(r) => {
            if r >= h {
                return Err(Error::arg(format!("row {r} outside height {h}")));
            }
            (0..w).map(|x| (x, r)).collect()
        }
        LineSpec::Segment { x0, y0, x1, y1 } => {
            if x0 >= w || x1 >= w || y0 >= h || y1 >= h {
                return Err(Error::arg(format!(
                    "segment ({x0},{y0})-({x1},{y1}) outside {w}x{h}"
                )));
            }
            bresenham(x0, y0, x1, y1)
        }
    };
    Ok(pts
        .into_iter()
        .map(|(x, y)| ProfilePoint { x, y, value: d.get(x, y) })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationStats {
    pub distinct_levels: usize,
    /// Mean length of horizontal runs of equal values.
    pub mean_plateau_run: f64,
    /// Largest absolute difference between 4-connected neighbours.
    pub max_step: f64,
}

pub fn quantization_stats(d: &DepthMap) -> QuantizationStats {
    let mut sorted = d.data.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let (w, h) = d.dims();
    let mut runs = 0usize;
    let mut max_step: f64 = 0.0;
    for y in 0..h {
        runs += 1;
        for x in 1..w {
            let step = (d.get(x, y) - d.get(x - 1, y)).abs();
            if d.get(x, y) != d.get(x - 1, y) {
                runs += 1;
            }
            max_step = max_step.max(step);
        }
        if y > 0 {
            for x in 0..w {
                max_step = max_step.max((d.get(x, y) - d.get(x, y - 1)).abs());
            }
        }
    }
    QuantizationStats {
        distinct_levels: sorted.len(),
        mean_plateau_run: (w * h) as f64 / runs as f64,
        max_step,
    }
}

/// Per-row normal loss terms, for callers that want the spatial map.
pub fn normal_loss_map(d_sim: &DepthMap, d_rec: &DepthMap, step_scale: f64, exec: Exec) -> Result<Vec<f64>> {
    check_pair(d_sim, d_rec, step_scale)?;
    let a = raw_normals(d_sim, step_scale);
    let b = raw_normals(d_rec, step_scale);
    let mut out = vec![0.0; a.len()];
    exec.fill_rows(&mut out, d_sim.width, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let i = y * d_sim.width + x;
            let (p, q) = (&a[i], &b[i]);
            *o = 1.0 - dot(p, q) / (dot(p, p).sqrt() * dot(q, q).sqrt());
        }
    });
    Ok(out)
}
