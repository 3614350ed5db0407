//! Raster carriers shared by every other module.
//!
//! Samples are stored as `f64` regardless of the source bit depth. The
//! `max_value` field records the nominal full-scale value (255 for 8-bit
//! sources, 65535 for 16-bit, 1.0 for normalized data).

use crate::error::{Error, Result};

/// BT.601 luma weights for R, G, B.
pub const LUMA_BT601: [f64; 3] = [0.299, 0.587, 0.114];

/// Anything that carries a flat sample buffer with a nominal full scale.
pub trait Raster {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn channels(&self) -> usize;
    fn samples(&self) -> &[f64];
    fn max_value(&self) -> f64;

    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
}

fn check_common(width: usize, height: usize, len: usize, channels: usize, max_value: f64) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::arg(format!("image dimensions must be positive, got {width}x{height}")));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::arg("image dimensions overflow"))?;
    if len != expected {
        return Err(Error::arg(format!(
            "sample count {len} does not match {width}x{height}x{channels}"
        )));
    }
    if !(max_value.is_finite() && max_value > 0.0) {
        return Err(Error::arg(format!("max_value must be positive and finite, got {max_value}")));
    }
    Ok(())
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::arg(format!("non-finite sample at index {i}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    max_value: f64,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>, max_value: f64) -> Result<Self> {
        check_common(width, height, data.len(), 1, max_value)?;
        check_finite(&data)?;
        Ok(Self {
            width,
            height,
            data,
            max_value,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64, max_value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], max_value)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        max_value: f64,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data, max_value)
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

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Multiplies every sample by `k`, keeping `max_value`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|v| v * k).collect(),
            self.max_value,
        )
    }

    /// Same samples, different nominal full scale.
    pub fn with_max_value(mut self, max_value: f64) -> Result<Self> {
        check_common(self.width, self.height, self.data.len(), 1, max_value)?;
        self.max_value = max_value;
        Ok(self)
    }

    /// Circular shift by (dx, dy): output(x, y) = input(x - dx, y - dy).
    pub fn shifted(&self, dx: isize, dy: isize) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = vec![0.0; self.data.len()];
        for y in 0..h {
            for x in 0..w {
                let sx = (x - dx).rem_euclid(w);
                let sy = (y - dy).rem_euclid(h);
                out[(y * w + x) as usize] = self.data[(sy * w + sx) as usize];
            }
        }
        Self {
            data: out,
            ..self.clone()
        }
    }
}

impl Raster for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        1
    }
    fn samples(&self) -> &[f64] {
        &self.data
    }
    fn max_value(&self) -> f64 {
        self.max_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    /// Interleaved RGB.
    data: Vec<f64>,
    max_value: f64,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>, max_value: f64) -> Result<Self> {
        check_common(width, height, data.len(), 3, max_value)?;
        check_finite(&data)?;
        Ok(Self {
            width,
            height,
            data,
            max_value,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

impl Raster for ColorImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        3
    }
    fn samples(&self) -> &[f64] {
        &self.data
    }
    fn max_value(&self) -> f64 {
        self.max_value
    }
}

/// BT.601 luma (Y channel).
pub fn to_luminance(img: &ColorImage) -> GrayImage {
    let [wr, wg, wb] = LUMA_BT601;
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| wr * p[0] + wg * p[1] + wb * p[2])
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
        max_value: img.max_value,
    }
}

/// Linear rescale from `[0, max_value]` to `[0, target_max]`.
pub fn normalize(img: &GrayImage, target_max: f64) -> Result<GrayImage> {
    if !(target_max > 0.0 && target_max.is_finite()) {
        return Err(Error::arg(format!("target_max must be positive, got {target_max}")));
    }
    if target_max == img.max_value {
        return Ok(img.clone());
    }
    let k = target_max / img.max_value;
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|v| v * k).collect(),
        max_value: target_max,
    })
}
