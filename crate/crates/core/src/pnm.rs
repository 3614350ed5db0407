//! Netpbm (PGM/PPM) reader and writer.
//!
//! Reads P2, P3, P5 and P6 with maxval up to 65535; binary samples wider than
//! one byte are big-endian. Writes binary P5/P6 only.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ColorImage, GrayImage, Raster};

#[derive(Debug, Clone, PartialEq)]
pub enum PnmImage {
    Gray(GrayImage),
    Color(ColorImage),
}

impl PnmImage {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            PnmImage::Gray(g) => g.dims(),
            PnmImage::Color(c) => (c.width(), c.height()),
        }
    }

    /// Gray images pass through; color images are reduced to BT.601 luma.
    pub fn into_gray(self) -> GrayImage {
        match self {
            PnmImage::Gray(g) => g,
            PnmImage::Color(c) => crate::image::to_luminance(&c),
        }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            match self.buf[self.pos] {
                b'#' => {
                    while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            self.pos = start;
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                offset: start,
                message: format!("{what} out of range"),
            })
    }
}

/// Decodes a PNM byte stream.
pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(cur.err("missing PNM magic"));
    }
    let (channels, binary) = match bytes[1] {
        b'2' => (1, false),
        b'3' => (3, false),
        b'5' => (1, true),
        b'6' => (3, true),
        _ => {
            cur.pos = 1;
            return Err(cur.err("unsupported PNM variant"));
        }
    };
    cur.pos = 2;
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval_offset = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Parse {
            offset: maxval_offset,
            message: format!("zero image dimension {width}x{height}"),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse {
            offset: maxval_offset,
            message: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| cur.err("image dimensions overflow"))?;

    let samples: Vec<f64> = if binary {
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(cur.err("expected single whitespace after maxval"));
        }
        cur.pos += 1;
        let bps = if maxval < 256 { 1 } else { 2 };
        let payload = &bytes[cur.pos..];
        let expected = count * bps;
        if payload.len() < expected {
            return Err(Error::SizeMismatch {
                expected,
                found: payload.len(),
            });
        }
        if bps == 1 {
            payload[..expected].iter().map(|&b| b as f64).collect()
        } else {
            payload[..expected]
                .chunks_exact(2)
                .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64)
                .collect()
        }
    } else {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            cur.skip_space_and_comments();
            if cur.pos >= bytes.len() {
                return Err(Error::SizeMismatch {
                    expected: count,
                    found: out.len(),
                });
            }
            let at = cur.pos;
            let v = cur.number("sample")?;
            if v > maxval {
                return Err(Error::Parse {
                    offset: at,
                    message: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            out.push(v as f64);
        }
        out
    };

    let max_value = maxval as f64;
    Ok(if channels == 1 {
        PnmImage::Gray(GrayImage::new(width, height, samples, max_value)?)
    } else {
        PnmImage::Color(ColorImage::new(width, height, samples, max_value)?)
    })
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<PnmImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes)
}

/// Encodes as binary P5 (one channel) or P6 (three channels).
///
/// `max_value` must be an integer in `1..=65535`; samples are rounded to the
/// nearest integer and clamped to `[0, max_value]`.
pub fn encode_pnm<R: Raster + ?Sized>(img: &R) -> Result<Vec<u8>> {
    let maxval = img.max_value();
    if maxval.fract() != 0.0 || !(1.0..=65535.0).contains(&maxval) {
        return Err(Error::arg(format!(
            "PNM output needs an integer max_value in 1..=65535, got {maxval}"
        )));
    }
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::arg(format!("cannot write {c}-channel image as PNM"))),
    };
    let header = format!("{magic}\n{} {}\n{}\n", img.width(), img.height(), maxval as u32);
    let wide = maxval > 255.0;
    let mut out = Vec::with_capacity(header.len() + img.samples().len() * if wide { 2 } else { 1 });
    out.extend_from_slice(header.as_bytes());
    for &v in img.samples() {
        let q = v.round().clamp(0.0, maxval) as u16;
        if wide {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    Ok(out)
}

pub fn write_pnm<R: Raster + ?Sized>(img: &R, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pnm(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
