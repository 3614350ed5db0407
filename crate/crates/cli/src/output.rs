use std::fs;
use std::path::{Path, PathBuf};

use pcstruct::kvconfig::fmt_real;
use pcstruct::pnm::{read_pnm, write_pnm};
use pcstruct::GrayImage;

use crate::error::{CliError, CliResult};

/// Output directory, created on first use.
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> CliResult<Self> {
        fs::create_dir_all(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Writes `values` as a PGM, mapping `full_scale` to the top code.
    pub fn write_map(&self, name: &str, w: usize, h: usize, values: &[f64], full_scale: f64, bits: u32) -> CliResult<()> {
        let top = ((1u32 << bits) - 1) as f64;
        let k = if full_scale > 0.0 { top / full_scale } else { 0.0 };
        let data = values.iter().map(|v| v * k).collect();
        let img = GrayImage::new(w, h, data, top)?;
        write_pnm(&img, self.join(name))?;
        Ok(())
    }
}

/// Reads a PGM or PPM; colour frames are reduced to their Y channel.
pub fn read_gray(path: &Path) -> CliResult<GrayImage> {
    Ok(match read_pnm(path)? {
        pcstruct::PnmImage::Gray(g) => g,
        pcstruct::PnmImage::Color(c) => pcstruct::image::to_luminance(&c),
    })
}

/// One CSV line of reals.
pub fn csv_reals(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(",")
}

pub fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}
