//! Zero-frequency heatmaps of estimated supports.

use std::path::Path;

use crate::error::{Error, Result};
use crate::support::SupportMask;

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Binary PGM (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Pixel `(i, j)` is `round(255·z/reps)` where `z` counts the masks in which
/// entry `(i, j)` is zero: white means always zero, black never.
pub fn heatmap_zero_freq(masks: &[SupportMask]) -> Result<GrayImage> {
    let first = masks
        .first()
        .ok_or_else(|| Error::Parameter("heatmap needs at least one mask".into()))?;
    let p = first.dim();
    if let Some(bad) = masks.iter().find(|m| m.dim() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: bad.dim(),
        });
    }
    let reps = masks.len() as u64;
    let mut pixels = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            let zeros = masks.iter().filter(|m| !m.get(i, j)).count() as u64;
            // Half-away-from-zero rounding of 255·zeros/reps in integers.
            pixels.push(((2 * 255 * zeros + reps) / (2 * reps)) as u8);
        }
    }
    Ok(GrayImage {
        width: p,
        height: p,
        pixels,
    })
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    std::fs::write(path, image.to_pgm()).map_err(|e| Error::io(path, e))
}
