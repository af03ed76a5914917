//! Histogram of oriented gradients over a binary image.
//!
//! Central-difference gradients (edge pixels replicated), unsigned
//! orientation with bin `k` centred on `k * 180 / bins` degrees and linear
//! vote splitting between the two nearest centres, 2x2-cell blocks at a
//! one-cell stride, L2 normalization clipped at 0.2 and renormalized.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryImage;

pub const BLOCK_CELLS: usize = 2;
pub const CLIP: f64 = 0.2;
const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HogConfig {
    pub cell_size: usize,
    pub bins: usize,
}

impl Default for HogConfig {
    fn default() -> Self {
        HogConfig {
            cell_size: 8,
            bins: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HogVector {
    pub values: Vec<f64>,
    pub cell_size: usize,
    pub bins_per_cell: usize,
    /// Blocks along x and y.
    pub blocks: (usize, usize),
}

impl HogVector {
    pub fn block_len(&self) -> usize {
        BLOCK_CELLS * BLOCK_CELLS * self.bins_per_cell
    }
}

/// Expected HOG length for an image of the given size.
pub fn hog_len(width: usize, height: usize, cfg: &HogConfig) -> usize {
    let (cx, cy) = (
        width.div_ceil(cfg.cell_size),
        height.div_ceil(cfg.cell_size),
    );
    cx.saturating_sub(BLOCK_CELLS - 1)
        * cy.saturating_sub(BLOCK_CELLS - 1)
        * BLOCK_CELLS
        * BLOCK_CELLS
        * cfg.bins
}

pub fn compute_hog(img: &BinaryImage, cfg: &HogConfig) -> Result<HogVector> {
    if cfg.cell_size == 0 || cfg.bins == 0 {
        return Err(Error::InvalidConfig(
            "HOG cell_size and bins must be >= 1".into(),
        ));
    }
    let cs = cfg.cell_size;
    let (cells_x, cells_y) = (img.width().div_ceil(cs), img.height().div_ceil(cs));
    // zero padding up to a whole number of cells
    let (pw, ph) = (cells_x * cs, cells_y * cs);
    let px = |x: usize, y: usize| -> f64 {
        if x < img.width() && y < img.height() && img.get(x, y) {
            1.0
        } else {
            0.0
        }
    };

    let bins = cfg.bins;
    let bin_width = PI / bins as f64;
    let mut cells = vec![0.0; cells_x * cells_y * bins];
    for y in 0..ph {
        for x in 0..pw {
            let gx = px((x + 1).min(pw - 1), y) - px(x.saturating_sub(1), y);
            let gy = px(x, (y + 1).min(ph - 1)) - px(x, y.saturating_sub(1));
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += PI;
            }
            if angle >= PI {
                angle -= PI;
            }
            let pos = angle / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let b0 = (lo as usize) % bins;
            let b1 = (b0 + 1) % bins;
            let cell = ((y / cs) * cells_x + x / cs) * bins;
            cells[cell + b0] += mag * (1.0 - frac);
            cells[cell + b1] += mag * frac;
        }
    }

    let bx = cells_x.saturating_sub(BLOCK_CELLS - 1);
    let by = cells_y.saturating_sub(BLOCK_CELLS - 1);
    let block_len = BLOCK_CELLS * BLOCK_CELLS * bins;
    let mut values = Vec::with_capacity(bx * by * block_len);
    let mut block = vec![0.0; block_len];
    for j in 0..by {
        for i in 0..bx {
            let mut k = 0;
            for cy in j..j + BLOCK_CELLS {
                for cx in i..i + BLOCK_CELLS {
                    let start = (cy * cells_x + cx) * bins;
                    block[k..k + bins].copy_from_slice(&cells[start..start + bins]);
                    k += bins;
                }
            }
            normalize_block(&mut block);
            values.extend_from_slice(&block);
        }
    }
    Ok(HogVector {
        values,
        cell_size: cs,
        bins_per_cell: bins,
        blocks: (bx, by),
    })
}

fn normalize_block(block: &mut [f64]) {
    let scale = |b: &mut [f64]| {
        let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > NORM_EPS {
            b.iter_mut().for_each(|v| *v /= norm);
        }
    };
    scale(block);
    block.iter_mut().for_each(|v| *v = v.min(CLIP));
    scale(block);
}
