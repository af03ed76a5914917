//! Binary images: frontal projection of a cloud and the morphological chain
//! applied before feature extraction (dilate, Laplace edges, contour
//! simplification).

pub mod contour;
pub mod morph;
pub mod project;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contour::{douglas_peucker, douglas_peucker_closed, simplify_contours, trace_contours};
pub use morph::{dilate, laplace_edges};
pub use project::project_frontal;

/// Row-major binary raster. Pixel values are 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    /// Side length of one pixel in cloud units.
    pub pixel_size: f64,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryImage {
            width,
            height,
            pixels: vec![0; width * height],
            pixel_size: 1.0,
        }
    }

    /// Any nonzero input byte counts as set.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(BinaryImage {
            width,
            height,
            pixels: pixels.into_iter().map(|p| u8::from(p != 0)).collect(),
            pixel_size: 1.0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x] != 0
    }

    /// Out-of-bounds reads as unset.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.pixels[y * self.width + x] = u8::from(value);
    }

    pub fn count_set(&self) -> usize {
        self.pixels.iter().map(|&p| p as usize).sum()
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.pixels.iter().zip(&other.pixels).all(|(&a, &b)| a <= b)
    }

    /// Centers the image on a square canvas whose side is the longer edge.
    pub fn pad_to_square(&self) -> BinaryImage {
        let side = self.width.max(self.height);
        let (ox, oy) = ((side - self.width) / 2, (side - self.height) / 2);
        let mut out = BinaryImage::new(side, side);
        out.pixel_size = self.pixel_size;
        for y in 0..self.height {
            let src = &self.pixels[y * self.width..(y + 1) * self.width];
            let start = (y + oy) * side + ox;
            out.pixels[start..start + self.width].copy_from_slice(src);
        }
        out
    }

    /// Rotates by 90 degrees clockwise.
    pub fn rotate90(&self) -> BinaryImage {
        let mut out = BinaryImage::new(self.height, self.width);
        out.pixel_size = self.pixel_size;
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(self.height - 1 - y, x, self.get(x, y));
            }
        }
        out
    }

    pub fn mirror_horizontal(&self) -> BinaryImage {
        let mut out = self.clone();
        for row in out.pixels.chunks_exact_mut(self.width.max(1)) {
            row.reverse();
        }
        out
    }

    /// 8-bit grayscale PNG, set pixels white.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let data: Vec<u8> = self.pixels.iter().map(|&p| p * 255).collect();
        image::save_buffer(
            path,
            &data,
            self.width as u32,
            self.height as u32,
            image::ColorType::L8,
        )
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
    }
}

/// Which stage of the image chain feeds feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureStage {
    Projected,
    Dilated,
    Edges,
    Simplified,
}

impl FeatureStage {
    pub const ALL: [FeatureStage; 4] = [
        FeatureStage::Projected,
        FeatureStage::Dilated,
        FeatureStage::Edges,
        FeatureStage::Simplified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureStage::Projected => "projected",
            FeatureStage::Dilated => "dilated",
            FeatureStage::Edges => "edges",
            FeatureStage::Simplified => "simplified",
        }
    }
}

impl std::str::FromStr for FeatureStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureStage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown feature stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasterConfig {
    pub image_long_side: usize,
    pub dilation_radius: usize,
    pub dp_epsilon: f64,
    pub feature_stage: FeatureStage,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            image_long_side: 256,
            dilation_radius: 1,
            dp_epsilon: 1.5,
            feature_stage: FeatureStage::Dilated,
        }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_long_side < 16 {
            return Err(Error::InvalidConfig(format!(
                "image_long_side must be >= 16, got {}",
                self.image_long_side
            )));
        }
        if !(self.dp_epsilon > 0.0 && self.dp_epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dp_epsilon must be > 0, got {}",
                self.dp_epsilon
            )));
        }
        Ok(())
    }
}

/// Runs the chain projected -> dilated -> edges -> simplified, stopping after
/// `through`. Returns every computed stage in order.
pub fn image_chain(
    projected: BinaryImage,
    cfg: &RasterConfig,
    through: FeatureStage,
) -> Vec<(FeatureStage, BinaryImage)> {
    let mut stages = vec![(FeatureStage::Projected, projected)];
    for stage in &FeatureStage::ALL[1..] {
        if *stage > through {
            break;
        }
        let prev = &stages.last().expect("non-empty").1;
        let next = match stage {
            FeatureStage::Dilated => dilate(prev, cfg.dilation_radius),
            FeatureStage::Edges => laplace_edges(prev),
            FeatureStage::Simplified => simplify_contours(prev, cfg.dp_epsilon),
            FeatureStage::Projected => unreachable!(),
        };
        stages.push((*stage, next));
    }
    stages
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_to_square_centers() {
        let img = BinaryImage::from_pixels(2, 4, vec![1, 0, 0, 0, 0, 0, 0, 1]).unwrap();
        let sq = img.pad_to_square();
        assert_eq!((sq.width(), sq.height()), (4, 4));
        assert!(sq.get(1, 0) && sq.get(2, 3));
        assert_eq!(sq.count_set(), 2);
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let img = BinaryImage::from_pixels(3, 2, vec![1, 0, 1, 0, 1, 1]).unwrap();
        let r = img.rotate90();
        assert_eq!((r.width(), r.height()), (2, 3));
        assert!(r.get(1, 0));
        assert_eq!(r.rotate90().rotate90().rotate90(), img);
    }

    #[test]
    fn chain_stops_at_requested_stage() {
        let img = BinaryImage::new(20, 20);
        let cfg = RasterConfig::default();
        let stages = image_chain(img, &cfg, FeatureStage::Edges);
        let names: Vec<_> = stages.iter().map(|s| s.0).collect();
        assert_eq!(
            names,
            vec![
                FeatureStage::Projected,
                FeatureStage::Dilated,
                FeatureStage::Edges
            ]
        );
    }

    #[test]
    fn stage_names_parse() {
        for st in FeatureStage::ALL {
            assert_eq!(st.name().parse::<FeatureStage>().unwrap(), st);
        }
        assert!("blurred".parse::<FeatureStage>().is_err());
    }
}
