//! Single-scale ORB: FAST-9 corners, intensity-centroid orientation and
//! steered BRIEF over a 31x31 patch.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::raster::BinaryImage;

use super::brief_pattern::BRIEF_PAIRS;

/// Keypoints closer than this to any border are discarded; also the dense
/// grid margin.
pub const BORDER: usize = 16;
pub const PATCH_RADIUS: i64 = 15;
/// Binary images are scaled to {0, 255} before the FAST intensity test.
pub const FAST_SCALE: i32 = 255;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
const CIRCLE: [(i64, i64); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];
const ARC: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    /// Radians, image coordinates (y down).
    pub orientation: f64,
    pub response: f64,
}

/// 256-bit binary descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OrbDescriptor(pub [u64; 4]);

impl OrbDescriptor {
    pub const BITS: usize = 256;

    pub fn bit(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn set_bit(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn hamming(&self, other: &OrbDescriptor) -> u32 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Bits as a 0.0 / 1.0 vector, bit 0 first.
    pub fn to_f64(&self) -> Vec<f64> {
        (0..Self::BITS)
            .map(|i| if self.bit(i) { 1.0 } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorSource {
    Keypoint,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub descriptors: Vec<OrbDescriptor>,
    pub source: DescriptorSource,
}

impl DescriptorSet {
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    /// Descriptors as 0/1 float rows.
    pub fn embedded(&self) -> Vec<Vec<f64>> {
        self.descriptors.iter().map(OrbDescriptor::to_f64).collect()
    }
}

fn intensity(img: &BinaryImage, x: i64, y: i64) -> i32 {
    if img.get_signed(x, y) {
        FAST_SCALE
    } else {
        0
    }
}

/// FAST-9 score of `(x, y)`, or `None` if it is not a corner. The score is
/// the larger of the summed brighter and darker excess over the threshold.
fn fast_score(img: &BinaryImage, x: i64, y: i64, threshold: i32) -> Option<i32> {
    let center = intensity(img, x, y);
    let mut state = [0i8; 16];
    let (mut bright_sum, mut dark_sum) = (0, 0);
    for (k, (dx, dy)) in CIRCLE.iter().enumerate() {
        let v = intensity(img, x + dx, y + dy);
        if v > center + threshold {
            state[k] = 1;
            bright_sum += v - center - threshold;
        } else if v < center - threshold {
            state[k] = -1;
            dark_sum += center - v - threshold;
        }
    }
    let has_arc = |want: i8| {
        let mut run = 0;
        for k in 0..16 + ARC {
            if state[k % 16] == want {
                run += 1;
                if run >= ARC {
                    return true;
                }
            } else {
                run = 0;
            }
        }
        false
    };
    let bright = has_arc(1);
    let dark = has_arc(-1);
    match (bright, dark) {
        (false, false) => None,
        (true, false) => Some(bright_sum),
        (false, true) => Some(dark_sum),
        (true, true) => Some(bright_sum.max(dark_sum)),
    }
}

/// FAST-9 with 3x3 non-maximum suppression. Among equal scores the pixel
/// earliest in raster order survives.
pub fn fast_corners(img: &BinaryImage, threshold: i32) -> Vec<Keypoint> {
    let (w, h) = (img.width(), img.height());
    if w < 2 * BORDER + 1 || h < 2 * BORDER + 1 {
        return Vec::new();
    }
    // scores over the region that can hold keypoints, plus a 1 px ring for NMS
    let (x0, x1) = (BORDER - 1, w - BORDER);
    let (y0, y1) = (BORDER - 1, h - BORDER);
    let sw = x1 - x0 + 1;
    let mut scores = vec![0i32; sw * (y1 - y0 + 1)];
    for y in y0..=y1 {
        for x in x0..=x1 {
            if let Some(s) = fast_score(img, x as i64, y as i64, threshold) {
                scores[(y - y0) * sw + (x - x0)] = s;
            }
        }
    }
    let score = |x: usize, y: usize| scores[(y - y0) * sw + (x - x0)];
    let mut out = Vec::new();
    for y in BORDER..h - BORDER {
        for x in BORDER..w - BORDER {
            let s = score(x, y);
            if s == 0 {
                continue;
            }
            let mut is_max = true;
            'nms: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = ((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                    let t = score(nx, ny);
                    let earlier = (dy, dx) < (0, 0);
                    if t > s || (t == s && earlier) {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if is_max {
                out.push(Keypoint {
                    x,
                    y,
                    orientation: 0.0,
                    response: s as f64,
                });
            }
        }
    }
    out
}

/// Angle of the intensity centroid of the radius-15 disc around `(x, y)`.
pub fn centroid_orientation(img: &BinaryImage, x: usize, y: usize) -> f64 {
    let (mut m10, mut m01) = (0i64, 0i64);
    for dy in -PATCH_RADIUS..=PATCH_RADIUS {
        for dx in -PATCH_RADIUS..=PATCH_RADIUS {
            if dx * dx + dy * dy > PATCH_RADIUS * PATCH_RADIUS {
                continue;
            }
            if img.get_signed(x as i64 + dx, y as i64 + dy) {
                m10 += dx;
                m01 += dy;
            }
        }
    }
    (m01 as f64).atan2(m10 as f64)
}

/// Steered BRIEF: bit `i` is 1 iff the first sample of pair `i`, rotated by
/// `angle`, is darker than the second. Equal pixels give 0.
pub fn brief_descriptor(img: &BinaryImage, x: usize, y: usize, angle: f64) -> OrbDescriptor {
    let (s, c) = angle.sin_cos();
    let rot = |px: i8, py: i8| {
        let (fx, fy) = (px as f64, py as f64);
        (
            x as i64 + (fx * c - fy * s).round() as i64,
            y as i64 + (fx * s + fy * c).round() as i64,
        )
    };
    let mut desc = OrbDescriptor::default();
    for (i, &[x1, y1, x2, y2]) in BRIEF_PAIRS.iter().enumerate() {
        let a = rot(x1, y1);
        let b = rot(x2, y2);
        if !img.get_signed(a.0, a.1) && img.get_signed(b.0, b.1) {
            desc.set_bit(i);
        }
    }
    desc
}

/// Detects up to `max_keypoints` FAST corners, strongest first (ties by
/// `(y, x)`), and describes each with steered BRIEF.
pub fn detect_orb(
    img: &BinaryImage,
    max_keypoints: usize,
    fast_threshold: i32,
) -> (Vec<Keypoint>, DescriptorSet) {
    let mut kps = fast_corners(img, fast_threshold);
    kps.sort_by(|a, b| {
        b.response
            .partial_cmp(&a.response)
            .unwrap_or(Ordering::Equal)
            .then((a.y, a.x).cmp(&(b.y, b.x)))
    });
    kps.truncate(max_keypoints);
    let descriptors = kps
        .iter_mut()
        .map(|kp| {
            kp.orientation = centroid_orientation(img, kp.x, kp.y);
            brief_descriptor(img, kp.x, kp.y, kp.orientation)
        })
        .collect();
    (
        kps,
        DescriptorSet {
            descriptors,
            source: DescriptorSource::Keypoint,
        },
    )
}

/// Number of grid nodes along an axis of length `len`.
pub fn dense_grid_count(len: usize, stride: usize) -> usize {
    (len - 2 * BORDER) / stride + 1
}

/// Unrotated BRIEF descriptors on a regular grid starting `BORDER` px in.
pub fn dense_orb(img: &BinaryImage, stride: usize) -> Result<DescriptorSet> {
    if stride == 0 {
        return Err(Error::InvalidConfig("dense stride must be >= 1".into()));
    }
    let (w, h) = (img.width(), img.height());
    let min = 2 * BORDER + 1;
    if w < min || h < min {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min,
        });
    }
    let (nx, ny) = (dense_grid_count(w, stride), dense_grid_count(h, stride));
    let mut descriptors = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            descriptors.push(brief_descriptor(
                img,
                BORDER + i * stride,
                BORDER + j * stride,
                0.0,
            ));
        }
    }
    Ok(DescriptorSet {
        descriptors,
        source: DescriptorSource::Dense,
    })
}
