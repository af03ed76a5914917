//! Local ORB descriptors (keypoint or dense) and the semi-global HOG vector.

mod brief_pattern;
pub mod hog;
pub mod orb;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use hog::{compute_hog, hog_len, HogConfig, HogVector};
pub use orb::{
    dense_orb, detect_orb, DescriptorSet, DescriptorSource, Keypoint, OrbDescriptor, BORDER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "orb")]
    Orb,
    #[serde(rename = "orb+hog")]
    OrbHog,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Orb => "orb",
            FeatureKind::OrbHog => "orb+hog",
        }
    }

    pub fn uses_hog(self) -> bool {
        self == FeatureKind::OrbHog
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orb" => Ok(FeatureKind::Orb),
            "orb+hog" => Ok(FeatureKind::OrbHog),
            _ => Err(Error::InvalidConfig(format!(
                "unknown feature kind `{s}` (expected orb or orb+hog)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    /// Dense-grid sampling instead of FAST keypoints.
    pub dense: bool,
    pub stride: usize,
    pub max_keypoints: usize,
    pub fast_threshold: i32,
    pub hog: HogConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            kind: FeatureKind::OrbHog,
            dense: false,
            stride: 8,
            max_keypoints: 500,
            fast_threshold: 20,
            hog: HogConfig::default(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be >= 1".into()));
        }
        if self.max_keypoints == 0 {
            return Err(Error::InvalidConfig("max_keypoints must be >= 1".into()));
        }
        if !(0..255).contains(&self.fast_threshold) {
            return Err(Error::InvalidConfig(format!(
                "fast_threshold must be in [0, 255), got {}",
                self.fast_threshold
            )));
        }
        if self.hog.cell_size == 0 || self.hog.bins == 0 {
            return Err(Error::InvalidConfig(
                "HOG cell_size and bins must be >= 1".into(),
            ));
        }
        Ok(())
    }
}
