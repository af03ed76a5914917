//! End-to-end wiring: configuration, cloud to histogram, library training
//! and the bundle file that carries codebook plus library histograms.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::cloud_prep::{downsample, normalize, remove_outliers, PrepConfig};
use crate::codebook::{
    fuse, quantize, ClusterMetric, Codebook, CodebookRecord, CombinedHistogram, DEFAULT_CLUSTERS,
};
use crate::error::{Error, Result};
use crate::features::{
    compute_hog, dense_orb, detect_orb, DescriptorSet, FeatureConfig, HogVector,
};
use crate::matching::{match_histogram, DistanceKind, MatchResult};
use crate::model_ingest::{remove_materials, sample_surface, SamplingConfig, TriangleMesh};
use crate::raster::{image_chain, project_frontal, BinaryImage, RasterConfig};

pub const BUNDLE_FORMAT: &str = "winbow-bundle";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    pub n: usize,
    pub metric: ClusterMetric,
    pub hog_weight: f64,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            n: DEFAULT_CLUSTERS,
            metric: ClusterMetric::Euclidean,
            hog_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    pub distance: DistanceKind,
}

/// Every tunable of the pipeline. All randomness is derived from `master_seed`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub sampling: SamplingConfig,
    pub prep: PrepConfig,
    pub raster: RasterConfig,
    pub features: FeatureConfig,
    pub codebook: CodebookConfig,
    pub matching: MatchingConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        self.prep.validate()?;
        self.raster.validate()?;
        self.features.validate()?;
        if self.codebook.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "codebook n must be >= 2, got {}",
                self.codebook.n
            )));
        }
        let w = self.codebook.hog_weight;
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "hog_weight must be > 0, got {w}"
            )));
        }
        if let DistanceKind::Minkowski(p) = self.matching.distance {
            if p.is_nan() || p < 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "minkowski order must be >= 1, got {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| {
                    text.as_bytes()[..s.start.min(text.len())]
                        .iter()
                        .filter(|&&b| b == b'\n')
                        .count()
                        + 1
                })
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML text; `master_seed` must fit in a signed 64-bit integer.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    /// Identifies everything that shapes descriptors and histograms.
    pub fn fingerprint(&self) -> String {
        let key = (
            &self.prep,
            &self.raster,
            &self.features,
            self.codebook.metric,
        );
        serde_json::to_string(&key).expect("config serializes")
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent child seed for the given path of integers.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

/// FNV-1a, used to turn model ids into seed components.
pub fn id_hash(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

const SAMPLE_STREAM: u64 = 1;
pub(crate) const NOISE_STREAM: u64 = 2;
const KMEANS_STREAM: u64 = 3;

/// Drops excluded materials and samples the remaining surface with a seed
/// derived from the master seed and `model_id`.
pub fn sample_model(
    mesh: &TriangleMesh,
    model_id: &str,
    cfg: &PipelineConfig,
) -> Result<PointCloud> {
    let kept = remove_materials(mesh, &cfg.sampling.excluded_materials)?;
    let sampling = SamplingConfig {
        seed: derive_seed(cfg.master_seed, &[SAMPLE_STREAM, id_hash(model_id)]),
        ..cfg.sampling.clone()
    };
    let mut cloud = sample_surface(&kept, &sampling)?.cloud;
    cloud.label = Some(model_id.to_string());
    Ok(cloud)
}

#[derive(Debug, Clone)]
pub struct CloudFeatures {
    pub descriptors: DescriptorSet,
    pub hog: Option<HogVector>,
    /// Every image stage computed, ending with the square feature image.
    pub stages: Vec<(String, BinaryImage)>,
}

/// Outlier removal, downsampling, normalization, frontal projection, the
/// image chain up to the configured stage, then ORB (and HOG) on the
/// feature image padded to a square.
pub fn extract_features(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<CloudFeatures> {
    let mut cloud = cloud.clone();
    if cfg.prep.remove_outliers {
        cloud = remove_outliers(&cloud, &cfg.prep)?;
    }
    if cfg.prep.voxel_size > 0.0 {
        cloud = downsample(&cloud, cfg.prep.voxel_size)?;
    }
    let cloud = normalize(&cloud)?;
    let projected = project_frontal(&cloud, &cfg.raster)?;
    let mut stages: Vec<(String, BinaryImage)> =
        image_chain(projected, &cfg.raster, cfg.raster.feature_stage)
            .into_iter()
            .map(|(s, img)| (s.name().to_string(), img))
            .collect();
    let image = stages.last().expect("chain is non-empty").1.pad_to_square();

    let descriptors = if cfg.features.dense {
        dense_orb(&image, cfg.features.stride)?
    } else {
        detect_orb(
            &image,
            cfg.features.max_keypoints,
            cfg.features.fast_threshold,
        )
        .1
    };
    let hog = if cfg.features.kind.uses_hog() {
        Some(compute_hog(&image, &cfg.features.hog)?)
    } else {
        None
    };
    stages.push(("feature".to_string(), image));
    Ok(CloudFeatures {
        descriptors,
        hog,
        stages,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryEntry {
    pub model_id: String,
    pub descriptor_count: usize,
    pub histogram: CombinedHistogram,
}

/// Codebook, library histograms and the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub config: PipelineConfig,
    pub codebook: Codebook,
    pub library: Vec<LibraryEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleRecord {
    format: String,
    version: u32,
    config: PipelineConfig,
    codebook: CodebookRecord,
    library: Vec<LibraryEntry>,
}

/// Seed used for codebook training.
pub fn kmeans_seed(cfg: &PipelineConfig) -> u64 {
    derive_seed(cfg.master_seed, &[KMEANS_STREAM])
}

/// Extracts features from every model cloud (in parallel, order kept).
pub fn extract_library_features(
    models: &[(String, PointCloud)],
    cfg: &PipelineConfig,
) -> Result<Vec<CloudFeatures>> {
    models
        .par_iter()
        .map(|(id, cloud)| {
            extract_features(cloud, cfg).map_err(|e| e.context(format!("model {id}")))
        })
        .collect()
}

/// Extracts features from every model cloud, trains the codebook on the
/// pooled descriptors and stores one combined histogram per model.
pub fn train_library(models: &[(String, PointCloud)], cfg: &PipelineConfig) -> Result<Bundle> {
    cfg.validate()?;
    let features = extract_library_features(models, cfg)?;
    let ids: Vec<String> = models.iter().map(|(id, _)| id.clone()).collect();
    train_library_from_features(&ids, &features, cfg)
}

/// Codebook and library histograms from features already extracted for
/// the models `ids`.
pub fn train_library_from_features(
    ids: &[String],
    features: &[CloudFeatures],
    cfg: &PipelineConfig,
) -> Result<Bundle> {
    cfg.validate()?;
    if ids.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if ids.len() != features.len() {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            got: features.len(),
        });
    }
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(Error::InvalidConfig(format!("duplicate model id `{id}`")));
        }
    }
    let pooled: Vec<Vec<f64>> = features
        .iter()
        .flat_map(|f| f.descriptors.embedded())
        .collect();
    let (codebook, _) = Codebook::train(
        &pooled,
        cfg.codebook.n,
        kmeans_seed(cfg),
        cfg.codebook.metric,
        cfg.fingerprint(),
    )?;
    let mut bundle = Bundle {
        config: cfg.clone(),
        codebook,
        library: Vec::with_capacity(ids.len()),
    };
    for (id, f) in ids.iter().zip(features) {
        let histogram = bundle.histogram(f)?;
        bundle.library.push(LibraryEntry {
            model_id: id.clone(),
            descriptor_count: f.descriptors.len(),
            histogram,
        });
    }
    Ok(bundle)
}

impl Bundle {
    /// Combined histogram of already extracted features.
    pub fn histogram(&self, features: &CloudFeatures) -> Result<CombinedHistogram> {
        let bow = quantize(&features.descriptors, &self.codebook)?;
        let hog = features
            .hog
            .as_ref()
            .map(|h| h.values.as_slice())
            .unwrap_or(&[]);
        fuse(&bow, hog, self.config.codebook.hog_weight)
    }

    pub fn library_pairs(&self) -> Vec<(String, CombinedHistogram)> {
        self.library
            .iter()
            .map(|e| (e.model_id.clone(), e.histogram.clone()))
            .collect()
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.library.iter().map(|e| e.model_id.clone()).collect()
    }

    /// Runs the full pipeline on `cloud` and ranks the library.
    pub fn match_cloud(
        &self,
        cloud: &PointCloud,
        distance: DistanceKind,
    ) -> Result<(MatchResult, CloudFeatures)> {
        let features = extract_features(cloud, &self.config)?;
        let target = self.histogram(&features)?;
        let result = match_histogram(&target, &self.library_pairs(), distance)?;
        Ok((result, features))
    }

    pub fn to_json(&self) -> String {
        let record = BundleRecord {
            format: BUNDLE_FORMAT.into(),
            version: BUNDLE_VERSION,
            config: self.config.clone(),
            codebook: CodebookRecord::from(&self.codebook),
            library: self.library.clone(),
        };
        let mut s = serde_json::to_string(&record).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let head: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptCodebook(e.to_string()))?;
        if head.get("format").and_then(|f| f.as_str()) != Some(BUNDLE_FORMAT) {
            return Err(Error::CorruptCodebook(format!(
                "missing `{BUNDLE_FORMAT}` format tag"
            )));
        }
        if let Some(v) = head.get("version").and_then(|v| v.as_u64()) {
            if v != BUNDLE_VERSION as u64 {
                return Err(Error::VersionMismatch {
                    found: v.min(u32::MAX as u64) as u32,
                    expected: BUNDLE_VERSION,
                });
            }
        }
        let r: BundleRecord =
            serde_json::from_value(head).map_err(|e| Error::CorruptCodebook(e.to_string()))?;
        r.config.validate()?;
        let codebook = Codebook::try_from(r.codebook)?;
        if codebook.feature_fingerprint() != r.config.fingerprint() {
            return Err(Error::CorruptCodebook(
                "codebook fingerprint does not match bundle config".into(),
            ));
        }
        if r.library.is_empty() {
            return Err(Error::EmptyLibrary);
        }
        let len = r.library[0].histogram.len();
        for e in &r.library {
            if e.histogram.block_boundary() != codebook.n() || e.histogram.len() != len {
                return Err(Error::CorruptCodebook(format!(
                    "histogram of `{}` has the wrong shape",
                    e.model_id
                )));
            }
        }
        Ok(Bundle {
            config: r.config,
            codebook,
            library: r.library,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.context(path.display().to_string()))
    }
}
