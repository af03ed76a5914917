//! Visual dictionary: k-means training, quantization into occurrence
//! histograms and fusion with the HOG block.

pub mod kmeans;
mod persist;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DescriptorSet;

pub use kmeans::{nearest_center, train_kmeans, ClusterMetric, KMeansFit, MAX_ITERATIONS};
pub(crate) use persist::CodebookRecord;
pub use persist::{load_codebook, save_codebook, CODEBOOK_FORMAT, CODEBOOK_VERSION};

pub const DEFAULT_CLUSTERS: usize = 25;
pub const SUGGEST_RANGE: [usize; 9] = [10, 15, 20, 25, 30, 35, 40, 45, 50];

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centers: Vec<Vec<f64>>,
    metric: ClusterMetric,
    feature_fingerprint: String,
    seed: u64,
}

impl Codebook {
    /// Builds a codebook from explicit centers, checking that there are at
    /// least two, all finite, equally long and pairwise distinct.
    pub fn from_centers(
        centers: Vec<Vec<f64>>,
        metric: ClusterMetric,
        feature_fingerprint: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        if centers.len() < 2 {
            return Err(Error::CorruptCodebook(format!(
                "need at least 2 centers, got {}",
                centers.len()
            )));
        }
        let dim = centers[0].len();
        if dim == 0 {
            return Err(Error::CorruptCodebook("zero-dimensional centers".into()));
        }
        for (i, c) in centers.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::CorruptCodebook(format!("center {i} is not finite")));
            }
            if centers[..i].contains(c) {
                return Err(Error::CorruptCodebook(format!(
                    "center {i} duplicates an earlier center"
                )));
            }
        }
        Ok(Codebook {
            centers,
            metric,
            feature_fingerprint: feature_fingerprint.into(),
            seed,
        })
    }

    /// Trains on embedded descriptors with k-means++ / Lloyd.
    pub fn train(
        descriptors: &[Vec<f64>],
        n: usize,
        seed: u64,
        metric: ClusterMetric,
        feature_fingerprint: impl Into<String>,
    ) -> Result<(Self, KMeansFit)> {
        let fit = train_kmeans(descriptors, n, seed, metric)?;
        let book = Codebook::from_centers(fit.centers.clone(), metric, feature_fingerprint, seed)?;
        Ok((book, fit))
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn metric(&self) -> ClusterMetric {
        self.metric
    }

    pub fn feature_fingerprint(&self) -> &str {
        &self.feature_fingerprint
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// FNV-1a over the bit patterns of all centers, as 16 hex digits.
    pub fn checksum(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.centers.iter().flatten() {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        format!("{h:016x}")
    }

    /// Nearest-center index for each embedded descriptor.
    pub fn assign(&self, descriptors: &[Vec<f64>]) -> Result<Vec<usize>> {
        let dim = self.dim();
        descriptors
            .iter()
            .map(|d| {
                if d.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: d.len(),
                    });
                }
                Ok(nearest_center(d, &self.centers).0)
            })
            .collect()
    }
}

/// L1-normalizes in place; an all-zero vector is left untouched.
pub fn l1_normalize(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter_mut().for_each(|x| *x /= sum);
    }
}

/// Occurrence histogram of nearest codewords, L1-normalized. An empty set
/// gives the zero histogram.
pub fn quantize(descriptors: &DescriptorSet, book: &Codebook) -> Result<Vec<f64>> {
    quantize_embedded(&descriptors.embedded(), book)
}

pub fn quantize_embedded(descriptors: &[Vec<f64>], book: &Codebook) -> Result<Vec<f64>> {
    let mut hist = vec![0.0; book.n()];
    for j in book.assign(descriptors)? {
        hist[j] += 1.0;
    }
    l1_normalize(&mut hist);
    Ok(hist)
}

/// Occurrence histogram followed by the weighted, L1-normalized HOG block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HistogramRecord", into = "HistogramRecord")]
pub struct CombinedHistogram {
    values: Vec<f64>,
    block_boundary: usize,
    hog_weight: f64,
}

impl CombinedHistogram {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bow(&self) -> &[f64] {
        &self.values[..self.block_boundary]
    }

    pub fn hog(&self) -> &[f64] {
        &self.values[self.block_boundary..]
    }

    pub fn block_boundary(&self) -> usize {
        self.block_boundary
    }

    pub fn hog_weight(&self) -> f64 {
        self.hog_weight
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Appends `hog` (L1-normalized, then scaled by `hog_weight`) after `bow`.
/// The bow block is copied unchanged. Pass an empty `hog` for ORB-only.
pub fn fuse(bow: &[f64], hog: &[f64], hog_weight: f64) -> Result<CombinedHistogram> {
    if !(hog_weight > 0.0 && hog_weight.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "hog_weight must be > 0, got {hog_weight}"
        )));
    }
    if bow.iter().chain(hog).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidConfig(
            "histogram entries must be finite and >= 0".into(),
        ));
    }
    let mut block = hog.to_vec();
    l1_normalize(&mut block);
    let mut values = Vec::with_capacity(bow.len() + block.len());
    values.extend_from_slice(bow);
    values.extend(block.iter().map(|v| v * hog_weight));
    Ok(CombinedHistogram {
        values,
        block_boundary: bow.len(),
        hog_weight,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistogramRecord {
    #[serde(serialize_with = "crate::json::f64_fixed")]
    hog_weight: f64,
    #[serde(serialize_with = "crate::json::vec_f64_fixed")]
    bow: Vec<f64>,
    #[serde(serialize_with = "crate::json::vec_f64_fixed")]
    hog: Vec<f64>,
}

impl From<CombinedHistogram> for HistogramRecord {
    fn from(h: CombinedHistogram) -> Self {
        HistogramRecord {
            hog_weight: h.hog_weight,
            bow: h.bow().to_vec(),
            hog: h.hog().to_vec(),
        }
    }
}

impl TryFrom<HistogramRecord> for CombinedHistogram {
    type Error = Error;

    fn try_from(r: HistogramRecord) -> Result<Self> {
        if !(r.hog_weight > 0.0 && r.hog_weight.is_finite()) {
            return Err(Error::CorruptCodebook("hog_weight must be > 0".into()));
        }
        if r.bow
            .iter()
            .chain(&r.hog)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::CorruptCodebook(
                "histogram entries must be finite and >= 0".into(),
            ));
        }
        let block_boundary = r.bow.len();
        let mut values = r.bow;
        values.extend(r.hog);
        Ok(CombinedHistogram {
            values,
            block_boundary,
            hog_weight: r.hog_weight,
        })
    }
}

/// Cluster occupancy for one candidate `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occupancy {
    pub n: usize,
    pub counts: Vec<usize>,
    /// Clusters that are empty or hold more than twice the uniform share.
    pub empty_or_overloaded: usize,
    #[serde(serialize_with = "crate::json::f64_fixed")]
    pub fraction: f64,
    #[serde(serialize_with = "crate::json::f64_fixed")]
    pub inertia: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuggestReport {
    pub candidates: Vec<Occupancy>,
    /// Candidate `n` values that could not be trained.
    pub skipped: Vec<usize>,
    /// Smallest `n` among those with the lowest empty-or-overloaded fraction.
    pub flagged: Option<usize>,
}

/// Sweeps `ns`, training one codebook each and reporting how evenly the
/// descriptors spread over the clusters. Nothing is applied automatically.
pub fn suggest_n(
    descriptors: &[Vec<f64>],
    ns: &[usize],
    seed: u64,
    metric: ClusterMetric,
) -> Result<SuggestReport> {
    let mut candidates = Vec::new();
    let mut skipped = Vec::new();
    for &n in ns {
        let fit = match train_kmeans(descriptors, n, seed, metric) {
            Ok(fit) => fit,
            Err(Error::TooFewDescriptors { .. }) => {
                skipped.push(n);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut counts = vec![0usize; n];
        for &a in &fit.assignments {
            counts[a] += 1;
        }
        let share = descriptors.len() as f64 / n as f64;
        let bad = counts
            .iter()
            .filter(|&&c| c == 0 || c as f64 > 2.0 * share)
            .count();
        candidates.push(Occupancy {
            n,
            counts,
            empty_or_overloaded: bad,
            fraction: bad as f64 / n as f64,
            inertia: fit.inertia(),
        });
    }
    let flagged = candidates
        .iter()
        .min_by(|a, b| a.fraction.total_cmp(&b.fraction).then(a.n.cmp(&b.n)))
        .map(|o| o.n);
    Ok(SuggestReport {
        candidates,
        skipped,
        flagged,
    })
}
