//! Histogram distances and nearest-model selection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codebook::CombinedHistogram;
use crate::error::{Error, Result};

/// Additive floor for zero denominators in KL.
pub const EPSILON: f64 = 1e-10;
/// Allowed L1 deviation from 1 for inputs to KL and JSD.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DistanceKind {
    Minkowski(f64),
    JensenShannon,
    KullbackLeibler,
    ChiSquare,
    #[default]
    ChiSquareSymmetric,
}

impl DistanceKind {
    /// KL and JSD need probability vectors.
    pub fn needs_normalized(self) -> bool {
        matches!(
            self,
            DistanceKind::JensenShannon | DistanceKind::KullbackLeibler
        )
    }

    pub fn distance(self, p: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            DistanceKind::Minkowski(order) => minkowski(p, q, order),
            DistanceKind::JensenShannon => jensen_shannon(p, q),
            DistanceKind::KullbackLeibler => kl_divergence(p, q),
            DistanceKind::ChiSquare => chi_square(p, q, false),
            DistanceKind::ChiSquareSymmetric => chi_square(p, q, true),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::Minkowski(p) if p.is_infinite() => write!(f, "minkowski:inf"),
            DistanceKind::Minkowski(p) => write!(f, "minkowski:{p}"),
            DistanceKind::JensenShannon => write!(f, "jsd"),
            DistanceKind::KullbackLeibler => write!(f, "kl"),
            DistanceKind::ChiSquare => write!(f, "chi2"),
            DistanceKind::ChiSquareSymmetric => write!(f, "chi2sym"),
        }
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidConfig(format!(
                "unknown distance `{s}` (expected minkowski:P, jsd, kl, chi2 or chi2sym)"
            ))
        };
        match s {
            "jsd" => Ok(DistanceKind::JensenShannon),
            "kl" => Ok(DistanceKind::KullbackLeibler),
            "chi2" => Ok(DistanceKind::ChiSquare),
            "chi2sym" => Ok(DistanceKind::ChiSquareSymmetric),
            _ => {
                let order = s.strip_prefix("minkowski:").ok_or_else(bad)?;
                let p = match order {
                    "inf" => f64::INFINITY,
                    _ => order.parse::<f64>().map_err(|_| bad())?,
                };
                if p.is_nan() || p < 1.0 {
                    return Err(Error::InvalidConfig(format!(
                        "minkowski order must be >= 1, got {order}"
                    )));
                }
                Ok(DistanceKind::Minkowski(p))
            }
        }
    }
}

impl Serialize for DistanceKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistanceKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(())
}

fn check_normalized(v: &[f64]) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE || v.iter().any(|x| *x < 0.0) {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

/// `(sum |q_i - p_i|^p)^(1/p)`, evaluated relative to the largest difference
/// so large orders neither underflow nor overflow. `p = inf` is Chebyshev.
pub fn minkowski(p: &[f64], q: &[f64], order: f64) -> Result<f64> {
    same_len(p, q)?;
    if order.is_nan() || order < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "minkowski order must be >= 1, got {order}"
        )));
    }
    let diffs = p.iter().zip(q).map(|(a, b)| (a - b).abs());
    let max = diffs.clone().fold(0.0, f64::max);
    if max == 0.0 || order.is_infinite() {
        return Ok(max);
    }
    if order == 1.0 {
        return Ok(diffs.sum());
    }
    let s: f64 = diffs.map(|d| (d / max).powf(order)).sum();
    Ok(max * s.powf(1.0 / order))
}

/// `sum P ln(P/Q)`; zero `P` bins contribute nothing, zero `Q` bins are
/// floored at [`EPSILON`].
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    check_normalized(p)?;
    check_normalized(q)?;
    Ok(kl_raw(p, q))
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b.max(EPSILON)).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Symmetrized KL against the mixture `M = (P + Q) / 2`; lies in `[0, ln 2]`.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    check_normalized(p)?;
    check_normalized(q)?;
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok((0.5 * (kl_raw(p, &m) + kl_raw(q, &m))).min(std::f64::consts::LN_2))
}

/// Pearson chi-square with `P` as the reference, skipping bins where the
/// denominator is at most [`EPSILON`]. The symmetric form divides by `P + Q`.
pub fn chi_square(p: &[f64], q: &[f64], symmetric: bool) -> Result<f64> {
    same_len(p, q)?;
    Ok(p.iter()
        .zip(q)
        .filter_map(|(a, b)| {
            let den = if symmetric { a + b } else { *a };
            (den > EPSILON).then(|| (a - b).powi(2) / den)
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedModel {
    pub model_id: String,
    #[serde(serialize_with = "crate::json::f64_fixed")]
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub best: String,
    pub ranking: Vec<RankedModel>,
}

fn unit_mass(v: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return Err(Error::NotNormalized(sum));
    }
    Ok(v.iter().map(|x| x / sum).collect())
}

/// Ranks the library by distance to `target` (ascending, ties by model id).
///
/// Chi-square uses the target as the reference distribution. For KL and JSD
/// the full combined vectors are rescaled to unit mass first, since the HOG
/// block adds `hog_weight` on top of the unit-mass BoW block.
pub fn match_histogram(
    target: &CombinedHistogram,
    library: &[(String, CombinedHistogram)],
    kind: DistanceKind,
) -> Result<MatchResult> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    for (_, h) in library {
        if h.len() != target.len() {
            return Err(Error::DimensionMismatch {
                expected: target.len(),
                got: h.len(),
            });
        }
        if h.block_boundary() != target.block_boundary() {
            return Err(Error::DimensionMismatch {
                expected: target.block_boundary(),
                got: h.block_boundary(),
            });
        }
    }
    let prepare = |h: &CombinedHistogram| -> Result<Vec<f64>> {
        if kind.needs_normalized() {
            unit_mass(h.values())
        } else {
            Ok(h.values().to_vec())
        }
    };
    let t = prepare(target)?;
    let mut ranking = library
        .iter()
        .map(|(id, h)| {
            Ok(RankedModel {
                model_id: id.clone(),
                distance: kind.distance(&t, &prepare(h)?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    Ok(MatchResult {
        best: ranking[0].model_id.clone(),
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{fuse, l1_normalize};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn random_pair(rng: &mut ChaCha8Rng, len: usize) -> (Vec<f64>, Vec<f64>) {
        let mut draw = || {
            let mut v: Vec<f64> = (0..len)
                .map(|_| {
                    if rng.random::<f64>() < 0.2 {
                        0.0
                    } else {
                        rng.random::<f64>()
                    }
                })
                .collect();
            v[0] += 1e-3;
            l1_normalize(&mut v);
            v
        };
        (draw(), draw())
    }

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski(&[0.2, 0.8], &[0.2, 0.8], 3.0).unwrap(), 0.0);
        assert_eq!(minkowski(&[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap(), 2.0);
        assert!((minkowski(&[1.0, 0.0], &[0.0, 1.0], 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        // two equal differences of 0.4: exactly 0.4 * 2^(1/p), tending to max|q - p|
        let d = minkowski(&[0.3, 0.7], &[0.7, 0.3], 64.0).unwrap();
        let cheb = (0.7f64 - 0.3).abs();
        assert!((d - cheb * 2f64.powf(1.0 / 64.0)).abs() < 1e-12, "{d}");
        assert!((d - cheb).abs() < 5e-3, "{d}");
        let d = minkowski(&[0.3, 0.7], &[0.7, 0.3], 512.0).unwrap();
        assert!((d - cheb).abs() < 1e-3, "{d}");
        assert_eq!(
            minkowski(&[0.3, 0.7], &[0.7, 0.3], f64::INFINITY).unwrap(),
            cheb
        );
        assert!(minkowski(&[1.0], &[1.0, 0.0], 2.0).is_err());
        assert!(minkowski(&[1.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.4, 0.6], &[0.4, 0.6]).unwrap(), 0.0);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-12);
        let (p, q) = ([0.9, 0.1], [0.5, 0.5]);
        let pq = kl_divergence(&p, &q).unwrap();
        let qp = kl_divergence(&q, &p).unwrap();
        let pq_direct = 0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln();
        let qp_direct = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((pq - pq_direct).abs() < 1e-12);
        assert!((qp - qp_direct).abs() < 1e-12);
        assert!((pq - qp).abs() > 0.1);
        // Q zero where P is not: floored, finite
        let smoothed = kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        let expect = 0.5 * (0.5f64 / 1.0).ln() + 0.5 * (0.5 / EPSILON).ln();
        assert!((smoothed - expect).abs() < 1e-9);
        assert!(matches!(
            kl_divergence(&[0.5, 0.6], &[0.5, 0.5]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn jsd_examples() {
        assert_eq!(jensen_shannon(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((jensen_shannon(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - LN_2).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (p, q) = random_pair(&mut rng, 12);
            let a = jensen_shannon(&p, &q).unwrap();
            let b = jensen_shannon(&q, &p).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(jensen_shannon(&[2.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square(&[0.5, 0.5], &[0.5, 0.5], false).unwrap(), 0.0);
        assert_eq!(chi_square(&[0.5, 0.5], &[0.5, 0.5], true).unwrap(), 0.0);
        assert!((chi_square(&[0.5, 0.5], &[0.25, 0.75], false).unwrap() - 0.25).abs() < 1e-12);
        // asymmetric form changes under swap on this example
        let swapped = chi_square(&[0.25, 0.75], &[0.5, 0.5], false).unwrap();
        let direct = 0.0625 / 0.25 + 0.0625 / 0.75;
        assert!((swapped - direct).abs() < 1e-12);
        assert!((swapped - 0.25).abs() > 0.05);
        // zero reference bins are skipped
        assert_eq!(chi_square(&[1.0, 0.0], &[0.5, 0.5], false).unwrap(), 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let (p, q) = random_pair(&mut rng, 9);
            let a = chi_square(&p, &q, true).unwrap();
            let b = chi_square(&q, &p, true).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_and_display() {
        for s in [
            "minkowski:1",
            "minkowski:2.5",
            "minkowski:inf",
            "jsd",
            "kl",
            "chi2",
            "chi2sym",
        ] {
            let k: DistanceKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert_eq!(
            "minkowski:2".parse::<DistanceKind>().unwrap(),
            DistanceKind::Minkowski(2.0)
        );
        for bad in ["minkowski:0.5", "minkowski:", "minkowski:nan", "euclid", ""] {
            assert!(bad.parse::<DistanceKind>().is_err(), "{bad}");
        }
    }

    fn hist(bow: &[f64], hog: &[f64]) -> CombinedHistogram {
        fuse(bow, hog, 1.0).unwrap()
    }

    #[test]
    fn exact_copy_ranks_first() {
        let target = hist(&[0.5, 0.25, 0.25], &[1.0, 3.0]);
        let lib = vec![
            ("b".to_string(), hist(&[0.2, 0.4, 0.4], &[1.0, 1.0])),
            ("a".to_string(), target.clone()),
            ("c".to_string(), hist(&[1.0, 0.0, 0.0], &[0.0, 1.0])),
        ];
        for kind in ["minkowski:2", "jsd", "kl", "chi2", "chi2sym"] {
            let r = match_histogram(&target, &lib, kind.parse().unwrap()).unwrap();
            assert_eq!(r.best, "a", "{kind}");
            assert_eq!(r.ranking[0].distance, 0.0, "{kind}");
            assert!(r.ranking.windows(2).all(|w| w[0].distance <= w[1].distance));
        }
    }

    #[test]
    fn single_model_and_empty_library() {
        let t = hist(&[1.0, 0.0], &[]);
        let far = hist(&[0.0, 1.0], &[]);
        let r = match_histogram(&t, &[("only".into(), far)], DistanceKind::JensenShannon).unwrap();
        assert_eq!(r.best, "only");
        assert!(matches!(
            match_histogram(&t, &[], DistanceKind::ChiSquare),
            Err(Error::EmptyLibrary)
        ));
    }

    #[test]
    fn ties_break_by_model_id() {
        let t = hist(&[0.5, 0.5], &[]);
        let same = hist(&[0.25, 0.75], &[]);
        let lib = vec![("zeta".into(), same.clone()), ("alpha".into(), same)];
        let r = match_histogram(&t, &lib, DistanceKind::Minkowski(1.0)).unwrap();
        assert_eq!(r.best, "alpha");
    }

    #[test]
    fn ranking_agrees_with_exhaustive_jsd() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut make = || {
            let (mut b, h) = random_pair(&mut rng, 10);
            l1_normalize(&mut b);
            hist(&b, &h)
        };
        let target = make();
        let lib: Vec<(String, CombinedHistogram)> = ["arched", "bars", "octagon", "rectangle"]
            .iter()
            .map(|id| (id.to_string(), make()))
            .collect();
        let r = match_histogram(&target, &lib, DistanceKind::JensenShannon).unwrap();
        // independent: explicit mixture and logs on unit-mass vectors
        let unit = |h: &CombinedHistogram| {
            let s: f64 = h.values().iter().sum();
            h.values().iter().map(|v| v / s).collect::<Vec<f64>>()
        };
        let jsd = |p: &[f64], q: &[f64]| {
            let mut total = 0.0;
            for i in 0..p.len() {
                let m = (p[i] + q[i]) / 2.0;
                if p[i] > 0.0 {
                    total += 0.5 * p[i] * (p[i] / m).ln();
                }
                if q[i] > 0.0 {
                    total += 0.5 * q[i] * (q[i] / m).ln();
                }
            }
            total
        };
        let t = unit(&target);
        let mut expect: Vec<(f64, String)> = lib
            .iter()
            .map(|(id, h)| (jsd(&t, &unit(h)), id.clone()))
            .collect();
        expect.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (got, (d, id)) in r.ranking.iter().zip(&expect) {
            assert_eq!(&got.model_id, id);
            assert!((got.distance - d).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_library_rejected() {
        let t = hist(&[1.0, 0.0], &[1.0]);
        let lib = vec![("x".into(), hist(&[1.0], &[1.0, 0.0]))];
        assert!(match_histogram(&t, &lib, DistanceKind::ChiSquare).is_err());
    }

    proptest! {
        #[test]
        fn jsd_bounded_and_distances_nonnegative(seed in any::<u64>(), len in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (p, q) = random_pair(&mut rng, len);
            let j = jensen_shannon(&p, &q).unwrap();
            prop_assert!((0.0..=LN_2 + 1e-12).contains(&j));
            for kind in ["minkowski:1", "minkowski:3", "jsd", "kl", "chi2", "chi2sym"] {
                let k: DistanceKind = kind.parse().unwrap();
                prop_assert!(k.distance(&p, &q).unwrap() >= 0.0);
                prop_assert_eq!(k.distance(&p, &p).unwrap(), 0.0);
            }
            let m = minkowski(&p, &q, 2.0).unwrap();
            prop_assert!((m - minkowski(&q, &p, 2.0).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn zero_padding_keeps_ranking(seed in any::<u64>(), pad in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut make = |extra: usize| {
                let (b, mut h) = random_pair(&mut rng, 6);
                h.extend(std::iter::repeat_n(0.0, extra));
                (b, h)
            };
            let raw: Vec<(Vec<f64>, Vec<f64>)> = (0..5).map(|_| make(0)).collect();
            let build = |extra: usize| -> Vec<CombinedHistogram> {
                raw.iter()
                    .map(|(b, h)| {
                        let mut h = h.clone();
                        h.extend(std::iter::repeat_n(0.0, extra));
                        hist(b, &h)
                    })
                    .collect()
            };
            for kind in ["minkowski:2", "jsd", "kl", "chi2", "chi2sym"] {
                let k: DistanceKind = kind.parse().unwrap();
                let order = |hs: Vec<CombinedHistogram>| {
                    let lib: Vec<(String, CombinedHistogram)> =
                        hs[1..].iter().enumerate().map(|(i, h)| (format!("m{i}"), h.clone())).collect();
                    match_histogram(&hs[0], &lib, k).unwrap().ranking.into_iter().map(|r| r.model_id).collect::<Vec<_>>()
                };
                prop_assert_eq!(order(build(0)), order(build(pad)));
            }
        }
    }
}
