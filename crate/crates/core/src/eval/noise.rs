use rayon::prelude::*;

use super::{ConfusionMatrix, MetricsReport};
use crate::cloud_prep::{add_noise, NoiseConfig};
use crate::error::{Error, Result};
use crate::matching::DistanceKind;
use crate::model_ingest::TriangleMesh;
use crate::pipeline::{derive_seed, id_hash, sample_model, Bundle, NOISE_STREAM};

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseExperiment {
    /// Noise std as fractions of each cloud's bounding-box diagonal.
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub distance: DistanceKind,
}

#[derive(Debug, Clone)]
pub struct NoiseLevelResult {
    pub sigma: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

/// Label used for one noise level in reports.
pub fn level_label(bundle: &Bundle, sigma: f64) -> String {
    let f = &bundle.config.features;
    let dense = if f.dense { " dense" } else { "" };
    format!("{}{dense} sigma={sigma}", f.kind.name())
}

/// For every sigma and trial, samples each model exactly as library training
/// did, perturbs it with noise seeded by (sigma, trial, model), runs the full
/// pipeline and matches it against the noise-free library. Trials run in
/// parallel; each fills a private matrix and the matrices are merged in
/// trial order.
pub fn run_noise_experiment(
    bundle: &Bundle,
    models: &[(String, TriangleMesh)],
    exp: &NoiseExperiment,
) -> Result<Vec<NoiseLevelResult>> {
    if exp.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if let Some(s) = exp.sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {s}")));
    }
    let classes = bundle.model_ids();
    for (id, _) in models {
        if !classes.contains(id) {
            return Err(Error::UnknownClass(id.clone()));
        }
    }
    let cfg = &bundle.config;
    let library = bundle.library_pairs();
    let clouds = models
        .iter()
        .map(|(id, mesh)| sample_model(mesh, id, cfg).map_err(|e| e.context(format!("model {id}"))))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..exp.sigmas.len())
        .flat_map(|s| (0..exp.trials).map(move |t| (s, t)))
        .collect();
    let matrices = jobs
        .par_iter()
        .map(|&(si, trial)| {
            let sigma = exp.sigmas[si];
            let mut cm = ConfusionMatrix::new(classes.clone())?;
            for ((id, _), cloud) in models.iter().zip(&clouds) {
                let annotate =
                    |e: Error| e.context(format!("model {id}, sigma {sigma}, trial {trial}"));
                let noise = NoiseConfig {
                    sigma,
                    seed: derive_seed(
                        cfg.master_seed,
                        &[NOISE_STREAM, sigma.to_bits(), trial as u64, id_hash(id)],
                    ),
                };
                let noisy = add_noise(cloud, &noise).map_err(annotate)?;
                let features = crate::pipeline::extract_features(&noisy, cfg).map_err(annotate)?;
                let target = bundle.histogram(&features).map_err(annotate)?;
                let result = crate::matching::match_histogram(&target, &library, exp.distance)
                    .map_err(annotate)?;
                cm.accumulate(id, &result.best)?;
            }
            Ok(cm)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(exp.sigmas.len());
    for (si, chunk) in matrices.chunks(exp.trials).enumerate() {
        let mut cm = ConfusionMatrix::new(classes.clone())?;
        for m in chunk {
            cm.merge(m)?;
        }
        let sigma = exp.sigmas[si];
        out.push(NoiseLevelResult {
            sigma,
            metrics: MetricsReport::from_matrix(level_label(bundle, sigma), &cm)?,
            confusion: cm,
        });
    }
    Ok(out)
}
