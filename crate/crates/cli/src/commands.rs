use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use winbow::codebook::{suggest_n as sweep_sizes, SUGGEST_RANGE};
use winbow::eval::{
    level_label, metrics_to_csv, parse_labels, run_noise_experiment, ConfusionMatrix,
    EvaluationReport, LevelReport, MetricsReport, NoiseExperiment,
};
use winbow::io::load_cloud;
use winbow::matching::{DistanceKind, MatchResult, RankedModel};
use winbow::model_ingest::load_mesh;
use winbow::pipeline::{
    extract_library_features, kmeans_seed, sample_model, train_library_from_features, Bundle,
    CloudFeatures, PipelineConfig,
};
use winbow::synthetic::window_library;
use winbow::PointCloud;

use crate::args::{EvaluateArgs, MatchArgs, PipelineFlags, SuggestArgs, TrainArgs};
use crate::{CliError, CliResult};

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_flag<T>(value: &Option<String>) -> CliResult<Option<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value
        .as_deref()
        .map(|v| v.parse::<T>().map_err(usage))
        .transpose()
}

fn apply_flags(cfg: &mut PipelineConfig, flags: &PipelineFlags) -> CliResult<()> {
    if let Some(seed) = flags.seed {
        cfg.master_seed = seed;
    }
    if let Some(d) = parse_flag(&flags.distance)? {
        cfg.matching.distance = d;
    }
    if let Some(k) = parse_flag(&flags.features)? {
        cfg.features.kind = k;
    }
    if flags.dense {
        cfg.features.dense = true;
    }
    if let Some(s) = flags.stride {
        cfg.features.stride = s;
    }
    if let Some(s) = parse_flag(&flags.feature_stage)? {
        cfg.raster.feature_stage = s;
    }
    if let Some(w) = flags.hog_weight {
        cfg.codebook.hog_weight = w;
    }
    if let Some(n) = flags.clusters {
        cfg.codebook.n = n;
    }
    if let Some(m) = parse_flag(&flags.metric)? {
        cfg.codebook.metric = m;
    }
    cfg.validate().map_err(usage)
}

fn init_jobs(flags: &PipelineFlags) -> CliResult<()> {
    if let Some(n) = flags.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

/// Configuration from `--config` (or defaults) with flag overrides.
fn config_from_flags(flags: &PipelineFlags) -> CliResult<PipelineConfig> {
    init_jobs(flags)?;
    let mut cfg = match &flags.config {
        Some(path) => PipelineConfig::load(path).map_err(usage)?,
        None => PipelineConfig::default(),
    };
    apply_flags(&mut cfg, flags)?;
    Ok(cfg)
}

/// Matching distance for a bundle. Flags and `--config` may only change
/// settings that leave the trained descriptors and histograms valid.
fn distance_for_bundle(bundle: &Bundle, flags: &PipelineFlags) -> CliResult<DistanceKind> {
    init_jobs(flags)?;
    let mut cfg = match &flags.config {
        Some(path) => PipelineConfig::load(path).map_err(usage)?,
        None => bundle.config.clone(),
    };
    apply_flags(&mut cfg, flags)?;
    let trained = &bundle.config;
    if cfg.fingerprint() != trained.fingerprint()
        || cfg.codebook.n != trained.codebook.n
        || cfg.codebook.hog_weight != trained.codebook.hog_weight
    {
        return Err(CliError::Usage(
            "feature or codebook settings differ from the ones the bundle was trained with; \
             retrain or drop the conflicting options"
                .into(),
        ));
    }
    Ok(cfg.matching.distance)
}

fn load_bundle(path: &Path) -> CliResult<Bundle> {
    Bundle::load(path).map_err(|e| CliError::Runtime(format!("bundle {}: {e}", path.display())))
}

/// `*.obj` files of `dir`, sorted by path.
fn discover_models(dir: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("obj")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "no models found in {}",
            dir.display()
        )));
    }
    Ok(paths.into_iter().map(|p| (stem(&p), p)).collect())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn sample_models(
    models: &[(String, PathBuf)],
    cfg: &PipelineConfig,
) -> CliResult<Vec<(String, PointCloud)>> {
    let clouds = models
        .par_iter()
        .map(|(id, path)| {
            let mesh = load_mesh(path)?;
            sample_model(&mesh, id, cfg).map_err(|e| e.context(path.display().to_string()))
        })
        .collect::<winbow::Result<Vec<_>>>()?;
    Ok(models
        .iter()
        .map(|(id, _)| id.clone())
        .zip(clouds)
        .collect())
}

fn dump_stages(dir: &Path, name: &str, features: &CloudFeatures) -> CliResult<()> {
    let out = dir.join(name);
    fs::create_dir_all(&out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    for (i, (stage, img)) in features.stages.iter().enumerate() {
        img.write_png(&out.join(format!("{i}_{stage}.png")))?;
    }
    Ok(())
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))
        }
    }
}

fn train_bundle(
    models: &[(String, PointCloud)],
    cfg: &PipelineConfig,
    dump: Option<&Path>,
) -> CliResult<Bundle> {
    let features = extract_library_features(models, cfg)?;
    if let Some(dir) = dump {
        for ((id, _), f) in models.iter().zip(&features) {
            dump_stages(dir, id, f)?;
        }
    }
    let ids: Vec<String> = models.iter().map(|(id, _)| id.clone()).collect();
    let bundle = train_library_from_features(&ids, &features, cfg)?;
    log::info!(
        "trained codebook {} on {} models",
        bundle.codebook.checksum(),
        ids.len()
    );
    Ok(bundle)
}

pub fn train(args: TrainArgs) -> CliResult<()> {
    let cfg = config_from_flags(&args.pipeline)?;
    let models = discover_models(&args.model_dir)?;
    let clouds = sample_models(&models, &cfg)?;
    let bundle = train_bundle(&clouds, &cfg, args.dump_stages.as_deref())?;
    bundle.save(&args.output)?;
    let mut table = String::new();
    for entry in &bundle.library {
        table.push_str(&format!("{}\t{}\n", entry.model_id, entry.descriptor_count));
    }
    write_output(None, &table)?;
    eprintln!(
        "wrote {} ({} models, codebook n={})",
        args.output.display(),
        bundle.library.len(),
        bundle.codebook.n()
    );
    Ok(())
}

#[derive(Serialize)]
struct MatchRow<'a> {
    target: String,
    best: &'a str,
    ranking: &'a [RankedModel],
}

#[derive(Serialize)]
struct FailureRow {
    target: String,
    error: String,
}

fn match_one(
    bundle: &Bundle,
    path: &Path,
    distance: DistanceKind,
) -> winbow::Result<(MatchResult, CloudFeatures)> {
    let cloud = load_cloud(path)?;
    bundle
        .match_cloud(&cloud, distance)
        .map_err(|e| e.context(path.display().to_string()))
}

pub fn match_targets(args: MatchArgs) -> CliResult<()> {
    let bundle = load_bundle(&args.bundle)?;
    let distance = distance_for_bundle(&bundle, &args.pipeline)?;
    let results: Vec<_> = args
        .targets
        .par_iter()
        .map(|t| match_one(&bundle, t, distance))
        .collect();

    let mut lines = String::new();
    let mut matched = 0usize;
    for (target, result) in args.targets.iter().zip(&results) {
        let name = target.display().to_string();
        let line = match result {
            Ok((m, features)) => {
                matched += 1;
                if let Some(dir) = &args.dump_stages {
                    dump_stages(dir, &stem(target), features)?;
                }
                serde_json::to_string(&MatchRow {
                    target: name,
                    best: &m.best,
                    ranking: &m.ranking,
                })
            }
            Err(e) => {
                eprintln!("warning: {e}");
                serde_json::to_string(&FailureRow {
                    target: name,
                    error: e.to_string(),
                })
            }
        };
        lines.push_str(&line.expect("rows serialize"));
        lines.push('\n');
    }
    write_output(args.output.as_deref(), &lines)?;
    if matched == 0 {
        return Err(CliError::Runtime("no target could be matched".into()));
    }
    Ok(())
}

fn write_reports(args: &EvaluateArgs, levels: Vec<LevelReport>) -> CliResult<()> {
    let metrics: Vec<MetricsReport> = levels.iter().map(|l| l.metrics.clone()).collect();
    for m in &metrics {
        let kappa = m
            .kappa
            .map_or_else(|| "n/a".to_string(), |k| format!("{k:.4}"));
        eprintln!("{}: OA {:.4}, kappa {kappa}", m.config, m.overall_accuracy);
    }
    write_output(args.report_csv.as_deref(), &metrics_to_csv(&metrics))?;
    if let Some(path) = &args.report_json {
        write_output(Some(path), &EvaluationReport { levels }.to_json())?;
    }
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> CliResult<()> {
    if args.synthetic {
        return evaluate_synthetic(&args);
    }
    let (Some(bundle_path), Some(labels_path)) = (&args.bundle, &args.labels) else {
        return Err(CliError::Usage(
            "--bundle and --labels are required without --synthetic".into(),
        ));
    };
    let bundle = load_bundle(bundle_path)?;
    let distance = distance_for_bundle(&bundle, &args.pipeline)?;
    let labelled = labelled_targets(labels_path, &args.targets, &bundle)?;

    let results: Vec<_> = labelled
        .par_iter()
        .map(|(path, _)| match_one(&bundle, path, distance))
        .collect();
    let mut cm = ConfusionMatrix::new(bundle.model_ids())?;
    for ((path, label), result) in labelled.iter().zip(results) {
        let (m, features) = result?;
        if let Some(dir) = &args.dump_stages {
            dump_stages(dir, &stem(path), &features)?;
        }
        cm.accumulate(label, &m.best)?;
    }
    let f = &bundle.config.features;
    let dense = if f.dense { " dense" } else { "" };
    let metrics = MetricsReport::from_matrix(format!("{}{dense} {distance}", f.kind.name()), &cm)?;
    write_reports(
        &args,
        vec![LevelReport {
            metrics,
            confusion: cm,
        }],
    )
}

/// Resolves the label file against its own directory and selects the
/// requested targets (all labelled files when none are given).
fn labelled_targets(
    labels_path: &Path,
    targets: &[PathBuf],
    bundle: &Bundle,
) -> CliResult<Vec<(PathBuf, String)>> {
    let text = fs::read_to_string(labels_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", labels_path.display())))?;
    let rows = parse_labels(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", labels_path.display())))?;
    let base = labels_path.parent().unwrap_or(Path::new(""));
    let classes = bundle.model_ids();
    let mut entries = Vec::with_capacity(rows.len());
    for (file, label) in rows {
        let path = base.join(&file);
        if !classes.contains(&label) {
            return Err(CliError::Usage(format!(
                "label `{label}` of {file} is not a model in the bundle"
            )));
        }
        if !path.is_file() {
            return Err(CliError::Usage(format!(
                "{file} is listed in {} but does not exist",
                labels_path.display()
            )));
        }
        entries.push((path, label));
    }
    if targets.is_empty() {
        return Ok(entries);
    }
    let canonical = |p: &Path| {
        p.canonicalize()
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
    };
    let keys = entries
        .iter()
        .map(|(p, _)| canonical(p))
        .collect::<CliResult<Vec<_>>>()?;
    targets
        .iter()
        .map(|t| {
            let key = canonical(t)?;
            keys.iter()
                .position(|k| *k == key)
                .map(|i| (t.clone(), entries[i].1.clone()))
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "{} has no label in {}",
                        t.display(),
                        labels_path.display()
                    ))
                })
        })
        .collect()
}

fn evaluate_synthetic(args: &EvaluateArgs) -> CliResult<()> {
    let cfg = config_from_flags(&args.pipeline)?;
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be >= 1".into()));
    }
    if let Some(s) = args.sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(CliError::Usage(format!("sigma must be >= 0, got {s}")));
    }
    let meshes = window_library()?;
    let clouds = meshes
        .iter()
        .map(|(id, mesh)| sample_model(mesh, id, &cfg))
        .collect::<winbow::Result<Vec<_>>>()?;
    let models: Vec<(String, PointCloud)> = meshes
        .iter()
        .map(|(id, _)| id.clone())
        .zip(clouds)
        .collect();
    let bundle = train_bundle(&models, &cfg, args.dump_stages.as_deref())?;
    let exp = NoiseExperiment {
        sigmas: args.sigmas.clone(),
        trials: args.trials,
        distance: cfg.matching.distance,
    };
    let levels = run_noise_experiment(&bundle, &meshes, &exp)?
        .into_iter()
        .map(|r| {
            debug_assert_eq!(r.metrics.config, level_label(&bundle, r.sigma));
            LevelReport {
                metrics: r.metrics,
                confusion: r.confusion,
            }
        })
        .collect();
    write_reports(args, levels)
}

pub fn suggest_n(args: SuggestArgs) -> CliResult<()> {
    let cfg = config_from_flags(&args.pipeline)?;
    let sizes = args.sizes.clone().unwrap_or_else(|| SUGGEST_RANGE.to_vec());
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::Usage(
            "--sizes must list positive cluster counts".into(),
        ));
    }
    let models = discover_models(&args.model_dir)?;
    let clouds = sample_models(&models, &cfg)?;
    let features = extract_library_features(&clouds, &cfg)?;
    let pooled: Vec<Vec<f64>> = features
        .iter()
        .flat_map(|f| f.descriptors.embedded())
        .collect();
    let report = sweep_sizes(&pooled, &sizes, kmeans_seed(&cfg), cfg.codebook.metric)?;

    let text = if args.json {
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    } else {
        let mut s = format!(
            "{} descriptors\n{:>4}  {:>6}  {:>8}  {:>14}\n",
            pooled.len(),
            "n",
            "bad",
            "fraction",
            "inertia"
        );
        for c in &report.candidates {
            let mark = if report.flagged == Some(c.n) {
                "  *"
            } else {
                ""
            };
            s.push_str(&format!(
                "{:>4}  {:>6}  {:>8.3}  {:>14.2}{mark}\n",
                c.n, c.empty_or_overloaded, c.fraction, c.inertia
            ));
        }
        if !report.skipped.is_empty() {
            let list: Vec<String> = report.skipped.iter().map(|n| n.to_string()).collect();
            s.push_str(&format!(
                "skipped (too few distinct descriptors): {}\n",
                list.join(",")
            ));
        }
        s
    };
    write_output(None, &text)
}
