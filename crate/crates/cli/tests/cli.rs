use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use winbow::cloud_prep::{add_noise, NoiseConfig};
use winbow::eval::metrics_from_csv;
use winbow::io::save_cloud;
use winbow::model_ingest::to_obj_string;
use winbow::pipeline::{sample_model, PipelineConfig};
use winbow::synthetic::window_library;

fn winbow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_winbow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Writes the four synthetic OBJ models to `dir/models` and one noisy scan
/// per model; returns (models dir, scans in library order).
fn fixture(dir: &Path) -> (PathBuf, Vec<PathBuf>) {
    let models = dir.join("models");
    fs::create_dir_all(&models).unwrap();
    let cfg = PipelineConfig::default();
    let mut scans = Vec::new();
    for (i, (id, mesh)) in window_library().unwrap().into_iter().enumerate() {
        fs::write(models.join(format!("{id}.obj")), to_obj_string(&mesh)).unwrap();
        let cloud = sample_model(&mesh, &id, &cfg).unwrap();
        let noisy = add_noise(
            &cloud,
            &NoiseConfig {
                sigma: 0.0,
                seed: i as u64,
            },
        )
        .unwrap();
        let path = dir.join(format!(
            "scan_{id}.{}",
            if i % 2 == 0 { "xyz" } else { "ply" }
        ));
        save_cloud(&path, &noisy).unwrap();
        scans.push(path);
    }
    (models, scans)
}

#[test]
fn train_match_and_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let (models, scans) = fixture(tmp.path());
    let bundle = tmp.path().join("bundle.json");

    let out = winbow(&["train", &s(&models), "-o", &s(&bundle)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let ids: Vec<String> = stdout(&out)
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["arched", "octagon", "rectangle", "rectangle_bars"]);

    // one unreadable target: a failure row in place, exit 0
    let broken = tmp.path().join("broken.xyz");
    fs::write(&broken, "1 2\n").unwrap();
    let stages = tmp.path().join("stages");
    let mut args = vec![
        "match".to_string(),
        "-b".into(),
        s(&bundle),
        "--dump-stages".into(),
        s(&stages),
    ];
    args.push(s(&scans[1]));
    args.push(s(&broken));
    args.push(s(&scans[0]));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = winbow(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows: Vec<serde_json::Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["target"], s(&scans[1]));
    assert_eq!(rows[0]["best"], "rectangle_bars");
    assert_eq!(rows[0]["ranking"].as_array().unwrap().len(), 4);
    assert_eq!(rows[1]["target"], s(&broken));
    assert!(rows[1]["error"].as_str().unwrap().contains("broken.xyz"));
    assert_eq!(rows[2]["best"], "rectangle");
    let dumped = stages.join("scan_rectangle");
    assert!(dumped.join("0_projected.png").is_file());
    assert!(fs::read_dir(&dumped).unwrap().count() >= 3);

    // nothing matchable: exit 1
    let out = winbow(&["match", "-b", &s(&bundle), &s(&broken)]);
    assert_eq!(out.status.code(), Some(1));

    // distance may change, descriptor settings may not
    let out = winbow(&[
        "match",
        "-b",
        &s(&bundle),
        "--distance",
        "jsd",
        &s(&scans[2]),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = winbow(&[
        "match",
        "-b",
        &s(&bundle),
        "--features",
        "orb",
        &s(&scans[2]),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("retrain"));

    // labelled evaluation, paths relative to the label file
    let labels = tmp.path().join("labels.csv");
    let mut text = String::from("filename,label\n");
    for (scan, id) in scans
        .iter()
        .zip(["rectangle", "rectangle_bars", "arched", "octagon"])
    {
        text.push_str(&format!(
            "{},{id}\n",
            scan.file_name().unwrap().to_string_lossy()
        ));
    }
    fs::write(&labels, &text).unwrap();
    let csv_path = tmp.path().join("metrics.csv");
    let json_path = tmp.path().join("metrics.json");
    let out = winbow(&[
        "evaluate",
        "-b",
        &s(&bundle),
        "--labels",
        &s(&labels),
        "--report-csv",
        &s(&csv_path),
        "--report-json",
        &s(&json_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let reports = metrics_from_csv(&fs::read_to_string(&csv_path).unwrap()).unwrap();
    assert_eq!(reports[0].overall_accuracy, 1.0);
    assert_eq!(reports[0].kappa, Some(1.0));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(json["levels"][0]["confusion"]["counts"][0][0], 1);

    // a subset of targets
    let out = winbow(&[
        "evaluate",
        "-b",
        &s(&bundle),
        "--labels",
        &s(&labels),
        &s(&scans[3]),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("config,class,PA,UA\n"));

    // unlabelled target
    let out = winbow(&[
        "evaluate",
        "-b",
        &s(&bundle),
        "--labels",
        &s(&labels),
        &s(&broken),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("has no label"), "{}", stderr(&out));

    // label file naming a missing file
    fs::write(&labels, format!("{text}ghost.xyz,arched\n")).unwrap();
    let out = winbow(&["evaluate", "-b", &s(&bundle), "--labels", &s(&labels)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ghost.xyz"), "{}", stderr(&out));

    // label that is not a model
    fs::write(
        &labels,
        format!(
            "{}, door\n",
            scans[0].file_name().unwrap().to_string_lossy()
        ),
    )
    .unwrap();
    let out = winbow(&["evaluate", "-b", &s(&bundle), "--labels", &s(&labels)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("door"));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = s(&tmp.path().join("b.json"));

    let out = winbow(&["train", &s(tmp.path()), "-o", &bundle]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no models found"));

    let out = winbow(&[
        "train",
        &s(tmp.path()),
        "-o",
        &bundle,
        "--distance",
        "cosine",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = winbow(&["train", &s(tmp.path()), "-o", &bundle, "--jobs", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let config = tmp.path().join("bad.toml");
    fs::write(&config, "master_seed = 1\n\n[codebook]\nn = \"many\"\n").unwrap();
    let out = winbow(&[
        "train",
        &s(tmp.path()),
        "-o",
        &bundle,
        "--config",
        &s(&config),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    let out = winbow(&["match", "-b", &bundle]);
    assert_eq!(out.status.code(), Some(2));

    let out = winbow(&["evaluate", "--synthetic", "--labels", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));

    let out = winbow(&["evaluate", "--synthetic", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_bundle_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = winbow(&["match", "-b", &s(&tmp.path().join("none.json")), "x.xyz"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("none.json"));
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let (models, scans) = fixture(tmp.path());
    let config = tmp.path().join("winbow.toml");
    fs::write(
        &config,
        "master_seed = 5\n\n[codebook]\nn = 12\n\n[features]\nkind = \"orb\"\n",
    )
    .unwrap();
    let bundle = tmp.path().join("bundle.json");
    let out = winbow(&[
        "train",
        &s(&models),
        "-o",
        &s(&bundle),
        "--config",
        &s(&config),
        "--clusters",
        "10",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let saved = winbow::pipeline::Bundle::load(&bundle).unwrap();
    assert_eq!(saved.config.master_seed, 5);
    assert_eq!(saved.codebook.n(), 10);
    assert_eq!(
        saved.config.features.kind,
        winbow::features::FeatureKind::Orb
    );

    // the same file at match time is consistent with the bundle except for n
    let out = winbow(&[
        "match",
        "-b",
        &s(&bundle),
        "--config",
        &s(&config),
        &s(&scans[0]),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = winbow(&[
        "match",
        "-b",
        &s(&bundle),
        "--config",
        &s(&config),
        "--clusters",
        "10",
        &s(&scans[0]),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn suggest_n_reports_every_size() {
    let tmp = tempfile::tempdir().unwrap();
    let (models, _) = fixture(tmp.path());
    let out = winbow(&["suggest-n", &s(&models), "--sizes", "4,8", "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let ns: Vec<u64> = report["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["n"].as_u64().unwrap())
        .collect();
    assert_eq!(ns, [4, 8]);
    assert!(report["flagged"].is_u64());

    let out = winbow(&["suggest-n", &s(&models), "--sizes", "4"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("fraction"));
}
