use serde::Serialize;

use super::{ClassAccuracy, ConfusionMatrix, MetricsReport};
use crate::error::{Error, Result};
use crate::json::format_f64;

pub const NOT_AVAILABLE: &str = "n/a";
const HEADER: [&str; 4] = ["config", "class", "PA", "UA"];

/// Full JSON report: metrics plus the matrix each was computed from.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub levels: Vec<LevelReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NOT_AVAILABLE.to_string(), format_f64)
}

/// CSV with one row per class (`config,class,PA,UA`) followed by `OA`,
/// `kappa` and `RM` summary rows whose value sits in the PA column and
/// whose UA column is empty.
pub fn metrics_to_csv(reports: &[MetricsReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in reports {
        for c in &r.classes {
            w.write_record([
                r.config.as_str(),
                &c.class,
                &opt(c.producers),
                &opt(c.users),
            ])
            .expect("in-memory write");
        }
        for (name, value) in [
            ("OA", Some(r.overall_accuracy)),
            ("kappa", r.kappa),
            ("RM", Some(r.random_match)),
        ] {
            w.write_record([r.config.as_str(), name, &opt(value), ""])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field == NOT_AVAILABLE {
        return Ok(None);
    }
    let v: f64 = field.parse().map_err(|_| {
        Error::parse(
            line,
            format!("`{field}` is not a number or {NOT_AVAILABLE}"),
        )
    })?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("`{field}` is not finite")));
    }
    Ok(Some(v))
}

/// Inverse of [`metrics_to_csv`].
pub fn metrics_from_csv(text: &str) -> Result<Vec<MetricsReport>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(Error::parse(
            1,
            format!("expected header {}", HEADER.join(",")),
        ));
    }
    let mut out: Vec<MetricsReport> = Vec::new();
    let mut classes: Vec<ClassAccuracy> = Vec::new();
    let mut summary: Vec<Option<f64>> = Vec::new();
    let mut current: Option<String> = None;
    for (k, rec) in rd.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != 4 {
            return Err(Error::parse(line, "expected 4 fields"));
        }
        let (config, name, pa, ua) = (&rec[0], &rec[1], &rec[2], &rec[3]);
        if current.as_deref() != Some(config) {
            if current.is_some() {
                return Err(Error::parse(
                    line,
                    "config block ended before its summary rows",
                ));
            }
            current = Some(config.to_string());
        }
        if !ua.is_empty() {
            if !summary.is_empty() {
                return Err(Error::parse(line, "class row after summary rows"));
            }
            classes.push(ClassAccuracy {
                class: name.to_string(),
                producers: parse_opt(pa, line)?,
                users: parse_opt(ua, line)?,
            });
            continue;
        }
        let expected = ["OA", "kappa", "RM"][summary.len()];
        if name != expected {
            return Err(Error::parse(
                line,
                format!("expected summary row `{expected}`, found `{name}`"),
            ));
        }
        summary.push(parse_opt(pa, line)?);
        if summary.len() == 3 {
            let (Some(oa), Some(rm)) = (summary[0], summary[2]) else {
                return Err(Error::parse(line, "OA and RM must be numbers"));
            };
            out.push(MetricsReport {
                config: current.take().expect("set above"),
                overall_accuracy: oa,
                kappa: summary[1],
                random_match: rm,
                classes: std::mem::take(&mut classes),
            });
            summary.clear();
        }
    }
    if current.is_some() {
        return Err(Error::parse(0, "truncated report: missing summary rows"));
    }
    Ok(out)
}
