use crate::error::{Error, Result};

/// Parses a `filename,label` CSV. A first row reading `filename,label`
/// is treated as a header; blank lines are skipped.
pub fn parse_labels(text: &str) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::parse(
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let (file, label) = (&record[0], &record[1]);
        if i == 0 && file.eq_ignore_ascii_case("filename") && label.eq_ignore_ascii_case("label") {
            continue;
        }
        if file.is_empty() || label.is_empty() {
            return Err(Error::parse(line, "empty filename or label"));
        }
        if out.iter().any(|(f, _)| f == file) {
            return Err(Error::parse(line, format!("duplicate filename `{file}`")));
        }
        out.push((file.to_string(), label.to_string()));
    }
    Ok(out)
}
