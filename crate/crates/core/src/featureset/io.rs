use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{category_id, vocabulary, Dataset, FeatureRow, FEATURE_NAMES, N_FEATURES};
use crate::error::{Error, Result};

const TRAILER: [&str; 4] = ["sa_label", "participant_id", "drive_id", "window_index"];

fn header() -> Vec<&'static str> {
    FEATURE_NAMES.iter().copied().chain(TRAILER).collect()
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
        return Err(Error::Schema(format!("identifier `{id}` cannot be written to CSV")));
    }
    Ok(())
}

/// CSV text of a dataset. Missing values are empty fields; categorical
/// features are written as their labels; reals use the shortest
/// representation that parses back to the same value.
pub fn write_dataset(d: &Dataset) -> Result<String> {
    let mut out = header().join(",");
    out.push('\n');
    for r in &d.rows {
        check_id(&r.participant_id)?;
        check_id(&r.drive_id)?;
        for (j, v) in r.values.iter().enumerate() {
            match (v, vocabulary(j)) {
                (None, _) => {}
                (Some(v), Some(vocab)) => out.push_str(vocab[*v as usize]),
                (Some(v), None) => {
                    let _ = write!(out, "{v}");
                }
            }
            out.push(',');
        }
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.sa_label, r.participant_id, r.drive_id, r.window_index
        );
    }
    Ok(out)
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, write_dataset(d)?).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text).map_err(|e| match e {
        Error::Malformed { reason, .. } => Error::malformed(path, reason),
        other => other,
    })
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| Error::malformed("<dataset>", e))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected = header();
    if found != expected {
        return Err(Error::Schema(format!(
            "dataset header has {} columns {:?}, expected {} columns {:?}",
            found.len(),
            found,
            expected.len(),
            expected
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::malformed("<dataset>", e))?;
        let bad = |what: String| Error::malformed("<dataset>", format!("line {line}: {what}"));
        let mut values = [None; N_FEATURES];
        for (j, slot) in values.iter_mut().enumerate() {
            let field = &rec[j];
            if field.is_empty() {
                continue;
            }
            *slot = Some(if vocabulary(j).is_some() {
                category_id(j, field)?
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| bad(format!("`{field}` is not a number in {}", FEATURE_NAMES[j])))?;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite {}", FEATURE_NAMES[j])));
                }
                v
            });
        }
        let sa_label: u8 = rec[N_FEATURES]
            .parse()
            .ok()
            .filter(|l| *l <= 3)
            .ok_or_else(|| bad(format!("SA label `{}` outside 0..=3", &rec[N_FEATURES])))?;
        let window_index: usize = rec[N_FEATURES + 3]
            .parse()
            .map_err(|_| bad(format!("window index `{}`", &rec[N_FEATURES + 3])))?;
        rows.push(FeatureRow {
            participant_id: rec[N_FEATURES + 1].to_string(),
            drive_id: rec[N_FEATURES + 2].to_string(),
            window_index,
            values,
            sa_label,
        });
    }
    Ok(Dataset { rows })
}
