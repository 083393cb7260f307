//! Labelled samples as CSV: header `x1,x2,...,label`, one sample per row.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::games::LabeledSample;

/// Samples with dense labels `0..labels.len()`; `labels[k]` is the label
/// text that class `k` had in the file.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub labels: Vec<String>,
}

impl Dataset {
    /// Labels are written as their class index.
    pub fn from_samples(samples: Vec<LabeledSample>) -> Self {
        let n = samples.iter().map(|s| s.label + 1).max().unwrap_or(0);
        Self {
            samples,
            labels: (0..n).map(|k| k.to_string()).collect(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }
}

fn dataset_err(row: usize, msg: impl Into<String>) -> Error {
    Error::Dataset {
        row,
        msg: msg.into(),
    }
}

/// Label order: numeric when every label is an integer, text order otherwise.
fn dense_labels(raw: &[String]) -> Vec<String> {
    let mut unique: Vec<String> = raw
        .iter()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if unique.iter().all(|l| l.parse::<i64>().is_ok()) {
        unique.sort_by_key(|l| l.parse::<i64>().expect("checked above"));
    }
    unique
}

/// Parses CSV text. Rows are numbered from 1 for the header.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(dataset_err(1, "empty file, expected a header")),
        Some(r) => r.map_err(|e| dataset_err(1, e.to_string()))?,
    };
    let width = header.len();
    let expected: Vec<String> = (1..width)
        .map(|k| format!("x{k}"))
        .chain(["label".to_string()])
        .collect();
    if width < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(dataset_err(
            1,
            format!(
                "expected header {}, got {}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (i, record) in records.enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| dataset_err(row, e.to_string()))?;
        if record.len() != width {
            return Err(dataset_err(
                row,
                format!("expected {width} fields, got {}", record.len()),
            ));
        }
        let x = record
            .iter()
            .take(width - 1)
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(dataset_err(row, format!("non-numeric feature {v:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let label = &record[width - 1];
        if label.is_empty() {
            return Err(dataset_err(row, "empty label"));
        }
        features.push(x);
        raw_labels.push(label.to_string());
    }
    if features.is_empty() {
        return Err(dataset_err(2, "no samples"));
    }

    let labels = dense_labels(&raw_labels);
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(k, l)| (l.as_str(), k))
        .collect();
    let samples = features
        .into_iter()
        .zip(&raw_labels)
        .map(|(x, l)| LabeledSample::new(x, index[l.as_str()]))
        .collect();
    Ok(Dataset { samples, labels })
}

pub fn load_dataset_csv(path: &Path) -> Result<Dataset> {
    parse_dataset_csv(&std::fs::read_to_string(path)?)
}

/// Re-expresses `other` in the label indexing of `reference`.
pub fn align_labels(reference: &Dataset, other: Dataset) -> Result<Vec<LabeledSample>> {
    let index: BTreeMap<&str, usize> = reference
        .labels
        .iter()
        .enumerate()
        .map(|(k, l)| (l.as_str(), k))
        .collect();
    other
        .samples
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let text = &other.labels[s.label];
            let label = *index.get(text.as_str()).ok_or_else(|| {
                dataset_err(
                    i + 2,
                    format!("label {text:?} does not occur in the training set"),
                )
            })?;
            if s.features.len() != reference.feature_dim() {
                return Err(dataset_err(
                    i + 2,
                    "feature count differs from the training set",
                ));
            }
            Ok(LabeledSample::new(s.features, label))
        })
        .collect()
}

/// CSV text with 17 significant digits per value, enough to read back the
/// same bits.
pub fn format_dataset_csv(data: &Dataset) -> Result<String> {
    let width = data.feature_dim();
    let mut out = (1..=width).map(|k| format!("x{k},")).collect::<String>();
    out.push_str("label\n");
    for (i, s) in data.samples.iter().enumerate() {
        if s.features.len() != width {
            return Err(dataset_err(i + 2, "ragged sample"));
        }
        let label = data
            .labels
            .get(s.label)
            .ok_or_else(|| dataset_err(i + 2, format!("class {} has no label text", s.label)))?;
        for x in &s.features {
            out.push_str(&format!("{x:.16e},"));
        }
        out.push_str(label);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_dataset_csv(data: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, format_dataset_csv(data)?)?;
    Ok(())
}
