//! CSV ingestion and byte-stable export.
//!
//! Format: UTF-8, comma-separated, header row, one sample per row. The
//! exporter writes columns `feature_0..feature_{d-1}, label, site, auxiliary`
//! with shortest-round-trip float formatting, so exported files are
//! byte-stable and re-loading reproduces every value exactly.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::{DatasetSplit, SampleSet};

/// Column names binding a CSV file to the sample fields.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub feature_columns: Vec<String>,
    pub label_column: String,
    pub site_column: String,
    pub auxiliary_column: String,
}

impl CsvSchema {
    /// The exporter's own convention: `feature_0..feature_{d-1}`, `label`,
    /// `site`, `auxiliary`.
    pub fn standard(input_dim: usize) -> Self {
        Self {
            feature_columns: (0..input_dim).map(|j| format!("feature_{j}")).collect(),
            label_column: "label".into(),
            site_column: "site".into(),
            auxiliary_column: "auxiliary".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::Config("csv schema: no feature columns".into()));
        }
        Ok(())
    }
}

/// Loads samples from a CSV file in file order. Subject ids are assigned
/// sequentially from 0; the task id is derived from the file stem.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<SampleSet> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    let index_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{}: unknown column \"{name}\"", path.display())))
    };
    let feature_idx: Vec<usize> = schema
        .feature_columns
        .iter()
        .map(|c| index_of(c))
        .collect::<Result<_>>()?;
    let label_idx = index_of(&schema.label_column)?;
    let site_idx = index_of(&schema.site_column)?;
    let aux_idx = index_of(&schema.auxiliary_column)?;

    let d = feature_idx.len();
    let mut features: Vec<f32> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut sites: Vec<u32> = Vec::new();
    let mut auxiliary: Vec<f32> = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line().to_string())
                .unwrap_or_else(|| "?".into());
            Error::Data(format!("{}:{line}: {e}", path.display()))
        })?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(labels.len() as u64 + 2);
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or_else(|| {
                Error::Data(format!("{}:{line}: missing field {idx}", path.display()))
            })
        };
        for (&idx, name) in feature_idx.iter().zip(&schema.feature_columns) {
            let v = parse_finite_f32(field(idx)?, name, path, line)?;
            features.push(v);
        }
        let label_raw = field(label_idx)?;
        let label_val: f64 = label_raw.trim().parse().map_err(|_| {
            Error::Data(format!(
                "{}:{line}: label \"{label_raw}\" is not numeric",
                path.display()
            ))
        })?;
        let label = if label_val == 0.0 {
            0u8
        } else if label_val == 1.0 {
            1u8
        } else {
            return Err(Error::Data(format!(
                "{}:{line}: label must be 0 or 1, got {label_raw}",
                path.display()
            )));
        };
        labels.push(label);
        let site_raw = field(site_idx)?;
        let site: u32 = site_raw.trim().parse().map_err(|_| {
            Error::Data(format!(
                "{}:{line}: site \"{site_raw}\" is not a non-negative integer",
                path.display()
            ))
        })?;
        sites.push(site);
        auxiliary.push(parse_finite_f32(
            field(aux_idx)?,
            &schema.auxiliary_column,
            path,
            line,
        )?);
    }

    if labels.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let task_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    let n = labels.len() as u64;
    SampleSet::new(
        features,
        d,
        labels,
        auxiliary,
        sites,
        (0..n).collect(),
        task_id,
    )
}

fn parse_finite_f32(raw: &str, column: &str, path: &Path, line: u64) -> Result<f32> {
    let v: f32 = raw.trim().parse().map_err(|_| {
        Error::Data(format!(
            "{}:{line}: column {column}: \"{raw}\" is not numeric",
            path.display()
        ))
    })?;
    if !v.is_finite() {
        return Err(Error::Data(format!(
            "{}:{line}: column {column}: non-finite value \"{raw}\"",
            path.display()
        )));
    }
    Ok(v)
}

/// Writes samples in the standard column layout; byte-stable for a fixed
/// sample set.
pub fn write_samples_csv(path: &Path, samples: &SampleSet) -> Result<()> {
    let mut out = String::new();
    let d = samples.input_dim();
    for j in 0..d {
        out.push_str(&format!("feature_{j},"));
    }
    out.push_str("label,site,auxiliary\n");
    for i in 0..samples.len() {
        for v in samples.feature_row(i) {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!(
            "{},{},{}\n",
            samples.labels()[i],
            samples.site_ids()[i],
            samples.auxiliary()[i]
        ));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes `train.csv`, `validation.csv`, `test.csv` into `dir`.
pub fn write_split_csv(dir: &Path, split: &DatasetSplit) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, p) in [
        ("train.csv", &split.train),
        ("validation.csv", &split.validation),
        ("test.csv", &split.test),
    ] {
        let samples = SampleSet::new(
            p.batch.features().to_vec(),
            p.batch.input_dim(),
            p.batch.labels().to_vec(),
            p.batch.auxiliary().to_vec(),
            p.site_ids.clone(),
            p.subject_ids.clone(),
            split.metadata.task_id.clone(),
        )?;
        write_samples_csv(&dir.join(name), &samples)?;
    }
    Ok(())
}
