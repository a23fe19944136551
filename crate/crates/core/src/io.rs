//! Reading classifier output tables and labels, and model persistence.
//!
//! Tables are headerless CSV, one row per sample and one file per network.
//! Labels are one base-10 integer per line. Models are stored as JSON with a
//! mandatory `schema_version`; floats are written in shortest round-trip form
//! so a save/load cycle is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleModel, LabeledBatch};
use crate::error::{Error, Result};
use crate::grassmann::ZERO_FEATURE_NORM;
use crate::linalg::norm;
use crate::point::{Point, Space};

pub const SCHEMA_VERSION: u32 = 1;

/// Row sums within this distance of one are silently renormalized.
pub const ROW_SUM_QUIET: f64 = 1e-4;
/// Row sums beyond this distance of one are rejected.
pub const ROW_SUM_LIMIT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    /// Softmax outputs; rows are probability vectors.
    Probability,
    /// Raw feature vectors of arbitrary scale.
    Feature,
}

impl From<Space> for TableMode {
    fn from(space: Space) -> Self {
        match space {
            Space::Sphere => TableMode::Probability,
            Space::Grassmann => TableMode::Feature,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    pub network_id: usize,
    pub mode: TableMode,
    rows: Vec<Vec<f64>>,
}

impl OutputTable {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn embed(&self, space: Space) -> Result<Vec<Point>> {
        self.rows.iter().map(|r| space.embed(r)).collect()
    }
}

pub(crate) fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: display(path),
        source,
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

pub fn load_output_table(path: &Path, mode: TableMode) -> Result<OutputTable> {
    load_output_table_as(path, mode, 0)
}

fn load_output_table_as(path: &Path, mode: TableMode, network_id: usize) -> Result<OutputTable> {
    let name = display(path);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(&name, e))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&name, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    path: name.clone(),
                    line,
                    message: format!("'{field}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                path: name.clone(),
                line,
                message: format!("non-finite value {bad}"),
            });
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::RaggedTable {
                    path: name,
                    row: rows.len(),
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        let index = rows.len();
        validate_row(&mut row, mode).map_err(|source| Error::Row {
            path: name.clone(),
            row: index,
            source: Box::new(source),
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(OutputTable {
        network_id,
        mode,
        rows,
    })
}

fn validate_row(row: &mut [f64], mode: TableMode) -> Result<()> {
    match mode {
        TableMode::Probability => {
            if let Some((index, &value)) = row.iter().enumerate().find(|(_, &v)| v < -1e-9) {
                return Err(Error::NegativeProbability { index, value });
            }
            row.iter_mut().for_each(|v| *v = v.max(0.0));
            let sum: f64 = row.iter().sum();
            let drift = (sum - 1.0).abs();
            if !(drift <= ROW_SUM_LIMIT) {
                return Err(Error::NotNormalized { sum });
            }
            if drift > ROW_SUM_QUIET {
                log::warn!("row sums to {sum}; renormalizing");
            }
            row.iter_mut().for_each(|v| *v /= sum);
        }
        TableMode::Feature => {
            if !(norm(row) > ZERO_FEATURE_NORM) {
                return Err(Error::ZeroFeature);
            }
        }
    }
    Ok(())
}

fn csv_error(path: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::File {
            path: path.to_string(),
            source,
        },
        other => Error::Parse {
            path: path.to_string(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Loads one table per network and checks they describe the same samples.
pub fn load_network_tables(paths: &[impl AsRef<Path> + Sync], mode: TableMode) -> Result<Vec<OutputTable>> {
    let tables = paths
        .par_iter()
        .enumerate()
        .map(|(i, p)| load_output_table_as(p.as_ref(), mode, i))
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = tables.first() {
        for t in &tables[1..] {
            if t.n() != first.n() {
                return Err(Error::RaggedEnsemble {
                    network: t.network_id,
                    expected: first.n(),
                    found: t.n(),
                });
            }
        }
    }
    Ok(tables)
}

pub fn load_labels(path: &Path, c: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(file_error(path))?;
    parse_labels(&text, c, &display(path))
}

pub fn parse_labels(text: &str, c: usize, name: &str) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    let lines: Vec<&str> = text.split('\n').collect();
    let trailing = lines.last().is_some_and(|l| l.trim().is_empty());
    let body = if trailing { &lines[..lines.len() - 1] } else { &lines[..] };
    for (idx, raw) in body.iter().enumerate() {
        let line = idx + 1;
        let field = raw.trim_end_matches('\r').trim();
        let value: i64 = field.parse().map_err(|_| Error::Parse {
            path: name.to_string(),
            line: line as u64,
            message: format!("'{field}' is not an integer label"),
        })?;
        if value < 0 || value as u64 >= c as u64 {
            return Err(Error::LabelOutOfRange {
                line,
                label: value,
                classes: c,
            });
        }
        labels.push(value as usize);
    }
    if labels.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(labels)
}

/// Loads network tables and labels for one split and embeds them.
pub fn load_batch(
    table_paths: &[impl AsRef<Path> + Sync],
    labels_path: &Path,
    space: Space,
    c: usize,
) -> Result<LabeledBatch> {
    let tables = load_network_tables(table_paths, space.into())?;
    let labels = load_labels(labels_path, c)?;
    batch_from_tables(&tables, labels, space, c)
}

pub fn batch_from_tables(
    tables: &[OutputTable],
    labels: Vec<usize>,
    space: Space,
    c: usize,
) -> Result<LabeledBatch> {
    let features = tables
        .iter()
        .map(|t| t.embed(space))
        .collect::<Result<Vec<_>>>()?;
    LabeledBatch::new(features, labels, c)
}

pub fn write_table(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(file_error(path))?);
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(file_error(path))?);
    for y in labels {
        writeln!(out, "{y}")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ModelFile<M> {
    schema_version: u32,
    #[serde(flatten)]
    model: M,
}

pub fn save_model(model: &EnsembleModel) -> Result<Vec<u8>> {
    let file = ModelFile {
        schema_version: SCHEMA_VERSION,
        model,
    };
    serde_json::to_vec_pretty(&file).map_err(|e| Error::CorruptModel(e.to_string()))
}

pub fn load_model(bytes: &[u8]) -> Result<EnsembleModel> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let version = value
        .get("schema_version")
        .ok_or_else(|| Error::CorruptModel("missing schema_version".into()))?
        .as_u64()
        .ok_or_else(|| Error::CorruptModel("schema_version is not an integer".into()))?;
    if version != SCHEMA_VERSION as u64 {
        return Err(Error::SchemaMismatch {
            expected: SCHEMA_VERSION,
            found: version.min(u32::MAX as u64) as u32,
        });
    }
    let file: ModelFile<EnsembleModel> =
        serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
    file.model
        .validate()
        .map_err(|e| Error::CorruptModel(e.to_string()))?;
    Ok(file.model)
}

pub fn save_model_file(path: &Path, model: &EnsembleModel) -> Result<()> {
    fs::write(path, save_model(model)?).map_err(file_error(path))?;
    Ok(())
}

pub fn load_model_file(path: &Path) -> Result<EnsembleModel> {
    load_model(&fs::read(path).map_err(file_error(path))?)
}
