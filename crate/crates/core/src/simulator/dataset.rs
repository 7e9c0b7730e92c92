use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{csv_bytes, fmt_f64, read_json, write_atomic, write_json};

pub const NOMINAL_LABEL: &str = "NF";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

/// Sampled signals of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    pub t: Vec<f64>,
    pub channels: Vec<Channel>,
    /// Fault id, or `NF` for a nominal run.
    pub label: String,
    pub onset: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config_hash: Option<String>,
}

/// Sidecar metadata stored next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub label: String,
    pub onset: Option<f64>,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub sample_rate: Option<f64>,
    pub channels: Vec<String>,
    pub samples: usize,
}

impl TimeSeriesDataset {
    pub fn new(t: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            t,
            channels: Vec::new(),
            label: label.into(),
            onset: None,
            seed: None,
            config_hash: None,
        }
    }

    pub fn with_channel(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.channels.push(Channel {
            name: name.into(),
            values,
        });
        self
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn is_nominal(&self) -> bool {
        self.label == NOMINAL_LABEL
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.name.clone()).collect()
    }

    /// Mean sample rate implied by the timestamps.
    pub fn sample_rate(&self) -> Option<f64> {
        let n = self.t.len();
        (n >= 2).then(|| (n - 1) as f64 / (self.t[n - 1] - self.t[0]))
    }

    /// Index of the first sample at or after the onset (0 for nominal runs).
    pub fn onset_index(&self) -> usize {
        match self.onset {
            None => 0,
            Some(t0) => self.t.partition_point(|&t| t < t0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        for c in &self.channels {
            if c.values.len() != n {
                return Err(Error::Data(format!(
                    "channel `{}` has {} samples, expected {n}",
                    c.name,
                    c.values.len()
                )));
            }
        }
        if let Some(i) = (1..n).find(|&i| !(self.t[i] > self.t[i - 1])) {
            return Err(Error::Data(format!(
                "timestamps not strictly increasing at row {i} (t = {})",
                self.t[i]
            )));
        }
        Ok(())
    }

    /// Samples `range` as a new dataset with the same metadata.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            t: self.t[range.clone()].to_vec(),
            channels: self
                .channels
                .iter()
                .map(|c| Channel {
                    name: c.name.clone(),
                    values: c.values[range.clone()].to_vec(),
                })
                .collect(),
            label: self.label.clone(),
            onset: self.onset,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
        }
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            label: self.label.clone(),
            onset: self.onset,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            sample_rate: self.sample_rate(),
            channels: self.channel_names(),
            samples: self.len(),
        }
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut header = vec!["t".to_string()];
        header.extend(self.channel_names());
        let rows = (0..self.len()).map(|i| {
            std::iter::once(self.t[i])
                .chain(self.channels.iter().map(|c| c.values[i]))
                .map(fmt_f64)
                .collect()
        });
        csv_bytes(&header, rows)
    }

    /// Writes `path` (CSV) and the `<path>.json` sidecar.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv_bytes()?)?;
        write_json(&sidecar_path(path), &self.meta())
    }

    /// Reads a CSV written by [`write`](Self::write); the sidecar is optional.
    pub fn read(path: &Path) -> Result<Self> {
        let mut ds = read_csv_table(path)?;
        let side = sidecar_path(path);
        if side.exists() {
            let meta: DatasetMeta = read_json(&side)?;
            ds.label = meta.label;
            ds.onset = meta.onset;
            ds.seed = meta.seed;
            ds.config_hash = meta.config_hash;
        }
        Ok(ds)
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Parse a CSV whose first column is time. Cells must be finite numbers;
/// errors name the offending (1-based data) row and column.
pub fn read_csv_table(path: &Path) -> Result<TimeSeriesDataset> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Data(format!("{}: {e}", path.display())),
        _ => Error::Csv(e),
    })?;
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header.is_empty() {
        return Err(Error::Data(format!("{}: empty header", path.display())));
    }
    let mut t = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Data(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                row + 1,
                rec.len(),
                header.len()
            )));
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "{}: row {}, column `{}`: not a number: {cell:?}",
                    path.display(),
                    row + 1,
                    header[c]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "{}: row {}, column `{}`: non-finite value {cell}",
                    path.display(),
                    row + 1,
                    header[c]
                )));
            }
            if c == 0 {
                t.push(v);
            } else {
                cols[c - 1].push(v);
            }
        }
    }
    let mut ds = TimeSeriesDataset::new(t, NOMINAL_LABEL);
    for (name, values) in header.into_iter().skip(1).zip(cols) {
        ds = ds.with_channel(name, values);
    }
    ds.validate()?;
    Ok(ds)
}
