use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{Net, Segment};
use crate::error::{Error, PnnError, Result};
use crate::simulator::TimeSeriesDataset;
use crate::util::{read_json, write_json};

pub const CHECKPOINT_FORMAT: &str = "fdi-pnn";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnnArchitecture {
    pub input_names: Vec<String>,
    pub target_name: String,
    pub hidden_dim: usize,
    /// Feed the predicted target back as an input.
    pub autoregressive: bool,
    /// Additive floor on σ̂ in standardized units.
    pub sigma_floor: f64,
}

impl PnnArchitecture {
    pub fn new(inputs: &[impl AsRef<str>], target: &str, hidden_dim: usize) -> Self {
        Self {
            input_names: inputs.iter().map(|s| s.as_ref().to_string()).collect(),
            target_name: target.to_string(),
            hidden_dim,
            autoregressive: true,
            sigma_floor: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), PnnError> {
        if self.hidden_dim == 0 {
            return Err(PnnError::Architecture("hidden_dim must be at least 1".into()));
        }
        if !(self.sigma_floor > 0.0 && self.sigma_floor < 1.0) {
            return Err(PnnError::Architecture(format!(
                "sigma_floor must lie in (0, 1), got {}",
                self.sigma_floor
            )));
        }
        if self.input_names.is_empty() && !self.autoregressive {
            return Err(PnnError::Architecture("model has no inputs".into()));
        }
        if self.input_names.iter().any(|n| *n == self.target_name) {
            return Err(PnnError::Architecture("target listed as input".into()));
        }
        Ok(())
    }

    pub(crate) fn net(&self) -> Net {
        Net {
            n_exo: self.input_names.len(),
            hidden: self.hidden_dim,
            autoregressive: self.autoregressive,
            sigma_floor: self.sigma_floor,
        }
    }
}

/// Training-set statistics used to standardize inputs and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n.max(1) as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

impl Normalization {
    pub fn fit(arch: &PnnArchitecture, data: &[TimeSeriesDataset]) -> Result<Self, PnnError> {
        if data.iter().all(|d| d.is_empty()) {
            return Err(PnnError::Empty);
        }
        let col = |name: &str| -> Result<Vec<&[f64]>, PnnError> {
            data.iter()
                .map(|d| {
                    d.channel(name)
                        .ok_or_else(|| PnnError::MissingChannel(name.to_string()))
                })
                .collect()
        };
        let mut input_mean = Vec::new();
        let mut input_std = Vec::new();
        for name in &arch.input_names {
            let cols = col(name)?;
            let (m, s) = mean_std(cols.iter().flat_map(|c| c.iter().copied()));
            input_mean.push(m);
            input_std.push(s);
        }
        let cols = col(&arch.target_name)?;
        let (target_mean, target_std) = mean_std(cols.iter().flat_map(|c| c.iter().copied()));
        Ok(Self {
            input_mean,
            input_std,
            target_mean,
            target_std,
        })
    }
}

/// Per-sample predictions in target units, aligned with dataset rows
/// `start..start + mu.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub start: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// The two parameter partitions of a member.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta_mu: Vec<f64>,
    pub theta_sigma: Vec<f64>,
}

/// One probabilistic recurrent regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pnn {
    pub arch: PnnArchitecture,
    pub norm: Normalization,
    pub params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config_hash: String,
    model: Pnn,
}

impl Pnn {
    pub fn new(arch: PnnArchitecture, norm: Normalization, seed: u64) -> Result<Self, PnnError> {
        arch.validate()?;
        if norm.input_mean.len() != arch.input_names.len() {
            return Err(PnnError::Length(norm.input_mean.len(), arch.input_names.len()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = arch.net().init(&mut rng);
        Ok(Self { arch, norm, params })
    }

    pub(crate) fn net(&self) -> Net {
        self.arch.net()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Index where the std-head partition starts.
    pub fn n_mu_params(&self) -> usize {
        self.net().n_mu()
    }

    pub fn split(&self) -> ModelParams {
        let k = self.n_mu_params();
        ModelParams {
            theta_mu: self.params[..k].to_vec(),
            theta_sigma: self.params[k..].to_vec(),
        }
    }

    /// First dataset row that receives a prediction.
    pub fn first_row(&self) -> usize {
        usize::from(self.arch.autoregressive)
    }

    /// Standardized segment covering rows `from..to` of `ds`.
    pub(crate) fn segment(
        &self,
        ds: &TimeSeriesDataset,
        from: usize,
        to: usize,
    ) -> Result<Segment, PnnError> {
        let n_exo = self.arch.input_names.len();
        let inputs: Vec<&[f64]> = self
            .arch
            .input_names
            .iter()
            .map(|n| ds.channel(n).ok_or_else(|| PnnError::MissingChannel(n.clone())))
            .collect::<Result<_, _>>()?;
        let target = ds
            .channel(&self.arch.target_name)
            .ok_or_else(|| PnnError::MissingChannel(self.arch.target_name.clone()))?;
        let mut x = Vec::with_capacity((to - from) * n_exo);
        for t in from..to {
            for (k, col) in inputs.iter().enumerate() {
                x.push((col[t] - self.norm.input_mean[k]) / self.norm.input_std[k]);
            }
        }
        let ys = |v: f64| (v - self.norm.target_mean) / self.norm.target_std;
        Ok(Segment {
            x,
            y: target[from..to].iter().map(|&v| ys(v)).collect(),
            y_prev0: if from > 0 { ys(target[from - 1]) } else { 0.0 },
        })
    }

    /// Run the model over the whole dataset from zero state. The target is fed
    /// back from the predicted mean, re-anchored to the measurement at the
    /// start of every `horizon`-sample window.
    pub fn predict_rollout(&self, ds: &TimeSeriesDataset, horizon: usize) -> Result<Rollout, PnnError> {
        let start = self.first_row();
        let len = ds.len().saturating_sub(start);
        if len == 0 {
            return Err(PnnError::Empty);
        }
        if horizon == 0 || horizon > len {
            return Err(PnnError::Horizon { horizon, len });
        }
        let seg = self.segment(ds, start, ds.len())?;
        let tr = self.net().forward(&self.params, &seg, horizon);
        let (m, s) = (self.norm.target_mean, self.norm.target_std);
        Ok(Rollout {
            start,
            mu: tr.mu.iter().map(|v| v * s + m).collect(),
            sigma: tr.sigma.iter().map(|v| v * s).collect(),
        })
    }

    /// Predict every row independently from zero state, as a static regressor.
    pub fn predict_pointwise(&self, ds: &TimeSeriesDataset) -> Result<Rollout, PnnError> {
        let start = self.first_row();
        if ds.len() <= start {
            return Err(PnnError::Empty);
        }
        let net = self.net();
        let (m, s) = (self.norm.target_mean, self.norm.target_std);
        let (mut mu, mut sigma) = (Vec::new(), Vec::new());
        for row in start..ds.len() {
            let seg = self.segment(ds, row, row + 1)?;
            let tr = net.forward(&self.params, &seg, 1);
            mu.push(tr.mu[0] * s + m);
            sigma.push(tr.sigma[0] * s);
        }
        Ok(Rollout { start, mu, sigma })
    }

    pub fn save(&self, path: &Path, config_hash: &str) -> Result<()> {
        write_json(
            path,
            &Checkpoint {
                format: CHECKPOINT_FORMAT.into(),
                version: CHECKPOINT_VERSION,
                config_hash: config_hash.into(),
                model: self.clone(),
            },
        )
    }

    /// Load a checkpoint, returning the model and the stored config hash.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        if !path.exists() {
            return Err(Error::MissingCheckpoint(path.to_path_buf()));
        }
        let ck: Checkpoint = read_json(path)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(PnnError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            ))
            .into());
        }
        if ck.model.params.len() != ck.model.arch.net().n_params() {
            return Err(PnnError::Checkpoint("parameter count does not match architecture".into()).into());
        }
        Ok((ck.model, ck.config_hash))
    }
}

/// Mean squared error.
pub fn loss_mse(targets: &[f64], means: &[f64]) -> Result<f64, PnnError> {
    if targets.is_empty() {
        return Err(PnnError::Empty);
    }
    if targets.len() != means.len() {
        return Err(PnnError::Length(targets.len(), means.len()));
    }
    let sum: f64 = targets.iter().zip(means).map(|(y, m)| (y - m).powi(2)).sum();
    Ok(sum / targets.len() as f64)
}

/// Gaussian negative log-likelihood without the constant term:
/// mean of `(y - μ)² / (2σ²) + ln(σ²) / 2`.
pub fn loss_nll(targets: &[f64], means: &[f64], stds: &[f64]) -> Result<f64, PnnError> {
    if targets.is_empty() {
        return Err(PnnError::Empty);
    }
    if targets.len() != means.len() {
        return Err(PnnError::Length(targets.len(), means.len()));
    }
    if targets.len() != stds.len() {
        return Err(PnnError::Length(targets.len(), stds.len()));
    }
    let mut sum = 0.0;
    for ((y, m), s) in targets.iter().zip(means).zip(stds) {
        if !(*s > 0.0) {
            return Err(PnnError::NonPositiveStd(*s));
        }
        let var = s * s;
        sum += (y - m).powi(2) / (2.0 * var) + 0.5 * var.ln();
    }
    Ok(sum / targets.len() as f64)
}
