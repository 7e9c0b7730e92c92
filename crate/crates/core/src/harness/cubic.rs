//! The one-dimensional cubic regression experiment: an ensemble trained on
//! `[-2, 2]` and evaluated on `[-3, 3]`.

use serde::{Deserialize, Serialize};

use crate::ensemble::{train_ensemble, EnsemblePredictor, EnsembleTrace, DEFAULT_MEMBERS};
use crate::error::Result;
use crate::pnn::{PnnArchitecture, TrainConfig};
use crate::simulator::{make_cubic_toy_with, CubicToyConfig, TimeSeriesDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CubicExperimentConfig {
    pub toy: CubicToyConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub members: usize,
    pub hidden_dim: usize,
    pub seed: u64,
    pub training: TrainConfig,
    /// Width of the bins used in the summary.
    pub bin_width: f64,
}

impl Default for CubicExperimentConfig {
    fn default() -> Self {
        Self {
            toy: CubicToyConfig::default(),
            n_train: 800,
            n_test: 600,
            members: DEFAULT_MEMBERS,
            hidden_dim: 16,
            seed: 0,
            training: TrainConfig {
                horizon: 1,
                horizon_init: 1,
                horizon_step: 1,
                warmup_epochs: 200,
                nll_epochs: 100,
                batch_size: 16,
                learning_rate: 1e-2,
                segment_len: 1,
                ..TrainConfig::default()
            },
            bin_width: 0.5,
        }
    }
}

/// Per-bin averages over the test inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicBin {
    pub x_lo: f64,
    pub x_hi: f64,
    pub count: usize,
    pub mean_u_epi_norm: f64,
    pub mean_u_ale: f64,
    /// Mean of the configured noise variance over the bin's samples.
    pub mean_noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicReport {
    pub eps_scale: f64,
    /// Mean normalized epistemic variance for `|x| <= 1.5`.
    pub epi_inner: f64,
    /// Same over `2.5 <= |x| <= 3`.
    pub epi_outer: f64,
    pub epi_ratio: f64,
    /// Largest `max(a/b, b/a)` of mean `u_ale` against mean noise variance
    /// over bins inside the training range.
    pub worst_ale_factor: f64,
    pub bins: Vec<CubicBin>,
}

pub struct CubicRun {
    pub ensemble: EnsemblePredictor,
    pub train: TimeSeriesDataset,
    pub test: TimeSeriesDataset,
    pub trace: EnsembleTrace,
    pub report: CubicReport,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Train and calibrate the cubic-toy ensemble; returns it with the train and
/// test sets.
pub fn train_cubic(cfg: &CubicExperimentConfig) -> Result<(EnsemblePredictor, TimeSeriesDataset, TimeSeriesDataset)> {
    let (train, test) = make_cubic_toy_with(&cfg.toy, cfg.n_train, cfg.n_test, cfg.seed)?;
    let mut arch = PnnArchitecture::new(&["x"], "y", cfg.hidden_dim);
    arch.autoregressive = false;
    let training = TrainConfig {
        seed: cfg.seed,
        ..cfg.training.clone()
    };
    let (mut ensemble, _) = train_ensemble(std::slice::from_ref(&train), &[], &arch, &training, cfg.members)?;
    let train_trace = ensemble.predict_pointwise(&train)?;
    ensemble.calibrate_from(std::slice::from_ref(&train_trace))?;
    Ok((ensemble, train, test))
}

/// Per-sample uncertainty on `test` and its binned summary.
pub fn evaluate_cubic(
    cfg: &CubicExperimentConfig,
    ensemble: &EnsemblePredictor,
    test: &TimeSeriesDataset,
) -> Result<(EnsembleTrace, CubicReport)> {
    let trace = ensemble.predict_pointwise(test)?;
    let xs = test.channel("x").expect("cubic toy has x");

    let pick = |f: &dyn Fn(f64) -> bool| mean((0..xs.len()).filter(|&i| f(xs[i])).map(|i| trace.u_epi_norm[i]));
    let epi_inner = pick(&|x| x.abs() <= 1.5);
    let epi_outer = pick(&|x| (2.5..=3.0).contains(&x.abs()));

    let n_bins = (2.0 * cfg.toy.test_range / cfg.bin_width).ceil() as usize;
    let mut bins = Vec::with_capacity(n_bins);
    let mut worst_ale_factor: f64 = 1.0;
    for b in 0..n_bins {
        let lo = -cfg.toy.test_range + b as f64 * cfg.bin_width;
        let hi = lo + cfg.bin_width;
        let idx: Vec<usize> = (0..xs.len())
            .filter(|&i| xs[i] >= lo && (xs[i] < hi || (b + 1 == n_bins && xs[i] <= hi)))
            .collect();
        let bin = CubicBin {
            x_lo: lo,
            x_hi: hi,
            count: idx.len(),
            mean_u_epi_norm: mean(idx.iter().map(|&i| trace.u_epi_norm[i])),
            mean_u_ale: mean(idx.iter().map(|&i| trace.moments.u_ale[i])),
            mean_noise_var: mean(idx.iter().map(|&i| cfg.toy.noise_std(xs[i]).powi(2))),
        };
        let inside = lo >= -cfg.toy.train_range - 1e-9 && hi <= cfg.toy.train_range + 1e-9;
        if inside && bin.count > 0 {
            let r = bin.mean_u_ale / bin.mean_noise_var;
            worst_ale_factor = worst_ale_factor.max(r.max(1.0 / r));
        }
        bins.push(bin);
    }
    let report = CubicReport {
        eps_scale: ensemble.eps_scale,
        epi_inner,
        epi_outer,
        epi_ratio: epi_outer / epi_inner,
        worst_ale_factor,
        bins,
    };
    Ok((trace, report))
}

pub fn run_cubic(cfg: &CubicExperimentConfig) -> Result<CubicRun> {
    let (ensemble, train, test) = train_cubic(cfg)?;
    let (trace, report) = evaluate_cubic(cfg, &ensemble, &test)?;
    Ok(CubicRun {
        ensemble,
        train,
        test,
        trace,
        report,
    })
}
