use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Normalization, Pnn, PnnArchitecture};
use super::net::{softplus_inv, Segment};
use crate::error::PnnError;
use crate::simulator::TimeSeriesDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Full horizon H in samples.
    pub horizon: usize,
    pub horizon_init: usize,
    pub horizon_step: usize,
    /// Phase 1 (MSE on the mean partition) epochs.
    pub warmup_epochs: usize,
    /// Phase 2 (NLL on the std head) epochs.
    pub nll_epochs: usize,
    /// Segments per optimizer step.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Length of the training segments, each processed from zero state.
    pub segment_len: usize,
    /// Global gradient-norm clip, 0 disables.
    pub grad_clip: f64,
    /// Truncated BPTT length; `None` backpropagates through whole segments.
    pub tbptt: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            horizon_init: 1,
            horizon_step: 2,
            warmup_epochs: 30,
            nll_epochs: 15,
            batch_size: 8,
            learning_rate: 5e-3,
            weight_decay: 1e-5,
            seed: 0,
            segment_len: 200,
            grad_clip: 1.0,
            tbptt: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PnnError> {
        let bad = |m: &str| Err(PnnError::Config(m.into()));
        if !(1 <= self.horizon_init && self.horizon_init <= self.horizon) {
            return bad("need 1 <= horizon_init <= horizon");
        }
        if self.horizon_step == 0 {
            return bad("horizon_step must be at least 1");
        }
        if self.batch_size == 0 || self.segment_len == 0 {
            return bad("batch_size and segment_len must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) || !(self.grad_clip >= 0.0) {
            return bad("learning_rate must be positive, weight_decay and grad_clip non-negative");
        }
        if self.tbptt == Some(0) {
            return bad("tbptt must be at least 1");
        }
        Ok(())
    }

    /// Horizon used in each phase-1 epoch: non-decreasing, capped at H.
    pub fn horizon_schedule(&self) -> Vec<usize> {
        let mut h = self.horizon_init;
        (0..self.warmup_epochs)
            .map(|_| {
                let cur = h;
                h = (h + self.horizon_step).min(self.horizon);
                cur
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Mse,
    Nll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub objective: Objective,
    pub horizon: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

/// Mean loss over all steps of `segments` and its gradient, accumulated into
/// `grad` (which is overwritten).
pub(crate) fn batch_loss_grad(
    model: &Pnn,
    params: &[f64],
    segments: &[&Segment],
    horizon: usize,
    objective: Objective,
    tbptt: Option<usize>,
    grad: Option<&mut [f64]>,
) -> f64 {
    let net = model.net();
    let n: usize = segments.iter().map(|s| s.len()).sum();
    let inv_n = 1.0 / n.max(1) as f64;
    let mut loss = 0.0;
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|x| *x = 0.0);
    }
    for seg in segments {
        let tr = net.forward(params, seg, horizon);
        let len = seg.len();
        let mut dmu = vec![0.0; len];
        let mut dsig = vec![0.0; len];
        for t in 0..len {
            let e = seg.y[t] - tr.mu[t];
            match objective {
                Objective::Mse => {
                    loss += e * e * inv_n;
                    dmu[t] = -2.0 * e * inv_n;
                }
                Objective::Nll => {
                    let s = tr.sigma[t];
                    let var = s * s;
                    loss += (e * e / (2.0 * var) + s.ln()) * inv_n;
                    dmu[t] = -e / var * inv_n;
                    dsig[t] = (1.0 / s - e * e / (var * s)) * inv_n;
                }
            }
        }
        if let Some(g) = grad.as_deref_mut() {
            net.backward(params, seg, &tr, &dmu, &dsig, tbptt, g);
        }
    }
    loss
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Decoupled weight decay on the slice `p` with gradient `g`.
    fn step(&mut self, p: &mut [f64], g: &[f64], lr: f64, wd: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..p.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            let step = (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
            p[i] -= lr * (step + wd * p[i]);
        }
    }
}

/// Cut rows `first..len` of every dataset into segments of `len` samples.
pub(crate) fn make_segments(
    model: &Pnn,
    data: &[TimeSeriesDataset],
    seg_len: usize,
) -> Result<Vec<Segment>, PnnError> {
    let mut out = Vec::new();
    for ds in data {
        let mut from = model.first_row();
        while from < ds.len() {
            let to = (from + seg_len).min(ds.len());
            out.push(model.segment(ds, from, to)?);
            from = to;
        }
    }
    Ok(out)
}

fn mean_loss(model: &Pnn, segs: &[Segment], horizon: usize, obj: Objective) -> Option<f64> {
    if segs.is_empty() {
        return None;
    }
    let refs: Vec<&Segment> = segs.iter().collect();
    Some(batch_loss_grad(model, &model.params, &refs, horizon, obj, None, None))
}

/// Constant σ̂ equal to the RMS training residual at `horizon`, so the NLL
/// phase starts at the right scale instead of σ̂ = 1.
fn init_sigma_head(model: &mut Pnn, segs: &[Segment], horizon: usize) {
    let net = model.net();
    let (mut sq, mut n) = (0.0, 0usize);
    for seg in segs {
        let tr = net.forward(&model.params, seg, horizon);
        sq += seg.y.iter().zip(&tr.mu).map(|(y, m)| (y - m).powi(2)).sum::<f64>();
        n += seg.len();
    }
    let rms = (sq / n.max(1) as f64).sqrt();
    let floor = model.arch.sigma_floor;
    let p = &mut model.params;
    let last = p.len() - 1;
    p[net.n_mu()..last].iter_mut().for_each(|w| *w = 0.0);
    p[last] = softplus_inv((rms - floor).max(1e-3 * floor));
}

/// Train `model` in place: phase 1 updates only the mean partition with MSE
/// over a growing horizon, phase 2 only the std head with NLL at the full
/// horizon, starting from the constant σ̂ that fits the phase-1 residuals.
pub fn fit(
    model: &mut Pnn,
    train: &[TimeSeriesDataset],
    val: &[TimeSeriesDataset],
    cfg: &TrainConfig,
) -> Result<TrainLog, PnnError> {
    cfg.validate()?;
    let segs = make_segments(model, train, cfg.segment_len)?;
    if segs.is_empty() {
        return Err(PnnError::Empty);
    }
    let val_segs = make_segments(model, val, cfg.segment_len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_5e9);
    let n_mu = model.n_mu_params();
    let n = model.n_params();
    let mut grad = vec![0.0; n];
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..segs.len()).collect();

    let phases = cfg
        .horizon_schedule()
        .into_iter()
        .map(|h| (Objective::Mse, h))
        .chain((0..cfg.nll_epochs).map(|_| (Objective::Nll, cfg.horizon)));
    let mut adam_mu = Adam::new(n_mu);
    let mut adam_sigma = Adam::new(n - n_mu);

    for (epoch, (obj, horizon)) in phases.enumerate() {
        let epoch = epoch + 1;
        if obj == Objective::Nll && epoch == cfg.warmup_epochs + 1 {
            init_sigma_head(model, &segs, horizon);
        }
        let range = match obj {
            Objective::Mse => 0..n_mu,
            Objective::Nll => n_mu..n,
        };
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut steps = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let refs: Vec<&Segment> = batch.iter().map(|&i| &segs[i]).collect();
            let loss = batch_loss_grad(model, &model.params, &refs, horizon, obj, cfg.tbptt, Some(&mut grad));
            if !loss.is_finite() {
                return Err(PnnError::Diverged { epoch, loss });
            }
            total += loss;
            steps += 1;
            let g = &mut grad[range.clone()];
            if cfg.grad_clip > 0.0 {
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > cfg.grad_clip {
                    let k = cfg.grad_clip / norm;
                    g.iter_mut().for_each(|x| *x *= k);
                }
            }
            let adam = match obj {
                Objective::Mse => &mut adam_mu,
                Objective::Nll => &mut adam_sigma,
            };
            adam.step(&mut model.params[range.clone()], g, cfg.learning_rate, cfg.weight_decay);
        }
        let train_loss = total / steps as f64;
        let val_loss = mean_loss(model, &val_segs, horizon, obj);
        if let Some(v) = val_loss.filter(|v| !v.is_finite()) {
            return Err(PnnError::Diverged { epoch, loss: v });
        }
        log.epochs.push(EpochLog {
            epoch,
            objective: obj,
            horizon,
            train_loss,
            val_loss,
        });
    }
    Ok(log)
}

/// Fit normalization on `train`, initialize from `cfg.seed` and train.
pub fn train_member(
    train: &[TimeSeriesDataset],
    val: &[TimeSeriesDataset],
    arch: &PnnArchitecture,
    cfg: &TrainConfig,
) -> Result<(Pnn, TrainLog), PnnError> {
    let norm = Normalization::fit(arch, train)?;
    let mut model = Pnn::new(arch.clone(), norm, cfg.seed)?;
    let log = fit(&mut model, train, val, cfg)?;
    Ok((model, log))
}
