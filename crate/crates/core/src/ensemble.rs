//! Ensembles of probabilistic members: mixture moments, the aleatoric /
//! epistemic split and the epistemic normalization scale.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EnsembleError, PnnError, Result};
use crate::pnn::{fit, Normalization, Pnn, PnnArchitecture, Rollout, TrainConfig, TrainLog};
use crate::simulator::TimeSeriesDataset;
use crate::util::{csv_bytes, fmt_f64};

pub const DEFAULT_MEMBERS: usize = 10;
/// Share of nominal training samples allowed above the epistemic threshold.
pub const EPI_EXCLUDED_FRACTION: f64 = 0.01;

/// Mixture moments at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mu_star: f64,
    pub var_star: f64,
    pub u_ale: f64,
    pub u_epi: f64,
}

/// Moments of the uniform mixture of `(mean, variance)` components.
/// `var_star` is computed as `u_ale + u_epi`, so the split is exact.
pub fn mixture_moments(members: &[(f64, f64)]) -> Result<Moments, EnsembleError> {
    if members.is_empty() {
        return Err(EnsembleError::Empty);
    }
    let m = members.len() as f64;
    let mut mu_star = 0.0;
    let mut u_ale = 0.0;
    for &(mu, var) in members {
        if !(var >= 0.0) {
            return Err(EnsembleError::NegativeVariance(var));
        }
        mu_star += mu;
        u_ale += var;
    }
    mu_star /= m;
    u_ale /= m;
    let u_epi = members.iter().map(|(mu, _)| (mu - mu_star).powi(2)).sum::<f64>() / m;
    Ok(Moments {
        mu_star,
        var_star: u_ale + u_epi,
        u_ale,
        u_epi,
    })
}

/// Per-step breakdown of an ensemble's predictions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBreakdown {
    pub mu_star: Vec<f64>,
    pub var_star: Vec<f64>,
    pub u_ale: Vec<f64>,
    pub u_epi: Vec<f64>,
}

impl UncertaintyBreakdown {
    pub fn len(&self) -> usize {
        self.mu_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_star.is_empty()
    }
}

/// Aggregate per-member `(means, variances)` trajectories step by step.
pub fn aggregate(per_member: &[(Vec<f64>, Vec<f64>)]) -> Result<UncertaintyBreakdown, EnsembleError> {
    let first = per_member.first().ok_or(EnsembleError::Empty)?;
    let n = first.0.len();
    for (mu, var) in per_member {
        if mu.len() != n || var.len() != n {
            return Err(EnsembleError::Shape(format!(
                "member lengths {} / {} vs {n}",
                mu.len(),
                var.len()
            )));
        }
    }
    let mut out = UncertaintyBreakdown::default();
    let mut point = Vec::with_capacity(per_member.len());
    for t in 0..n {
        point.clear();
        point.extend(per_member.iter().map(|(mu, var)| (mu[t], var[t])));
        let m = mixture_moments(&point)?;
        out.mu_star.push(m.mu_star);
        out.var_star.push(m.var_star);
        out.u_ale.push(m.u_ale);
        out.u_epi.push(m.u_epi);
    }
    Ok(out)
}

/// Monte Carlo estimate of the mixture's mean and variance with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub var: f64,
    pub mean_se: f64,
    pub var_se: f64,
}

/// Draw `n_samples` from the uniform Gaussian mixture and return sample moments.
/// Components are allocated round-robin (stratified), so the reported
/// standard errors, computed as for i.i.d. draws, are conservative.
pub fn mixture_moment_check(
    members: &[(f64, f64)],
    n_samples: usize,
    seed: u64,
) -> Result<MomentEstimate, EnsembleError> {
    if members.is_empty() {
        return Err(EnsembleError::Empty);
    }
    if n_samples < 2 {
        return Err(EnsembleError::EmptyTrace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stds: Vec<f64> = members.iter().map(|(_, v)| v.max(0.0).sqrt()).collect();
    let draws: Vec<f64> = (0..n_samples)
        .map(|i| {
            let k = i % members.len();
            let z: f64 = StandardNormal.sample(&mut rng);
            members[k].0 + stds[k] * z
        })
        .collect();
    let n = n_samples as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for d in &draws {
        let e2 = (d - mean).powi(2);
        m2 += e2;
        m4 += e2 * e2;
    }
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    Ok(MomentEstimate {
        mean,
        var,
        mean_se: (var / n).sqrt(),
        var_se: ((m4 - var * var).max(0.0) / n).sqrt(),
    })
}

/// Nearest-rank quantile: the smallest sample with at least a fraction `p` of
/// the samples at or below it.
pub fn nearest_rank_quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    // The small slack keeps products like 0.99 * 100 from rounding up a rank.
    let rank = ((p * v.len() as f64 - 1e-9).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

/// 99th percentile of raw epistemic variance over nominal training traces,
/// floored at the smallest positive float.
pub fn epistemic_threshold(raw_u_epi: &[&[f64]]) -> Result<f64, EnsembleError> {
    let all: Vec<f64> = raw_u_epi.iter().flat_map(|t| t.iter().copied()).collect();
    let q = nearest_rank_quantile(&all, 1.0 - EPI_EXCLUDED_FRACTION).ok_or(EnsembleError::EmptyTrace)?;
    Ok(q.max(f64::MIN_POSITIVE))
}

/// Ensemble output on one dataset, aligned with rows `start..`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTrace {
    pub start: usize,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    /// `y - mu_star`.
    pub r: Vec<f64>,
    pub moments: UncertaintyBreakdown,
    /// `u_epi / eps_scale`.
    pub u_epi_norm: Vec<f64>,
}

impl EnsembleTrace {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn sigma_star(&self) -> Vec<f64> {
        self.moments.var_star.iter().map(|v| v.sqrt()).collect()
    }

    /// CSV with columns `t, r, mu_star, var_star, u_ale, u_epi_normalized`.
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let header: Vec<String> = ["t", "r", "mu_star", "var_star", "u_ale", "u_epi_normalized"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let m = &self.moments;
        let rows = (0..self.len()).map(|i| {
            [self.t[i], self.r[i], m.mu_star[i], m.var_star[i], m.u_ale[i], self.u_epi_norm[i]]
                .into_iter()
                .map(fmt_f64)
                .collect()
        });
        csv_bytes(&header, rows)
    }
}

/// `M` members sharing architecture and normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePredictor {
    pub members: Vec<Pnn>,
    /// Normalization scale of the epistemic variance; 1 until calibrated.
    pub eps_scale: f64,
}

impl EnsemblePredictor {
    pub fn new(members: Vec<Pnn>) -> Result<Self, EnsembleError> {
        let first = members.first().ok_or(EnsembleError::Empty)?;
        for m in &members[1..] {
            if m.arch != first.arch {
                return Err(EnsembleError::Incompatible("architecture"));
            }
            if m.norm != first.norm {
                return Err(EnsembleError::Incompatible("normalization"));
            }
        }
        Ok(Self {
            members,
            eps_scale: 1.0,
        })
    }

    pub fn arch(&self) -> &PnnArchitecture {
        &self.members[0].arch
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member rollouts (run in parallel) combined per time step.
    pub fn predict(&self, ds: &TimeSeriesDataset, horizon: usize) -> Result<EnsembleTrace> {
        self.combine(ds, |m| m.predict_rollout(ds, horizon))
    }

    /// Like [`predict`](Self::predict) with each row treated as an independent sample.
    pub fn predict_pointwise(&self, ds: &TimeSeriesDataset) -> Result<EnsembleTrace> {
        self.combine(ds, |m| m.predict_pointwise(ds))
    }

    fn combine<F>(&self, ds: &TimeSeriesDataset, run: F) -> Result<EnsembleTrace>
    where
        F: Fn(&Pnn) -> Result<Rollout, PnnError> + Sync,
    {
        let rollouts: Vec<_> = self
            .members
            .par_iter()
            .map(&run)
            .collect::<Result<Vec<_>, PnnError>>()?;
        let start = rollouts[0].start;
        let per: Vec<(Vec<f64>, Vec<f64>)> = rollouts
            .into_iter()
            .map(|r| {
                let var = r.sigma.iter().map(|s| s * s).collect();
                (r.mu, var)
            })
            .collect();
        let moments = aggregate(&per)?;
        let target = ds
            .channel(&self.arch().target_name)
            .ok_or_else(|| PnnError::MissingChannel(self.arch().target_name.clone()))?;
        let y = target[start..].to_vec();
        let r = y.iter().zip(&moments.mu_star).map(|(a, b)| a - b).collect();
        let u_epi_norm = moments.u_epi.iter().map(|u| u / self.eps_scale).collect();
        Ok(EnsembleTrace {
            start,
            t: ds.t[start..].to_vec(),
            y,
            r,
            moments,
            u_epi_norm,
        })
    }

    /// Set `eps_scale` from nominal training data and return it.
    pub fn calibrate(&mut self, nominal: &[TimeSeriesDataset], horizon: usize) -> Result<f64> {
        self.eps_scale = 1.0;
        let traces: Vec<EnsembleTrace> = nominal
            .iter()
            .map(|d| self.predict(d, horizon))
            .collect::<Result<_>>()?;
        self.calibrate_from(&traces)
    }

    /// Set `eps_scale` from already computed nominal traces.
    pub fn calibrate_from(&mut self, nominal: &[EnsembleTrace]) -> Result<f64> {
        let raw: Vec<&[f64]> = nominal.iter().map(|t| t.moments.u_epi.as_slice()).collect();
        self.eps_scale = epistemic_threshold(&raw)?;
        Ok(self.eps_scale)
    }
}

/// Seed of member `m` derived from the base training seed.
pub fn member_seed(base: u64, m: usize) -> u64 {
    base.wrapping_add((m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Train `n_members` members in parallel. Members differ only in their
/// initialization and shuffling seeds.
pub fn train_ensemble(
    train: &[TimeSeriesDataset],
    val: &[TimeSeriesDataset],
    arch: &PnnArchitecture,
    cfg: &TrainConfig,
    n_members: usize,
) -> Result<(EnsemblePredictor, Vec<TrainLog>)> {
    if n_members == 0 {
        return Err(EnsembleError::Empty.into());
    }
    let norm = Normalization::fit(arch, train)?;
    let trained: Vec<(Pnn, TrainLog)> = (0..n_members)
        .into_par_iter()
        .map(|m| {
            let cfg_m = TrainConfig {
                seed: member_seed(cfg.seed, m),
                ..cfg.clone()
            };
            let mut model = Pnn::new(arch.clone(), norm.clone(), cfg_m.seed)?;
            let log = fit(&mut model, train, val, &cfg_m)?;
            Ok((model, log))
        })
        .collect::<Result<Vec<_>, PnnError>>()?;
    let (members, logs): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    Ok((EnsemblePredictor::new(members)?, logs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_member_example() {
        let m = mixture_moments(&[(0.0, 1.0), (2.0, 1.0)]).unwrap();
        assert_eq!((m.mu_star, m.u_ale, m.u_epi, m.var_star), (1.0, 1.0, 1.0, 2.0));
    }

    #[test]
    fn identical_members_have_no_epistemic_part() {
        let m = mixture_moments(&[(0.3, 0.2); 5]).unwrap();
        assert_eq!(m.u_epi, 0.0);
        assert!((m.mu_star - 0.3).abs() < 1e-15 && (m.u_ale - 0.2).abs() < 1e-15);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert_eq!(mixture_moments(&[]), Err(EnsembleError::Empty));
        assert_eq!(aggregate(&[]), Err(EnsembleError::Empty));
        assert_eq!(epistemic_threshold(&[]), Err(EnsembleError::EmptyTrace));
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank_quantile(&v, 0.99), Some(99.0));
        assert_eq!(nearest_rank_quantile(&v, 1.0), Some(100.0));
        assert_eq!(nearest_rank_quantile(&v, 0.0), Some(1.0));
        assert_eq!(nearest_rank_quantile(&[5.0], 0.5), Some(5.0));
    }

    #[test]
    fn constant_epistemic_trace_scale() {
        let c = [0.25; 50];
        assert_eq!(epistemic_threshold(&[&c]).unwrap(), 0.25);
        assert_eq!(epistemic_threshold(&[&[0.0; 4]]).unwrap(), f64::MIN_POSITIVE);
    }
}
