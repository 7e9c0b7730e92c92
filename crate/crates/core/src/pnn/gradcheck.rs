use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::Pnn;
use super::net::Segment;
use super::train::{batch_loss_grad, Objective};
use crate::error::PnnError;
use crate::simulator::TimeSeriesDataset;

pub const FD_STEP: f64 = 1e-5;
/// Gradients below this magnitude are compared in absolute terms.
const REL_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Max relative error of `analytic` against central differences of `f` at
/// `x`, over the coordinates in `indices`.
pub fn finite_difference_check<F: Fn(&[f64]) -> f64>(
    f: F,
    x: &[f64],
    analytic: &[f64],
    indices: &[usize],
    step: f64,
) -> f64 {
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for &i in indices {
        probe[i] = x[i] + step;
        let up = f(&probe);
        probe[i] = x[i] - step;
        let down = f(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * step);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}

/// Compare the analytic gradient of the chosen loss, taken through the full
/// autoregressive rollout of every dataset in `batch`, with central finite
/// differences on `n_samples` randomly chosen parameters (all if fewer).
pub fn grad_check(
    model: &Pnn,
    batch: &[TimeSeriesDataset],
    horizon: usize,
    objective: Objective,
    n_samples: usize,
    seed: u64,
) -> Result<f64, PnnError> {
    let segs: Vec<Segment> = batch
        .iter()
        .map(|ds| model.segment(ds, model.first_row(), ds.len()))
        .collect::<Result<_, _>>()?;
    if segs.iter().all(|s| s.len() == 0) {
        return Err(PnnError::Empty);
    }
    let refs: Vec<&Segment> = segs.iter().collect();
    let mut grad = vec![0.0; model.n_params()];
    batch_loss_grad(model, &model.params, &refs, horizon, objective, None, Some(&mut grad));
    let n = model.n_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, n_samples.min(n)).into_vec();
    idx.sort_unstable();
    let f = |p: &[f64]| batch_loss_grad(model, p, &refs, horizon, objective, None, None);
    Ok(finite_difference_check(f, &model.params, &grad, &idx, FD_STEP))
}
