use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{TimeSeriesDataset, NOMINAL_LABEL};
use crate::error::SimError;

/// `y = x^3 + xi(x)` with `xi ~ N(0, (noise_scale * 0.1 * (1 + |x|))^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicToyConfig {
    pub train_range: f64,
    pub test_range: f64,
    pub noise_scale: f64,
}

impl Default for CubicToyConfig {
    fn default() -> Self {
        Self {
            train_range: 2.0,
            test_range: 3.0,
            noise_scale: 1.0,
        }
    }
}

impl CubicToyConfig {
    pub fn noise_std(&self, x: f64) -> f64 {
        self.noise_scale * 0.1 * (1.0 + x.abs())
    }
}

/// Train inputs uniform on `[-2, 2]`, test inputs on `[-3, 3]`, sorted by x.
/// Channels `x` and `y`; `t` is the sample index.
pub fn make_cubic_toy(
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset), SimError> {
    make_cubic_toy_with(&CubicToyConfig::default(), n_train, n_test, seed)
}

pub fn make_cubic_toy_with(
    cfg: &CubicToyConfig,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset), SimError> {
    if n_train == 0 || n_test == 0 {
        return Err(SimError::Config("cubic toy needs n_train, n_test > 0".into()));
    }
    if !(cfg.train_range > 0.0 && cfg.test_range > 0.0 && cfg.noise_scale >= 0.0) {
        return Err(SimError::Config("cubic toy ranges must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize, range: f64| {
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-range..=range)).collect();
        xs.sort_by(f64::total_cmp);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x * x * x + cfg.noise_std(x) * z
            })
            .collect();
        let mut ds = TimeSeriesDataset::new((0..n).map(|i| i as f64).collect(), NOMINAL_LABEL)
            .with_channel("x", xs)
            .with_channel("y", ys);
        ds.seed = Some(seed);
        ds
    };
    let train = draw(n_train, cfg.train_range);
    let test = draw(n_test, cfg.test_range);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_targets_are_cubes() {
        let cfg = CubicToyConfig {
            noise_scale: 0.0,
            ..Default::default()
        };
        let (train, _) = make_cubic_toy_with(&cfg, 50, 5, 1).unwrap();
        let x = train.channel("x").unwrap();
        let y = train.channel("y").unwrap();
        for (a, b) in x.iter().zip(y) {
            assert_eq!(*b, a * a * a);
        }
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(make_cubic_toy(0, 1, 0).is_err());
    }
}
