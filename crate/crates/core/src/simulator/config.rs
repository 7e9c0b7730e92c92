use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Excitation signal. For the three-tank system it is the inflow q0, for the
/// two-tank system the level reference of the pump controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputProfile {
    Constant {
        value: f64,
    },
    /// `(time, level)` pairs; the first level also applies before its time.
    Steps {
        steps: Vec<(f64, f64)>,
    },
    /// Linear frequency sweep from `f0` to `f1` Hz over the run.
    Chirp {
        offset: f64,
        amplitude: f64,
        f0: f64,
        f1: f64,
    },
    /// Piecewise-constant levels drawn from `levels` evenly spaced values in
    /// `[min, max]`, each held for a uniform time in `[min_hold, max_hold]`.
    PseudoRandom {
        min: f64,
        max: f64,
        levels: usize,
        min_hold: f64,
        max_hold: f64,
        seed: u64,
    },
}

impl InputProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(format!("input_profile: {m}")));
        match self {
            InputProfile::Constant { value } if !value.is_finite() => bad("non-finite value"),
            InputProfile::Steps { steps } => {
                if steps.is_empty() {
                    return bad("steps must not be empty");
                }
                if steps.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("step times must be increasing");
                }
                Ok(())
            }
            InputProfile::Chirp { f0, f1, .. } if *f0 < 0.0 || *f1 < 0.0 => {
                bad("negative frequency")
            }
            InputProfile::PseudoRandom {
                min,
                max,
                levels,
                min_hold,
                max_hold,
                ..
            } => {
                if !(min <= max) || *levels == 0 {
                    return bad("need min <= max and at least one level");
                }
                if !(*min_hold > 0.0 && min_hold <= max_hold) {
                    return bad("need 0 < min_hold <= max_hold");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Materialize the signal over `[0, duration]`.
    pub fn signal(&self, duration: f64) -> InputSignal {
        match self {
            InputProfile::Constant { value } => InputSignal::Piecewise(vec![(0.0, *value)]),
            InputProfile::Steps { steps } => InputSignal::Piecewise(steps.clone()),
            InputProfile::Chirp {
                offset,
                amplitude,
                f0,
                f1,
            } => InputSignal::Chirp {
                offset: *offset,
                amplitude: *amplitude,
                f0: *f0,
                rate: (f1 - f0) / duration.max(f64::MIN_POSITIVE),
            },
            InputProfile::PseudoRandom {
                min,
                max,
                levels,
                min_hold,
                max_hold,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let level = |i: usize| {
                    if *levels == 1 {
                        0.5 * (min + max)
                    } else {
                        min + (max - min) * i as f64 / (*levels - 1) as f64
                    }
                };
                let mut steps = Vec::new();
                let mut t = 0.0;
                let mut last = usize::MAX;
                while t <= duration {
                    // Always change level when more than one is available.
                    let mut i = rng.gen_range(0..*levels);
                    if *levels > 1 {
                        while i == last {
                            i = rng.gen_range(0..*levels);
                        }
                    }
                    last = i;
                    steps.push((t, level(i)));
                    t += if max_hold > min_hold {
                        rng.gen_range(*min_hold..*max_hold)
                    } else {
                        *min_hold
                    };
                }
                InputSignal::Piecewise(steps)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Piecewise(Vec<(f64, f64)>),
    Chirp {
        offset: f64,
        amplitude: f64,
        f0: f64,
        rate: f64,
    },
}

impl InputSignal {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            InputSignal::Piecewise(steps) => {
                let i = steps.partition_point(|&(ts, _)| ts <= t);
                steps[i.saturating_sub(1)].1
            }
            InputSignal::Chirp {
                offset,
                amplitude,
                f0,
                rate,
            } => {
                let phase = 2.0 * std::f64::consts::PI * (f0 * t + 0.5 * rate * t * t);
                offset + amplitude * phase.sin()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub duration: f64,
    pub dt: f64,
    pub sample_rate: f64,
    pub params: BTreeMap<String, f64>,
    /// Gaussian noise std per emitted channel; missing channels are noise-free.
    pub noise: BTreeMap<String, f64>,
    /// Seed of the measurement noise only; the input profile has its own.
    pub seed: u64,
    pub input_profile: InputProfile,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.sample_rate > 0.0) || self.sample_rate * self.dt > 1.0 + 1e-12 {
            return bad(format!(
                "need 0 < sample_rate * dt <= 1, got {} * {}",
                self.sample_rate, self.dt
            ));
        }
        let ratio = 1.0 / (self.sample_rate * self.dt);
        if (ratio - ratio.round()).abs() > 1e-6 {
            return bad(format!(
                "sample period must be a whole number of integration steps (ratio {ratio})"
            ));
        }
        for (k, v) in &self.params {
            if !(*v > 0.0 && v.is_finite()) {
                return bad(format!("params.{k} must be positive, got {v}"));
            }
        }
        for (k, v) in &self.noise {
            if !(*v >= 0.0 && v.is_finite()) {
                return bad(format!("noise.{k} must be non-negative, got {v}"));
            }
        }
        self.input_profile.validate()
    }

    pub fn steps_per_sample(&self) -> usize {
        (1.0 / (self.sample_rate * self.dt)).round() as usize
    }

    pub fn n_samples(&self) -> usize {
        (self.duration * self.sample_rate + 1e-9).floor() as usize + 1
    }

    pub fn param(&self, name: &str) -> Result<f64, SimError> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| SimError::Config(format!("missing parameter `{name}`")))
    }

    pub fn noise_std(&self, channel: &str) -> f64 {
        self.noise.get(channel).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// Adds `magnitude` to the affected quantity.
    Additive,
    /// Scales the affected quantity by the gain `magnitude` (0.9 = -10 %).
    Multiplicative,
    /// Removes `magnitude` times the upstream level as leak flow.
    Leakage,
    /// Reduces a flow coefficient by the fraction `magnitude`.
    Clogging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultShape {
    Step,
    Ramp { duration: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultProfile {
    pub fault_id: String,
    pub kind: FaultKind,
    pub magnitude: f64,
    pub onset: f64,
    #[serde(default = "default_shape")]
    pub shape: FaultShape,
}

fn default_shape() -> FaultShape {
    FaultShape::Step
}

impl FaultProfile {
    pub fn step(fault_id: impl Into<String>, kind: FaultKind, magnitude: f64, onset: f64) -> Self {
        Self {
            fault_id: fault_id.into(),
            kind,
            magnitude,
            onset,
            shape: FaultShape::Step,
        }
    }

    /// Activation in `[0, 1]` at time `t`.
    pub fn activation(&self, t: f64) -> f64 {
        if t < self.onset {
            return 0.0;
        }
        match self.shape {
            FaultShape::Step => 1.0,
            FaultShape::Ramp { duration } => ((t - self.onset) / duration).min(1.0),
        }
    }

    /// Effective fault signal: the additive offset, gain deviation, leak
    /// coefficient or clogging fraction, scaled by the activation.
    pub fn value(&self, t: f64) -> f64 {
        let a = self.activation(t);
        match self.kind {
            FaultKind::Multiplicative => 1.0 + (self.magnitude - 1.0) * a,
            _ => self.magnitude * a,
        }
    }

    pub fn validate(&self, duration: f64, allowed: &[FaultKind]) -> Result<(), SimError> {
        let bad = |m: String| {
            Err(SimError::Fault {
                id: self.fault_id.clone(),
                msg: m,
            })
        };
        if !allowed.contains(&self.kind) {
            return bad(format!("kind {:?} not supported, expected one of {allowed:?}", self.kind));
        }
        if !(0.0..=duration).contains(&self.onset) {
            return bad(format!("onset {} outside [0, {duration}]", self.onset));
        }
        if let FaultShape::Ramp { duration } = self.shape {
            if !(duration > 0.0) {
                return bad("ramp duration must be positive".into());
            }
        }
        let (lo, hi) = magnitude_range(self.kind);
        if !(lo..=hi).contains(&self.magnitude) {
            return bad(format!(
                "magnitude {} outside [{lo}, {hi}] for {:?}",
                self.magnitude, self.kind
            ));
        }
        Ok(())
    }
}

/// Documented magnitude range per fault kind.
pub fn magnitude_range(kind: FaultKind) -> (f64, f64) {
    match kind {
        FaultKind::Additive => (-1.0, 1.0),
        FaultKind::Multiplicative => (0.5, 1.5),
        FaultKind::Leakage => (0.0, 0.5),
        FaultKind::Clogging => (0.0, 0.5),
    }
}

/// Catalog severities used by the bundled scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Small,
    Medium,
    Large,
}

impl Severity {
    pub fn magnitude(self, kind: FaultKind) -> f64 {
        let s = match self {
            Severity::Small => 0.05,
            Severity::Medium => 0.1,
            Severity::Large => 0.2,
        };
        match kind {
            FaultKind::Multiplicative => 1.0 - s,
            FaultKind::Additive => s,
            FaultKind::Leakage | FaultKind::Clogging => 2.0 * s,
        }
    }
}

/// Fixed-step classical Runge–Kutta step of `x' = f(t, x)`.
///
/// The last stage is evaluated just before `t + dt`, so piecewise-constant
/// inputs switching on a step boundary enter with their left limit.
pub(crate) fn rk4_step<F>(x: &mut [f64], t: f64, dt: f64, f: &F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t, x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    f(t + dt * (1.0 - 1e-12), &tmp, &mut k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrate and collect `observe(t, x)` at every sample time.
pub(crate) fn integrate<F, O>(
    cfg: &SimConfig,
    x0: Vec<f64>,
    f: F,
    mut observe: O,
) -> Result<Vec<f64>, SimError>
where
    F: Fn(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let per = cfg.steps_per_sample();
    let n = cfg.n_samples();
    let mut x = x0;
    let mut t_out = Vec::with_capacity(n);
    let mut step: u64 = 0;
    for s in 0..n {
        let t = s as f64 / cfg.sample_rate;
        t_out.push(t);
        observe(t, &x);
        if s + 1 == n {
            break;
        }
        for _ in 0..per {
            let t_step = step as f64 * cfg.dt;
            rk4_step(&mut x, t_step, cfg.dt, &f);
            step += 1;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(SimError::NonFinite {
                    t: step as f64 * cfg.dt,
                });
            }
        }
    }
    Ok(t_out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_is_fourth_order_on_exponential() {
        let f = |_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = -x[0];
        let err = |dt: f64| {
            let mut x = vec![1.0];
            let n = (1.0 / dt).round() as usize;
            for i in 0..n {
                rk4_step(&mut x, i as f64 * dt, dt, &f);
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn pseudo_random_levels_stay_on_grid() {
        let p = InputProfile::PseudoRandom {
            min: 0.0,
            max: 1.0,
            levels: 5,
            min_hold: 1.0,
            max_hold: 3.0,
            seed: 3,
        };
        let s = p.signal(100.0);
        for i in 0..1000 {
            let v = s.at(i as f64 * 0.1);
            assert!((v * 4.0 - (v * 4.0).round()).abs() < 1e-12);
        }
        assert_eq!(s, p.signal(100.0));
    }

    #[test]
    fn ramp_activation() {
        let mut f = FaultProfile::step("x", FaultKind::Additive, 0.2, 10.0);
        f.shape = FaultShape::Ramp { duration: 4.0 };
        assert_eq!(f.value(9.0), 0.0);
        assert!((f.value(12.0) - 0.1).abs() < 1e-15);
        assert_eq!(f.value(20.0), 0.2);
    }

    #[test]
    fn multiplicative_value_is_gain() {
        let f = FaultProfile::step("x", FaultKind::Multiplicative, 0.9, 0.0);
        assert_eq!(f.value(1.0), 0.9);
    }
}
