use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{integrate, FaultKind, FaultProfile, InputProfile, SimConfig};
use super::dataset::{TimeSeriesDataset, NOMINAL_LABEL};
use crate::error::SimError;
use crate::util::config_hash;

/// Catalog entry: where a fault enters the plant and which kinds it accepts.
#[derive(Debug, Clone, Copy)]
pub struct FaultInfo {
    pub id: &'static str,
    pub description: &'static str,
    pub kinds: &'static [FaultKind],
}

const ADDITIVE: &[FaultKind] = &[FaultKind::Additive];
const GAIN: &[FaultKind] = &[FaultKind::Multiplicative, FaultKind::Additive];
const LEAK: &[FaultKind] = &[FaultKind::Leakage];
const CLOG: &[FaultKind] = &[FaultKind::Clogging];

pub const THREE_TANK_FAULTS: &[FaultInfo] = &[
    FaultInfo { id: "fV1", description: "flow offset through valve 1 (e1)", kinds: ADDITIVE },
    FaultInfo { id: "fV2", description: "flow offset through valve 2 (e2)", kinds: ADDITIVE },
    FaultInfo { id: "fV3", description: "flow offset through valve 3 (e3)", kinds: ADDITIVE },
    FaultInfo { id: "fT1", description: "pressure-rate offset in tank 1 (e4)", kinds: ADDITIVE },
    FaultInfo { id: "fT2", description: "pressure-rate offset in tank 2 (e5)", kinds: ADDITIVE },
    FaultInfo { id: "fT3", description: "pressure-rate offset in tank 3 (e6)", kinds: ADDITIVE },
];

pub const TWO_TANK_FAULTS: &[FaultInfo] = &[
    FaultInfo { id: "Fa", description: "pump actuator: scales or offsets pump flow", kinds: GAIN },
    FaultInfo { id: "Fh1", description: "upper tank level sensor y1", kinds: GAIN },
    FaultInfo { id: "Fh2", description: "lower tank level sensor y2", kinds: GAIN },
    FaultInfo { id: "Ff1", description: "flow sensor y3 between the tanks", kinds: GAIN },
    FaultInfo { id: "Ff2", description: "outlet flow sensor y4", kinds: GAIN },
    FaultInfo { id: "Fl1", description: "leak in the connecting pipe, upstream of y3", kinds: LEAK },
    FaultInfo { id: "Fl2", description: "leak in the lower tank", kinds: LEAK },
    FaultInfo { id: "Fl3", description: "leak in the outlet pipe, upstream of y4", kinds: LEAK },
    FaultInfo { id: "Fc1", description: "clogging of the connecting pipe", kinds: CLOG },
    FaultInfo { id: "Fc2", description: "clogging of the outlet pipe", kinds: CLOG },
];

fn check_fault(
    cfg: &SimConfig,
    fault: Option<&FaultProfile>,
    catalog: &[FaultInfo],
) -> Result<(), SimError> {
    cfg.validate()?;
    if let Some(f) = fault {
        let info = catalog
            .iter()
            .find(|i| i.id == f.fault_id)
            .ok_or_else(|| SimError::UnknownFault(f.fault_id.clone()))?;
        f.validate(cfg.duration, info.kinds)?;
    }
    Ok(())
}

/// `(gain, offset)` of a signal-type fault at time `t`, identity if inactive.
fn gain_offset(fault: Option<&FaultProfile>, id: &str, t: f64) -> (f64, f64) {
    match fault {
        Some(f) if f.fault_id == id => match f.kind {
            FaultKind::Multiplicative => (f.value(t), 0.0),
            _ => (1.0, f.value(t)),
        },
        _ => (1.0, 0.0),
    }
}

/// Leak coefficient or clogging fraction, 0 if inactive.
fn coefficient(fault: Option<&FaultProfile>, id: &str, t: f64) -> f64 {
    match fault {
        Some(f) if f.fault_id == id => f.value(t),
        _ => 0.0,
    }
}

fn unit_params(names: &[&str]) -> BTreeMap<String, f64> {
    names.iter().map(|n| (n.to_string(), 1.0)).collect()
}

fn sensor_noise(names: &[&str], std: f64) -> BTreeMap<String, f64> {
    names.iter().map(|n| (n.to_string(), std)).collect()
}

/// Add noise to `measured` channels; one draw per channel and sample so that
/// runs sharing a seed share the noise realization regardless of faults.
fn finish(
    cfg: &SimConfig,
    fault: Option<&FaultProfile>,
    t: Vec<f64>,
    mut signals: Vec<(&str, Vec<f64>)>,
    measured: &[&str],
) -> TimeSeriesDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stds: Vec<f64> = measured.iter().map(|m| cfg.noise_std(m)).collect();
    for i in 0..t.len() {
        for (m, std) in measured.iter().zip(&stds) {
            let z: f64 = StandardNormal.sample(&mut rng);
            if let Some((_, v)) = signals.iter_mut().find(|(n, _)| n == m) {
                v[i] += std * z;
            }
        }
    }
    let label = fault.map_or(NOMINAL_LABEL.to_string(), |f| f.fault_id.clone());
    let mut ds = TimeSeriesDataset::new(t, label);
    for (name, values) in signals {
        ds = ds.with_channel(name, values);
    }
    ds.onset = fault.map(|f| f.onset);
    ds.seed = Some(cfg.seed);
    ds.config_hash = Some(config_hash(&(cfg, fault)));
    ds
}

/// Unit resistances and capacitances, 10 Hz sampling, 1 % sensor noise and
/// multi-level pseudo-random inflow.
pub fn three_tank_default_config() -> SimConfig {
    SimConfig {
        duration: 600.0,
        dt: 0.01,
        sample_rate: 10.0,
        params: unit_params(&["R_V1", "R_V2", "R_V3", "C_T1", "C_T2", "C_T3"]),
        noise: sensor_noise(&["y1", "y2", "y3"], 0.01),
        seed: 0,
        input_profile: InputProfile::PseudoRandom {
            min: 0.5,
            max: 1.5,
            levels: 5,
            min_hold: 20.0,
            max_hold: 60.0,
            seed: 1,
        },
    }
}

struct ThreeTank {
    r: [f64; 3],
    c: [f64; 3],
}

impl ThreeTank {
    fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        Ok(Self {
            r: [cfg.param("R_V1")?, cfg.param("R_V2")?, cfg.param("R_V3")?],
            c: [cfg.param("C_T1")?, cfg.param("C_T2")?, cfg.param("C_T3")?],
        })
    }

    /// Flows `[q1, q2, q3]` and pressure rates of the three tanks.
    fn eval(&self, p: &[f64], q0: f64, f: &[f64; 6]) -> ([f64; 3], [f64; 3]) {
        let q1 = (p[0] - p[1]) / self.r[0] + f[0];
        let q2 = (p[1] - p[2]) / self.r[1] + f[1];
        let q3 = p[2] / self.r[2] + f[2];
        let dp1 = (q0 - q1) / self.c[0] + f[3];
        let dp2 = (q1 - q2) / self.c[1] + f[4];
        let dp3 = (q2 - q3) / self.c[2] + f[5];
        ([q1, q2, q3], [dp1, dp2, dp3])
    }
}

fn three_tank_faults(fault: Option<&FaultProfile>, t: f64) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (slot, info) in out.iter_mut().zip(THREE_TANK_FAULTS) {
        *slot = coefficient(fault, info.id, t);
    }
    out
}

/// Noise-free trajectories of every variable of the three-tank model
/// (`q0 q1 q2 q3 p1 p2 p3 dp1 dp2 dp3`) at the sample times.
pub fn three_tank_states(
    cfg: &SimConfig,
    fault: Option<&FaultProfile>,
) -> Result<TimeSeriesDataset, SimError> {
    check_fault(cfg, fault, THREE_TANK_FAULTS)?;
    let sys = ThreeTank::new(cfg)?;
    let input = cfg.input_profile.signal(cfg.duration);
    let names = ["q0", "q1", "q2", "q3", "p1", "p2", "p3", "dp1", "dp2", "dp3"];
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let rhs = |t: f64, p: &[f64], dp: &mut [f64]| {
        let (_, d) = sys.eval(p, input.at(t), &three_tank_faults(fault, t));
        dp.copy_from_slice(&d);
    };
    let t = integrate(cfg, vec![0.0; 3], rhs, |t, p| {
        let q0 = input.at(t);
        let (q, d) = sys.eval(p, q0, &three_tank_faults(fault, t));
        let vals = [q0, q[0], q[1], q[2], p[0], p[1], p[2], d[0], d[1], d[2]];
        for (r, v) in rows.iter_mut().zip(vals) {
            r.push(v);
        }
    })?;
    let label = fault.map_or(NOMINAL_LABEL.to_string(), |f| f.fault_id.clone());
    let mut ds = TimeSeriesDataset::new(t, label);
    for (n, v) in names.iter().zip(rows) {
        ds = ds.with_channel(*n, v);
    }
    ds.onset = fault.map(|f| f.onset);
    Ok(ds)
}

/// Three-tank run emitting the commanded inflow `q0` and the measurements
/// `y1 = p1`, `y2 = q2`, `y3 = q0`. Tanks start empty.
pub fn simulate_three_tank(
    cfg: &SimConfig,
    fault: Option<&FaultProfile>,
) -> Result<TimeSeriesDataset, SimError> {
    let states = three_tank_states(cfg, fault)?;
    let get = |n: &str| states.channel(n).expect("state channel").to_vec();
    let signals = vec![
        ("q0", get("q0")),
        ("y1", get("p1")),
        ("y2", get("q2")),
        ("y3", get("q0")),
    ];
    Ok(finish(cfg, fault, states.t.clone(), signals, &["y1", "y2", "y3"]))
}

/// Unit areas and valve coefficients, pump gain 2, controller gain 2, 10 Hz
/// sampling, 1 % sensor noise and a multi-level pseudo-random level reference.
pub fn two_tank_default_config() -> SimConfig {
    let mut params = unit_params(&["A1", "A2", "k1", "k2"]);
    params.insert("kp".into(), 2.0);
    params.insert("Kc".into(), 2.0);
    SimConfig {
        duration: 600.0,
        dt: 0.01,
        sample_rate: 10.0,
        params,
        noise: sensor_noise(&["y1", "y2", "y3", "y4"], 0.01),
        seed: 0,
        input_profile: InputProfile::PseudoRandom {
            min: 0.3,
            max: 1.2,
            levels: 4,
            min_hold: 15.0,
            max_hold: 40.0,
            seed: 1,
        },
    }
}

struct TwoTank {
    a: [f64; 2],
    k: [f64; 2],
    kp: f64,
    kc: f64,
}

struct TwoTankFlows {
    u: f64,
    dh: [f64; 2],
    q12_measured: f64,
    qout_measured: f64,
}

impl TwoTank {
    fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        Ok(Self {
            a: [cfg.param("A1")?, cfg.param("A2")?],
            k: [cfg.param("k1")?, cfg.param("k2")?],
            kp: cfg.param("kp")?,
            kc: cfg.param("Kc")?,
        })
    }

    fn eval(&self, h: &[f64], h_ref: f64, fault: Option<&FaultProfile>, t: f64) -> TwoTankFlows {
        let h1 = h[0].max(0.0);
        let h2 = h[1].max(0.0);
        // Feed-forward plus proportional level control on the true level.
        let u = (self.k[0] * h_ref / self.kp + self.kc * (h_ref - h1)).clamp(0.0, 1.0);
        let (ga, oa) = gain_offset(fault, "Fa", t);
        let qp = (self.kp * u * ga + oa).max(0.0);
        let q12 = self.k[0] * (1.0 - coefficient(fault, "Fc1", t)) * h1;
        let qout = self.k[1] * (1.0 - coefficient(fault, "Fc2", t)) * h2;
        let l1 = coefficient(fault, "Fl1", t) * h1;
        let l2 = coefficient(fault, "Fl2", t) * h2;
        let l3 = coefficient(fault, "Fl3", t) * h2;
        TwoTankFlows {
            u,
            dh: [(qp - q12) / self.a[0], (q12 - l1 - l2 - qout) / self.a[1]],
            q12_measured: q12 - l1,
            qout_measured: qout - l3,
        }
    }
}

/// Two-tank run emitting the pump command `u` and the measurements
/// `y1 = h1`, `y2 = h2`, `y3` (flow between the tanks) and `y4` (outflow).
/// Tanks start at the equilibrium of the initial reference.
pub fn simulate_two_tank(
    cfg: &SimConfig,
    fault: Option<&FaultProfile>,
) -> Result<TimeSeriesDataset, SimError> {
    check_fault(cfg, fault, TWO_TANK_FAULTS)?;
    let sys = TwoTank::new(cfg)?;
    let reference = cfg.input_profile.signal(cfg.duration);
    let h0 = reference.at(0.0).max(0.0);
    let x0 = vec![h0, sys.k[0] * h0 / sys.k[1]];
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 5];
    let rhs = |t: f64, h: &[f64], dh: &mut [f64]| {
        dh.copy_from_slice(&sys.eval(h, reference.at(t), fault, t).dh);
    };
    let t = integrate(cfg, x0, rhs, |t, h| {
        let fl = sys.eval(h, reference.at(t), fault, t);
        let (g1, o1) = gain_offset(fault, "Fh1", t);
        let (g2, o2) = gain_offset(fault, "Fh2", t);
        let (g3, o3) = gain_offset(fault, "Ff1", t);
        let (g4, o4) = gain_offset(fault, "Ff2", t);
        let vals = [
            fl.u,
            h[0] * g1 + o1,
            h[1] * g2 + o2,
            fl.q12_measured * g3 + o3,
            fl.qout_measured * g4 + o4,
        ];
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    })?;
    let mut it = cols.into_iter();
    let mut next = || it.next().unwrap();
    let signals = vec![("u", next()), ("y1", next()), ("y2", next()), ("y3", next()), ("y4", next())];
    Ok(finish(cfg, fault, t, signals, &["y1", "y2", "y3", "y4"]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mut cfg: SimConfig) -> SimConfig {
        cfg.duration = 60.0;
        cfg
    }

    #[test]
    fn empty_tanks_without_inflow_stay_empty() {
        let mut cfg = short(three_tank_default_config());
        cfg.input_profile = InputProfile::Constant { value: 0.0 };
        cfg.noise.clear();
        let ds = simulate_three_tank(&cfg, None).unwrap();
        for c in &ds.channels {
            assert!(c.values.iter().all(|&v| v == 0.0), "{}", c.name);
        }
    }

    #[test]
    fn unknown_fault_rejected() {
        let cfg = short(two_tank_default_config());
        let f = FaultProfile::step("Fx", FaultKind::Additive, 0.1, 1.0);
        assert_eq!(
            simulate_two_tank(&cfg, Some(&f)).unwrap_err(),
            SimError::UnknownFault("Fx".into())
        );
    }

    #[test]
    fn wrong_kind_rejected() {
        let cfg = short(two_tank_default_config());
        let f = FaultProfile::step("Fl1", FaultKind::Multiplicative, 0.9, 1.0);
        assert!(matches!(simulate_two_tank(&cfg, Some(&f)), Err(SimError::Fault { .. })));
    }

    #[test]
    fn blow_up_reports_time() {
        let mut cfg = short(three_tank_default_config());
        cfg.params.insert("C_T1".into(), 1e-300);
        cfg.input_profile = InputProfile::Constant { value: 1e300 };
        assert!(matches!(simulate_three_tank(&cfg, None), Err(SimError::NonFinite { .. })));
    }

    #[test]
    fn two_tank_starts_in_equilibrium() {
        let mut cfg = short(two_tank_default_config());
        cfg.noise.clear();
        cfg.input_profile = InputProfile::Constant { value: 0.8 };
        let ds = simulate_two_tank(&cfg, None).unwrap();
        for name in ["y1", "y2", "y3", "y4"] {
            let v = ds.channel(name).unwrap();
            assert!(v.iter().all(|&x| (x - 0.8).abs() < 1e-9), "{name}");
        }
    }
}
