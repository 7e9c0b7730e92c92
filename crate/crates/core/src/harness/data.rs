//! Datasets of an experiment: nominal training runs and evaluation scenarios,
//! simulated from the config or ingested from external CSV files.

use std::path::PathBuf;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ScenarioDef, SystemKind};
use crate::error::{Error, Result};
use crate::simulator::{
    read_csv_table, sidecar_path, simulate_three_tank, simulate_two_tank, three_tank_default_config,
    two_tank_default_config, DatasetMeta, FaultProfile, InputProfile, SimConfig, TimeSeriesDataset, NOMINAL_LABEL,
};
use crate::util::read_json;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub def: ScenarioDef,
    pub data: TimeSeriesDataset,
}

#[derive(Debug, Clone)]
pub struct DataBundle {
    /// Full nominal runs, before the train/validation split.
    pub nominal: Vec<TimeSeriesDataset>,
    pub scenarios: Vec<Scenario>,
}

impl DataBundle {
    /// Contiguous split of every nominal run: the leading `fraction` trains.
    pub fn split(&self, fraction: f64) -> (Vec<TimeSeriesDataset>, Vec<TimeSeriesDataset>) {
        let mut train = Vec::new();
        let mut val = Vec::new();
        for ds in &self.nominal {
            let cut = ((ds.len() as f64 * fraction).round() as usize).clamp(1, ds.len());
            train.push(ds.slice(0..cut));
            if cut < ds.len() {
                val.push(ds.slice(cut..ds.len()));
            }
        }
        (train, val)
    }
}

/// SplitMix64 step, used to derive independent stream seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn with_seeds(mut cfg: SimConfig, duration: f64, noise_seed: u64, input_seed: u64) -> SimConfig {
    cfg.duration = duration;
    cfg.seed = noise_seed;
    if let InputProfile::PseudoRandom { seed, .. } = &mut cfg.input_profile {
        *seed = input_seed;
    }
    cfg
}

fn plant(system: SystemKind) -> (SimConfig, fn(&SimConfig, Option<&FaultProfile>) -> Result<TimeSeriesDataset, crate::error::SimError>) {
    match system {
        SystemKind::ThreeTank => (three_tank_default_config(), simulate_three_tank),
        _ => (two_tank_default_config(), simulate_two_tank),
    }
}

/// Simulated nominal runs. Run `r` uses its own noise and input seeds.
pub fn simulate_nominal(cfg: &ExperimentConfig) -> Result<Vec<TimeSeriesDataset>> {
    let (base, sim) = plant(cfg.system);
    (0..cfg.simulation.nominal_runs)
        .into_par_iter()
        .map(|r| {
            let c = with_seeds(
                base.clone(),
                cfg.simulation.train_duration,
                derive_seed(cfg.seed, 2 * r as u64),
                derive_seed(cfg.seed, 2 * r as u64 + 1),
            );
            Ok(sim(&c, None)?)
        })
        .collect()
}

/// Evaluation scenarios. They share one input profile and one noise
/// realization, so runs differ only by the injected fault.
pub fn simulate_scenarios(cfg: &ExperimentConfig, defs: &[ScenarioDef]) -> Result<Vec<Scenario>> {
    let (base, sim) = plant(cfg.system);
    let c = with_seeds(
        base,
        cfg.simulation.test_duration,
        derive_seed(cfg.seed, 1 << 32),
        derive_seed(cfg.seed, (1 << 32) + 1),
    );
    defs.par_iter()
        .map(|def| {
            let mut data = sim(&c, def.fault.as_ref())?;
            data.label = def.name.clone();
            Ok(Scenario { def: def.clone(), data })
        })
        .collect()
}

/// Gather every dataset of the experiment, optionally only one named scenario.
pub fn load_data(cfg: &ExperimentConfig, only: Option<&str>) -> Result<DataBundle> {
    let mut defs = cfg.scenario_defs()?;
    if let Some(name) = only {
        defs.retain(|d| d.name == name);
        if defs.is_empty() {
            return Err(Error::config("--scenario", format!("no scenario named `{name}`")));
        }
    }
    match cfg.system {
        SystemKind::ThreeTank | SystemKind::TwoTank => Ok(DataBundle {
            nominal: simulate_nominal(cfg)?,
            scenarios: simulate_scenarios(cfg, &defs)?,
        }),
        SystemKind::ExternalCsv => {
            let ext = cfg.external.as_ref().expect("validated");
            let nominal = ext
                .train
                .iter()
                .map(|files| {
                    let mut ds = ingest_external(files, &ext.channels, ext.sample_rate)?;
                    ds.label = NOMINAL_LABEL.into();
                    Ok(ds)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut scenarios = Vec::new();
            for def in defs {
                let sc = ext.scenarios.iter().find(|s| s.name == def.name).expect("defs come from external");
                let mut data = ingest_external(&sc.files, &ext.channels, ext.sample_rate)?;
                data.label = def.name.clone();
                data.onset = def.onset;
                scenarios.push(Scenario { def, data });
            }
            Ok(DataBundle { nominal, scenarios })
        }
        SystemKind::CubicToy => Err(Error::config("system", "cubic_toy has no scenario datasets")),
    }
}

fn linear_at(t: &[f64], v: &[f64], x: f64, tol: f64) -> f64 {
    let k = t.partition_point(|&s| s < x - tol);
    if k < t.len() && (t[k] - x).abs() <= tol {
        return v[k];
    }
    let k = k.clamp(1, t.len() - 1);
    let (t0, t1) = (t[k - 1], t[k]);
    let w = (x - t0) / (t1 - t0);
    v[k - 1] + w * (v[k] - v[k - 1])
}

fn is_uniform_at(t: &[f64], rate: f64) -> bool {
    let period = 1.0 / rate;
    t.windows(2).all(|w| ((w[1] - w[0]) - period).abs() <= 1e-6 * period)
}

/// Read one run from one or more CSV files (first column time) and put the
/// requested channels on a common grid at `sample_rate` over the time span
/// all files cover. Channels are interpolated linearly unless a file is
/// already on that grid. A sidecar declaring another sample rate is an error.
pub fn ingest_external(files: &[PathBuf], channels: &[String], sample_rate: f64) -> Result<TimeSeriesDataset> {
    if files.is_empty() {
        return Err(Error::Data("no files for run".into()));
    }
    let mut tables = Vec::new();
    let mut meta: Option<DatasetMeta> = None;
    for f in files {
        let tbl = read_csv_table(f)?;
        if tbl.len() < 2 {
            return Err(Error::Data(format!("{}: need at least two rows", f.display())));
        }
        let side = sidecar_path(f);
        if side.exists() {
            let m: DatasetMeta = read_json(&side)?;
            if let Some(r) = m.sample_rate {
                if !is_uniform_at(&tbl.t, r) {
                    return Err(Error::Data(format!(
                        "{}: samples are not uniform at the declared rate {r}",
                        f.display()
                    )));
                }
            }
            meta.get_or_insert(m);
        }
        tables.push(tbl);
    }
    let t0 = tables.iter().map(|t| t.t[0]).fold(f64::NEG_INFINITY, f64::max);
    let t1 = tables.iter().map(|t| *t.t.last().unwrap()).fold(f64::INFINITY, f64::min);
    if !(t1 > t0) {
        return Err(Error::Data("files share no common time span".into()));
    }
    let period = 1.0 / sample_rate;
    let tol = 1e-6 * period;
    let grid: Vec<f64> = match tables
        .iter()
        .find(|tbl| is_uniform_at(&tbl.t, sample_rate))
    {
        Some(tbl) => tbl.t.iter().copied().filter(|&x| x >= t0 - tol && x <= t1 + tol).collect(),
        None => {
            let n = ((t1 - t0) / period + 1e-9).floor() as usize + 1;
            (0..n).map(|k| t0 + k as f64 * period).collect()
        }
    };
    let mut ds = TimeSeriesDataset::new(grid.clone(), NOMINAL_LABEL);
    for name in channels {
        let tbl = tables
            .iter()
            .find(|tbl| tbl.channel(name).is_some())
            .ok_or_else(|| Error::Data(format!("missing channel `{name}`")))?;
        let v = tbl.channel(name).unwrap();
        let values = grid.iter().map(|&x| linear_at(&tbl.t, v, x, tol)).collect();
        ds = ds.with_channel(name.clone(), values);
    }
    if let Some(m) = meta {
        ds.label = m.label;
        ds.onset = m.onset;
        ds.seed = m.seed;
        ds.config_hash = m.config_hash;
    }
    ds.validate()?;
    Ok(ds)
}
