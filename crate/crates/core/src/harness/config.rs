//! TOML experiment configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cubic::CubicExperimentConfig;
use crate::decision::DecisionConfig;
use crate::error::{DecisionError, Error, Result};
use crate::pnn::TrainConfig;
use crate::simulator::{fault_catalog, FaultKind, FaultProfile, FaultShape, Severity, NOMINAL_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    ThreeTank,
    TwoTank,
    CubicToy,
    ExternalCsv,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::ThreeTank => "three_tank",
            SystemKind::TwoTank => "two_tank",
            SystemKind::CubicToy => "cubic_toy",
            SystemKind::ExternalCsv => "external_csv",
        }
    }

    pub fn is_simulated_plant(self) -> bool {
        matches!(self, SystemKind::ThreeTank | SystemKind::TwoTank)
    }
}

/// `"auto"` (test selection over the full MSO family) or explicit MSO indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResidualSelection {
    #[default]
    #[serde(with = "auto_tag")]
    Auto,
    Mso(Vec<usize>),
}

mod auto_tag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("expected \"auto\" or a list of MSO indices, got {s:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Nominal runs used for training and validation.
    pub nominal_runs: usize,
    pub train_duration: f64,
    /// Duration of every evaluation scenario, nominal included.
    pub test_duration: f64,
    /// Default fault onset of the evaluation scenarios.
    pub onset: f64,
    /// Default severity when a scenario gives no magnitude.
    pub severity: Severity,
    /// Share of each nominal run (leading part) used for training.
    pub train_fraction: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            nominal_runs: 2,
            train_duration: 600.0,
            test_duration: 300.0,
            onset: 100.0,
            severity: Severity::Medium,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub fault_id: String,
    #[serde(default)]
    pub kind: Option<FaultKind>,
    #[serde(default)]
    pub magnitude: Option<f64>,
    #[serde(default)]
    pub severity: Option<Severity>,
    #[serde(default)]
    pub onset: Option<f64>,
    #[serde(default)]
    pub shape: Option<FaultShape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub members: usize,
    pub hidden_dim: usize,
    pub autoregressive: bool,
    pub sigma_floor: f64,
    /// Prediction window at evaluation; defaults to `training.horizon`.
    pub horizon: Option<usize>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            members: crate::ensemble::DEFAULT_MEMBERS,
            hidden_dim: 16,
            autoregressive: true,
            sigma_floor: 1e-3,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionSection {
    pub p_fa: f64,
    pub epsilon: f64,
}

impl Default for DecisionSection {
    fn default() -> Self {
        Self { p_fa: 0.01, epsilon: 1.0 }
    }
}

impl DecisionSection {
    pub fn config(&self) -> Result<DecisionConfig> {
        DecisionConfig::new(self.p_fa, self.epsilon).map_err(|e| {
            let field = match e {
                DecisionError::NonPositive("epsilon") => "decision.epsilon",
                _ => "decision.p_fa",
            };
            Error::config(field, e.to_string())
        })
    }
}

/// Components switched on for `evaluate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSection {
    pub ood: bool,
    pub adaptive_j: bool,
}

impl Default for AblationSection {
    fn default() -> Self {
        Self { ood: true, adaptive_j: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalScenario {
    pub name: String,
    /// A fault id of the structural model, or `NF`.
    pub true_mode: String,
    pub files: Vec<PathBuf>,
    #[serde(default)]
    pub onset: Option<f64>,
}

/// Pre-logged data: a structural model file plus CSV runs, resampled onto a
/// common grid. Relative paths are taken from the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSection {
    pub model: PathBuf,
    pub channels: Vec<String>,
    pub sample_rate: f64,
    /// Nominal training runs; each run may be split over several files.
    pub train: Vec<Vec<PathBuf>>,
    pub scenarios: Vec<ExternalScenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub residuals: ResidualSelection,
    #[serde(default)]
    pub simulation: SimulationSection,
    /// Fault scenarios; empty means the whole catalog. The nominal scenario is
    /// always added.
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub decision: DecisionSection,
    #[serde(default)]
    pub ablation: AblationSection,
    #[serde(default)]
    pub external: Option<ExternalSection>,
    #[serde(default)]
    pub cubic: CubicExperimentConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A resolved evaluation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDef {
    pub name: String,
    pub true_mode: String,
    pub onset: Option<f64>,
    pub fault: Option<FaultProfile>,
}

impl ExperimentConfig {
    pub fn new(system: SystemKind) -> Self {
        Self {
            system,
            seed: 0,
            output_dir: default_output_dir(),
            residuals: ResidualSelection::Auto,
            simulation: SimulationSection::default(),
            scenarios: Vec::new(),
            ensemble: EnsembleSection::default(),
            training: TrainConfig::default(),
            decision: DecisionSection::default(),
            ablation: AblationSection::default(),
            external: None,
            cubic: CubicExperimentConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<toml>", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and validate; relative external paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(ext) = &mut cfg.external {
            let base = path.parent().unwrap_or(Path::new("."));
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            fix(&mut ext.model);
            ext.train.iter_mut().flatten().for_each(fix);
            ext.scenarios.iter_mut().flat_map(|s| s.files.iter_mut()).for_each(fix);
        }
        Ok(cfg)
    }

    /// Hash of everything that determines results; `output_dir` is excluded
    /// so the same experiment hashes alike wherever it is written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        crate::util::config_hash(&c)
    }

    pub fn horizon(&self) -> usize {
        self.ensemble.horizon.unwrap_or(self.training.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.simulation;
        let check = |ok: bool, path: &str, msg: &str| if ok { Ok(()) } else { Err(Error::config(path, msg)) };
        check(s.nominal_runs >= 1, "simulation.nominal_runs", "must be at least 1")?;
        check(s.train_duration > 0.0, "simulation.train_duration", "must be positive")?;
        check(s.test_duration > 0.0, "simulation.test_duration", "must be positive")?;
        check(
            (0.0..s.test_duration).contains(&s.onset),
            "simulation.onset",
            "must lie in [0, test_duration)",
        )?;
        check(
            s.train_fraction > 0.0 && s.train_fraction <= 1.0,
            "simulation.train_fraction",
            "must lie in (0, 1]",
        )?;
        check(self.ensemble.members >= 1, "ensemble.members", "must be at least 1")?;
        check(self.ensemble.hidden_dim >= 1, "ensemble.hidden_dim", "must be at least 1")?;
        check(
            self.ensemble.sigma_floor > 0.0 && self.ensemble.sigma_floor < 1.0,
            "ensemble.sigma_floor",
            "must lie in (0, 1)",
        )?;
        check(self.horizon() >= 1, "ensemble.horizon", "must be at least 1")?;
        self.training
            .validate()
            .map_err(|e| Error::config("training", e.to_string()))?;
        self.decision.config()?;
        if let ResidualSelection::Mso(list) = &self.residuals {
            check(!list.is_empty(), "residuals", "list must not be empty")?;
            let uniq: BTreeSet<_> = list.iter().collect();
            check(uniq.len() == list.len(), "residuals", "duplicate MSO index")?;
        }
        match self.system {
            SystemKind::ExternalCsv => {
                let ext = self
                    .external
                    .as_ref()
                    .ok_or_else(|| Error::config("external", "required for system external_csv"))?;
                check(ext.sample_rate > 0.0, "external.sample_rate", "must be positive")?;
                check(!ext.channels.is_empty(), "external.channels", "must not be empty")?;
                check(!ext.train.is_empty(), "external.train", "needs at least one run")?;
                let mut names = BTreeSet::new();
                for (i, sc) in ext.scenarios.iter().enumerate() {
                    check(names.insert(&sc.name), &format!("external.scenarios[{i}].name"), "duplicate name")?;
                    check(!sc.files.is_empty(), &format!("external.scenarios[{i}].files"), "must not be empty")?;
                }
            }
            SystemKind::ThreeTank | SystemKind::TwoTank => {
                self.scenario_defs()?;
            }
            SystemKind::CubicToy => {
                check(self.cubic.n_train > 0, "cubic.n_train", "must be positive")?;
                check(self.cubic.n_test > 0, "cubic.n_test", "must be positive")?;
                check(self.cubic.members >= 1, "cubic.members", "must be at least 1")?;
                self.cubic
                    .training
                    .validate()
                    .map_err(|e| Error::config("cubic.training", e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Nominal scenario first, then the configured (or catalog) faults.
    pub fn scenario_defs(&self) -> Result<Vec<ScenarioDef>> {
        if let Some(ext) = &self.external {
            if self.system == SystemKind::ExternalCsv {
                return Ok(ext
                    .scenarios
                    .iter()
                    .map(|s| ScenarioDef {
                        name: s.name.clone(),
                        true_mode: s.true_mode.clone(),
                        onset: s.onset,
                        fault: None,
                    })
                    .collect());
            }
        }
        let system = self.system.as_str();
        let catalog = fault_catalog(system)
            .ok_or_else(|| Error::config("system", format!("{system} has no fault catalog")))?;
        let sim = &self.simulation;
        let listed: Vec<ScenarioConfig> = if self.scenarios.is_empty() {
            catalog
                .iter()
                .map(|f| ScenarioConfig {
                    name: None,
                    fault_id: f.id.to_string(),
                    kind: None,
                    magnitude: None,
                    severity: None,
                    onset: None,
                    shape: None,
                })
                .collect()
        } else {
            self.scenarios.clone()
        };
        let mut out = vec![ScenarioDef {
            name: NOMINAL_LABEL.into(),
            true_mode: NOMINAL_LABEL.into(),
            onset: None,
            fault: None,
        }];
        let mut names: BTreeSet<String> = BTreeSet::from([NOMINAL_LABEL.to_string()]);
        for (i, sc) in listed.iter().enumerate() {
            let path = |f: &str| format!("scenarios[{i}].{f}");
            let info = catalog
                .iter()
                .find(|f| f.id == sc.fault_id)
                .ok_or_else(|| Error::config(path("fault_id"), format!("unknown fault `{}` for {system}", sc.fault_id)))?;
            let kind = sc.kind.unwrap_or(info.kinds[0]);
            let magnitude = sc
                .magnitude
                .unwrap_or_else(|| sc.severity.unwrap_or(sim.severity).magnitude(kind));
            let onset = sc.onset.unwrap_or(sim.onset);
            let profile = FaultProfile {
                fault_id: sc.fault_id.clone(),
                kind,
                magnitude,
                onset,
                shape: sc.shape.unwrap_or(FaultShape::Step),
            };
            profile
                .validate(sim.test_duration, info.kinds)
                .map_err(|e| Error::config(format!("scenarios[{i}]"), e.to_string()))?;
            let name = sc.name.clone().unwrap_or_else(|| sc.fault_id.clone());
            if !names.insert(name.clone()) {
                return Err(Error::config(path("name"), format!("duplicate scenario name `{name}`")));
            }
            out.push(ScenarioDef {
                name,
                true_mode: sc.fault_id.clone(),
                onset: Some(onset),
                fault: Some(profile),
            });
        }
        Ok(out)
    }
}
