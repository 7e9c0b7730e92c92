//! Experiment stages and their on-disk artifacts.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AblationSection, ExperimentConfig, ScenarioDef, SystemKind};
use super::data::{derive_seed, DataBundle, Scenario};
use crate::decision::{
    fixed_threshold, minimal_diagnoses, Decision, DecisionConfig, DecisionPolicy, DecisionTrace, Threshold,
};
use crate::ensemble::{train_ensemble, EnsemblePredictor, EnsembleTrace};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_decisions, EvaluationReport, MetricsReport, ScenarioDecisions};
use crate::pnn::{Pnn, PnnArchitecture, TrainConfig, TrainLog};
use crate::structural::{
    enumerate_msos, fault_signature, isolability, parse_model, residual_specs, select_tests, three_tank_model,
    two_tank_model, FaultSignatureMatrix, IsolabilityMatrix, ResidualSpec, StructuralModel,
};
use crate::util::{csv_bytes, read_json, write_atomic, write_json};

/// One selected residual generator and the channels its models use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualInfo {
    pub name: String,
    pub mso: usize,
    pub equations: Vec<String>,
    pub residual_equation: String,
    pub target: String,
    pub inputs: Vec<String>,
    pub faults: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub model: StructuralModel,
    pub family: Vec<Vec<usize>>,
    pub fsm_full: FaultSignatureMatrix,
    pub selected: Vec<usize>,
    pub specs: Vec<ResidualSpec>,
    pub fsm: FaultSignatureMatrix,
    pub isolability: IsolabilityMatrix,
    pub residuals: Vec<ResidualInfo>,
}

pub fn structural_model(cfg: &ExperimentConfig) -> Result<StructuralModel> {
    match cfg.system {
        SystemKind::ThreeTank => Ok(three_tank_model()),
        SystemKind::TwoTank => Ok(two_tank_model()),
        SystemKind::ExternalCsv => {
            let path = &cfg.external.as_ref().expect("validated").model;
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(parse_model(&text)?)
        }
        SystemKind::CubicToy => Err(Error::config("system", "cubic_toy has no structural model")),
    }
}

/// MSO family, test selection and residual generator design.
pub fn analyze(cfg: &ExperimentConfig) -> Result<Analysis> {
    let model = structural_model(cfg)?;
    let family = enumerate_msos(&model);
    let fsm_full = fault_signature(&model, &family);
    let selected = match &cfg.residuals {
        super::config::ResidualSelection::Auto => select_tests(&fsm_full, None),
        super::config::ResidualSelection::Mso(list) => {
            if let Some((k, &i)) = list.iter().enumerate().find(|(_, &i)| i >= family.len()) {
                return Err(Error::config(
                    format!("residuals[{k}]"),
                    format!("MSO {i} does not exist; the family has {} sets", family.len()),
                ));
            }
            list.clone()
        }
    };
    let chosen: Vec<Vec<usize>> = selected.iter().map(|&i| family[i].clone()).collect();
    let specs = residual_specs(&model, &chosen)?;
    let fsm = fsm_full.select_rows(&selected);
    let iso = isolability(&fsm);
    let residuals = specs
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let target = spec
                .target_known(&model)
                .map(|j| model.knowns[j].clone())
                .ok_or_else(|| Error::Data(format!("MSO {} has no measured residual target", selected[k])))?;
            Ok(ResidualInfo {
                name: format!("r{}", k + 1),
                mso: selected[k],
                equations: model.equation_names(&spec.mso),
                residual_equation: model.equations[spec.residual_equation].name.clone(),
                target,
                inputs: spec.input_knowns(&model).into_iter().map(|j| model.knowns[j].clone()).collect(),
                faults: (0..fsm.n_faults())
                    .filter(|&j| fsm.get(k, j))
                    .map(|j| fsm.faults[j].clone())
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Analysis {
        model,
        family,
        fsm_full,
        selected,
        specs,
        fsm,
        isolability: iso,
        residuals,
    })
}

fn bool_matrix_csv(corner: &str, rows: &[String], cols: &[String], cells: &[Vec<bool>]) -> Result<Vec<u8>> {
    let mut header = vec![corner.to_string()];
    header.extend(cols.iter().cloned());
    let body = rows.iter().zip(cells).map(|(r, row)| {
        let mut v = vec![r.clone()];
        v.extend(row.iter().map(|&b| u8::from(b).to_string()));
        v
    });
    csv_bytes(&header, body)
}

#[derive(Serialize)]
struct MsoRecord<'a> {
    index: usize,
    equations: Vec<String>,
    faults: Vec<&'a str>,
}

pub fn write_analysis(dir: &Path, a: &Analysis) -> Result<()> {
    let msos: Vec<MsoRecord> = a
        .family
        .iter()
        .enumerate()
        .map(|(i, m)| MsoRecord {
            index: i,
            equations: a.model.equation_names(m),
            faults: (0..a.fsm_full.n_faults())
                .filter(|&j| a.fsm_full.get(i, j))
                .map(|j| a.fsm_full.faults[j].as_str())
                .collect(),
        })
        .collect();
    write_json(&dir.join("mso_family.json"), &msos)?;
    let all: Vec<String> = (0..a.family.len()).map(|i| format!("MSO{i}")).collect();
    write_atomic(
        &dir.join("fsm_full.csv"),
        &bool_matrix_csv("mso", &all, &a.fsm_full.faults, &a.fsm_full.rows)?,
    )?;
    let names: Vec<String> = a.residuals.iter().map(|r| r.name.clone()).collect();
    write_atomic(&dir.join("fsm.csv"), &bool_matrix_csv("residual", &names, &a.fsm.faults, &a.fsm.rows)?)?;
    write_atomic(
        &dir.join("isolability.csv"),
        &bool_matrix_csv("true_fault", &a.isolability.faults, &a.isolability.faults, &a.isolability.entries)?,
    )?;
    write_json(&dir.join("residuals.json"), &a.residuals)
}

/// A residual's trained ensemble with its calibration.
#[derive(Debug, Clone)]
pub struct TrainedResidual {
    pub info: ResidualInfo,
    pub ensemble: EnsemblePredictor,
    /// Fixed-threshold baseline on `|r|`.
    pub j_fixed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub residual: String,
    pub members: usize,
    pub horizon: usize,
    pub eps_scale: f64,
    pub j_fixed: f64,
    pub config_hash: String,
}

pub fn architecture(cfg: &ExperimentConfig, info: &ResidualInfo) -> PnnArchitecture {
    let mut arch = PnnArchitecture::new(&info.inputs, &info.target, cfg.ensemble.hidden_dim);
    arch.autoregressive = cfg.ensemble.autoregressive;
    arch.sigma_floor = cfg.ensemble.sigma_floor;
    arch
}

/// Seeded training config of residual `k`.
pub fn residual_training(cfg: &ExperimentConfig, k: usize) -> TrainConfig {
    TrainConfig {
        seed: derive_seed(cfg.seed, 0x7a11 + k as u64),
        ..cfg.training.clone()
    }
}

/// Train and calibrate one ensemble per residual on the nominal runs.
pub fn train_residuals(
    cfg: &ExperimentConfig,
    analysis: &Analysis,
    data: &DataBundle,
) -> Result<(Vec<TrainedResidual>, Vec<Vec<TrainLog>>)> {
    let (train, val) = data.split(cfg.simulation.train_fraction);
    let dc = cfg.decision.config()?;
    let horizon = cfg.horizon();
    let out: Vec<(TrainedResidual, Vec<TrainLog>)> = analysis
        .residuals
        .par_iter()
        .enumerate()
        .map(|(k, info)| {
            let arch = architecture(cfg, info);
            let (mut ensemble, logs) =
                train_ensemble(&train, &val, &arch, &residual_training(cfg, k), cfg.ensemble.members)?;
            let traces: Vec<EnsembleTrace> = train
                .iter()
                .map(|d| ensemble.predict(d, horizon))
                .collect::<Result<_>>()?;
            ensemble.calibrate_from(&traces)?;
            let r: Vec<f64> = traces.iter().flat_map(|t| t.r.iter().copied()).collect();
            let j_fixed = fixed_threshold(&r, dc.p_fa)?;
            Ok((
                TrainedResidual {
                    info: info.clone(),
                    ensemble,
                    j_fixed,
                },
                logs,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().unzip())
}

fn model_dir(out: &Path, name: &str) -> PathBuf {
    out.join("models").join(name)
}

pub fn save_models(out: &Path, cfg: &ExperimentConfig, trained: &[TrainedResidual]) -> Result<()> {
    let hash = cfg.hash();
    for tr in trained {
        let dir = model_dir(out, &tr.info.name);
        for (m, member) in tr.ensemble.members.iter().enumerate() {
            member.save(&dir.join(format!("member_{m:02}.json")), &hash)?;
        }
        write_json(
            &dir.join("calibration.json"),
            &Calibration {
                residual: tr.info.name.clone(),
                members: tr.ensemble.len(),
                horizon: cfg.horizon(),
                eps_scale: tr.ensemble.eps_scale,
                j_fixed: tr.j_fixed,
                config_hash: hash.clone(),
            },
        )?;
    }
    Ok(())
}

/// Load checkpoints written by [`save_models`] for the analysed residuals.
pub fn load_models(out: &Path, cfg: &ExperimentConfig, analysis: &Analysis) -> Result<Vec<TrainedResidual>> {
    let hash = cfg.hash();
    analysis
        .residuals
        .iter()
        .map(|info| {
            let dir = model_dir(out, &info.name);
            let cal_path = dir.join("calibration.json");
            if !cal_path.exists() {
                return Err(Error::MissingCheckpoint(cal_path));
            }
            let cal: Calibration = read_json(&cal_path)?;
            if cal.config_hash != hash {
                eprintln!(
                    "warning: {} was trained with config {} (current {hash})",
                    info.name, cal.config_hash
                );
            }
            let members = (0..cal.members)
                .map(|m| Pnn::load(&dir.join(format!("member_{m:02}.json"))).map(|(p, _)| p))
                .collect::<Result<Vec<_>>>()?;
            if members[0].arch.target_name != info.target || members[0].arch.input_names != info.inputs {
                return Err(Error::Data(format!("checkpoint of {} uses other channels", info.name)));
            }
            let mut ensemble = EnsemblePredictor::new(members)?;
            ensemble.eps_scale = cal.eps_scale;
            Ok(TrainedResidual {
                info: info.clone(),
                ensemble,
                j_fixed: cal.j_fixed,
            })
        })
        .collect()
}

/// Ensemble traces indexed `[scenario][residual]`.
pub fn predict_scenarios(
    trained: &[TrainedResidual],
    scenarios: &[Scenario],
    horizon: usize,
) -> Result<Vec<Vec<EnsembleTrace>>> {
    scenarios
        .par_iter()
        .map(|sc| {
            trained
                .par_iter()
                .map(|tr| tr.ensemble.predict(&sc.data, horizon))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

pub fn policy_for(tr: &TrainedResidual, dc: &DecisionConfig, flags: AblationSection) -> DecisionPolicy {
    DecisionPolicy {
        threshold: if flags.adaptive_j {
            Threshold::Adaptive { alpha: dc.alpha }
        } else {
            Threshold::Fixed { j: tr.j_fixed }
        },
        epsilon: flags.ood.then_some(dc.epsilon),
    }
}

pub fn decide_scenarios(
    traces: &[Vec<EnsembleTrace>],
    scenarios: &[ScenarioDef],
    policies: &[DecisionPolicy],
) -> Result<Vec<ScenarioDecisions>> {
    traces
        .iter()
        .zip(scenarios)
        .map(|(per_res, def)| {
            Ok(ScenarioDecisions {
                name: def.name.clone(),
                true_mode: def.true_mode.clone(),
                onset: def.onset,
                residuals: per_res
                    .iter()
                    .zip(policies)
                    .map(|(t, p)| DecisionTrace::decide(t, p))
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect()
}

/// The four component combinations of the ablation grid.
pub const ABLATION_ROWS: [(&str, AblationSection); 4] = [
    ("T1", AblationSection { ood: true, adaptive_j: true }),
    ("T2", AblationSection { ood: true, adaptive_j: false }),
    ("T3", AblationSection { ood: false, adaptive_j: true }),
    ("T4", AblationSection { ood: false, adaptive_j: false }),
];

pub const BASELINE: AblationSection = AblationSection { ood: false, adaptive_j: false };

fn row_label(flags: AblationSection) -> &'static str {
    ABLATION_ROWS.iter().find(|(_, f)| *f == flags).map(|(n, _)| *n).expect("all combinations listed")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub system: SystemKind,
    pub seed: u64,
    pub config_hash: String,
    pub components: AblationSection,
    pub residuals: Vec<ResidualInfo>,
    pub fsm: FaultSignatureMatrix,
    pub isolability: IsolabilityMatrix,
    pub scenarios: Vec<ScenarioDef>,
}

fn residual_names(residuals: &[ResidualInfo]) -> Vec<String> {
    residuals.iter().map(|r| r.name.clone()).collect()
}

/// Matrices with baseline deltas plus scalar metrics, from decision traces.
pub fn full_report(
    manifest: &Manifest,
    decisions: &[ScenarioDecisions],
    baseline: &[ScenarioDecisions],
) -> Result<EvaluationReport> {
    let names = residual_names(&manifest.residuals);
    let mut rep = evaluate_decisions(&names, decisions, &manifest.fsm, &manifest.isolability)?;
    let base = evaluate_decisions(&names, baseline, &manifest.fsm, &manifest.isolability)?;
    rep.sensitivity = rep.sensitivity.with_baseline(&base.sensitivity)?;
    rep.isolation = rep.isolation.with_baseline(&base.isolation)?;
    rep.metrics.scenario = row_label(manifest.components).into();
    rep.metrics.config_hash = manifest.config_hash.clone();
    Ok(rep)
}

pub fn metrics_text(m: &MetricsReport) -> String {
    format!(
        "S_FA {:.3}  S_MD {:.3}  p_FA {:.3}  p_MD {:.3}  p_D {:.3}  nominal alarm rate {:.3}\n",
        m.s_fa, m.s_md, m.p_fa, m.p_md, m.p_d, m.nominal_alarm_rate
    )
}

pub fn report_text(manifest: &Manifest, rep: &EvaluationReport) -> String {
    let mut s = format!(
        "system {}  seed {}  config {}  components ood={} adaptive_j={}\n\n",
        manifest.system.as_str(),
        manifest.seed,
        manifest.config_hash,
        manifest.components.ood,
        manifest.components.adaptive_j
    );
    s.push_str("Residual sensitivity s_ij (%), delta vs fixed threshold without OOD:\n");
    s.push_str(&rep.sensitivity.to_text());
    s.push_str("\nIsolation performance p_ij (%), delta vs fixed threshold without OOD:\n");
    s.push_str(&rep.isolation.to_text());
    s.push('\n');
    s.push_str(&metrics_text(&rep.metrics));
    s
}

const REPORT_FILES: [&str; 4] = ["sensitivity.csv", "isolation.csv", "metrics.json", "report.txt"];

pub fn write_report(dir: &Path, manifest: &Manifest, rep: &EvaluationReport) -> Result<()> {
    let [sens, iso, metrics, text] = REPORT_FILES;
    write_atomic(&dir.join(sens), &rep.sensitivity.to_csv_bytes()?)?;
    write_atomic(&dir.join(iso), &rep.isolation.to_csv_bytes()?)?;
    write_json(&dir.join(metrics), &rep.metrics)?;
    write_atomic(&dir.join(text), report_text(manifest, rep).as_bytes())
}

fn decisions_path(dir: &Path, scenario: &str, residual: &str, baseline: bool) -> PathBuf {
    let suffix = if baseline { "_baseline" } else { "" };
    dir.join("traces").join(scenario).join(format!("{residual}_decisions{suffix}.csv"))
}

#[derive(Serialize)]
struct DiagnosisRecord {
    t: f64,
    diagnoses: Vec<Vec<String>>,
}

fn diagnosis_lines(sd: &ScenarioDecisions, fsm: &FaultSignatureMatrix) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let n = sd.residuals.first().map_or(0, |r| r.len());
    for k in 0..n {
        let alarms: Vec<bool> = sd.residuals.iter().map(|r| r.decision[k] == Decision::FaultDetected).collect();
        let ood: Vec<bool> = sd.residuals.iter().map(|r| r.decision[k] == Decision::OutOfRange).collect();
        let d = minimal_diagnoses(&alarms, &ood, fsm)?;
        let rec = DiagnosisRecord {
            t: sd.residuals[0].t[k],
            diagnoses: d.named(&fsm.faults),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub struct Evaluation {
    pub manifest: Manifest,
    pub traces: Vec<Vec<EnsembleTrace>>,
    pub decisions: Vec<ScenarioDecisions>,
    pub baseline: Vec<ScenarioDecisions>,
    /// `None` when the evaluated scenarios cannot support every metric
    /// (for instance a single `--scenario`).
    pub report: Option<EvaluationReport>,
}

pub fn evaluate(
    cfg: &ExperimentConfig,
    analysis: &Analysis,
    trained: &[TrainedResidual],
    data: &DataBundle,
) -> Result<Evaluation> {
    let dc = cfg.decision.config()?;
    let defs: Vec<ScenarioDef> = data.scenarios.iter().map(|s| s.def.clone()).collect();
    let traces = predict_scenarios(trained, &data.scenarios, cfg.horizon())?;
    let policies: Vec<DecisionPolicy> = trained.iter().map(|t| policy_for(t, &dc, cfg.ablation)).collect();
    let base_policies: Vec<DecisionPolicy> = trained.iter().map(|t| policy_for(t, &dc, BASELINE)).collect();
    let decisions = decide_scenarios(&traces, &defs, &policies)?;
    let baseline = decide_scenarios(&traces, &defs, &base_policies)?;
    let manifest = Manifest {
        system: cfg.system,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        components: cfg.ablation,
        residuals: analysis.residuals.clone(),
        fsm: analysis.fsm.clone(),
        isolability: analysis.isolability.clone(),
        scenarios: defs,
    };
    let report = match full_report(&manifest, &decisions, &baseline) {
        Ok(r) => Some(r),
        Err(Error::Metrics(e)) => {
            eprintln!("note: scalar metrics skipped: {e}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(Evaluation {
        manifest,
        traces,
        decisions,
        baseline,
        report,
    })
}

/// Evaluation artifacts: uncertainty and decision traces per scenario and
/// residual, per-sample diagnoses, matrices and metrics.
pub fn write_evaluation(out: &Path, ev: &Evaluation) -> Result<()> {
    let dir = out.join("evaluation");
    write_json(&dir.join("manifest.json"), &ev.manifest)?;
    for (s, def) in ev.manifest.scenarios.iter().enumerate() {
        for (r, info) in ev.manifest.residuals.iter().enumerate() {
            let tdir = dir.join("traces").join(&def.name);
            write_atomic(
                &tdir.join(format!("{}_uncertainty.csv", info.name)),
                &ev.traces[s][r].to_csv_bytes()?,
            )?;
            write_atomic(
                &decisions_path(&dir, &def.name, &info.name, false),
                &ev.decisions[s].residuals[r].to_csv_bytes()?,
            )?;
            write_atomic(
                &decisions_path(&dir, &def.name, &info.name, true),
                &ev.baseline[s].residuals[r].to_csv_bytes()?,
            )?;
        }
        write_atomic(
            &dir.join("diagnoses").join(format!("{}.jsonl", def.name)),
            &diagnosis_lines(&ev.decisions[s], &ev.manifest.fsm)?,
        )?;
    }
    match &ev.report {
        Some(rep) => write_report(&dir, &ev.manifest, rep)?,
        None => {
            for f in REPORT_FILES {
                let p = dir.join(f);
                if p.exists() {
                    std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
                }
            }
        }
    }
    Ok(())
}

/// Rebuild matrices and metrics from persisted decision traces under
/// `<out>/evaluation` and write them to `<out>/report`.
pub fn report_from_traces(out: &Path) -> Result<(Manifest, EvaluationReport)> {
    let dir = out.join("evaluation");
    let mpath = dir.join("manifest.json");
    if !mpath.exists() {
        return Err(Error::Data(format!("{} not found; run `evaluate` first", mpath.display())));
    }
    let manifest: Manifest = read_json(&mpath)?;
    let load = |baseline: bool| -> Result<Vec<ScenarioDecisions>> {
        manifest
            .scenarios
            .iter()
            .map(|def| {
                let residuals = manifest
                    .residuals
                    .iter()
                    .map(|info| {
                        let p = decisions_path(&dir, &def.name, &info.name, baseline);
                        let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
                        DecisionTrace::from_csv_bytes(&bytes)
                    })
                    .collect::<Result<_>>()?;
                Ok(ScenarioDecisions {
                    name: def.name.clone(),
                    true_mode: def.true_mode.clone(),
                    onset: def.onset,
                    residuals,
                })
            })
            .collect()
    };
    let decisions = load(false)?;
    let baseline = load(true)?;
    let rep = full_report(&manifest, &decisions, &baseline)?;
    write_report(&out.join("report"), &manifest, &rep)?;
    Ok((manifest, rep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub components: AblationSection,
    pub metrics: MetricsReport,
}

/// Re-classify the same ensemble traces under the four component
/// combinations.
pub fn ablation_rows(
    manifest_hash: &str,
    traces: &[Vec<EnsembleTrace>],
    defs: &[ScenarioDef],
    trained: &[TrainedResidual],
    dc: &DecisionConfig,
    fsm: &FaultSignatureMatrix,
    iso: &IsolabilityMatrix,
) -> Result<Vec<AblationRow>> {
    let names: Vec<String> = trained.iter().map(|t| t.info.name.clone()).collect();
    ABLATION_ROWS
        .iter()
        .map(|(label, flags)| {
            let policies: Vec<DecisionPolicy> = trained.iter().map(|t| policy_for(t, dc, *flags)).collect();
            let decisions = decide_scenarios(traces, defs, &policies)?;
            let mut metrics = evaluate_decisions(&names, &decisions, fsm, iso)?.metrics;
            metrics.scenario = label.to_string();
            metrics.config_hash = manifest_hash.to_string();
            Ok(AblationRow {
                label: label.to_string(),
                components: *flags,
                metrics,
            })
        })
        .collect()
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mark = |b: bool| if b { "yes" } else { "no" };
    let mut s = format!(
        "{:<4} {:>4} {:>10} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "row", "OOD", "adaptive_J", "S_FA", "S_MD", "p_FA", "p_MD", "p_D"
    );
    for r in rows {
        let m = &r.metrics;
        s.push_str(&format!(
            "{:<4} {:>4} {:>10} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}\n",
            r.label,
            mark(r.components.ood),
            mark(r.components.adaptive_j),
            m.s_fa,
            m.s_md,
            m.p_fa,
            m.p_md,
            m.p_d
        ));
    }
    s
}

pub fn ablation_csv(rows: &[AblationRow]) -> Result<Vec<u8>> {
    let header: Vec<String> = ["row", "ood", "adaptive_j", "S_FA", "S_MD", "p_FA", "p_MD", "p_D"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let body = rows.iter().map(|r| {
        let m = &r.metrics;
        let mut v = vec![r.label.clone(), r.components.ood.to_string(), r.components.adaptive_j.to_string()];
        v.extend([m.s_fa, m.s_md, m.p_fa, m.p_md, m.p_d].iter().map(|&x| crate::util::fmt_f64(x)));
        v
    });
    csv_bytes(&header, body)
}
