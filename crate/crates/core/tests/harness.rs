use std::fs;
use std::path::{Path, PathBuf};

use fdi_ensemble::ensemble::{aggregate, EnsembleTrace};
use fdi_ensemble::harness::cli::main_with;
use fdi_ensemble::harness::{
    ablation_rows, analyze, ingest_external, load_data, train_residuals, write_analysis, ExperimentConfig,
    ResidualSelection, SystemKind,
};
use fdi_ensemble::simulator::{simulate_two_tank, two_tank_default_config, TimeSeriesDataset};
use fdi_ensemble::structural::{fault_signature, isolability, select_tests, three_tank_model, enumerate_msos};
use fdi_ensemble::Error;

fn config_error_path(text: &str) -> String {
    match ExperimentConfig::from_toml_str(text) {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_defaults_and_field_paths() {
    let cfg = ExperimentConfig::from_toml_str("system = \"two_tank\"").unwrap();
    assert_eq!(cfg.system, SystemKind::TwoTank);
    assert_eq!(cfg.residuals, ResidualSelection::Auto);
    assert_eq!(cfg.ensemble.members, 10);
    assert!((cfg.decision.config().unwrap().alpha - 2.5758).abs() < 1e-3);
    // NF first, then the ten catalog faults
    let defs = cfg.scenario_defs().unwrap();
    assert_eq!(defs.len(), 11);
    assert_eq!(defs[0].name, "NF");

    assert_eq!(config_error_path("system = \"two_tank\"\n[ensemble]\nmembers = \"x\"\n"), "ensemble.members");
    assert_eq!(config_error_path("system = \"two_tank\"\n[decision]\np_fa = 1.5\n"), "decision.p_fa");
    assert_eq!(config_error_path("system = \"two_tank\"\n[ensemble]\nbogus = 1\n"), "ensemble.bogus");
    let dup = "system = \"two_tank\"\n[[scenarios]]\nfault_id = \"Fa\"\n[[scenarios]]\nfault_id = \"Fa\"\n";
    assert_eq!(config_error_path(dup), "scenarios[1].name");
    let unknown = "system = \"two_tank\"\n[[scenarios]]\nfault_id = \"Fzz\"\n";
    assert_eq!(config_error_path(unknown), "scenarios[0].fault_id");

    let mut cfg = ExperimentConfig::new(SystemKind::ThreeTank);
    cfg.residuals = ResidualSelection::Mso(vec![0, 99]);
    match analyze(&cfg) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "residuals[1]"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn hash_ignores_output_dir() {
    let a = ExperimentConfig::new(SystemKind::TwoTank);
    let mut b = a.clone();
    b.output_dir = "elsewhere".into();
    assert_eq!(a.hash(), b.hash());
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn ingest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut sim = two_tank_default_config();
    sim.duration = 20.0;
    let ds = simulate_two_tank(&sim, None).unwrap();
    let path = dir.path().join("run.csv");
    ds.write(&path).unwrap();
    let back = ingest_external(&[path], &ds.channel_names(), 10.0).unwrap();
    assert_eq!(back, ds);
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

#[test]
fn slower_channel_is_linearly_interpolated() {
    let dir = tempfile::tempdir().unwrap();
    let fast = dir.path().join("fast.csv");
    let slow = dir.path().join("slow.csv");
    let a = |k: usize| (k as f64 * 0.37).sin();
    let b = |k: usize| ((k * k) % 7) as f64 - 2.5;
    write_csv(&fast, "t,a", (0..=40).map(|k| format!("{},{}", k as f64 / 10.0, a(k))));
    write_csv(&slow, "t,b", (0..=20).map(|k| format!("{},{}", k as f64 / 5.0, b(k))));
    let ds = ingest_external(&[fast, slow], &["a".into(), "b".into()], 10.0).unwrap();
    assert_eq!(ds.len(), 41);
    let ca = ds.channel("a").unwrap();
    let cb = ds.channel("b").unwrap();
    for i in 0..41 {
        assert_eq!(ca[i], a(i));
        let expect = if i % 2 == 0 { b(i / 2) } else { 0.5 * (b(i / 2) + b(i / 2 + 1)) };
        assert!((cb[i] - expect).abs() < 1e-12, "row {i}: {} vs {expect}", cb[i]);
    }
}

#[test]
fn ingest_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let nan = dir.path().join("nan.csv");
    write_csv(&nan, "t,a,b", ["0,1,2", "0.1,1,2", "0.2,NaN,2"].map(String::from).into_iter());
    let msg = ingest_external(&[nan.clone()], &["a".into()], 10.0).unwrap_err().to_string();
    assert!(msg.contains("row 3") && msg.contains("`a`"), "{msg}");

    let back = dir.path().join("back.csv");
    write_csv(&back, "t,a", ["0,1", "0.2,1", "0.1,1"].map(String::from).into_iter());
    assert!(ingest_external(&[back], &["a".into()], 10.0).is_err());

    let ok = dir.path().join("ok.csv");
    write_csv(&ok, "t,a", ["0,1", "0.1,1", "0.2,1"].map(String::from).into_iter());
    let msg = ingest_external(&[ok], &["zz".into()], 10.0).unwrap_err().to_string();
    assert!(msg.contains("zz"), "{msg}");
}

fn read_bool_csv(path: &Path) -> (Vec<String>, Vec<Vec<bool>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').skip(1).map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').skip(1).map(|c| c == "1").collect())
        .collect();
    (header, rows)
}

#[test]
fn analyze_files_match_structural_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(SystemKind::ThreeTank);
    let a = analyze(&cfg).unwrap();
    write_analysis(dir.path(), &a).unwrap();

    let model = three_tank_model();
    let family = enumerate_msos(&model);
    let full = fault_signature(&model, &family);
    let chosen = select_tests(&full, None);
    let fsm = full.select_rows(&chosen);
    let iso = isolability(&fsm);

    let (faults, rows) = read_bool_csv(&dir.path().join("fsm_full.csv"));
    assert_eq!(faults, full.faults);
    assert_eq!(rows, full.rows);
    let (_, rows) = read_bool_csv(&dir.path().join("fsm.csv"));
    assert_eq!(rows, fsm.rows);
    let (_, rows) = read_bool_csv(&dir.path().join("isolability.csv"));
    assert_eq!(rows, iso.entries);
    let msos: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("mso_family.json")).unwrap()).unwrap();
    assert_eq!(msos.as_array().unwrap().len(), family.len());
}

/// Two-tank experiment small enough for a debug test run.
fn tiny_config(epochs: usize) -> ExperimentConfig {
    let text = format!(
        r#"
system = "two_tank"
seed = 3

[simulation]
nominal_runs = 1
train_duration = 60.0
test_duration = 40.0
onset = 10.0

[[scenarios]]
fault_id = "Fa"

[[scenarios]]
fault_id = "Fl1"

[ensemble]
members = 2
hidden_dim = 4

[training]
horizon = 5
warmup_epochs = {epochs}
nll_epochs = {epochs}
segment_len = 100
"#
    );
    ExperimentConfig::from_toml_str(&text).unwrap()
}

#[test]
fn ablation_is_a_no_op_when_decisions_agree() {
    let cfg = tiny_config(0);
    let a = analyze(&cfg).unwrap();
    let data = load_data(&cfg, None).unwrap();
    let (trained, _) = train_residuals(&cfg, &a, &data).unwrap();
    // perfect residuals: every member predicts the measurement exactly
    let traces: Vec<Vec<EnsembleTrace>> = data
        .scenarios
        .iter()
        .map(|sc| {
            trained
                .iter()
                .map(|tr| {
                    let y = sc.data.channel(&tr.info.target).unwrap().to_vec();
                    let member = (y.clone(), vec![0.01; y.len()]);
                    let moments = aggregate(&[member.clone(), member]).unwrap();
                    EnsembleTrace {
                        start: 0,
                        t: sc.data.t.clone(),
                        r: vec![0.0; y.len()],
                        u_epi_norm: vec![0.0; y.len()],
                        y,
                        moments,
                    }
                })
                .collect()
        })
        .collect();
    let defs: Vec<_> = data.scenarios.iter().map(|s| s.def.clone()).collect();
    let rows = ablation_rows(
        &cfg.hash(),
        &traces,
        &defs,
        &trained,
        &cfg.decision.config().unwrap(),
        &a.fsm,
        &a.isolability,
    )
    .unwrap();
    assert_eq!(rows.len(), 4);
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["T1", "T2", "T3", "T4"]);
    for r in &rows[1..] {
        let (m, m0) = (&r.metrics, &rows[0].metrics);
        assert_eq!((m.s_fa, m.s_md, m.p_fa, m.p_md, m.p_d), (m0.s_fa, m0.s_md, m0.p_fa, m0.p_md, m0.p_d));
    }
    assert_eq!(rows[0].metrics.s_fa, 0.0);
    assert_eq!(rows[0].metrics.p_fa, 0.0);
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let p = dir.join("experiment.toml");
    fs::write(&p, toml::to_string(cfg).unwrap()).unwrap();
    p
}

fn files_under(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn fdi(args: &[&str]) -> i32 {
    main_with(std::iter::once("fdi").chain(args.iter().copied()))
}

#[test]
fn cli_evaluate_is_deterministic_and_report_recomputes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &tiny_config(2));
    let cfg_s = cfg_path.to_str().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = out.to_str().unwrap();
        assert_eq!(fdi(&["train", "--config", cfg_s, "--out", o]), 0);
        assert_eq!(fdi(&["evaluate", "--config", cfg_s, "--out", o]), 0);
    }
    let ea = files_under(&out_a.join("evaluation"));
    let eb = files_under(&out_b.join("evaluation"));
    assert!(ea.iter().any(|(p, _)| p.ends_with("r1_decisions.csv")));
    assert!(ea.iter().any(|(p, _)| p.ends_with("metrics.json")));
    assert_eq!(ea, eb);

    let o = out_a.to_str().unwrap();
    assert_eq!(fdi(&["report", "--config", cfg_s, "--out", o]), 0);
    for f in ["sensitivity.csv", "isolation.csv", "metrics.json", "report.txt"] {
        assert_eq!(
            fs::read(out_a.join("report").join(f)).unwrap(),
            fs::read(out_a.join("evaluation").join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(fdi(&["ablate", "--config", cfg_s, "--out", o]), 0);
    let table = fs::read_to_string(out_a.join("ablation").join("metrics.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "system = \"two_tank\"\n[ensemble]\nmembers = 0\n").unwrap();
    assert_eq!(fdi(&["train", "--config", bad.to_str().unwrap()]), 1);
    assert_eq!(fdi(&["train", "--config", dir.path().join("none.toml").to_str().unwrap()]), 1);
    assert_eq!(fdi(&["frobnicate"]), 1);

    let cfg_path = write_config(dir.path(), &tiny_config(0));
    let out = dir.path().join("empty");
    assert_eq!(
        fdi(&["evaluate", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        2
    );
    assert_eq!(fdi(&["report", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
}

#[test]
fn simulate_writes_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &tiny_config(0));
    let out = dir.path().join("o");
    assert_eq!(fdi(&["simulate", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    for name in ["NF", "Fa", "Fl1"] {
        let p = out.join("data").join("scenarios").join(format!("{name}.csv"));
        let ds = TimeSeriesDataset::read(&p).unwrap();
        assert_eq!(ds.label, name);
    }
    assert!(out.join("data").join("nominal_00.csv").exists());
}
