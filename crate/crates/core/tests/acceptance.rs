//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are structurally impossible and
//! are reported without failing the run; any other failure exits non-zero.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fdi_ensemble::decision::{
    inv_norm_cdf, minimal_diagnoses, Decision, DecisionPolicy, DecisionTrace, Threshold,
};
use fdi_ensemble::ensemble::{mixture_moment_check, mixture_moments};
use fdi_ensemble::harness::{
    ablation_rows, ablation_table, analyze, evaluate, load_data, run_cubic, train_residuals, write_evaluation,
    CubicExperimentConfig, ExperimentConfig,
};
use fdi_ensemble::pnn::{grad_check, Normalization, Objective, Pnn, PnnArchitecture};
use fdi_ensemble::simulator::{TimeSeriesDataset, NOMINAL_LABEL};
use fdi_ensemble::structural::{
    enumerate_msos, fault_signature, isolability, three_tank_model, FaultSignatureMatrix, StructuralModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_UNATTAINABLE: &[&str] = &["AC5b"];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn report(outcomes: &mut Vec<Outcome>, id: &'static str, pass: bool, detail: String, started: Instant) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {id}: {detail} ({:.1?})", started.elapsed());
    outcomes.push(Outcome { id, pass, detail });
}

fn ac1() -> (bool, String) {
    let a = inv_norm_cdf(0.995).unwrap();
    ((a - 2.5758).abs() <= 1e-3, format!("inv_norm_cdf(0.995) = {a:.6}"))
}

fn ac2() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_z: f64 = 0.0;
    let mut worst_split: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for k in 0..100 {
        let m = rng.gen_range(1..=20);
        let members: Vec<(f64, f64)> = (0..m)
            .map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(0.01..3.0)))
            .collect();
        let agg = mixture_moments(&members).unwrap();
        let est = mixture_moment_check(&members, 1_000_000, k).unwrap();
        worst_z = worst_z
            .max((est.mean - agg.mu_star).abs() / est.mean_se)
            .max((est.var - agg.var_star).abs() / est.var_se);
        worst_split = worst_split.max((agg.var_star - (agg.u_ale + agg.u_epi)).abs());
        let mf = m as f64;
        let raw = members.iter().map(|(mu, v)| v + mu * mu).sum::<f64>() / mf - agg.mu_star.powi(2);
        worst_oracle = worst_oracle.max((raw - agg.var_star).abs() / agg.var_star);
    }
    (
        worst_z < 3.0 && worst_split <= f64::EPSILON && worst_oracle < 1e-12,
        format!(
            "100 ensembles x 1e6 samples: worst |z| {worst_z:.2}, split residual {worst_split:.1e}, \
             raw-moment rel err {worst_oracle:.1e}"
        ),
    )
}

fn ac3() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ds = |n: usize, rng: &mut ChaCha8Rng| {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = vec![0.0; n];
        for t in 1..n {
            y[t] = 0.7 * y[t - 1] + 0.4 * u[t] + 0.05 * rng.gen_range(-1.0..1.0);
        }
        TimeSeriesDataset::new((0..n).map(|i| i as f64).collect(), NOMINAL_LABEL)
            .with_channel("u", u)
            .with_channel("y", y)
    };
    let data = vec![ds(41, &mut rng), ds(35, &mut rng)];
    let arch = PnnArchitecture::new(&["u"], "y", 8);
    let norm = Normalization::fit(&arch, &data).unwrap();
    let mut m = Pnn::new(arch, norm, 5).unwrap();
    let k = m.n_mu_params();
    for p in &mut m.params[k..] {
        *p += rng.gen_range(-0.5..0.5);
    }
    let mse = grad_check(&m, &data, 10, Objective::Mse, 200, 0).unwrap();
    let nll = grad_check(&m, &data, 10, Objective::Nll, 200, 1).unwrap();
    (
        mse < 1e-4 && nll < 1e-4,
        format!("hidden 8, horizon 10, autoregressive: MSE {mse:.2e}, NLL {nll:.2e}"),
    )
}

fn ac4() -> (bool, String) {
    let run = run_cubic(&CubicExperimentConfig::default()).unwrap();
    let r = &run.report;
    (
        r.epi_ratio >= 3.0 && r.worst_ale_factor <= 2.0,
        format!(
            "M={}: outer/inner normalized U_epi {:.2} (need >= 3), worst per-bin U_ale factor {:.2} (need <= 2)",
            run.ensemble.len(),
            r.epi_ratio,
            r.worst_ale_factor
        ),
    )
}

fn brute_matching(model: &StructuralModel, eqs: &[usize]) -> usize {
    fn go(i: usize, used: u64, rows: &[Vec<usize>], memo: &mut HashMap<(usize, u64), usize>) -> usize {
        if i == rows.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, used)) {
            return v;
        }
        let mut best = go(i + 1, used, rows, memo);
        for &v in &rows[i] {
            if used & (1 << v) == 0 {
                best = best.max(1 + go(i + 1, used | (1 << v), rows, memo));
            }
        }
        memo.insert((i, used), best);
        best
    }
    let rows: Vec<Vec<usize>> = eqs.iter().map(|&e| model.equations[e].unknowns.clone()).collect();
    go(0, 0, &rows, &mut HashMap::new())
}

fn brute_msos(model: &StructuralModel) -> Vec<Vec<usize>> {
    let n = model.n_equations();
    let bits = |m: u32| (0..n).filter(|i| m & (1 << i) != 0).collect::<Vec<_>>();
    let over: Vec<u32> = (1u32..1 << n)
        .filter(|&m| {
            let e = bits(m);
            e.len() > brute_matching(model, &e)
        })
        .collect();
    let mut out: Vec<Vec<usize>> = over
        .iter()
        .filter(|&&m| !over.iter().any(|&o| o != m && o & m == o))
        .map(|&m| bits(m))
        .collect();
    out.sort();
    out
}

fn isolable_pairs(fsm: &FaultSignatureMatrix) -> usize {
    let iso = isolability(fsm);
    let n = iso.size();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && !iso.get(i, j)).count()
}

fn ac5() -> [(bool, String); 2] {
    let model = three_tank_model();
    let mut family = enumerate_msos(&model);
    family.iter_mut().for_each(|m| m.sort());
    family.sort();
    let oracle = brute_msos(&model);
    let a = (
        family == oracle,
        format!("{} MSOs enumerated, brute-force subset oracle finds {}", family.len(), oracle.len()),
    );
    let full = fault_signature(&model, &family);
    let target = isolable_pairs(&full);
    let mut best = (0usize, false);
    let k = family.len();
    for x in 0..k {
        for y in x + 1..k {
            for z in y + 1..k {
                let sub = full.select_rows(&[x, y, z]);
                let detect = sub.detectable().iter().all(|&d| d);
                let p = isolable_pairs(&sub);
                if (p, detect) > best {
                    best = (p, detect);
                }
            }
        }
    }
    let b = (
        best.0 == target && best.1,
        format!(
            "best 3-set selection isolates {} of the family's {target} ordered pairs (all faults detectable: {}); \
             four incomparable fault classes need at least 4 tests",
            best.0, best.1
        ),
    );
    [a, b]
}

fn ac6() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..200 {
        let nf = rng.gen_range(1..=8);
        let nr = rng.gen_range(1..=6);
        let rows: Vec<Vec<bool>> = (0..nr)
            .map(|_| {
                let mut r: Vec<bool> = (0..nf).map(|_| rng.gen_bool(0.4)).collect();
                if !r.iter().any(|&b| b) {
                    r[rng.gen_range(0..nf)] = true;
                }
                r
            })
            .collect();
        let fsm = FaultSignatureMatrix::new((0..nf).map(|j| format!("f{j}")).collect(), rows.clone());
        let alarms: Vec<bool> = (0..nr).map(|_| rng.gen_bool(0.5)).collect();
        let ood: Vec<bool> = (0..nr).map(|_| rng.gen_bool(0.2)).collect();
        let got = minimal_diagnoses(&alarms, &ood, &fsm).unwrap().diagnoses;
        // exhaustive: subsets hitting every active conflict, then keep minimal ones
        let conflicts: Vec<u32> = (0..nr)
            .filter(|&i| alarms[i] && !ood[i])
            .map(|i| (0..nf).filter(|&j| rows[i][j]).map(|j| 1u32 << j).sum())
            .collect();
        let hits: Vec<u32> = (0u32..1 << nf).filter(|&s| conflicts.iter().all(|&c| c & s != 0)).collect();
        let mut want: Vec<Vec<usize>> = hits
            .iter()
            .filter(|&&s| !hits.iter().any(|&o| o != s && o & s == o))
            .map(|&s| (0..nf).filter(|j| s & (1 << j) != 0).collect())
            .collect();
        want.sort();
        if got != want {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("200 random instances, {mismatches} mismatches against exhaustive enumeration"))
}

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/two_tank.toml")
}

fn files_under(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn main() {
    let mut outcomes = Vec::new();
    let t = Instant::now();
    let (p, d) = ac1();
    report(&mut outcomes, "AC1", p, d, t);
    let t = Instant::now();
    let (p, d) = ac2();
    report(&mut outcomes, "AC2", p, d, t);
    let t = Instant::now();
    let (p, d) = ac3();
    report(&mut outcomes, "AC3", p, d, t);
    let t = Instant::now();
    let (p, d) = ac4();
    report(&mut outcomes, "AC4", p, d, t);
    let t = Instant::now();
    let [(pa, da), (pb, db)] = ac5();
    report(&mut outcomes, "AC5a", pa, da, t);
    report(&mut outcomes, "AC5b", pb, db, t);
    let t = Instant::now();
    let (p, d) = ac6();
    report(&mut outcomes, "AC6", p, d, t);

    // AC7-AC9 share one trained two-tank experiment.
    let t = Instant::now();
    let cfg = ExperimentConfig::load(&config_path()).expect("configs/two_tank.toml");
    let a = analyze(&cfg).unwrap();
    let data = load_data(&cfg, None).unwrap();
    let (trained, _) = train_residuals(&cfg, &a, &data).unwrap();
    println!(
        "       two-tank: {} residuals, M = {}, trained in {:.1?}",
        trained.len(),
        cfg.ensemble.members,
        t.elapsed()
    );
    let ev = evaluate(&cfg, &a, &trained, &data).unwrap();

    let t7 = Instant::now();
    let nf = ev.decisions.iter().find(|s| s.name == NOMINAL_LABEL).unwrap();
    let (alarms, total) = nf.residuals.iter().fold((0, 0), |(a, n), r| {
        (a + r.decision.iter().filter(|&&d| d == Decision::FaultDetected).count(), n + r.len())
    });
    let held_out = 100.0 * alarms as f64 / total as f64;
    let (train, _) = data.split(cfg.simulation.train_fraction);
    let mut own = (0usize, 0usize);
    for tr in &trained {
        let policy = DecisionPolicy {
            threshold: Threshold::Fixed { j: tr.j_fixed },
            epsilon: None,
        };
        for ds in &train {
            let trace = tr.ensemble.predict(ds, cfg.horizon()).unwrap();
            let d = DecisionTrace::decide(&trace, &policy).unwrap();
            own.0 += d.alarms().filter(|&b| b).count();
            own.1 += d.len();
        }
    }
    let own_rate = 100.0 * own.0 as f64 / own.1 as f64;
    report(
        &mut outcomes,
        "AC7",
        held_out <= 3.0 && own_rate <= 2.0,
        format!(
            "held-out nominal FaultDetected {held_out:.2}% (need <= 3); fixed baseline on its training trace \
             {own_rate:.2}% (need <= 2)"
        ),
        t7,
    );

    let t8 = Instant::now();
    let defs: Vec<_> = data.scenarios.iter().map(|s| s.def.clone()).collect();
    let rows = ablation_rows(
        &cfg.hash(),
        &ev.traces,
        &defs,
        &trained,
        &cfg.decision.config().unwrap(),
        &a.fsm,
        &a.isolability,
    )
    .unwrap();
    for line in ablation_table(&rows).lines() {
        println!("       {line}");
    }
    let m = |i: usize| &rows[i].metrics;
    let pass8 = m(0).s_fa < m(3).s_fa && m(0).p_d < m(3).p_d && m(1).s_fa >= m(0).s_fa && m(2).s_fa >= m(0).s_fa;
    report(
        &mut outcomes,
        "AC8",
        pass8,
        format!(
            "S_FA T1 {:.3} < T4 {:.3}; p_D T1 {:.3} < T4 {:.3}; S_FA T2 {:.3} and T3 {:.3} >= T1",
            m(0).s_fa,
            m(3).s_fa,
            m(0).p_d,
            m(3).p_d,
            m(1).s_fa,
            m(2).s_fa
        ),
        t8,
    );

    let t9 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (da, db) = (dir.path().join("a"), dir.path().join("b"));
    write_evaluation(&da, &ev).unwrap();
    let again = evaluate(&cfg, &a, &trained, &data).unwrap();
    write_evaluation(&db, &again).unwrap();
    let (fa, fb) = (files_under(&da), files_under(&db));
    report(
        &mut outcomes,
        "AC9",
        !fa.is_empty() && fa == fb,
        format!("{} evaluation files, byte-identical across runs: {}", fa.len(), fa == fb),
        t9,
    );

    let unexpected: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.pass && !KNOWN_UNATTAINABLE.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let known: Vec<&Outcome> = outcomes.iter().filter(|o| !o.pass && KNOWN_UNATTAINABLE.contains(&o.id)).collect();
    println!(
        "{} of {} criteria pass",
        outcomes.iter().filter(|o| o.pass).count(),
        outcomes.len()
    );
    for o in known {
        println!("known unattainable: {} ({})", o.id, o.detail);
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
