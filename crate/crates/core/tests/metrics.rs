use fdi_ensemble::decision::{single_fault_diagnoses, Decision, DecisionTrace};
use fdi_ensemble::metrics::{
    evaluate_decisions, isolation_performance, scalar_metrics, sensitivity_matrix, ScenarioDecisions,
};
use fdi_ensemble::structural::{isolability, FaultSignatureMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trace(decisions: Vec<Decision>) -> DecisionTrace {
    let n = decisions.len();
    DecisionTrace {
        t: (0..n).map(|k| k as f64).collect(),
        r: vec![0.0; n],
        j: vec![1.0; n],
        u_epi: vec![0.0; n],
        decision: decisions,
    }
}

fn alarms_at(n: usize, idx: impl IntoIterator<Item = usize>) -> DecisionTrace {
    let mut d = vec![Decision::NoConclusion; n];
    for k in idx {
        d[k] = Decision::FaultDetected;
    }
    trace(d)
}

fn scenario(name: &str, mode: &str, residuals: Vec<DecisionTrace>) -> ScenarioDecisions {
    ScenarioDecisions {
        name: name.into(),
        true_mode: mode.into(),
        onset: None,
        residuals,
    }
}

fn fsm(rows: Vec<Vec<bool>>) -> FaultSignatureMatrix {
    let n = rows[0].len();
    FaultSignatureMatrix::new((1..=n).map(|j| format!("f{j}")).collect(), rows)
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("r{i}")).collect()
}

#[test]
fn sensitivity_counts() {
    let all = trace(vec![Decision::FaultDetected; 100]);
    let ood = trace(vec![Decision::OutOfRange; 100]);
    let some = alarms_at(100, 0..37);
    let s = sensitivity_matrix(&names(3), &[scenario("f1", "f1", vec![all, ood, some])]).unwrap();
    assert_eq!(s.values, vec![vec![100.0], vec![0.0], vec![37.0]]);
}

#[test]
fn post_onset_samples_only_in_fault_scenarios() {
    let tr = alarms_at(10, 0..5);
    let mut f = scenario("f1", "f1", vec![tr.clone()]);
    f.onset = Some(5.0);
    let mut nf = scenario("NF", "NF", vec![tr]);
    nf.onset = Some(5.0);
    let s = sensitivity_matrix(&names(1), &[nf, f]).unwrap();
    assert_eq!(s.values, vec![vec![50.0, 0.0]]);
}

#[test]
fn hand_computed_two_by_two() {
    let t = fsm(vec![vec![true, false], vec![true, true]]);
    let iso = isolability(&t);
    assert_eq!(iso.entries, vec![vec![true, false], vec![true, true]]);
    let scns = vec![
        scenario("NF", "NF", vec![alarms_at(10, [0]), alarms_at(10, [0, 1])]),
        scenario("f1", "f1", vec![alarms_at(10, 0..8), alarms_at(10, 0..6)]),
        scenario("f2", "f2", vec![alarms_at(10, [0]), alarms_at(10, 0..9)]),
    ];
    let rep = evaluate_decisions(&names(2), &scns, &t, &iso).unwrap();
    assert_eq!(rep.sensitivity.values, vec![vec![10.0, 80.0, 10.0], vec![20.0, 60.0, 90.0]]);
    assert_eq!(
        rep.isolation.values,
        vec![vec![80.0, 100.0, 90.0], vec![20.0, 100.0, 20.0], vec![10.0, 100.0, 90.0]]
    );
    let m = rep.metrics;
    assert!((m.s_fa - 10.0).abs() < 1e-12);
    assert!((m.s_md - (100.0 - 230.0 / 3.0)).abs() < 1e-12);
    assert!((m.p_fa - 20.0).abs() < 1e-12);
    assert!((m.p_md - 15.0).abs() < 1e-12);
    assert!((m.p_d - 2.25).abs() < 1e-12, "{}", m.p_d);
    assert!((m.nominal_alarm_rate - 15.0).abs() < 1e-12);
}

#[test]
fn ideal_detector_scores_zero() {
    let t = fsm(vec![vec![true, false, true], vec![false, true, true], vec![true, true, false]]);
    let iso = isolability(&t);
    let n = 20;
    let mut scns = vec![scenario("NF", "NF", (0..3).map(|_| alarms_at(n, [])).collect())];
    for j in 0..3 {
        let res = (0..3)
            .map(|i| if t.get(i, j) { alarms_at(n, 0..n) } else { alarms_at(n, []) })
            .collect();
        scns.push(scenario(&format!("f{}", j + 1), &format!("f{}", j + 1), res));
    }
    let rep = evaluate_decisions(&names(3), &scns, &t, &iso).unwrap();
    let m = rep.metrics;
    assert_eq!((m.s_fa, m.s_md, m.p_fa, m.p_md, m.p_d), (0.0, 0.0, 0.0, 0.0, 0.0));
    for j in 0..3 {
        assert_eq!(rep.isolation.values[j + 1][j + 1], 100.0);
    }
}

#[test]
fn nominal_complement_and_silent_detector() {
    let t = fsm(vec![vec![true, false], vec![false, true]]);
    let nf = scenario("NF", "NF", vec![alarms_at(100, 0..4), alarms_at(100, [])]);
    let silent = scenario("f1", "f1", vec![alarms_at(10, []), alarms_at(10, [])]);
    let iso = isolation_performance(&[nf.clone(), silent.clone()], &t).unwrap();
    assert_eq!(iso.values[0][0], 96.0);
    assert_eq!(iso.values[1], vec![100.0, 100.0, 100.0]);
    let sens = sensitivity_matrix(&names(2), &[nf.clone(), silent.clone()]).unwrap();
    let m = scalar_metrics(&sens, &iso, &[nf, silent], &t, &isolability(&t)).unwrap();
    assert!((m.p_fa - 4.0).abs() < 1e-12);
}

#[test]
fn degenerate_and_unlabeled_inputs_fail() {
    let ones = fsm(vec![vec![true, true]]);
    let scns = vec![
        scenario("NF", "NF", vec![alarms_at(5, [])]),
        scenario("f1", "f1", vec![alarms_at(5, [])]),
    ];
    let err = evaluate_decisions(&names(1), &scns, &ones, &isolability(&ones)).unwrap_err();
    assert!(err.to_string().contains("S_FA"), "{err}");
    let zeros = fsm(vec![vec![false, false]]);
    let err = evaluate_decisions(&names(1), &scns, &zeros, &isolability(&zeros)).unwrap_err();
    assert!(err.to_string().contains("S_MD"), "{err}");
    let t = fsm(vec![vec![true, false]]);
    let bad = vec![scenario("x", "fX", vec![alarms_at(5, [])])];
    assert!(isolation_performance(&bad, &t).is_err());
}

fn random_decisions(rng: &mut ChaCha8Rng, n: usize) -> DecisionTrace {
    trace(
        (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => Decision::OutOfRange,
                1 => Decision::NoConclusion,
                _ => Decision::FaultDetected,
            })
            .collect(),
    )
}

#[test]
fn isolation_matrix_replays_from_single_fault_diagnoses() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let (nr, nf, n) = (rng.gen_range(1..5), rng.gen_range(1..5), rng.gen_range(1..30));
        let rows: Vec<Vec<bool>> = (0..nr).map(|_| (0..nf).map(|_| rng.gen_bool(0.5)).collect()).collect();
        let t = fsm(rows);
        let scns: Vec<ScenarioDecisions> = (0..nf)
            .map(|j| scenario(&format!("s{j}"), &format!("f{}", j + 1), (0..nr).map(|_| random_decisions(&mut rng, n)).collect()))
            .collect();
        let iso = isolation_performance(&scns, &t).unwrap();
        for (k, scn) in scns.iter().enumerate() {
            let mut counts = vec![0usize; nf + 1];
            for s in 0..n {
                let alarms: Vec<bool> = scn.residuals.iter().map(|r| r.decision[s] == Decision::FaultDetected).collect();
                let ood: Vec<bool> = scn.residuals.iter().map(|r| r.decision[s] == Decision::OutOfRange).collect();
                let d = single_fault_diagnoses(&alarms, &ood, &t).unwrap();
                counts[0] += usize::from(d.nf);
                for j in 0..nf {
                    counts[j + 1] += usize::from(d.faults[j]);
                }
            }
            for j in 0..=nf {
                assert!((iso.values[k][j] - 100.0 * counts[j] as f64 / n as f64).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn metrics_are_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = fsm(vec![vec![true, false, true], vec![false, true, true], vec![true, true, false]]);
    let mut scns = vec![scenario("NF", "NF", (0..3).map(|_| random_decisions(&mut rng, 40)).collect())];
    for j in 1..=3 {
        scns.push(scenario(&format!("f{j}"), &format!("f{j}"), (0..3).map(|_| random_decisions(&mut rng, 40)).collect()));
    }
    let a = evaluate_decisions(&names(3), &scns, &t, &isolability(&t)).unwrap().metrics;

    // Reverse both faults and residuals consistently.
    let rows: Vec<Vec<bool>> = (0..3).rev().map(|i| (0..3).rev().map(|j| t.get(i, j)).collect()).collect();
    let t2 = FaultSignatureMatrix::new(vec!["f3".into(), "f2".into(), "f1".into()], rows);
    let mut scns2: Vec<ScenarioDecisions> = vec![scns[0].clone()];
    scns2.extend(scns[1..].iter().rev().cloned());
    for s in &mut scns2 {
        s.residuals.reverse();
    }
    let r2: Vec<String> = names(3).into_iter().rev().collect();
    let b = evaluate_decisions(&r2, &scns2, &t2, &isolability(&t2)).unwrap().metrics;
    for (x, y) in [(a.s_fa, b.s_fa), (a.s_md, b.s_md), (a.p_fa, b.p_fa), (a.p_md, b.p_md), (a.p_d, b.p_d)] {
        assert!((x - y).abs() < 1e-9, "{a:?} {b:?}");
    }
}
