use fdi_ensemble::decision::{
    classify, classify_with, fixed_threshold, inv_norm_cdf, minimal_diagnoses, norm_cdf, single_fault_diagnoses,
    Decision, DecisionConfig, DecisionPolicy, DecisionTrace, Threshold,
};
use fdi_ensemble::structural::FaultSignatureMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Φ(z) = 1/2 + ∫_0^z φ by composite Simpson on a fine grid.
fn cdf_quadrature(z: f64) -> f64 {
    let n = 20_000;
    let h = z / n as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(z);
    for k in 1..n {
        s += pdf(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + s * h / 3.0
}

#[test]
fn alpha_constant() {
    let a = inv_norm_cdf(0.995).unwrap();
    assert!((a - 2.5758).abs() < 1e-3, "{a}");
}

#[test]
fn cdf_matches_quadrature() {
    for k in -60..=60 {
        let z = k as f64 * 0.1;
        let (a, b) = (norm_cdf(z), cdf_quadrature(z));
        assert!((a - b).abs() < 1e-13, "z={z}: {a} vs {b}");
    }
}

#[test]
fn inverse_round_trip() {
    for k in 1..=99 {
        let p = k as f64 / 100.0;
        let z = inv_norm_cdf(p).unwrap();
        assert!((cdf_quadrature(z) - p).abs() < 1e-9, "p={p}");
    }
    for p in [1e-12, 1e-8, 1e-4, 0.02425, 0.97575, 1.0 - 1e-4, 1.0 - 1e-8] {
        let z = inv_norm_cdf(p).unwrap();
        assert!((norm_cdf(z) - p).abs() < 1e-9 * p.min(1.0 - p).max(1e-3), "p={p}");
    }
}

#[test]
fn fixed_threshold_uniform_and_own_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let r: Vec<f64> = (0..50_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let j = fixed_threshold(&r, 0.01).unwrap();
    assert!((j - 0.99).abs() < 0.005, "{j}");
    let policy = DecisionPolicy {
        threshold: Threshold::Fixed { j },
        epsilon: None,
    };
    let alarms = r
        .iter()
        .filter(|&&x| classify_with(x, 1.0, 100.0, &policy).unwrap() == Decision::FaultDetected)
        .count();
    assert!(alarms as f64 <= 0.01 * r.len() as f64);
}

fn brute_minimal_hitting_sets(conflicts: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
    let hits = |m: u32| conflicts.iter().all(|c| c.iter().any(|&f| m >> f & 1 == 1));
    let all: Vec<u32> = (0..1u32 << n).filter(|&m| hits(m)).collect();
    let mut out: Vec<Vec<usize>> = all
        .iter()
        .filter(|&&m| !all.iter().any(|&k| k != m && k & m == k))
        .map(|&m| (0..n).filter(|&f| m >> f & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

fn random_instance(rng: &mut ChaCha8Rng) -> (FaultSignatureMatrix, Vec<bool>, Vec<bool>) {
    let nf = rng.gen_range(1..=8);
    let nr = rng.gen_range(1..=8);
    let rows: Vec<Vec<bool>> = (0..nr)
        .map(|_| {
            let mut row: Vec<bool> = (0..nf).map(|_| rng.gen_bool(0.4)).collect();
            let k = rng.gen_range(0..nf);
            row[k] = true;
            row
        })
        .collect();
    let fsm = FaultSignatureMatrix::new((0..nf).map(|j| format!("f{j}")).collect(), rows);
    let alarms = (0..nr).map(|_| rng.gen_bool(0.5)).collect();
    let ood = (0..nr).map(|_| rng.gen_bool(0.2)).collect();
    (fsm, alarms, ood)
}

fn active_conflicts(fsm: &FaultSignatureMatrix, alarms: &[bool], ood: &[bool]) -> Vec<Vec<usize>> {
    (0..fsm.n_residuals())
        .filter(|&i| alarms[i] && !ood[i])
        .map(|i| (0..fsm.n_faults()).filter(|&j| fsm.get(i, j)).collect())
        .collect()
}

#[test]
fn minimal_diagnoses_match_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let (fsm, alarms, ood) = random_instance(&mut rng);
        let d = minimal_diagnoses(&alarms, &ood, &fsm).unwrap();
        let oracle = brute_minimal_hitting_sets(&active_conflicts(&fsm, &alarms, &ood), fsm.n_faults());
        assert_eq!(d.diagnoses, oracle);
        assert_eq!(d.contains_nf(), !alarms.iter().zip(&ood).any(|(a, o)| *a && !o));
    }
}

#[test]
fn single_fault_diagnoses_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let (fsm, alarms, ood) = random_instance(&mut rng);
        let s = single_fault_diagnoses(&alarms, &ood, &fsm).unwrap();
        let cs = active_conflicts(&fsm, &alarms, &ood);
        assert_eq!(s.nf, cs.is_empty());
        for j in 0..fsm.n_faults() {
            assert_eq!(s.faults[j], cs.iter().all(|c| c.contains(&j)));
        }
        let d = minimal_diagnoses(&alarms, &ood, &fsm).unwrap();
        for j in 0..fsm.n_faults() {
            assert_eq!(s.faults[j] && !s.nf, d.diagnoses.contains(&vec![j]));
        }
    }
}

#[test]
fn column_match_contains_fault() {
    let fsm = FaultSignatureMatrix::new(
        vec!["f1".into(), "f2".into(), "f3".into()],
        vec![vec![true, true, false], vec![false, true, true], vec![true, false, true]],
    );
    let alarms = [true, true, false];
    let s = single_fault_diagnoses(&alarms, &[false; 3], &fsm).unwrap();
    assert_eq!(s.faults, vec![false, true, false]);
}

#[test]
fn decision_trace_csv_round_trip() {
    let tr = DecisionTrace {
        t: vec![0.0, 0.1],
        r: vec![0.25, -3.0],
        j: vec![1.0, 1.0],
        u_epi: vec![0.1, 2.0],
        decision: vec![Decision::NoConclusion, Decision::OutOfRange],
    };
    let bytes = tr.to_csv_bytes().unwrap();
    assert!(String::from_utf8_lossy(&bytes).starts_with("t,r,J,u_epi,decision\n"));
    assert_eq!(DecisionTrace::from_csv_bytes(&bytes).unwrap(), tr);
}

proptest! {
    #[test]
    fn exactly_one_branch_and_matches_eq6(
        r in -1e3f64..1e3, s in 1e-6f64..1e2, u in 0.0f64..5.0, p in 1e-4f64..0.5, eps in 0.1f64..3.0
    ) {
        let cfg = DecisionConfig::new(p, eps).unwrap();
        let d = classify(r, s, u, &cfg).unwrap();
        let expected = if u > eps {
            Decision::OutOfRange
        } else if r.abs() > cfg.alpha * s {
            Decision::FaultDetected
        } else {
            Decision::NoConclusion
        };
        prop_assert_eq!(d, expected);
    }

    #[test]
    fn scale_equivariant(r in -50f64..50.0, s in 1e-3f64..10.0, u in 0.0f64..2.0, c in 1e-3f64..1e3) {
        let cfg = DecisionConfig::default();
        // Skip measure-zero ties where rounding of c*r vs c*alpha*s could flip.
        prop_assume!((r.abs() - cfg.alpha * s).abs() > 1e-9 * r.abs().max(1.0));
        prop_assert_eq!(classify(c * r, c * s, u, &cfg).unwrap(), classify(r, s, u, &cfg).unwrap());
    }

    #[test]
    fn ood_dominates(r in -1e6f64..1e6, s in 1e-3f64..10.0, extra in 1e-9f64..10.0) {
        let cfg = DecisionConfig::default();
        prop_assert_eq!(classify(r, s, cfg.epsilon + extra, &cfg).unwrap(), Decision::OutOfRange);
    }

    #[test]
    fn adding_an_alarm_never_restores_nf(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (fsm, mut alarms, ood) = random_instance(&mut rng);
        let before = minimal_diagnoses(&alarms, &ood, &fsm).unwrap();
        let i = rng.gen_range(0..alarms.len());
        alarms[i] = true;
        let after = minimal_diagnoses(&alarms, &ood, &fsm).unwrap();
        prop_assert!(!(after.contains_nf() && !before.contains_nf()));
        if !ood[i] {
            prop_assert!(!after.contains_nf());
        }
    }
}
