//! Consistency-based diagnosis from residual alarm patterns.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::DecisionError;
use crate::structural::FaultSignatureMatrix;

/// Minimal diagnoses as sorted fault-index sets. The single empty set is the
/// no-fault mode NF.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisSet {
    pub diagnoses: Vec<Vec<usize>>,
}

impl DiagnosisSet {
    pub fn nf() -> Self {
        Self {
            diagnoses: vec![Vec::new()],
        }
    }

    pub fn contains_nf(&self) -> bool {
        self.diagnoses.iter().any(|d| d.is_empty())
    }

    /// Diagnoses with fault names; NF is spelled out.
    pub fn named(&self, faults: &[String]) -> Vec<Vec<String>> {
        self.diagnoses
            .iter()
            .map(|d| {
                if d.is_empty() {
                    vec![crate::simulator::NOMINAL_LABEL.to_string()]
                } else {
                    d.iter().map(|&j| faults[j].clone()).collect()
                }
            })
            .collect()
    }
}

/// Single-fault consistency of one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleFaultDiagnosis {
    pub nf: bool,
    pub faults: Vec<bool>,
}

fn check_shapes(alarms: &[bool], ood: &[bool], fsm: &FaultSignatureMatrix) -> Result<(), DecisionError> {
    if alarms.len() != fsm.n_residuals() || ood.len() != fsm.n_residuals() {
        return Err(DecisionError::Shape(format!(
            "{} alarms / {} ood flags for {} residuals",
            alarms.len(),
            ood.len(),
            fsm.n_residuals()
        )));
    }
    Ok(())
}

/// Conflict sets of alarming residuals whose evidence is not rejected.
pub fn conflicts(alarms: &[bool], ood: &[bool], fsm: &FaultSignatureMatrix) -> Result<Vec<Vec<usize>>, DecisionError> {
    check_shapes(alarms, ood, fsm)?;
    let mut out = Vec::new();
    for i in 0..fsm.n_residuals() {
        if alarms[i] && !ood[i] {
            let c: Vec<usize> = (0..fsm.n_faults()).filter(|&j| fsm.get(i, j)).collect();
            if c.is_empty() {
                return Err(DecisionError::Unexplainable(i));
            }
            out.push(c);
        }
    }
    Ok(out)
}

/// Minimal hitting sets, built one conflict at a time with superset pruning.
/// Output sets are sorted, and the list is in lexicographic order.
pub fn minimal_hitting_sets(conflicts: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut hs: Vec<BTreeSet<usize>> = vec![BTreeSet::new()];
    for c in conflicts {
        let mut kept: Vec<BTreeSet<usize>> = Vec::new();
        let mut extended: Vec<BTreeSet<usize>> = Vec::new();
        for h in hs {
            if c.iter().any(|f| h.contains(f)) {
                kept.push(h);
            } else {
                for &f in c {
                    let mut e = h.clone();
                    e.insert(f);
                    extended.push(e);
                }
            }
        }
        // Sets that already hit `c` stay minimal. Distinct extensions are
        // never nested, so each is checked only against those sets.
        extended.sort();
        extended.dedup();
        let mut next = kept.clone();
        for e in extended {
            if !kept.iter().any(|k| k.is_subset(&e)) {
                next.push(e);
            }
        }
        hs = next;
    }
    let mut out: Vec<Vec<usize>> = hs.into_iter().map(|s| s.into_iter().collect()).collect();
    out.sort();
    out
}

/// Minimal diagnoses of one sample. OOD residuals contribute no conflict.
pub fn minimal_diagnoses(alarms: &[bool], ood: &[bool], fsm: &FaultSignatureMatrix) -> Result<DiagnosisSet, DecisionError> {
    let cs = conflicts(alarms, ood, fsm)?;
    Ok(DiagnosisSet {
        diagnoses: minimal_hitting_sets(&cs),
    })
}

/// `f_j` is a diagnosis iff every active conflict contains it; NF iff there
/// is no active conflict.
pub fn single_fault_diagnoses(
    alarms: &[bool],
    ood: &[bool],
    fsm: &FaultSignatureMatrix,
) -> Result<SingleFaultDiagnosis, DecisionError> {
    check_shapes(alarms, ood, fsm)?;
    let active: Vec<usize> = (0..fsm.n_residuals()).filter(|&i| alarms[i] && !ood[i]).collect();
    Ok(SingleFaultDiagnosis {
        nf: active.is_empty(),
        faults: (0..fsm.n_faults())
            .map(|j| active.iter().all(|&i| fsm.get(i, j)))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fsm(rows: &[&[u8]]) -> FaultSignatureMatrix {
        let n = rows[0].len();
        FaultSignatureMatrix::new(
            (0..n).map(|j| format!("f{}", j + 1)).collect(),
            rows.iter().map(|r| r.iter().map(|&b| b == 1).collect()).collect(),
        )
    }

    #[test]
    fn no_alarms_is_nf() {
        let m = fsm(&[&[1, 1, 0], &[0, 1, 1]]);
        let d = minimal_diagnoses(&[false, false], &[false, false], &m).unwrap();
        assert_eq!(d, DiagnosisSet::nf());
        let s = single_fault_diagnoses(&[false, false], &[false, false], &m).unwrap();
        assert!(s.nf && s.faults.iter().all(|&b| b));
    }

    #[test]
    fn two_overlapping_conflicts() {
        let m = fsm(&[&[1, 1, 0], &[0, 1, 1]]);
        let d = minimal_diagnoses(&[true, true], &[false, false], &m).unwrap();
        assert_eq!(d.diagnoses, vec![vec![0, 2], vec![1]]);
        assert_eq!(d.named(&m.faults), vec![vec!["f1", "f3"], vec!["f2"]]);
        let d = minimal_diagnoses(&[true, false], &[false, false], &m).unwrap();
        assert_eq!(d.diagnoses, vec![vec![0], vec![1]]);
    }

    #[test]
    fn ood_evidence_is_dropped() {
        let m = fsm(&[&[1, 1, 0], &[0, 1, 1]]);
        let d = minimal_diagnoses(&[true, true], &[false, true], &m).unwrap();
        assert_eq!(d.diagnoses, vec![vec![0], vec![1]]);
    }

    #[test]
    fn empty_row_alarm_is_unexplainable() {
        let m = fsm(&[&[0, 0], &[1, 0]]);
        assert_eq!(
            minimal_diagnoses(&[true, false], &[false, false], &m),
            Err(DecisionError::Unexplainable(0))
        );
        assert!(minimal_diagnoses(&[true], &[false], &m).is_err());
    }
}
