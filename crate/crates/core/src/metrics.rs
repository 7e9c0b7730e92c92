//! Residual-level and diagnosis-level performance matrices and the scalar
//! comparison metrics. All probabilities are reported in percent.

use serde::{Deserialize, Serialize};

use crate::decision::{single_fault_diagnoses, Decision, DecisionTrace, SingleFaultDiagnosis};
use crate::error::{MetricsError, Result};
use crate::simulator::NOMINAL_LABEL;
use crate::structural::{FaultSignatureMatrix, IsolabilityMatrix};
use crate::util::{csv_bytes, fmt_f64};

/// Decision traces of every residual on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDecisions {
    pub name: String,
    /// True mode: a fault id or `NF`.
    pub true_mode: String,
    /// Samples before this time are skipped in faulty scenarios.
    pub onset: Option<f64>,
    /// One trace per residual, in signature-matrix row order.
    pub residuals: Vec<DecisionTrace>,
}

impl ScenarioDecisions {
    pub fn is_nominal(&self) -> bool {
        self.true_mode == NOMINAL_LABEL
    }

    fn len(&self) -> Result<usize, MetricsError> {
        let n = self.residuals.first().map_or(0, |r| r.len());
        if self.residuals.iter().any(|r| r.len() != n || r.t != self.residuals[0].t) {
            return Err(MetricsError::Shape(format!("residual traces of `{}` are not aligned", self.name)));
        }
        Ok(n)
    }

    /// Sample indices that enter the probabilities: all samples for nominal
    /// scenarios, post-onset samples otherwise.
    pub fn evaluated(&self) -> Result<Vec<usize>, MetricsError> {
        let n = self.len()?;
        let t = self.residuals.first().map(|r| r.t.as_slice()).unwrap_or(&[]);
        let idx: Vec<usize> = match (self.is_nominal(), self.onset) {
            (false, Some(onset)) => (0..n).filter(|&k| t[k] >= onset).collect(),
            _ => (0..n).collect(),
        };
        if idx.is_empty() {
            return Err(MetricsError::Shape(format!("scenario `{}` has no evaluated samples", self.name)));
        }
        Ok(idx)
    }

    /// Single-fault diagnoses at every evaluated sample.
    pub fn diagnoses(&self, fsm: &FaultSignatureMatrix) -> Result<Vec<SingleFaultDiagnosis>> {
        if self.residuals.len() != fsm.n_residuals() {
            return Err(MetricsError::Shape(format!(
                "`{}` has {} residual traces, signature matrix {} rows",
                self.name,
                self.residuals.len(),
                fsm.n_residuals()
            ))
            .into());
        }
        let mut out = Vec::new();
        for k in self.evaluated()? {
            let alarms: Vec<bool> = self.residuals.iter().map(|r| r.decision[k] == Decision::FaultDetected).collect();
            let ood: Vec<bool> = self.residuals.iter().map(|r| r.decision[k] == Decision::OutOfRange).collect();
            out.push(single_fault_diagnoses(&alarms, &ood, fsm)?);
        }
        Ok(out)
    }
}

/// A labelled matrix in percent with an optional difference against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub baseline_delta: Option<Vec<Vec<f64>>>,
}

/// `s[i][j]`: alarm probability of residual `i` on scenario `j`.
pub type SensitivityMatrix = PercentMatrix;
/// `p[i][j]`: probability that mode `j` (NF first) is a diagnosis on scenario `i`.
pub type IsolationPerformanceMatrix = PercentMatrix;

impl PercentMatrix {
    /// Record `self - baseline` cell by cell.
    pub fn with_baseline(mut self, baseline: &PercentMatrix) -> Result<Self, MetricsError> {
        if baseline.rows != self.rows || baseline.cols != self.cols {
            return Err(MetricsError::Shape("baseline matrix labels differ".into()));
        }
        self.baseline_delta = Some(
            self.values
                .iter()
                .zip(&baseline.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        );
        Ok(self)
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        Some(self.values[i][j])
    }

    /// CSV with a leading label column; deltas, if any, follow as `<col>_delta`.
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut header = vec![String::new()];
        header.extend(self.cols.iter().cloned());
        if self.baseline_delta.is_some() {
            header.extend(self.cols.iter().map(|c| format!("{c}_delta")));
        }
        let rows = self.rows.iter().enumerate().map(|(i, name)| {
            let mut row = vec![name.clone()];
            row.extend(self.values[i].iter().map(|&v| fmt_f64(v)));
            if let Some(d) = &self.baseline_delta {
                row.extend(d[i].iter().map(|&v| fmt_f64(v)));
            }
            row
        });
        csv_bytes(&header, rows)
    }

    /// Aligned text table, one decimal, delta in parentheses.
    pub fn to_text(&self) -> String {
        let cell = |i: usize, j: usize| match &self.baseline_delta {
            Some(d) => format!("{:.1} ({:+.1})", self.values[i][j], d[i][j]),
            None => format!("{:.1}", self.values[i][j]),
        };
        let label_w = self.rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let widths: Vec<usize> = (0..self.cols.len())
            .map(|j| {
                (0..self.rows.len())
                    .map(|i| cell(i, j).len())
                    .chain(std::iter::once(self.cols[j].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = format!("{:label_w$}", "");
        for (c, w) in self.cols.iter().zip(&widths) {
            out.push_str(&format!("  {c:>w$}"));
        }
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(&format!("{r:label_w$}"));
            for (j, w) in widths.iter().enumerate() {
                out.push_str(&format!("  {:>w$}", cell(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

fn percent(hits: usize, total: usize) -> f64 {
    100.0 * hits as f64 / total as f64
}

/// Share of evaluated samples with decision FaultDetected, per residual and
/// scenario. OutOfRange counts as no alarm.
pub fn sensitivity_matrix(residual_names: &[String], scenarios: &[ScenarioDecisions]) -> Result<SensitivityMatrix> {
    let mut values = vec![vec![0.0; scenarios.len()]; residual_names.len()];
    for (j, scn) in scenarios.iter().enumerate() {
        if scn.residuals.len() != residual_names.len() {
            return Err(MetricsError::Shape(format!(
                "`{}` has {} residual traces for {} residuals",
                scn.name,
                scn.residuals.len(),
                residual_names.len()
            ))
            .into());
        }
        let idx = scn.evaluated()?;
        for (i, tr) in scn.residuals.iter().enumerate() {
            let hits = idx.iter().filter(|&&k| tr.decision[k] == Decision::FaultDetected).count();
            values[i][j] = percent(hits, idx.len());
        }
    }
    Ok(PercentMatrix {
        rows: residual_names.to_vec(),
        cols: scenarios.iter().map(|s| s.name.clone()).collect(),
        values,
        baseline_delta: None,
    })
}

fn check_label(scn: &ScenarioDecisions, fsm: &FaultSignatureMatrix) -> Result<(), MetricsError> {
    if scn.is_nominal() || fsm.faults.contains(&scn.true_mode) {
        Ok(())
    } else {
        Err(MetricsError::Unlabeled(scn.name.clone()))
    }
}

/// Rows: scenarios. Columns: NF then every fault of `fsm`.
pub fn isolation_performance(
    scenarios: &[ScenarioDecisions],
    fsm: &FaultSignatureMatrix,
) -> Result<IsolationPerformanceMatrix> {
    let mut values = Vec::with_capacity(scenarios.len());
    for scn in scenarios {
        check_label(scn, fsm)?;
        let diags = scn.diagnoses(fsm)?;
        let n = diags.len();
        let mut row = vec![percent(diags.iter().filter(|d| d.nf).count(), n)];
        for j in 0..fsm.n_faults() {
            row.push(percent(diags.iter().filter(|d| d.faults[j]).count(), n));
        }
        values.push(row);
    }
    let mut cols = vec![NOMINAL_LABEL.to_string()];
    cols.extend(fsm.faults.iter().cloned());
    Ok(PercentMatrix {
        rows: scenarios.iter().map(|s| s.name.clone()).collect(),
        cols,
        values,
        baseline_delta: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub config_hash: String,
    pub s_fa: f64,
    pub s_md: f64,
    pub p_fa: f64,
    pub p_md: f64,
    pub p_d: f64,
    /// Share of FaultDetected decisions over all residual samples of the
    /// nominal scenarios.
    pub nominal_alarm_rate: f64,
}

/// The five scalar metrics. Sensitivity columns and isolation rows are the
/// scenarios; each fault scenario maps to its true fault's signature column.
/// `scenarios` supplies the true modes in the same order.
pub fn scalar_metrics(
    sens: &SensitivityMatrix,
    iso: &IsolationPerformanceMatrix,
    scenarios: &[ScenarioDecisions],
    fsm: &FaultSignatureMatrix,
    isolability: &IsolabilityMatrix,
) -> Result<MetricsReport> {
    if sens.cols.len() != scenarios.len() || iso.rows.len() != scenarios.len() {
        return Err(MetricsError::Shape("matrices do not match the scenario list".into()).into());
    }
    if sens.rows.len() != fsm.n_residuals() || iso.cols.len() != fsm.n_faults() + 1 {
        return Err(MetricsError::Shape("matrices do not match the signature matrix".into()).into());
    }
    if isolability.faults != fsm.faults {
        return Err(MetricsError::Shape("isolability and signature fault lists differ".into()).into());
    }
    let fault_col = |scn: &ScenarioDecisions| fsm.faults.iter().position(|f| *f == scn.true_mode);
    let (mut sum0, mut n0, mut sum1, mut n1) = (0.0, 0usize, 0.0, 0usize);
    for (j, scn) in scenarios.iter().enumerate() {
        check_label(scn, fsm)?;
        let Some(col) = fault_col(scn) else { continue };
        for i in 0..fsm.n_residuals() {
            if fsm.get(i, col) {
                sum1 += sens.values[i][j];
                n1 += 1;
            } else {
                sum0 += sens.values[i][j];
                n0 += 1;
            }
        }
    }
    if n0 == 0 {
        return Err(MetricsError::Degenerate("S_FA").into());
    }
    if n1 == 0 {
        return Err(MetricsError::Degenerate("S_MD").into());
    }

    let nominal: Vec<usize> = (0..scenarios.len()).filter(|&k| scenarios[k].is_nominal()).collect();
    let faulty: Vec<(usize, usize)> = (0..scenarios.len())
        .filter_map(|k| fault_col(&scenarios[k]).map(|c| (k, c)))
        .collect();
    if nominal.is_empty() {
        return Err(MetricsError::MissingScenario("nominal").into());
    }
    if faulty.is_empty() {
        return Err(MetricsError::MissingScenario("fault").into());
    }
    let p_nf_nominal = nominal.iter().map(|&k| iso.values[k][0]).sum::<f64>() / nominal.len() as f64;
    let n_f = faulty.len() as f64;
    let p_md = faulty.iter().map(|&(k, _)| iso.values[k][0]).sum::<f64>() / n_f;
    let mut p_d = 0.0;
    for &(k, i) in &faulty {
        let detected = 1.0 - iso.values[k][0] / 100.0;
        let miss: f64 = (0..fsm.n_faults())
            .filter(|&j| isolability.get(i, j))
            .map(|j| (iso.values[k][j + 1] / 100.0 - 1.0).abs())
            .sum();
        p_d += detected * miss;
    }
    p_d *= 100.0 / (n_f * n_f);

    let (mut hits, mut total) = (0usize, 0usize);
    for &k in &nominal {
        for tr in &scenarios[k].residuals {
            hits += tr.alarms().filter(|&a| a).count();
            total += tr.len();
        }
    }
    Ok(MetricsReport {
        scenario: String::new(),
        config_hash: String::new(),
        s_fa: sum0 / n0 as f64,
        s_md: 100.0 - sum1 / n1 as f64,
        p_fa: 100.0 - p_nf_nominal,
        p_md,
        p_d,
        nominal_alarm_rate: if total == 0 { 0.0 } else { percent(hits, total) },
    })
}

/// All matrices and scalars of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub sensitivity: SensitivityMatrix,
    pub isolation: IsolationPerformanceMatrix,
    pub metrics: MetricsReport,
}

/// Build every matrix and the scalar report from decision traces.
pub fn evaluate_decisions(
    residual_names: &[String],
    scenarios: &[ScenarioDecisions],
    fsm: &FaultSignatureMatrix,
    isolability: &IsolabilityMatrix,
) -> Result<EvaluationReport> {
    let sensitivity = sensitivity_matrix(residual_names, scenarios)?;
    let isolation = isolation_performance(scenarios, fsm)?;
    let metrics = scalar_metrics(&sensitivity, &isolation, scenarios, fsm, isolability)?;
    Ok(EvaluationReport {
        sensitivity,
        isolation,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_table_aligns_with_deltas() {
        let m = PercentMatrix {
            rows: vec!["r1".into(), "r10".into()],
            cols: vec!["f1".into()],
            values: vec![vec![100.0], vec![2.25]],
            baseline_delta: None,
        };
        let b = PercentMatrix {
            values: vec![vec![90.0], vec![5.0]],
            ..m.clone()
        };
        let t = m.with_baseline(&b).unwrap().to_text();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[1], "r1   100.0 (+10.0)");
        assert_eq!(lines[2], "r10     2.2 (-2.8)");
        assert!(lines.iter().all(|l| l.len() == lines[1].len()));
    }
}
