//! Three-way per-sample decisions on residuals and consistency-based
//! diagnosis from the resulting alarm patterns.

mod diagnosis;
mod normal;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use diagnosis::{
    conflicts, minimal_diagnoses, minimal_hitting_sets, single_fault_diagnoses, DiagnosisSet, SingleFaultDiagnosis,
};
pub use normal::{inv_norm_cdf, norm_cdf};

use crate::ensemble::{nearest_rank_quantile, EnsembleTrace};
use crate::error::{DecisionError, Result};
use crate::util::{csv_bytes, fmt_f64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionConfig {
    pub p_fa: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl DecisionConfig {
    /// `alpha = Φ⁻¹(1 - p_fa / 2)`.
    pub fn new(p_fa: f64, epsilon: f64) -> Result<Self, DecisionError> {
        let cfg = Self {
            p_fa,
            alpha: inv_norm_cdf(1.0 - p_fa / 2.0)?,
            epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DecisionError> {
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(DecisionError::Probability(self.p_fa));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(DecisionError::NonPositive("alpha"));
        }
        if !(self.epsilon > 0.0) {
            return Err(DecisionError::NonPositive("epsilon"));
        }
        Ok(())
    }

    pub fn policy(&self) -> DecisionPolicy {
        DecisionPolicy {
            threshold: Threshold::Adaptive { alpha: self.alpha },
            epsilon: Some(self.epsilon),
        }
    }
}

impl Default for DecisionConfig {
    fn default() -> Self {
        Self::new(0.01, 1.0).expect("default decision config")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    OutOfRange,
    NoConclusion,
    FaultDetected,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::OutOfRange => "out_of_range",
            Decision::NoConclusion => "no_conclusion",
            Decision::FaultDetected => "fault_detected",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "out_of_range" => Ok(Decision::OutOfRange),
            "no_conclusion" => Ok(Decision::NoConclusion),
            "fault_detected" => Ok(Decision::FaultDetected),
            other => Err(format!("unknown decision `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Threshold {
    /// `J = alpha * sigma_star`.
    Adaptive { alpha: f64 },
    Fixed { j: f64 },
}

/// Threshold rule plus optional OOD rejection on normalized `u_epi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionPolicy {
    pub threshold: Threshold,
    pub epsilon: Option<f64>,
}

impl DecisionPolicy {
    pub fn threshold_at(&self, sigma_star: f64) -> f64 {
        match self.threshold {
            Threshold::Adaptive { alpha } => alpha * sigma_star,
            Threshold::Fixed { j } => j,
        }
    }
}

fn finite(x: f64, name: &'static str) -> Result<(), DecisionError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(DecisionError::NonFinite(name))
    }
}

/// Adaptive threshold with OOD rejection.
pub fn classify(r: f64, sigma_star: f64, u_epi: f64, cfg: &DecisionConfig) -> Result<Decision, DecisionError> {
    classify_with(r, sigma_star, u_epi, &cfg.policy())
}

pub fn classify_with(r: f64, sigma_star: f64, u_epi: f64, policy: &DecisionPolicy) -> Result<Decision, DecisionError> {
    finite(r, "r")?;
    finite(sigma_star, "sigma_star")?;
    finite(u_epi, "u_epi")?;
    if matches!(policy.threshold, Threshold::Adaptive { .. }) && sigma_star <= 0.0 {
        return Err(DecisionError::NonPositive("sigma_star"));
    }
    if let Some(eps) = policy.epsilon {
        if u_epi > eps {
            return Ok(Decision::OutOfRange);
        }
    }
    Ok(if r.abs() > policy.threshold_at(sigma_star) {
        Decision::FaultDetected
    } else {
        Decision::NoConclusion
    })
}

/// `(1 - p_fa)` nearest-rank quantile of `|r|` over a nominal trace.
pub fn fixed_threshold(residuals: &[f64], p_fa: f64) -> Result<f64, DecisionError> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(DecisionError::Probability(p_fa));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(DecisionError::NonFinite("r"));
    }
    let abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    nearest_rank_quantile(&abs, 1.0 - p_fa).ok_or(DecisionError::Empty)
}

/// Per-sample decisions for one residual on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub j: Vec<f64>,
    pub u_epi: Vec<f64>,
    pub decision: Vec<Decision>,
}

pub const DECISION_CSV_HEADER: [&str; 5] = ["t", "r", "J", "u_epi", "decision"];

impl DecisionTrace {
    pub fn len(&self) -> usize {
        self.decision.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decision.is_empty()
    }

    pub fn decide(trace: &EnsembleTrace, policy: &DecisionPolicy) -> Result<Self, DecisionError> {
        let sigma = trace.sigma_star();
        let decision = (0..trace.len())
            .map(|i| classify_with(trace.r[i], sigma[i], trace.u_epi_norm[i], policy))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            t: trace.t.clone(),
            r: trace.r.clone(),
            j: sigma.iter().map(|&s| policy.threshold_at(s)).collect(),
            u_epi: trace.u_epi_norm.clone(),
            decision,
        })
    }

    pub fn alarms(&self) -> impl Iterator<Item = bool> + '_ {
        self.decision.iter().map(|&d| d == Decision::FaultDetected)
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let header: Vec<String> = DECISION_CSV_HEADER.iter().map(|s| s.to_string()).collect();
        let rows = (0..self.len()).map(|i| {
            vec![
                fmt_f64(self.t[i]),
                fmt_f64(self.r[i]),
                fmt_f64(self.j[i]),
                fmt_f64(self.u_epi[i]),
                self.decision[i].to_string(),
            ]
        });
        csv_bytes(&header, rows)
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(bytes);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != DECISION_CSV_HEADER {
            return Err(crate::Error::Data(format!("unexpected decision trace header {header:?}")));
        }
        let mut out = Self {
            t: vec![],
            r: vec![],
            j: vec![],
            u_epi: vec![],
            decision: vec![],
        };
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let num = |k: usize| {
                rec[k]
                    .parse::<f64>()
                    .map_err(|_| crate::Error::Data(format!("row {}, column {}: not a number", row + 1, header[k])))
            };
            out.t.push(num(0)?);
            out.r.push(num(1)?);
            out.j.push(num(2)?);
            out.u_epi.push(num(3)?);
            out.decision
                .push(rec[4].parse().map_err(|e| crate::Error::Data(format!("row {}: {e}", row + 1)))?);
        }
        Ok(out)
    }
}
