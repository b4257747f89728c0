//! JSON schemas for problem files and command outputs.
//!
//! Matrices are accepted either as nested row arrays `[[a, b], [c, d]]` or
//! as `{"dim": n, "data": [...]}` in row-major order, and are always written
//! as nested row arrays.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::admissible::CrossCovariance;
use crate::audit::{AuditConfig, AuditReport, SampleSource};
use crate::error::{FusionError, Result};
use crate::fusion::{FusionParameter, FusionResult, SplitEstimate};
use crate::optimize::{CostFunction, OmegaOptimum};
use crate::spd::{matrix_rows, validate_spd, Tolerances};
use crate::volume::DirectionAnalysis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Rows(Vec<Vec<f64>>),
    Flat { dim: usize, data: Vec<f64> },
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self::Rows(matrix_rows(m))
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self {
            Self::Rows(rows) => {
                let n = rows.len();
                if n == 0 {
                    return Err(FusionError::InvalidInput("empty matrix".into()));
                }
                if let Some(r) = rows.iter().find(|r| r.len() != n) {
                    return Err(FusionError::NotSquare {
                        rows: n,
                        cols: r.len(),
                    });
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            Self::Flat { dim, data } => {
                if *dim == 0 || data.len() != dim * dim {
                    return Err(FusionError::InvalidInput(format!(
                        "flat matrix of dim {dim} needs {} entries, found {}",
                        dim * dim,
                        data.len()
                    )));
                }
                Ok(DMatrix::from_row_slice(*dim, *dim, data))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEstimateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(rename = "P")]
    pub p: MatrixJson,
    #[serde(rename = "Q")]
    pub q: MatrixJson,
}

impl SplitEstimateJson {
    pub fn from_estimate(e: &SplitEstimate) -> Self {
        Self {
            mean: e.mean().map(|m| m.iter().copied().collect()),
            p: MatrixJson::from_matrix(e.p().matrix()),
            q: MatrixJson::from_matrix(e.q().matrix()),
        }
    }

    pub fn to_estimate(&self, tol: &Tolerances) -> Result<SplitEstimate> {
        let p = validate_spd(self.p.to_matrix()?, false, tol)?;
        let q = validate_spd(self.q.to_matrix()?, false, tol)?;
        let est = SplitEstimate::new(p, q)?;
        match &self.mean {
            Some(m) => est.with_mean(DVector::from_column_slice(m)),
            None => Ok(est),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CrossCovarianceList {
    One(MatrixJson),
    Many(Vec<MatrixJson>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "estA")]
    pub est_a: SplitEstimateJson,
    #[serde(rename = "estB")]
    pub est_b: SplitEstimateJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(rename = "P_AB", default, skip_serializing_if = "Option::is_none")]
    pub p_ab: Option<CrossCovarianceList>,
}

/// Validated contents of a [`ProblemFile`].
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: SplitEstimate,
    pub b: SplitEstimate,
    pub rho: Option<f64>,
    pub cross: Vec<CrossCovariance>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FusionError::InvalidInput(e.to_string()))
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<Problem> {
        let a = self.est_a.to_estimate(tol)?;
        let b = self.est_b.to_estimate(tol)?;
        if a.dim() != b.dim() {
            return Err(FusionError::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let mats: Vec<&MatrixJson> = match &self.p_ab {
            None => Vec::new(),
            Some(CrossCovarianceList::One(m)) => vec![m],
            Some(CrossCovarianceList::Many(ms)) => ms.iter().collect(),
        };
        let cross = mats
            .into_iter()
            .map(|m| {
                let m = m.to_matrix()?;
                if m.nrows() != a.dim() {
                    return Err(FusionError::DimensionMismatch {
                        expected: a.dim(),
                        found: m.nrows(),
                    });
                }
                Ok(CrossCovariance::new(m))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem {
            a,
            b,
            rho: self.rho,
            cross,
        })
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    matrix_rows(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionResultJson {
    pub method: String,
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
    pub bound: Vec<Vec<f64>>,
    #[serde(rename = "K_A")]
    pub k_a: Vec<Vec<f64>>,
    #[serde(rename = "K_B")]
    pub k_b: Vec<Vec<f64>>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl FusionResultJson {
    pub fn new(method: &str, r: &FusionResult) -> Self {
        let (omega, rho, gamma) = match r.parameter {
            FusionParameter::None => (None, None, None),
            FusionParameter::Omega(w) => (Some(w), None, None),
            FusionParameter::RhoOmega { rho, omega } => (Some(omega), Some(rho), None),
            FusionParameter::RhoGamma { rho, gamma } => (None, Some(rho), Some(gamma)),
        };
        Self {
            method: method.to_string(),
            mean: r.mean.as_ref().map(|m| m.iter().copied().collect()),
            bound: rows(r.bound.matrix()),
            k_a: rows(r.gains.k_a()),
            k_b: rows(r.gains.k_b()),
            omega,
            rho,
            gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeJson {
    pub omega_star: f64,
    pub cost: String,
    #[serde(rename = "J_value")]
    pub j_value: f64,
    pub bound: Vec<Vec<f64>>,
    #[serde(rename = "K_A")]
    pub k_a: Vec<Vec<f64>>,
    #[serde(rename = "K_B")]
    pub k_b: Vec<Vec<f64>>,
    #[serde(rename = "convexityExploited")]
    pub convexity_exploited: bool,
}

impl OptimizeJson {
    pub fn new(cost: &CostFunction, o: &OmegaOptimum) -> Self {
        Self {
            omega_star: o.omega_star,
            cost: cost.name().to_string(),
            j_value: o.cost_value,
            bound: rows(o.result.bound.matrix()),
            k_a: rows(o.result.gains.k_a()),
            k_b: rows(o.result.gains.k_b()),
            convexity_exploited: o.convexity_exploited,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionAnalysisJson {
    pub x: Vec<f64>,
    pub case: u8,
    pub omega0: f64,
    pub g: f64,
    #[serde(rename = "P_AB")]
    pub worst_case: Vec<Vec<f64>>,
}

impl DirectionAnalysisJson {
    pub fn new(d: &DirectionAnalysis) -> Self {
        Self {
            x: d.x.iter().copied().collect(),
            case: d.case.number(),
            omega0: d.omega0,
            g: d.value,
            worst_case: rows(d.worst_case.matrix()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditWitnessJson {
    pub omega: f64,
    /// `"sampled"` or `"worstCase"`.
    pub source: String,
    /// Sample index, or the `ω` grid index for worst-case entries.
    pub index: usize,
    #[serde(rename = "P_AB")]
    pub cross: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditJson {
    pub status: String,
    pub pass: bool,
    pub omega_grid: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub deflate: Option<f64>,
    pub checked: usize,
    pub threshold: f64,
    pub worst: AuditWitnessJson,
}

impl AuditJson {
    pub fn new(config: &AuditConfig, r: &AuditReport) -> Self {
        let (source, index) = match r.worst.source {
            SampleSource::Sampled(i) => ("sampled", i),
            SampleSource::WorstCase(k) => ("worstCase", k),
        };
        Self {
            status: if r.pass { "PASS" } else { "FAIL" }.to_string(),
            pass: r.pass,
            omega_grid: config.omega_grid,
            samples: config.samples,
            seed: config.seed,
            deflate: config.deflate,
            checked: r.checked,
            threshold: r.threshold,
            worst: AuditWitnessJson {
                omega: r.worst.omega,
                source: source.to_string(),
                index,
                cross: rows(&r.worst.cross),
                min_eigenvalue: r.worst.min_eigenvalue,
                relative: r.worst.relative,
            },
        }
    }
}

/// Structured error written to stderr by the command-line front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorJson {
    pub error: String,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorJson {
    pub fn new(kind: &str, message: impl Into<String>, exit_code: i32) -> Self {
        Self {
            error: kind.to_string(),
            message: message.into(),
            exit_code,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{sample_a, sample_b};

    const SAMPLE: &str = r#"{
        "estA": {"P": [[1,-1],[-1,4]], "Q": [[1,0],[0,4]]},
        "estB": {"mean": [1, 2], "P": {"dim": 2, "data": [9,2,2,1]}, "Q": [[4,0],[0,2]]},
        "P_AB": [[2,0],[-4.5,-1]]
    }"#;

    #[test]
    fn parses_both_matrix_forms() {
        let p = ProblemFile::parse(SAMPLE).unwrap().validate(&Tolerances::default()).unwrap();
        assert_eq!(p.a.c(), sample_a().c());
        assert_eq!(p.b.c(), sample_b().c());
        assert_eq!(p.cross.len(), 1);
        assert_eq!(p.cross[0].matrix()[(1, 0)], -4.5);
        assert!(p.rho.is_none());
    }

    #[test]
    fn list_of_cross_covariances() {
        let text = SAMPLE.replace(r#""P_AB": [[2,0],[-4.5,-1]]"#, r#""P_AB": [[[0,0],[0,0]], [[1,0],[0,1]]]"#);
        let p = ProblemFile::parse(&text).unwrap().validate(&Tolerances::default()).unwrap();
        assert_eq!(p.cross.len(), 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad = SAMPLE.replace("[[1,-1],[-1,4]]", "[[1,2],[2,1]]");
        let err = ProblemFile::parse(&bad).unwrap().validate(&Tolerances::default()).unwrap_err();
        assert_eq!(err.kind(), "NotPositiveSemiDefinite");
        let ragged = SAMPLE.replace("[[1,-1],[-1,4]]", "[[1,-1],[-1]]");
        let err = ProblemFile::parse(&ragged).unwrap().validate(&Tolerances::default()).unwrap_err();
        assert_eq!(err.kind(), "NotSquare");
        assert_eq!(ProblemFile::parse("{").unwrap_err().kind(), "InvalidInput");
    }

    #[test]
    fn problem_round_trip() {
        let file = ProblemFile::parse(SAMPLE).unwrap();
        let text = serde_json::to_string(&file).unwrap();
        assert_eq!(ProblemFile::parse(&text).unwrap(), file);
    }
}
