//! Conservativeness sweep: checks `C_F(K_SCI(ω), P_AB) ⪯ B_SCI(ω)` over a
//! grid of `ω` and a seeded set of admissible cross-covariances.

use nalgebra::DMatrix;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::admissible::{worst_case_on, CrossCovariance, MixedSampler, SamplerMix};
use crate::error::{FusionError, Result};
use crate::fusion::{fused_covariance_matrix, sci_bound, SplitEstimate};
use crate::spd::{min_eigenvalue, spectral_scale};
use crate::volume::{touching_direction, SciPrecisionCurve};

/// Relative Loewner violation tolerated before the audit fails.
pub const AUDIT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    /// Number of equally spaced `ω` values in `[0, 1]` (at least 2).
    pub omega_grid: usize,
    /// Number of sampled cross-covariances shared by all grid points.
    pub samples: usize,
    pub seed: u64,
    /// When set, every bound is multiplied by this factor before checking.
    pub deflate: Option<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            omega_grid: 21,
            samples: 10_000,
            seed: 0,
            deflate: None,
        }
    }
}

/// Where a cross-covariance in the audit came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSource {
    Sampled(usize),
    /// Worst case for the direction touching `V*` at the given grid index.
    WorstCase(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditWitness {
    pub omega: f64,
    pub source: SampleSource,
    pub cross: DMatrix<f64>,
    /// `λ_min(B - C_F)`.
    pub min_eigenvalue: f64,
    /// `min_eigenvalue` divided by the bound's spectral scale.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub pass: bool,
    pub threshold: f64,
    pub checked: usize,
    /// The most negative (relative) slack seen; this is the witness when
    /// the audit fails.
    pub worst: AuditWitness,
}

fn omega_at(k: usize, grid: usize) -> f64 {
    k as f64 / (grid - 1) as f64
}

struct Candidate {
    source: SampleSource,
    cross: CrossCovariance,
}

fn candidates(a: &SplitEstimate, b: &SplitEstimate, config: &AuditConfig) -> Result<Vec<Candidate>> {
    let sampler = MixedSampler::new(a, b, SamplerMix::default())?;
    let mut out: Vec<Candidate> = sampler
        .sample_batch(config.samples, config.seed)
        .into_iter()
        .enumerate()
        .map(|(i, cross)| Candidate {
            source: SampleSource::Sampled(i),
            cross,
        })
        .collect();
    if a.p().is_strict() && b.p().is_strict() {
        let curve = SciPrecisionCurve::new(a.clone(), b.clone())?;
        for k in 0..config.omega_grid {
            if let Some(x) = touching_direction(&curve, omega_at(k, config.omega_grid))? {
                out.push(Candidate {
                    source: SampleSource::WorstCase(k),
                    cross: worst_case_on(&curve, &x)?.cross,
                });
            }
        }
    }
    Ok(out)
}

fn check_omega_point(
    a: &SplitEstimate,
    b: &SplitEstimate,
    omega: f64,
    deflate: f64,
    candidates: &[Candidate],
) -> Result<AuditWitness> {
    let fused = sci_bound(a, b, omega)?;
    let bound = fused.bound.matrix() * deflate;
    let scale = spectral_scale(&bound);
    let mut worst: Option<AuditWitness> = None;
    for c in candidates {
        let cf = fused_covariance_matrix(&fused.gains, a, b, &c.cross);
        let lambda = min_eigenvalue(&(&bound - cf));
        if worst.as_ref().map_or(true, |w| lambda / scale < w.relative) {
            worst = Some(AuditWitness {
                omega,
                source: c.source,
                cross: c.cross.matrix().clone(),
                min_eigenvalue: lambda,
                relative: lambda / scale,
            });
        }
    }
    Ok(worst.expect("candidate set is never empty"))
}

/// Runs the sweep. Each `ω` is independent; with the `parallel` feature the
/// grid is processed concurrently and the result is identical.
pub fn audit(a: &SplitEstimate, b: &SplitEstimate, config: &AuditConfig) -> Result<AuditReport> {
    if config.omega_grid < 2 {
        return Err(FusionError::ParameterOutOfRange {
            name: "grid",
            value: config.omega_grid as f64,
        });
    }
    let deflate = config.deflate.unwrap_or(1.0);
    if !(deflate > 0.0 && deflate.is_finite()) {
        return Err(FusionError::ParameterOutOfRange {
            name: "deflate",
            value: deflate,
        });
    }
    let mut cands = candidates(a, b, config)?;
    if cands.is_empty() {
        cands.push(Candidate {
            source: SampleSource::Sampled(0),
            cross: CrossCovariance::zeros(a.dim()),
        });
    }
    let grid: Vec<usize> = (0..config.omega_grid).collect();
    let check = |k: &usize| check_omega_point(a, b, omega_at(*k, config.omega_grid), deflate, &cands);
    #[cfg(feature = "parallel")]
    let per_omega: Vec<Result<AuditWitness>> = grid.par_iter().map(check).collect();
    #[cfg(not(feature = "parallel"))]
    let per_omega: Vec<Result<AuditWitness>> = grid.iter().map(check).collect();

    let mut worst: Option<AuditWitness> = None;
    for w in per_omega {
        let w = w?;
        if worst.as_ref().map_or(true, |cur| w.relative < cur.relative) {
            worst = Some(w);
        }
    }
    let worst = worst.expect("grid is never empty");
    Ok(AuditReport {
        pass: worst.relative >= -AUDIT_THRESHOLD,
        threshold: AUDIT_THRESHOLD,
        checked: config.omega_grid * cands.len(),
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{identity_pair, sample_a, sample_b};
    use crate::spd::SpdMatrix;

    fn config(samples: usize) -> AuditConfig {
        AuditConfig {
            samples,
            ..AuditConfig::default()
        }
    }

    #[test]
    fn sample_instance_passes() {
        let r = audit(&sample_a(), &sample_b(), &config(2000)).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.checked > 21 * 2000);
    }

    #[test]
    fn deflated_bound_fails_with_witness() {
        let cfg = AuditConfig {
            deflate: Some(0.99),
            ..config(500)
        };
        let r = audit(&sample_a(), &sample_b(), &cfg).unwrap();
        assert!(!r.pass);
        assert!(r.worst.relative < -1e-3);

        let (a, b) = identity_pair(2);
        let r = audit(&a, &b, &cfg).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn limits_pass() {
        let a = SplitEstimate::new(SpdMatrix::zeros(2), sample_a().c().clone()).unwrap();
        let b = SplitEstimate::new(SpdMatrix::zeros(2), sample_b().c().clone()).unwrap();
        let a0 = SplitEstimate::new(sample_a().c().clone(), SpdMatrix::zeros(2)).unwrap();
        let b0 = SplitEstimate::new(sample_b().c().clone(), SpdMatrix::zeros(2)).unwrap();
        assert!(audit(&a0, &b0, &config(1000)).unwrap().pass);
        assert!(matches!(
            audit(&a, &b, &config(10)),
            Err(FusionError::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let r1 = audit(&sample_a(), &sample_b(), &config(300)).unwrap();
        let r2 = audit(&sample_a(), &sample_b(), &config(300)).unwrap();
        assert_eq!(r1, r2);
    }
}
