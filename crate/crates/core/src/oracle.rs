//! Brute-force reference evaluations of `g(x)`.
//!
//! These work directly from the definition (the minimum over admissible
//! cross-covariances of the optimal fused precision) or from a dense
//! `ω` grid, and are meant for cross-checking [`SciPrecisionCurve::g_value`].

use nalgebra::DVector;

use crate::admissible::{rng_from_seed, worst_case_on, CrossCovariance, MixedSampler, SamplerMix};
use crate::error::{FusionError, Result};
use crate::fusion::{optimal_covariance_forms, SplitEstimate};
use crate::spd::check_dim;
use crate::volume::SciPrecisionCurve;

/// `x^T C_F*(P_AB)^{-1} x`, the optimal fused precision along `x`.
pub fn optimal_precision_quad(
    a: &SplitEstimate,
    b: &SplitEstimate,
    pab: &CrossCovariance,
    x: &DVector<f64>,
) -> Result<f64> {
    let forms = optimal_covariance_forms(a, b, pab)?;
    let chol = forms
        .a_form
        .matrix()
        .clone()
        .cholesky()
        .ok_or(FusionError::SingularCovariance)?;
    Ok(x.dot(&chol.solve(x)))
}

/// Smallest optimal fused precision along `x` over the given candidates.
pub fn g_min_over<'a, I>(a: &SplitEstimate, b: &SplitEstimate, candidates: I, x: &DVector<f64>) -> Result<f64>
where
    I: IntoIterator<Item = &'a CrossCovariance>,
{
    let mut best = f64::INFINITY;
    for pab in candidates {
        best = best.min(optimal_precision_quad(a, b, pab, x)?);
    }
    Ok(best)
}

/// Minimum of `x^T M_F*(P_AB) x` over `count` seeded admissible samples
/// plus the worst-case construction for `x`.
pub fn g_min_oracle(curve: &SciPrecisionCurve, x: &DVector<f64>, count: usize, seed: u64) -> Result<f64> {
    check_dim(curve.dim(), x.len())?;
    if !(x.norm() > 0.0) {
        return Err(FusionError::ZeroVector);
    }
    let (a, b) = (curve.a(), curve.b());
    let worst = worst_case_on(curve, x)?;
    let sampler = MixedSampler::new(a, b, SamplerMix::default())?;
    let mut rng = rng_from_seed(seed);
    let mut best = optimal_precision_quad(a, b, &worst.cross, x)?;
    for _ in 0..count {
        let pab = sampler.sample(&mut rng);
        best = best.min(optimal_precision_quad(a, b, &pab, x)?);
    }
    Ok(best)
}

/// `max_k x^T H(k / (points - 1)) x` over a uniform `ω` grid.
pub fn g_max_grid(curve: &SciPrecisionCurve, x: &DVector<f64>, points: usize) -> Result<f64> {
    if points < 2 {
        return Err(FusionError::ParameterOutOfRange {
            name: "points",
            value: points as f64,
        });
    }
    let mut best = f64::NEG_INFINITY;
    for k in 0..points {
        best = best.max(curve.h(x, k as f64 / (points - 1) as f64)?);
    }
    Ok(best)
}
