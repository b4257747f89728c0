//! Closed-form two-estimator fusion rules.
//!
//! Every rule here produces a [`FusionResult`]: the fused bound, the gains
//! that realize it and the scalar parameter (if any) that selected it. All
//! precision-form rules share [`combine_precisions`], which is the common
//! shape `B^{-1} = w_A H_A + w_B H_B`, `K_X = w_X B H_X`.

use nalgebra::{DMatrix, DVector};

use crate::admissible::CrossCovariance;
use crate::error::{FusionError, Result};
use crate::spd::{check_dim, eigenvalues, inverse_spd, symmetrize, SpdMatrix};

/// One estimator: mean (optional) and covariance split `C = P + Q` into the
/// part correlated to an unknown degree with the other estimator (`P`) and
/// the independent part (`Q`).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEstimate {
    mean: Option<DVector<f64>>,
    p: SpdMatrix,
    q: SpdMatrix,
    c: SpdMatrix,
}

impl SplitEstimate {
    pub fn new(p: SpdMatrix, q: SpdMatrix) -> Result<Self> {
        check_dim(p.dim(), q.dim())?;
        let c = SpdMatrix::from_computed(p.matrix() + q.matrix(), true)
            .map_err(|_| FusionError::SingularCovariance)?;
        Ok(Self { mean: None, p, q, c })
    }

    pub fn from_row_slices(dim: usize, p: &[f64], q: &[f64]) -> Result<Self> {
        Self::new(
            SpdMatrix::from_row_slice(dim, p, false)?,
            SpdMatrix::from_row_slice(dim, q, false)?,
        )
    }

    /// Split a total covariance as `P = ρC`, `Q = (1-ρ)C`; this is the
    /// bounded-correlation model with correlation coefficient at most `ρ`.
    pub fn from_correlation_bound(c: &SpdMatrix, rho: f64) -> Result<Self> {
        check_unit_interval("rho", rho)?;
        Self::new(c.scaled(rho)?, c.scaled(1.0 - rho)?)
    }

    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), mean.len())?;
        self.mean = Some(mean);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn mean(&self) -> Option<&DVector<f64>> {
        self.mean.as_ref()
    }

    pub fn p(&self) -> &SpdMatrix {
        &self.p
    }

    pub fn q(&self) -> &SpdMatrix {
        &self.q
    }

    pub fn c(&self) -> &SpdMatrix {
        &self.c
    }
}

const GAIN_TOL: f64 = 1e-10;

/// Fusion gains `(K_A, K_B)` satisfying the unbiasedness constraint
/// `K_A + K_B = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGains {
    k_a: DMatrix<f64>,
    k_b: DMatrix<f64>,
}

impl FusionGains {
    pub fn new(k_a: DMatrix<f64>, k_b: DMatrix<f64>) -> Result<Self> {
        let n = k_a.nrows();
        for m in [&k_a, &k_b] {
            check_dim(n, m.nrows())?;
            check_dim(n, m.ncols())?;
        }
        let residual = (&k_a + &k_b - DMatrix::identity(n, n)).norm();
        let scale = 1.0_f64.max(k_a.norm() + k_b.norm());
        if residual > GAIN_TOL * scale {
            return Err(FusionError::GainConstraintViolated { residual });
        }
        Ok(Self { k_a, k_b })
    }

    /// `K_B = I - K_A`.
    pub fn complement(k_a: DMatrix<f64>) -> Result<Self> {
        let n = k_a.nrows();
        let k_b = DMatrix::identity(n, n) - &k_a;
        Self::new(k_a, k_b)
    }

    /// `(I/2, I/2)`.
    pub fn average(dim: usize) -> Self {
        let half = DMatrix::identity(dim, dim) * 0.5;
        Self {
            k_a: half.clone(),
            k_b: half,
        }
    }

    pub fn dim(&self) -> usize {
        self.k_a.nrows()
    }

    pub fn k_a(&self) -> &DMatrix<f64> {
        &self.k_a
    }

    pub fn k_b(&self) -> &DMatrix<f64> {
        &self.k_b
    }

    /// Fused mean `K_A x_A + K_B x_B`.
    pub fn apply(&self, x_a: &DVector<f64>, x_b: &DVector<f64>) -> DVector<f64> {
        &self.k_a * x_a + &self.k_b * x_b
    }
}

/// Which scalar parameter produced a fusion result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusionParameter {
    None,
    Omega(f64),
    RhoOmega { rho: f64, omega: f64 },
    RhoGamma { rho: f64, gamma: f64 },
}

impl FusionParameter {
    pub fn omega(&self) -> Option<f64> {
        match *self {
            Self::Omega(w) | Self::RhoOmega { omega: w, .. } => Some(w),
            Self::RhoGamma { gamma, .. } => Some(1.0 / (1.0 + gamma)),
            Self::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    pub mean: Option<DVector<f64>>,
    pub bound: SpdMatrix,
    pub gains: FusionGains,
    pub parameter: FusionParameter,
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(FusionError::ParameterOutOfRange { name, value });
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(FusionError::OmegaOutOfRange(omega));
    }
    Ok(())
}

fn check_pair(a: &SplitEstimate, b: &SplitEstimate, pab: &CrossCovariance) -> Result<()> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), pab.matrix().nrows())?;
    check_dim(a.dim(), pab.matrix().ncols())
}

/// Raw (unvalidated) `C_F(K, P_AB)`, symmetrized.
pub fn fused_covariance_matrix(
    gains: &FusionGains,
    a: &SplitEstimate,
    b: &SplitEstimate,
    pab: &CrossCovariance,
) -> DMatrix<f64> {
    let (k_a, k_b) = (gains.k_a(), gains.k_b());
    let cross = k_a * pab.matrix() * k_b.transpose();
    let m = k_a * a.c().matrix() * k_a.transpose()
        + &cross
        + cross.transpose()
        + k_b * b.c().matrix() * k_b.transpose();
    symmetrize(&m)
}

/// Error covariance of `K_A x_A + K_B x_B` when the correlated parts have
/// cross-covariance `P_AB`.
pub fn fused_covariance(
    gains: &FusionGains,
    a: &SplitEstimate,
    b: &SplitEstimate,
    pab: &CrossCovariance,
) -> Result<SpdMatrix> {
    check_pair(a, b, pab)?;
    check_dim(a.dim(), gains.dim())?;
    SpdMatrix::from_computed(fused_covariance_matrix(gains, a, b, pab), false)
}

/// `R = C_A + C_B - P_AB - P_AB^T`.
pub fn r_matrix(a: &SplitEstimate, b: &SplitEstimate, pab: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(a.c().matrix() + b.c().matrix() - pab - pab.transpose()))
}

fn r_inverse(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ev = eigenvalues(r);
    let scale = ev.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if ev[0] <= 1e-12 * scale {
        return Err(FusionError::SingularR);
    }
    inverse_spd(r).ok_or(FusionError::SingularR)
}

/// The three algebraically equal expressions of the optimal fused
/// covariance `C_F*(P_AB)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalForms {
    /// `C_A - (C_A - P_AB) R^{-1} (C_A - P_AB^T)`
    pub a_form: SpdMatrix,
    /// `C_B - (C_B - P_AB^T) R^{-1} (C_B - P_AB)`
    pub b_form: SpdMatrix,
    /// `P_AB + (C_A - P_AB) R^{-1} (C_B - P_AB)`
    pub ab_form: SpdMatrix,
}

pub fn optimal_covariance_forms(
    a: &SplitEstimate,
    b: &SplitEstimate,
    pab: &CrossCovariance,
) -> Result<OptimalForms> {
    check_pair(a, b, pab)?;
    let p = pab.matrix();
    let r_inv = r_inverse(&r_matrix(a, b, p))?;
    let (c_a, c_b) = (a.c().matrix(), b.c().matrix());
    let a_form = c_a - (c_a - p) * &r_inv * (c_a - p.transpose());
    let b_form = c_b - (c_b - p.transpose()) * &r_inv * (c_b - p);
    let ab_form = p + (c_a - p) * &r_inv * (c_b - p);
    Ok(OptimalForms {
        a_form: SpdMatrix::from_computed(a_form, false)?,
        b_form: SpdMatrix::from_computed(b_form, false)?,
        ab_form: SpdMatrix::from_computed(ab_form, false)?,
    })
}

/// Loewner-minimal linear fusion for a known cross-covariance.
pub fn bar_shalom_campo(
    a: &SplitEstimate,
    b: &SplitEstimate,
    pab: &CrossCovariance,
) -> Result<FusionResult> {
    check_pair(a, b, pab)?;
    let p = pab.matrix();
    let r_inv = r_inverse(&r_matrix(a, b, p))?;
    let (c_a, c_b) = (a.c().matrix(), b.c().matrix());
    let k_a = (c_b - p.transpose()) * &r_inv;
    let k_b = (c_a - p) * &r_inv;
    let gains = FusionGains::new(k_a, k_b)?;
    let bound = c_a - (c_a - p) * &r_inv * (c_a - p.transpose());
    let bound =
        SpdMatrix::from_computed(bound, true).map_err(|_| FusionError::SingularCovariance)?;
    let mean = match (a.mean(), b.mean()) {
        (Some(x_a), Some(x_b)) => Some(gains.apply(x_a, x_b)),
        _ => None,
    };
    Ok(FusionResult {
        mean,
        bound,
        gains,
        parameter: FusionParameter::None,
    })
}

/// Shared precision-form combination:
/// `B^{-1} = w_A H_A + w_B H_B`, `K_A = w_A B H_A`, `K_B = w_B B H_B`.
pub(crate) fn combine_precisions(
    w_a: f64,
    h_a: &DMatrix<f64>,
    w_b: f64,
    h_b: &DMatrix<f64>,
    means: Option<(&DVector<f64>, &DVector<f64>)>,
    parameter: FusionParameter,
) -> Result<FusionResult> {
    let info_a = h_a * w_a;
    let info_b = h_b * w_b;
    let precision = symmetrize(&(&info_a + &info_b));
    let bound = inverse_spd(&precision).ok_or(FusionError::SingularCovariance)?;
    let k_a = &bound * &info_a;
    let k_b = &bound * &info_b;
    let mean = means.map(|(x_a, x_b)| &bound * (&info_a * x_a + &info_b * x_b));
    let bound = SpdMatrix::from_computed(bound, true).map_err(|_| FusionError::SingularCovariance)?;
    Ok(FusionResult {
        mean,
        bound,
        gains: FusionGains::new(k_a, k_b)?,
        parameter,
    })
}

fn estimate_means<'a>(
    a: &'a SplitEstimate,
    b: &'a SplitEstimate,
) -> Option<(&'a DVector<f64>, &'a DVector<f64>)> {
    a.mean().zip(b.mean())
}

/// Information-form fusion assuming uncorrelated errors.
pub fn information_fusion(a: &SplitEstimate, b: &SplitEstimate) -> Result<FusionResult> {
    check_dim(a.dim(), b.dim())?;
    let h_a = a.c().inverse().map_err(|_| FusionError::SingularCovariance)?;
    let h_b = b.c().inverse().map_err(|_| FusionError::SingularCovariance)?;
    combine_precisions(1.0, &h_a, 1.0, &h_b, estimate_means(a, b), FusionParameter::None)
}

/// Endpoint of a one-parameter family: the bound is the selected
/// estimator's covariance itself, with all weight on that estimator.
fn endpoint(
    c: &SpdMatrix,
    take_a: bool,
    means: Option<(&DVector<f64>, &DVector<f64>)>,
    parameter: FusionParameter,
) -> FusionResult {
    let n = c.dim();
    let (one, zero) = (DMatrix::identity(n, n), DMatrix::zeros(n, n));
    let (k_a, k_b) = if take_a { (one, zero) } else { (zero, one) };
    let mean = means.map(|(x_a, x_b)| if take_a { x_a.clone() } else { x_b.clone() });
    FusionResult {
        mean,
        bound: c.clone(),
        gains: FusionGains { k_a, k_b },
        parameter,
    }
}

/// Covariance Intersection: `B^{-1} = ω C_A^{-1} + (1-ω) C_B^{-1}`.
pub fn ci_bound(
    c_a: &SpdMatrix,
    c_b: &SpdMatrix,
    omega: f64,
    means: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<FusionResult> {
    check_omega(omega)?;
    check_dim(c_a.dim(), c_b.dim())?;
    if omega == 0.0 || omega == 1.0 {
        let take_a = omega == 1.0;
        let c = if take_a { c_a } else { c_b };
        return Ok(endpoint(c, take_a, means, FusionParameter::Omega(omega)));
    }
    let h_a = c_a.inverse().map_err(|_| FusionError::SingularCovariance)?;
    let h_b = c_b.inverse().map_err(|_| FusionError::SingularCovariance)?;
    combine_precisions(omega, &h_a, 1.0 - omega, &h_b, means, FusionParameter::Omega(omega))
}

/// `(P + s Q)^{-1}`, the per-estimator precision used by split fusion.
pub(crate) fn split_precision(est: &SplitEstimate, s: f64, omega: f64) -> Result<DMatrix<f64>> {
    let m = est.p().matrix() + est.q().matrix() * s;
    let ev = eigenvalues(&m);
    let scale = ev.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if ev[0] <= 1e-12 * scale {
        return Err(FusionError::DegenerateSplit { omega });
    }
    inverse_spd(&m).ok_or(FusionError::DegenerateSplit { omega })
}

/// Split Covariance Intersection:
/// `B^{-1} = ω (P_A + ω Q_A)^{-1} + ω̄ (P_B + ω̄ Q_B)^{-1}`, `ω̄ = 1 - ω`.
pub fn sci_bound(a: &SplitEstimate, b: &SplitEstimate, omega: f64) -> Result<FusionResult> {
    check_omega(omega)?;
    check_dim(a.dim(), b.dim())?;
    let omega_bar = 1.0 - omega;
    let h_a = split_precision(a, omega, omega)?;
    let h_b = split_precision(b, omega_bar, omega)?;
    if omega == 0.0 || omega == 1.0 {
        let take_a = omega == 1.0;
        let c = if take_a { a.c() } else { b.c() };
        return Ok(endpoint(c, take_a, estimate_means(a, b), FusionParameter::Omega(omega)));
    }
    combine_precisions(
        omega,
        &h_a,
        omega_bar,
        &h_b,
        estimate_means(a, b),
        FusionParameter::Omega(omega),
    )
}

/// Weights of the bounded-correlation family,
/// `ω / (ρ + ω(1-ρ))` and `ω̄ / (ρ + ω̄(1-ρ))`.
pub fn rho_weights(rho: f64, omega: f64) -> Result<(f64, f64)> {
    check_unit_interval("rho", rho)?;
    check_omega(omega)?;
    let omega_bar = 1.0 - omega;
    let den_a = rho + omega * (1.0 - rho);
    let den_b = rho + omega_bar * (1.0 - rho);
    if den_a == 0.0 || den_b == 0.0 {
        return Err(FusionError::DegenerateDenominator { rho, omega });
    }
    Ok((omega / den_a, omega_bar / den_b))
}

/// Bounded-correlation fusion parameterized by `ω ∈ [0, 1]`.
pub fn rho_bound(
    c_a: &SpdMatrix,
    c_b: &SpdMatrix,
    rho: f64,
    omega: f64,
    means: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<FusionResult> {
    let (w_a, w_b) = rho_weights(rho, omega)?;
    check_dim(c_a.dim(), c_b.dim())?;
    let h_a = c_a.inverse().map_err(|_| FusionError::SingularCovariance)?;
    let h_b = c_b.inverse().map_err(|_| FusionError::SingularCovariance)?;
    combine_precisions(w_a, &h_a, w_b, &h_b, means, FusionParameter::RhoOmega { rho, omega })
}

/// Bounded-correlation fusion parameterized by `γ = (1-ω)/ω ∈ (0, ∞)`:
/// weights `(1 + γρ)^{-1}` and `(1 + ρ/γ)^{-1}`.
pub fn rho_bound_gamma(
    c_a: &SpdMatrix,
    c_b: &SpdMatrix,
    rho: f64,
    gamma: f64,
    means: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<FusionResult> {
    check_unit_interval("rho", rho)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(FusionError::ParameterOutOfRange {
            name: "gamma",
            value: gamma,
        });
    }
    check_dim(c_a.dim(), c_b.dim())?;
    let w_a = 1.0 / (1.0 + gamma * rho);
    let w_b = 1.0 / (1.0 + rho / gamma);
    let h_a = c_a.inverse().map_err(|_| FusionError::SingularCovariance)?;
    let h_b = c_b.inverse().map_err(|_| FusionError::SingularCovariance)?;
    combine_precisions(w_a, &h_a, w_b, &h_b, means, FusionParameter::RhoGamma { rho, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{sample_a, sample_b, identity_pair, m2};
    use approx::assert_relative_eq;

    fn scalar(p: f64, q: f64) -> SplitEstimate {
        SplitEstimate::from_row_slices(1, &[p], &[q]).unwrap()
    }

    fn zero_cross(n: usize) -> CrossCovariance {
        CrossCovariance::new(DMatrix::zeros(n, n))
    }

    #[test]
    fn split_estimate_requires_invertible_total() {
        let zero = SpdMatrix::zeros(2);
        assert!(matches!(
            SplitEstimate::new(zero.clone(), zero),
            Err(FusionError::SingularCovariance)
        ));
        assert!(matches!(
            SplitEstimate::new(SpdMatrix::identity(2), SpdMatrix::identity(3)),
            Err(FusionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gains_constraint_enforced() {
        let i = DMatrix::<f64>::identity(2, 2);
        assert!(FusionGains::new(i.clone(), i.clone()).is_err());
        assert!(FusionGains::new(i.clone(), DMatrix::zeros(2, 2)).is_ok());
    }

    #[test]
    fn identity_gain_selects_a() {
        let (a, b) = (sample_a(), sample_b());
        let gains = FusionGains::complement(DMatrix::identity(2, 2)).unwrap();
        let pab = CrossCovariance::new(m2(2.0, 0.0, -4.5, -1.0));
        let cf = fused_covariance(&gains, &a, &b, &pab).unwrap();
        assert_relative_eq!(cf.matrix(), a.c().matrix(), epsilon = 1e-14);
    }

    #[test]
    fn average_gain_uncorrelated() {
        let (a, b) = (sample_a(), sample_b());
        let cf = fused_covariance(&FusionGains::average(2), &a, &b, &zero_cross(2)).unwrap();
        assert_relative_eq!(cf.matrix(), &m2(3.75, 0.25, 0.25, 2.75), epsilon = 1e-14);
    }

    #[test]
    fn bsc_scalar_symmetric() {
        let e = scalar(1.0, 1.0);
        let r = bar_shalom_campo(&e, &e, &zero_cross(1)).unwrap();
        assert_relative_eq!(r.bound.matrix()[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.gains.k_a()[(0, 0)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(r.gains.k_b()[(0, 0)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn bsc_fully_correlated_picks_better() {
        let a = SplitEstimate::new(SpdMatrix::identity(2), SpdMatrix::zeros(2)).unwrap();
        let b = SplitEstimate::new(SpdMatrix::identity(2).scaled(2.0).unwrap(), SpdMatrix::zeros(2))
            .unwrap();
        let pab = CrossCovariance::new(DMatrix::identity(2, 2));
        let r = bar_shalom_campo(&a, &b, &pab).unwrap();
        assert_relative_eq!(r.gains.k_a(), &DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_relative_eq!(r.gains.k_b(), &DMatrix::zeros(2, 2), epsilon = 1e-14);
        assert_relative_eq!(r.bound.matrix(), &DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn bsc_uncorrelated_is_information_form() {
        let (a, b) = (sample_a(), sample_b());
        let r = bar_shalom_campo(&a, &b, &zero_cross(2)).unwrap();
        let info = (a.c().inverse().unwrap() + b.c().inverse().unwrap())
            .try_inverse()
            .unwrap();
        assert_relative_eq!(r.bound.matrix(), &info, epsilon = 1e-12);
        let direct = fused_covariance(&r.gains, &a, &b, &zero_cross(2)).unwrap();
        assert_relative_eq!(r.bound.matrix(), direct.matrix(), epsilon = 1e-10);
    }

    #[test]
    fn bsc_singular_r() {
        let e = scalar(1.0, 0.0);
        let pab = CrossCovariance::new(DMatrix::from_element(1, 1, 1.0));
        assert!(matches!(
            bar_shalom_campo(&e, &e, &pab),
            Err(FusionError::SingularR)
        ));
        assert!(matches!(
            optimal_covariance_forms(&e, &e, &pab),
            Err(FusionError::SingularR)
        ));
    }

    #[test]
    fn forms_identity_case_rank_one() {
        let (a, b) = identity_pair(2);
        let pab = CrossCovariance::new(m2(1.0, 0.0, 0.0, 0.0));
        let f = optimal_covariance_forms(&a, &b, &pab).unwrap();
        let expected = m2(1.5, 0.0, 0.0, 1.0);
        for m in [&f.a_form, &f.b_form, &f.ab_form] {
            assert_relative_eq!(m.matrix(), &expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn forms_uncorrelated_sample() {
        let (a, b) = (sample_a(), sample_b());
        let f = optimal_covariance_forms(&a, &b, &zero_cross(2)).unwrap();
        let info = (a.c().inverse().unwrap() + b.c().inverse().unwrap())
            .try_inverse()
            .unwrap();
        for m in [&f.a_form, &f.b_form, &f.ab_form] {
            assert_relative_eq!(m.matrix(), &info, epsilon = 1e-12);
        }
    }

    #[test]
    fn information_fusion_examples() {
        let e = scalar(1.0, 1.0);
        let r = information_fusion(&e, &e).unwrap();
        assert_relative_eq!(r.bound.matrix()[(0, 0)], 1.0, epsilon = 1e-14);

        let a = SplitEstimate::new(SpdMatrix::zeros(2), SpdMatrix::identity(2))
            .unwrap()
            .with_mean(DVector::from_vec(vec![1.0, 0.0]))
            .unwrap();
        let b = SplitEstimate::new(SpdMatrix::zeros(2), SpdMatrix::identity(2))
            .unwrap()
            .with_mean(DVector::from_vec(vec![0.0, 1.0]))
            .unwrap();
        let r = information_fusion(&a, &b).unwrap();
        assert_relative_eq!(r.bound.matrix(), &(DMatrix::identity(2, 2) * 0.5), epsilon = 1e-14);
        let mean = r.mean.unwrap();
        assert_relative_eq!(mean[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(mean[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn information_fusion_strictly_below_both() {
        let (a, b) = (sample_a(), sample_b());
        let r = information_fusion(&a, &b).unwrap();
        for c in [a.c(), b.c()] {
            assert!(crate::spd::min_eigenvalue(&(c.matrix() - r.bound.matrix())) > 1e-6);
        }
        let direct = fused_covariance(&r.gains, &a, &b, &zero_cross(2)).unwrap();
        assert_relative_eq!(direct.matrix(), r.bound.matrix(), epsilon = 1e-10);
    }

    #[test]
    fn ci_endpoints_and_equal_scalars() {
        let (a, b) = (sample_a(), sample_b());
        let r0 = ci_bound(a.c(), b.c(), 0.0, None).unwrap();
        let r1 = ci_bound(a.c(), b.c(), 1.0, None).unwrap();
        assert_relative_eq!(r0.bound.matrix(), b.c().matrix(), epsilon = 1e-12);
        assert_relative_eq!(r1.bound.matrix(), a.c().matrix(), epsilon = 1e-12);

        let c = SpdMatrix::from_row_slice(1, &[3.0], true).unwrap();
        for w in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let r = ci_bound(&c, &c, w, None).unwrap();
            assert_relative_eq!(r.bound.matrix()[(0, 0)], 3.0, epsilon = 1e-14);
        }
        assert!(matches!(
            ci_bound(a.c(), b.c(), 1.5, None),
            Err(FusionError::OmegaOutOfRange(_))
        ));
    }

    #[test]
    fn sci_endpoints_sample() {
        let (a, b) = (sample_a(), sample_b());
        let r0 = sci_bound(&a, &b, 0.0).unwrap();
        let r1 = sci_bound(&a, &b, 1.0).unwrap();
        assert_relative_eq!(r0.bound.matrix(), &m2(13.0, 2.0, 2.0, 3.0), epsilon = 1e-12);
        assert_relative_eq!(r1.bound.matrix(), &m2(2.0, -1.0, -1.0, 8.0), epsilon = 1e-12);
    }

    #[test]
    fn sci_scalar_half() {
        let e = scalar(1.0, 1.0);
        let r = sci_bound(&e, &e, 0.5).unwrap();
        assert_relative_eq!(r.bound.matrix()[(0, 0)], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn sci_without_independent_part_is_ci() {
        let (a, b) = (sample_a(), sample_b());
        let a0 = SplitEstimate::new(a.p().clone(), SpdMatrix::zeros(2)).unwrap();
        let b0 = SplitEstimate::new(b.p().clone(), SpdMatrix::zeros(2)).unwrap();
        for i in 0..=20 {
            let w = i as f64 / 20.0;
            let s = sci_bound(&a0, &b0, w).unwrap();
            let c = ci_bound(a.p(), b.p(), w, None).unwrap();
            assert_relative_eq!(s.bound.matrix(), c.bound.matrix(), epsilon = 1e-12);
        }
    }

    #[test]
    fn sci_degenerate_endpoint() {
        let a = SplitEstimate::new(SpdMatrix::zeros(2), SpdMatrix::identity(2)).unwrap();
        let b = sample_b();
        assert!(matches!(
            sci_bound(&a, &b, 0.0),
            Err(FusionError::DegenerateSplit { .. })
        ));
        assert!(sci_bound(&a, &b, 0.3).is_ok());
        assert!(matches!(
            sci_bound(&a, &b, -0.1),
            Err(FusionError::OmegaOutOfRange(_))
        ));
    }

    #[test]
    fn sci_gains_sum_to_identity_and_mean() {
        let a = sample_a().with_mean(DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let b = sample_b().with_mean(DVector::from_vec(vec![-1.0, 0.5])).unwrap();
        let r = sci_bound(&a, &b, 0.4).unwrap();
        let sum = r.gains.k_a() + r.gains.k_b();
        assert!((sum - DMatrix::identity(2, 2)).norm() <= 1e-10);
        let via_gains = r.gains.apply(a.mean().unwrap(), b.mean().unwrap());
        assert_relative_eq!(r.mean.unwrap(), via_gains, epsilon = 1e-12);
    }

    #[test]
    fn rho_family_limits() {
        let (a, b) = (sample_a(), sample_b());
        let r = rho_bound(a.c(), b.c(), 0.0, 0.5, None).unwrap();
        let info = information_fusion(&a, &b).unwrap();
        assert_relative_eq!(r.bound.matrix(), info.bound.matrix(), epsilon = 1e-12);
        for w in [0.0, 0.3, 1.0] {
            let r = rho_bound(a.c(), b.c(), 1.0, w, None).unwrap();
            let c = ci_bound(a.c(), b.c(), w, None).unwrap();
            assert_relative_eq!(r.bound.matrix(), c.bound.matrix(), epsilon = 1e-12);
        }
        assert!(matches!(
            rho_bound(a.c(), b.c(), 0.0, 0.0, None),
            Err(FusionError::DegenerateDenominator { .. })
        ));
        assert!(matches!(
            rho_bound(a.c(), b.c(), 1.2, 0.5, None),
            Err(FusionError::ParameterOutOfRange { name: "rho", .. })
        ));
    }

    #[test]
    fn rho_gamma_matches_omega_form() {
        let (a, b) = (sample_a(), sample_b());
        for &(rho, w) in &[(0.25, 0.1), (0.5, 0.5), (0.8, 0.77)] {
            let by_omega = rho_bound(a.c(), b.c(), rho, w, None).unwrap();
            let by_gamma = rho_bound_gamma(a.c(), b.c(), rho, (1.0 - w) / w, None).unwrap();
            assert_relative_eq!(by_omega.bound.matrix(), by_gamma.bound.matrix(), epsilon = 1e-10);
            let split_a = SplitEstimate::from_correlation_bound(a.c(), rho).unwrap();
            let split_b = SplitEstimate::from_correlation_bound(b.c(), rho).unwrap();
            let sci = sci_bound(&split_a, &split_b, w).unwrap();
            assert_relative_eq!(by_omega.bound.matrix(), sci.bound.matrix(), epsilon = 1e-10);
        }
    }
}
