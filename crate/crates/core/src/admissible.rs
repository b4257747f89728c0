//! The admissible cross-covariance set
//! `{P_AB : [[P_A, P_AB], [P_AB^T, P_B]] ⪰ 0}`: membership, seeded sampling
//! and the extremal elements that realize the minimal fused precision in a
//! given direction.
//!
//! Every element produced here is of the form `P_A^{1/2} Ω P_B^{1/2}` with
//! `Ω^T Ω ⪯ I`, which is admissible by construction.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{FusionError, Result};
use crate::fusion::SplitEstimate;
use crate::spd::{check_dim, eigenvalues, inverse_spd, max_eigenvalue, sqrt_psd, SpdMatrix};
use crate::volume::{DirectionCase, SciPrecisionCurve};

/// A candidate cross-covariance `P_AB`, optionally with the contraction `Ω`
/// it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCovariance {
    matrix: DMatrix<f64>,
    contraction: Option<DMatrix<f64>>,
}

impl CrossCovariance {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self {
            matrix,
            contraction: None,
        }
    }

    pub fn with_contraction(matrix: DMatrix<f64>, contraction: DMatrix<f64>) -> Self {
        Self {
            matrix,
            contraction: Some(contraction),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::with_contraction(DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn contraction(&self) -> Option<&DMatrix<f64>> {
        self.contraction.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn block(p_a: &DMatrix<f64>, pab: &DMatrix<f64>, p_b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p_a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(p_a);
    m.view_mut((0, n), (n, n)).copy_from(pab);
    m.view_mut((n, 0), (n, n)).copy_from(&pab.transpose());
    m.view_mut((n, n), (n, n)).copy_from(p_b);
    m
}

/// Smallest eigenvalue of the joint covariance of the correlated parts,
/// divided by its spectral scale.
pub fn joint_min_eigenvalue(pab: &DMatrix<f64>, p_a: &SpdMatrix, p_b: &SpdMatrix) -> f64 {
    let ev = eigenvalues(&block(p_a.matrix(), pab, p_b.matrix()));
    let scale = ev.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    ev[0] / scale
}

pub fn is_admissible(
    pab: &CrossCovariance,
    p_a: &SpdMatrix,
    p_b: &SpdMatrix,
    tol: f64,
) -> Result<bool> {
    check_dim(p_a.dim(), p_b.dim())?;
    check_dim(p_a.dim(), pab.matrix().nrows())?;
    check_dim(p_a.dim(), pab.matrix().ncols())?;
    Ok(joint_min_eigenvalue(pab.matrix(), p_a, p_b) >= -tol)
}

/// Deterministic child seed for the `index`-th task of a batch, so batches
/// can be split across threads without changing their output.
pub fn child_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

pub(crate) fn gaussian_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// `(P_A, P_B)` together with their principal square roots.
#[derive(Debug, Clone)]
pub struct AdmissibleSet {
    p_a: SpdMatrix,
    p_b: SpdMatrix,
    root_a: DMatrix<f64>,
    root_b: DMatrix<f64>,
}

impl AdmissibleSet {
    pub fn new(p_a: &SpdMatrix, p_b: &SpdMatrix) -> Result<Self> {
        check_dim(p_a.dim(), p_b.dim())?;
        Ok(Self {
            root_a: sqrt_psd(p_a),
            root_b: sqrt_psd(p_b),
            p_a: p_a.clone(),
            p_b: p_b.clone(),
        })
    }

    pub fn of(a: &SplitEstimate, b: &SplitEstimate) -> Result<Self> {
        Self::new(a.p(), b.p())
    }

    pub fn dim(&self) -> usize {
        self.p_a.dim()
    }

    pub fn p_a(&self) -> &SpdMatrix {
        &self.p_a
    }

    pub fn p_b(&self) -> &SpdMatrix {
        &self.p_b
    }

    pub fn contains(&self, pab: &CrossCovariance, tol: f64) -> bool {
        joint_min_eigenvalue(pab.matrix(), &self.p_a, &self.p_b) >= -tol
    }

    /// `P_A^{1/2} Ω P_B^{1/2}`; admissible whenever `Ω^T Ω ⪯ I`.
    pub fn from_contraction(&self, contraction: DMatrix<f64>) -> CrossCovariance {
        let matrix = &self.root_a * &contraction * &self.root_b;
        CrossCovariance::with_contraction(matrix, contraction)
    }

    /// Gaussian matrix rescaled to operator norm `u ~ U[0, 1]`.
    pub fn sample_gaussian<R: Rng + ?Sized>(&self, rng: &mut R) -> CrossCovariance {
        let n = self.dim();
        let g = gaussian_matrix(rng, n);
        let u: f64 = rng.gen();
        let sigma_max = max_eigenvalue(&(g.transpose() * &g)).max(0.0).sqrt();
        let contraction = if sigma_max > 0.0 { g * (u / sigma_max) } else { g };
        self.from_contraction(contraction)
    }

    /// Boundary element `P_A^{1/2} u v^T P_B^{1/2}` for independent random
    /// unit vectors `u`, `v`.
    pub fn sample_rank_one<R: Rng + ?Sized>(&self, rng: &mut R) -> CrossCovariance {
        let n = self.dim();
        let u = gaussian_unit_vector(rng, n);
        let v = gaussian_unit_vector(rng, n);
        self.from_contraction(&u * v.transpose())
    }

    pub fn rank_one(&self, direction: &DVector<f64>) -> Result<CrossCovariance> {
        check_dim(self.dim(), direction.len())?;
        let norm = direction.norm();
        if !(norm > 0.0) {
            return Err(FusionError::ZeroDirection);
        }
        let d = direction / norm;
        Ok(self.from_contraction(&d * d.transpose()))
    }
}

pub fn sample_cross_cov(p_a: &SpdMatrix, p_b: &SpdMatrix, seed: u64) -> Result<CrossCovariance> {
    let set = AdmissibleSet::new(p_a, p_b)?;
    Ok(set.sample_gaussian(&mut rng_from_seed(seed)))
}

pub fn rank_one_cross_cov(
    p_a: &SpdMatrix,
    p_b: &SpdMatrix,
    direction: &DVector<f64>,
) -> Result<CrossCovariance> {
    AdmissibleSet::new(p_a, p_b)?.rank_one(direction)
}

/// Extremal cross-covariance for a direction `x`: the element of the
/// admissible set at which the optimal fused precision `x^T M_F* x` is
/// smallest, together with the SCI parameter `omega0` that touches it.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub cross: CrossCovariance,
    pub omega0: f64,
    pub case: DirectionCase,
}

fn inverse_sqrt(p: &SpdMatrix, omega: f64) -> Result<DMatrix<f64>> {
    inverse_spd(&sqrt_psd(p)).ok_or(FusionError::DegenerateSplit { omega })
}

pub fn worst_case_cross_cov(
    x: &DVector<f64>,
    a: &SplitEstimate,
    b: &SplitEstimate,
) -> Result<WorstCase> {
    worst_case_on(&SciPrecisionCurve::new(a.clone(), b.clone())?, x)
}

/// Worst-case construction against a prepared precision curve.
pub fn worst_case_on(curve: &SciPrecisionCurve, x: &DVector<f64>) -> Result<WorstCase> {
    let (a, b) = (curve.a(), curve.b());
    check_dim(a.dim(), x.len())?;
    if !(x.norm() > 0.0) {
        return Err(FusionError::ZeroVector);
    }
    if !a.p().is_strict() {
        return Err(FusionError::DegenerateSplit { omega: 0.0 });
    }
    if !b.p().is_strict() {
        return Err(FusionError::DegenerateSplit { omega: 1.0 });
    }
    let root_a = sqrt_psd(a.p());
    let root_b = sqrt_psd(b.p());
    let case = curve.classify(x)?;
    let (matrix, contraction, omega0) = match case {
        DirectionCase::LowerEndpoint => {
            // P_AB* B(1) x = x
            let bx = curve.b_precision(1.0, 0.0)? * x;
            let pbx = b.p().matrix() * &bx;
            let d = bx.dot(&pbx);
            let matrix = x * pbx.transpose() / d;
            let contraction =
                inverse_sqrt(a.p(), 0.0)? * x * (&root_b * &bx).transpose() / d;
            (matrix, contraction, 0.0)
        }
        DirectionCase::UpperEndpoint => {
            // mirror image: P_AB*^T A(1) x = x
            let ax = curve.a_precision(1.0)? * x;
            let pax = a.p().matrix() * &ax;
            let d = ax.dot(&pax);
            let matrix = &pax * x.transpose() / d;
            let contraction =
                (&root_a * &ax) * (inverse_sqrt(b.p(), 1.0)? * x).transpose() / d;
            (matrix, contraction, 1.0)
        }
        DirectionCase::Interior => {
            let omega0 = curve.solve_omega0(x)?;
            let ax = curve.a_precision(omega0)? * x;
            let bx = curve.b_precision(1.0 - omega0, omega0)? * x;
            let pax = a.p().matrix() * &ax;
            let pbx = b.p().matrix() * &bx;
            let gamma = ax.dot(&pax);
            let matrix = &pax * pbx.transpose() / gamma;
            let contraction = (&root_a * &ax) * (&root_b * &bx).transpose() / gamma;
            (matrix, contraction, omega0)
        }
    };
    Ok(WorstCase {
        cross: CrossCovariance::with_contraction(matrix, contraction),
        omega0,
        case,
    })
}

/// Proportions of the three sampling families. Gaussian contractions cover
/// the interior, rank-one and worst-case elements sit on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerMix {
    pub gaussian: f64,
    pub rank_one: f64,
    pub worst_case: f64,
}

impl Default for SamplerMix {
    fn default() -> Self {
        Self {
            gaussian: 0.7,
            rank_one: 0.2,
            worst_case: 0.1,
        }
    }
}

/// Sampler over the admissible set mixing the three families of
/// [`SamplerMix`].
#[derive(Debug, Clone)]
pub struct MixedSampler {
    set: AdmissibleSet,
    curve: Option<SciPrecisionCurve>,
    mix: SamplerMix,
}

impl MixedSampler {
    pub fn new(a: &SplitEstimate, b: &SplitEstimate, mix: SamplerMix) -> Result<Self> {
        let curve = if a.p().is_strict() && b.p().is_strict() {
            Some(SciPrecisionCurve::new(a.clone(), b.clone())?)
        } else {
            None
        };
        Ok(Self {
            set: AdmissibleSet::of(a, b)?,
            curve,
            mix,
        })
    }

    pub fn set(&self) -> &AdmissibleSet {
        &self.set
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CrossCovariance {
        let total = self.mix.gaussian + self.mix.rank_one + self.mix.worst_case;
        let pick: f64 = rng.gen::<f64>() * total;
        if pick < self.mix.gaussian {
            self.set.sample_gaussian(rng)
        } else if pick < self.mix.gaussian + self.mix.rank_one {
            self.set.sample_rank_one(rng)
        } else {
            let x = gaussian_unit_vector(rng, self.set.dim());
            match self.curve.as_ref().map(|c| worst_case_on(c, &x)) {
                Some(Ok(w)) => w.cross,
                _ => self.set.sample_gaussian(rng),
            }
        }
    }

    /// `count` samples from a single seeded stream.
    pub fn sample_batch(&self, count: usize, seed: u64) -> Vec<CrossCovariance> {
        let mut rng = rng_from_seed(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{identity_pair, m2, sample_a, sample_b, random_pair};
    use crate::spd::eigenvalues;
    use approx::assert_relative_eq;

    const TOL: f64 = 1e-9;

    #[test]
    fn zero_and_full_contraction_admissible() {
        let (a, b) = (sample_a(), sample_b());
        let set = AdmissibleSet::of(&a, &b).unwrap();
        assert!(set.contains(&CrossCovariance::zeros(2), TOL));
        assert!(set.contains(&set.from_contraction(DMatrix::identity(2, 2)), TOL));
    }

    #[test]
    fn scalar_overcorrelated_rejected() {
        let one = SpdMatrix::identity(1);
        let pab = CrossCovariance::new(DMatrix::from_element(1, 1, 1.5));
        assert!(!is_admissible(&pab, &one, &one, TOL).unwrap());
        let block = block(one.matrix(), pab.matrix(), one.matrix());
        let ev = eigenvalues(&block);
        assert_relative_eq!(ev[0], -0.5, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 2.5, epsilon = 1e-14);
    }

    #[test]
    fn fig3_cross_covariance_admissible() {
        let (a, b) = (sample_a(), sample_b());
        let pab = CrossCovariance::new(m2(2.0, 0.0, -4.5, -1.0));
        assert!(is_admissible(&pab, a.p(), b.p(), TOL).unwrap());
    }

    #[test]
    fn sampling_is_deterministic_and_admissible() {
        let (a, b) = (sample_a(), sample_b());
        for seed in 0..50 {
            let s1 = sample_cross_cov(a.p(), b.p(), seed).unwrap();
            let s2 = sample_cross_cov(a.p(), b.p(), seed).unwrap();
            assert_eq!(s1, s2);
            assert!(is_admissible(&s1, a.p(), b.p(), TOL).unwrap());
            let omega = s1.contraction().unwrap();
            assert!(max_eigenvalue(&(omega.transpose() * omega)) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn zero_contraction_gives_zero() {
        let set = AdmissibleSet::of(&sample_a(), &sample_b()).unwrap();
        let pab = set.from_contraction(DMatrix::zeros(2, 2));
        assert_eq!(pab.matrix(), &DMatrix::<f64>::zeros(2, 2));
    }

    #[test]
    fn rank_one_examples() {
        let i = SpdMatrix::identity(2);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let pab = rank_one_cross_cov(&i, &i, &e1).unwrap();
        assert_relative_eq!(pab.matrix(), &m2(1.0, 0.0, 0.0, 0.0), epsilon = 1e-15);
        assert!(matches!(
            rank_one_cross_cov(&i, &i, &DVector::zeros(2)),
            Err(FusionError::ZeroDirection)
        ));

        let (a, b) = (sample_a(), sample_b());
        for i in 0..5 {
            let t = std::f64::consts::PI * i as f64 / 5.0;
            let x = DVector::from_vec(vec![t.cos(), t.sin()]);
            let pab = rank_one_cross_cov(a.p(), b.p(), &x).unwrap();
            assert!(is_admissible(&pab, a.p(), b.p(), TOL).unwrap());
            let omega = pab.contraction().unwrap();
            let ev = eigenvalues(&(omega.transpose() * omega));
            assert!(ev[0].abs() < 1e-14);
            assert_relative_eq!(ev[1], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn worst_case_identity_instance() {
        let (a, b) = identity_pair(2);
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let w = worst_case_cross_cov(&x, &a, &b).unwrap();
        assert_eq!(w.case, DirectionCase::Interior);
        assert!((w.omega0 - 0.5).abs() < 1e-11);
        assert_relative_eq!(w.cross.matrix(), &m2(1.0, 0.0, 0.0, 0.0), epsilon = 1e-10);
        let value = crate::oracle::optimal_precision_quad(&a, &b, &w.cross, &x).unwrap();
        assert_relative_eq!(value, 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn worst_case_errors() {
        let (a, b) = identity_pair(2);
        assert!(matches!(
            worst_case_cross_cov(&DVector::zeros(2), &a, &b),
            Err(FusionError::ZeroVector)
        ));
        let singular = SplitEstimate::new(SpdMatrix::zeros(2), SpdMatrix::identity(2)).unwrap();
        assert!(matches!(
            worst_case_cross_cov(&DVector::from_vec(vec![1.0, 0.0]), &singular, &b),
            Err(FusionError::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn sample_instance_never_case_one() {
        let (a, b) = (sample_a(), sample_b());
        for k in 0..360 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 360.0;
            let x = DVector::from_vec(vec![t.cos(), t.sin()]);
            let w = worst_case_cross_cov(&x, &a, &b).unwrap();
            assert_ne!(w.case, DirectionCase::LowerEndpoint);
            assert!(is_admissible(&w.cross, a.p(), b.p(), TOL).unwrap());
        }
    }

    #[test]
    fn mixed_sampler_outputs_admissible() {
        for (n, seed) in [(2, 1), (3, 2), (5, 3)] {
            let (a, b) = random_pair(n, seed);
            let sampler = MixedSampler::new(&a, &b, SamplerMix::default()).unwrap();
            let batch = sampler.sample_batch(300, seed);
            assert_eq!(batch, sampler.sample_batch(300, seed));
            for pab in &batch {
                assert!(sampler.set().contains(pab, TOL));
            }
        }
    }

    #[test]
    fn child_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|i| child_seed(7, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }
}
