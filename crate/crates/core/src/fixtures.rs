//! Reference instances shared by examples, tests and the demos.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::admissible::rng_from_seed;
use crate::fusion::SplitEstimate;
use crate::spd::SpdMatrix;

/// Row-major 2x2 matrix.
pub fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

/// Unit vector at angle `theta` in the plane.
pub fn unit(theta: f64) -> DVector<f64> {
    DVector::from_vec(vec![theta.cos(), theta.sin()])
}

fn spd(m: DMatrix<f64>) -> SpdMatrix {
    SpdMatrix::new(m, false).expect("fixture matrix is PSD")
}

/// `P_A = [[1,-1],[-1,4]]`, `Q_A = diag(1,4)`, so `C_A = [[2,-1],[-1,8]]`.
pub fn sample_a() -> SplitEstimate {
    SplitEstimate::new(spd(m2(1.0, -1.0, -1.0, 4.0)), spd(m2(1.0, 0.0, 0.0, 4.0))).unwrap()
}

/// `P_B = [[9,2],[2,1]]`, `Q_B = diag(4,2)`, so `C_B = [[13,2],[2,3]]`.
pub fn sample_b() -> SplitEstimate {
    SplitEstimate::new(spd(m2(9.0, 2.0, 2.0, 1.0)), spd(m2(4.0, 0.0, 0.0, 2.0))).unwrap()
}

/// Both estimators with `P = Q = I`.
pub fn identity_pair(n: usize) -> (SplitEstimate, SplitEstimate) {
    let e = SplitEstimate::new(SpdMatrix::identity(n), SpdMatrix::identity(n)).unwrap();
    (e.clone(), e)
}

/// Random well-conditioned SPD matrix `G G^T / n + 0.1 I`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SpdMatrix {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let m = &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1;
    SpdMatrix::new((&m + m.transpose()) * 0.5, true).unwrap()
}

/// Random pair of estimators with strictly positive definite `P` and `Q`.
pub fn random_pair(n: usize, seed: u64) -> (SplitEstimate, SplitEstimate) {
    let mut rng = rng_from_seed(seed);
    let mut est = || {
        let p = random_spd(&mut rng, n);
        let q = random_spd(&mut rng, n);
        SplitEstimate::new(p, q).unwrap()
    };
    let a = est();
    let b = est();
    (a, b)
}
