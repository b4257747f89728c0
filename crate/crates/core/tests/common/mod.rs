//! Reference computations written directly from the definitions, sharing
//! no code with the library paths they check.

#![allow(dead_code)]

use conservafuse::SplitEstimate;
use nalgebra::{DMatrix, DVector};

pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    sym(m).symmetric_eigenvalues().min()
}

pub fn max_eig(m: &DMatrix<f64>) -> f64 {
    sym(m).symmetric_eigenvalues().max()
}

pub fn scale(m: &DMatrix<f64>) -> f64 {
    sym(m).symmetric_eigenvalues().amax().max(1.0)
}

pub fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("invertible")
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// `K_A C_A K_A^T + K_A P K_B^T + K_B P^T K_A^T + K_B C_B K_B^T`.
pub fn fused_cov(
    k_a: &DMatrix<f64>,
    k_b: &DMatrix<f64>,
    c_a: &DMatrix<f64>,
    c_b: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> DMatrix<f64> {
    k_a * c_a * k_a.transpose()
        + k_a * p * k_b.transpose()
        + k_b * p.transpose() * k_a.transpose()
        + k_b * c_b * k_b.transpose()
}

/// Joint error covariance `[[C_A, P], [P^T, C_B]]`.
pub fn joint(c_a: &DMatrix<f64>, c_b: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c_a.nrows();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(c_a);
    s.view_mut((0, n), (n, n)).copy_from(p);
    s.view_mut((n, 0), (n, n)).copy_from(&p.transpose());
    s.view_mut((n, n), (n, n)).copy_from(c_b);
    s
}

/// Optimal fused precision for a known cross-covariance, as the
/// generalized least-squares information `H^T Σ^{-1} H` with `H = [I; I]`.
pub fn optimal_precision(a: &SplitEstimate, b: &SplitEstimate, p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.dim();
    let s_inv = inv(&joint(a.c().matrix(), b.c().matrix(), p));
    let mut m = DMatrix::zeros(n, n);
    for (i, j) in [(0, 0), (0, n), (n, 0), (n, n)] {
        m += s_inv.view((i, j), (n, n));
    }
    sym(&m)
}

pub fn quad(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(m * x))
}

/// `ω (P_A + ω Q_A)^{-1} + (1-ω) (P_B + (1-ω) Q_B)^{-1}`.
pub fn sci_precision(a: &SplitEstimate, b: &SplitEstimate, w: f64) -> DMatrix<f64> {
    let (pa, qa) = (a.p().matrix(), a.q().matrix());
    let (pb, qb) = (b.p().matrix(), b.q().matrix());
    let mut h = DMatrix::zeros(a.dim(), a.dim());
    if w > 0.0 {
        h += inv(&(pa + qa * w)) * w;
    }
    if w < 1.0 {
        h += inv(&(pb + qb * (1.0 - w))) * (1.0 - w);
    }
    sym(&h)
}

pub fn grid_max_h(a: &SplitEstimate, b: &SplitEstimate, x: &DVector<f64>, points: usize) -> f64 {
    (0..points)
        .map(|k| quad(&sci_precision(a, b, k as f64 / (points - 1) as f64), x))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Cholesky-based trace and log-determinant of `B_SCI(ω)` for dense grids.
pub fn sci_costs(a: &SplitEstimate, b: &SplitEstimate, w: f64) -> (f64, f64) {
    let h = sci_precision(a, b, w);
    let chol = h.cholesky().expect("SPD precision");
    let logdet_h: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    (chol.inverse().trace(), -logdet_h)
}

pub fn unit(theta: f64) -> DVector<f64> {
    DVector::from_vec(vec![theta.cos(), theta.sin()])
}
