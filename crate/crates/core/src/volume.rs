//! The minimal fused precision `g(x)` and the set `V* = {x : g(x) ≤ 1}`
//! that every conservative bound's ellipsoid must contain.
//!
//! `g(x)` is evaluated through the SCI precision curve
//! `H(ω) = ω A(ω) + ω̄ B(ω̄)` with `A(ω) = (P_A + ω Q_A)^{-1}` and
//! `B(s) = (P_B + s Q_B)^{-1}`. Since `ω ↦ x^T H(ω) x` is strictly concave,
//! its maximizer is either an endpoint or the unique root of the derivative,
//! and the maximum equals `g(x)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::admissible::{gaussian_unit_vector, worst_case_on, CrossCovariance};
use crate::error::{FusionError, Result};
use crate::fusion::{split_precision, SplitEstimate};
use crate::spd::{check_dim, inverse_spd, quad_form, sym_eigen, symmetrize};

/// Bisection stops once the bracket on `ω0` is this narrow.
pub const OMEGA0_WIDTH: f64 = 1e-12;
/// `|x^T H'(endpoint) x|` below this fraction of its terms counts as zero.
pub const CASE_BOUNDARY_TOL: f64 = 1e-12;
/// Relative gap under which an SCI bound is declared touching `V*`.
pub const TIGHTNESS_TOL: f64 = 1e-7;
/// Distance kept from an endpoint at which `P + ωQ` is singular.
pub const OPEN_ENDPOINT_OFFSET: f64 = 1e-8;

/// Which branch of the maximization over `ω` a direction falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionCase {
    /// `x^T H'(0) x < 0`: the maximum is at `ω = 0`.
    LowerEndpoint,
    /// `x^T H'(1) x > 0`: the maximum is at `ω = 1`.
    UpperEndpoint,
    /// The derivative vanishes at a unique interior (or boundary) `ω0`.
    Interior,
}

impl DirectionCase {
    pub fn number(self) -> u8 {
        match self {
            Self::LowerEndpoint => 1,
            Self::UpperEndpoint => 2,
            Self::Interior => 3,
        }
    }
}

/// `H_SCI(ω)` and its first two derivatives for a fixed pair of estimates.
#[derive(Debug, Clone)]
pub struct SciPrecisionCurve {
    a: SplitEstimate,
    b: SplitEstimate,
}

fn check_omega(omega: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(FusionError::OmegaOutOfRange(omega));
    }
    Ok(())
}

impl SciPrecisionCurve {
    pub fn new(a: SplitEstimate, b: SplitEstimate) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &SplitEstimate {
        &self.a
    }

    pub fn b(&self) -> &SplitEstimate {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// The same curve with the estimators swapped, i.e. `ω ↦ 1 - ω`.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    /// `A(ω) = (P_A + ω Q_A)^{-1}`.
    pub fn a_precision(&self, omega: f64) -> Result<DMatrix<f64>> {
        split_precision(&self.a, omega, omega)
    }

    /// `B(s) = (P_B + s Q_B)^{-1}`; `omega` is only used for error reporting.
    pub fn b_precision(&self, s: f64, omega: f64) -> Result<DMatrix<f64>> {
        split_precision(&self.b, s, omega)
    }

    fn parts(&self, omega: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((self.a_precision(omega)?, self.b_precision(1.0 - omega, omega)?))
    }

    pub fn precision(&self, omega: f64) -> Result<DMatrix<f64>> {
        check_omega(omega)?;
        let (am, bm) = self.parts(omega)?;
        Ok(symmetrize(&(am * omega + bm * (1.0 - omega))))
    }

    /// `H'(ω) = A P_A A - B P_B B` (with `B = B(ω̄)`).
    pub fn derivative(&self, omega: f64) -> Result<DMatrix<f64>> {
        check_omega(omega)?;
        let (am, bm) = self.parts(omega)?;
        let d = &am * self.a.p().matrix() * &am - &bm * self.b.p().matrix() * &bm;
        Ok(symmetrize(&d))
    }

    /// `H''(ω) = -A(Q_A A P_A + P_A A Q_A)A - B(Q_B B P_B + P_B B Q_B)B`.
    pub fn second_derivative(&self, omega: f64) -> Result<DMatrix<f64>> {
        check_omega(omega)?;
        let (am, bm) = self.parts(omega)?;
        let (p_a, q_a) = (self.a.p().matrix(), self.a.q().matrix());
        let (p_b, q_b) = (self.b.p().matrix(), self.b.q().matrix());
        let inner_a = q_a * &am * p_a + p_a * &am * q_a;
        let inner_b = q_b * &bm * p_b + p_b * &bm * q_b;
        let d = -(&am * inner_a * &am) - &bm * inner_b * &bm;
        Ok(symmetrize(&d))
    }

    /// Derivative of the requested order (0, 1 or 2).
    pub fn evaluate(&self, omega: f64, order: u8) -> Result<DMatrix<f64>> {
        match order {
            0 => self.precision(omega),
            1 => self.derivative(omega),
            2 => self.second_derivative(omega),
            _ => Err(FusionError::ParameterOutOfRange {
                name: "order",
                value: order as f64,
            }),
        }
    }

    /// `B_SCI(ω) = H(ω)^{-1}`.
    pub fn bound(&self, omega: f64) -> Result<DMatrix<f64>> {
        inverse_spd(&self.precision(omega)?).ok_or(FusionError::SingularCovariance)
    }

    /// `B'' = 2 B H' B H' B - B H'' B`.
    pub fn bound_second_derivative(&self, omega: f64) -> Result<DMatrix<f64>> {
        let b = self.bound(omega)?;
        let h1 = self.derivative(omega)?;
        let h2 = self.second_derivative(omega)?;
        let bh1b = &b * &h1 * &b;
        Ok(symmetrize(&((&bh1b * &h1 * &b) * 2.0 - &b * h2 * &b)))
    }

    /// `x^T H(ω) x`.
    pub fn h(&self, x: &DVector<f64>, omega: f64) -> Result<f64> {
        Ok(quad_form(&self.precision(omega)?, x))
    }

    /// `x^T H'(ω) x` split into its two terms `(x^T A P_A A x, x^T B P_B B x)`.
    fn derivative_terms(&self, x: &DVector<f64>, omega: f64) -> Result<(f64, f64)> {
        let (am, bm) = self.parts(omega)?;
        let ax = am * x;
        let bx = bm * x;
        Ok((
            quad_form(self.a.p().matrix(), &ax),
            quad_form(self.b.p().matrix(), &bx),
        ))
    }

    /// `x^T H'(ω) x`.
    pub fn h_prime(&self, x: &DVector<f64>, omega: f64) -> Result<f64> {
        let (ta, tb) = self.derivative_terms(x, omega)?;
        Ok(ta - tb)
    }

    fn check_direction(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        if !(x.norm() > 0.0) {
            return Err(FusionError::ZeroVector);
        }
        Ok(())
    }

    /// Sign test selecting the branch of the maximization over `ω`. Values
    /// within [`CASE_BOUNDARY_TOL`] of zero are assigned to the interior case.
    pub fn classify(&self, x: &DVector<f64>) -> Result<DirectionCase> {
        self.check_direction(x)?;
        let (ta, tb) = self.derivative_terms(x, 0.0)?;
        if ta - tb < -CASE_BOUNDARY_TOL * (ta.abs() + tb.abs()) {
            return Ok(DirectionCase::LowerEndpoint);
        }
        let (ta, tb) = self.derivative_terms(x, 1.0)?;
        if ta - tb > CASE_BOUNDARY_TOL * (ta.abs() + tb.abs()) {
            return Ok(DirectionCase::UpperEndpoint);
        }
        Ok(DirectionCase::Interior)
    }

    fn bisect_root(&self, x: &DVector<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
        while hi - lo > OMEGA0_WIDTH {
            let mid = 0.5 * (lo + hi);
            if self.h_prime(x, mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Root of the strictly decreasing `ω ↦ x^T H'(ω) x`, for interior
    /// directions only.
    pub fn solve_omega0(&self, x: &DVector<f64>) -> Result<f64> {
        let case = self.classify(x)?;
        if case != DirectionCase::Interior {
            return Err(FusionError::WrongCase {
                found: case.number(),
            });
        }
        self.bisect_root(x, 0.0, 1.0)
    }

    /// Full analysis of a direction: branch, maximizing `ω0`, `g(x)` and the
    /// cross-covariance that attains it. Requires `P_A`, `P_B` invertible.
    pub fn analyze(&self, x: &DVector<f64>) -> Result<DirectionAnalysis> {
        self.check_direction(x)?;
        let worst = worst_case_on(self, x)?;
        let value = self.h(x, worst.omega0)?;
        Ok(DirectionAnalysis {
            x: x.clone(),
            case: worst.case,
            omega0: worst.omega0,
            value,
            worst_case: worst.cross,
        })
    }

    /// `g(x) = max_ω x^T H(ω) x`, with `g(0) = 0`.
    ///
    /// When `P_A` (resp. `P_B`) is singular the curve is only defined on a
    /// half-open interval; the supremum is then taken over
    /// `[OPEN_ENDPOINT_OFFSET, 1]` (resp. `[0, 1 - OPEN_ENDPOINT_OFFSET]`).
    pub fn g_value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        if x.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let lo_ok = self.a.p().is_strict();
        let hi_ok = self.b.p().is_strict();
        if lo_ok && hi_ok {
            let omega0 = match self.classify(x)? {
                DirectionCase::LowerEndpoint => 0.0,
                DirectionCase::UpperEndpoint => 1.0,
                DirectionCase::Interior => self.bisect_root(x, 0.0, 1.0)?,
            };
            return self.h(x, omega0);
        }
        let lo = if lo_ok { 0.0 } else { OPEN_ENDPOINT_OFFSET };
        let hi = if hi_ok { 1.0 } else { 1.0 - OPEN_ENDPOINT_OFFSET };
        let omega = if self.h_prime(x, lo)? <= 0.0 {
            lo
        } else if self.h_prime(x, hi)? >= 0.0 {
            hi
        } else {
            self.bisect_root(x, lo, hi)?
        };
        self.h(x, omega)
    }

    pub fn in_v_star(&self, x: &DVector<f64>) -> Result<bool> {
        Ok(self.g_value(x)? <= 1.0 + 1e-12)
    }
}

/// Result of analyzing one direction `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionAnalysis {
    pub x: DVector<f64>,
    pub case: DirectionCase,
    pub omega0: f64,
    /// `g(x)`.
    pub value: f64,
    pub worst_case: CrossCovariance,
}

pub fn sci_precision(curve: &SciPrecisionCurve, omega: f64, order: u8) -> Result<DMatrix<f64>> {
    curve.evaluate(omega, order)
}

pub fn classify_direction(curve: &SciPrecisionCurve, x: &DVector<f64>) -> Result<DirectionCase> {
    curve.classify(x)
}

pub fn solve_omega0(curve: &SciPrecisionCurve, x: &DVector<f64>) -> Result<f64> {
    curve.solve_omega0(x)
}

pub fn analyze_direction(curve: &SciPrecisionCurve, x: &DVector<f64>) -> Result<DirectionAnalysis> {
    curve.analyze(x)
}

pub fn v_star_membership(curve: &SciPrecisionCurve, x: &DVector<f64>) -> Result<bool> {
    curve.in_v_star(x)
}

/// Closed polyline through angle-indexed points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline2D {
    pub thetas: Vec<f64>,
    pub points: Vec<[f64; 2]>,
}

/// Boundary `{g = 1}` of `V*` sampled at `count` equally spaced angles.
pub fn v_star_boundary(curve: &SciPrecisionCurve, count: usize) -> Result<Polyline2D> {
    if curve.dim() != 2 {
        return Err(FusionError::DimensionNotTwo { found: curve.dim() });
    }
    let mut thetas = Vec::with_capacity(count);
    let mut points = Vec::with_capacity(count);
    for k in 0..count {
        let theta = 2.0 * PI * k as f64 / count as f64;
        let (s, c) = theta.sin_cos();
        let u = DVector::from_vec(vec![c, s]);
        let r = 1.0 / curve.g_value(&u)?.sqrt();
        thetas.push(theta);
        points.push([r * c, r * s]);
    }
    Ok(Polyline2D { thetas, points })
}

/// Outcome of the tightness search for one SCI bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TightnessReport {
    pub omega: f64,
    pub tight: bool,
    /// Unit direction where the bound touches `V*` (tight bounds only).
    pub witness: Option<DVector<f64>>,
    /// Smallest `g(x) / x^T H(ω) x - 1` found on the unit sphere.
    pub gap: f64,
}

/// Direction where `x^T H'(ω) x` changes sign, if one exists. Such an `x`
/// has its maximizing parameter exactly at `ω`.
pub fn touching_direction(curve: &SciPrecisionCurve, omega: f64) -> Result<Option<DVector<f64>>> {
    let (values, vectors) = sym_eigen(&curve.derivative(omega)?);
    let n = values.len();
    let (lo, hi) = (values[0], values[n - 1]);
    let v_lo = vectors.column(0).into_owned();
    let v_hi = vectors.column(n - 1).into_owned();
    let candidate = if omega == 0.0 {
        (lo <= 0.0).then_some(v_lo)
    } else if omega == 1.0 {
        (hi >= 0.0).then_some(v_hi)
    } else if lo <= 0.0 && hi >= 0.0 {
        if hi - lo == 0.0 {
            Some(v_lo)
        } else {
            Some(v_lo * hi.sqrt() + v_hi * (-lo).sqrt())
        }
    } else {
        None
    };
    Ok(candidate.map(|x| {
        let norm = x.norm();
        x / norm
    }))
}

fn sphere_candidates(n: usize, budget: usize) -> Vec<DVector<f64>> {
    let budget = budget.max(1);
    match n {
        1 => vec![DVector::from_element(1, 1.0)],
        2 => (0..budget)
            .map(|k| {
                let t = PI * k as f64 / budget as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5.0_f64.sqrt());
            (0..budget)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / budget as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x7167_6874);
            (0..budget).map(|_| gaussian_unit_vector(&mut rng, n)).collect()
        }
    }
}

/// Decides whether `E(B_SCI(ω))` touches `V*`.
///
/// Minimizes `g(x) / x^T H(ω) x - 1` over unit directions: a coarse grid of
/// `budget` directions (plus the sign change of `H'(ω)` when there is one) is
/// refined by a shrinking coordinate pattern search from the best few
/// candidates. The bound is reported tight when the gap falls under
/// [`TIGHTNESS_TOL`].
pub fn is_tight(curve: &SciPrecisionCurve, omega: f64, budget: usize) -> Result<TightnessReport> {
    check_omega(omega)?;
    let precision = curve.precision(omega)?;
    let gap = |x: &DVector<f64>| -> Result<f64> {
        Ok(curve.g_value(x)? / quad_form(&precision, x) - 1.0)
    };
    let n = curve.dim();

    let mut candidates = sphere_candidates(n, budget);
    if let Some(x) = touching_direction(curve, omega)? {
        candidates.push(x);
    }
    let mut scored = candidates
        .into_iter()
        .map(|x| gap(&x).map(|g| (g, x)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|l, r| l.0.total_cmp(&r.0));

    let spacing = match n {
        1 => 0.0,
        _ => PI / (budget.max(1) as f64).powf(1.0 / (n as f64 - 1.0)),
    };
    let mut best = scored[0].clone();
    for (start_gap, start) in scored.into_iter().take(3) {
        let refined = refine(&gap, start, start_gap, spacing)?;
        if refined.0 < best.0 {
            best = refined;
        }
        if best.0 <= TIGHTNESS_TOL {
            break;
        }
    }
    let (gap_value, x) = best;
    let tight = gap_value <= TIGHTNESS_TOL;
    Ok(TightnessReport {
        omega,
        tight,
        witness: tight.then_some(x),
        gap: gap_value,
    })
}

fn refine<F>(gap: &F, mut x: DVector<f64>, mut value: f64, mut step: f64) -> Result<(f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let n = x.len();
    while step > 1e-10 && value > TIGHTNESS_TOL {
        let mut improved = false;
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sign * step;
                let norm = y.norm();
                if norm == 0.0 {
                    continue;
                }
                y /= norm;
                let v = gap(&y)?;
                if v < value {
                    value = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((value, x))
}
