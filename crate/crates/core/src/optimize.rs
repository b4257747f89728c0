//! Choice of the SCI parameter minimizing an increasing cost of the bound.
//!
//! Trace and log-determinant are convex in `ω` and are minimized by
//! bisection on their analytic slope. Other costs are seeded on a 101-point
//! grid and refined by golden-section search inside the best bracket.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{FusionError, Result};
use crate::fusion::{sci_bound, FusionResult, SplitEstimate};
use crate::spd::{check_dim, max_eigenvalue, SpdMatrix};
use crate::volume::{SciPrecisionCurve, OPEN_ENDPOINT_OFFSET};

pub const DEFAULT_TOL_OMEGA: f64 = 1e-9;
const SEED_GRID: usize = 101;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Scalar cost of a bound. Must be increasing in the Loewner order; this is
/// true for the built-ins and assumed for [`CostFunction::Custom`].
#[derive(Clone)]
pub enum CostFunction {
    Trace,
    /// Log-determinant, which has the same minimizer as the determinant.
    LogDet,
    MaxEigenvalue,
    Custom(Arc<dyn Fn(&SpdMatrix) -> f64 + Send + Sync>),
}

impl CostFunction {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&SpdMatrix) -> f64 + Send + Sync + 'static,
    {
        Self::Custom(Arc::new(f))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Trace => "trace",
            Self::LogDet => "logdet",
            Self::MaxEigenvalue => "maxEigenvalue",
            Self::Custom(_) => "custom",
        }
    }

    /// Trace and log-determinant of the SCI bound are convex in `ω`.
    pub fn is_convex_in_omega(&self) -> bool {
        matches!(self, Self::Trace | Self::LogDet)
    }

    pub fn evaluate(&self, m: &SpdMatrix) -> f64 {
        match self {
            Self::Trace => m.trace(),
            Self::LogDet => match m.matrix().clone().cholesky() {
                Some(chol) => 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
                None => f64::NEG_INFINITY,
            },
            Self::MaxEigenvalue => max_eigenvalue(m.matrix()),
            Self::Custom(f) => f(m),
        }
    }
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostFunction {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trace" => Ok(Self::Trace),
            "logdet" | "det" | "determinant" => Ok(Self::LogDet),
            "maxeigenvalue" | "max-eigenvalue" | "maxeig" | "lambda-max" => Ok(Self::MaxEigenvalue),
            _ => Err(FusionError::InvalidInput(format!("unknown cost function '{s}'"))),
        }
    }
}

/// Minimizer of `J(B_SCI(ω))` over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct OmegaOptimum {
    pub omega_star: f64,
    pub cost_value: f64,
    pub result: FusionResult,
    /// False when the search fell back to grid seeding because the cost is
    /// not known to be convex in `ω`.
    pub convexity_exploited: bool,
}

struct Objective<'a> {
    a: &'a SplitEstimate,
    b: &'a SplitEstimate,
    cost: &'a CostFunction,
    curve: SciPrecisionCurve,
}

impl Objective<'_> {
    /// `d/dω J(B_SCI(ω))` for trace and log-determinant, from
    /// `B' = -B H' B`.
    fn slope(&self, omega: f64) -> Result<f64> {
        let b = self.curve.bound(omega)?;
        let h1 = self.curve.derivative(omega)?;
        let bh1 = &b * h1;
        Ok(match self.cost {
            CostFunction::Trace => -(&bh1 * &b).trace(),
            _ => -bh1.trace(),
        })
    }

    /// Minimizer of a convex cost on `[lo, hi]`: bisection on the sign of
    /// the slope, which resolves `ω` far below the resolution of comparing
    /// cost values near a flat minimum.
    fn convex_min(&self, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
        if self.slope(lo)? >= 0.0 {
            return Ok(lo);
        }
        if self.slope(hi)? <= 0.0 {
            return Ok(hi);
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.slope(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn eval(&self, omega: f64) -> Result<f64> {
        let r = sci_bound(self.a, self.b, omega)?;
        let v = self.cost.evaluate(&r.bound);
        if !v.is_finite() {
            return Err(FusionError::NonFiniteCost { omega });
        }
        Ok(v)
    }

    /// Golden-section search on `[lo, hi]`; returns the best point visited.
    fn golden(&self, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = self.eval(x1)?;
        let mut f2 = self.eval(x2)?;
        while hi - lo > tol {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = self.eval(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = self.eval(x2)?;
            }
        }
        Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
    }
}

/// Smallest-`ω` candidate whose cost is within rounding of the best.
fn pick(mut candidates: Vec<(f64, f64)>) -> (f64, f64) {
    candidates.sort_by(|l, r| l.0.total_cmp(&r.0));
    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let slack = 1e-13 * best.abs().max(1.0);
    candidates
        .into_iter()
        .find(|c| c.1 <= best + slack)
        .expect("at least one candidate")
}

pub fn optimize_omega(
    a: &SplitEstimate,
    b: &SplitEstimate,
    cost: &CostFunction,
    tol_omega: f64,
) -> Result<OmegaOptimum> {
    check_dim(a.dim(), b.dim())?;
    if !(tol_omega > 0.0) {
        return Err(FusionError::ParameterOutOfRange {
            name: "tolOmega",
            value: tol_omega,
        });
    }
    let obj = Objective {
        a,
        b,
        cost,
        curve: SciPrecisionCurve::new(a.clone(), b.clone())?,
    };
    // A singular P excludes the corresponding endpoint from the domain.
    let lo = if a.p().is_strict() { 0.0 } else { OPEN_ENDPOINT_OFFSET };
    let hi = if b.p().is_strict() { 1.0 } else { 1.0 - OPEN_ENDPOINT_OFFSET };
    let convex = cost.is_convex_in_omega();
    let mut candidates = vec![(lo, obj.eval(lo)?), (hi, obj.eval(hi)?)];
    if convex {
        let w = obj.convex_min(lo, hi, tol_omega)?;
        candidates.push((w, obj.eval(w)?));
    } else {
        let step = (hi - lo) / (SEED_GRID - 1) as f64;
        let grid = (0..SEED_GRID)
            .map(|k| {
                let w = if k + 1 == SEED_GRID { hi } else { lo + k as f64 * step };
                obj.eval(w).map(|v| (w, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let (k, _) = grid
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, g)| if g.1 < acc.1 { (k, g.1) } else { acc });
        let bracket_lo = grid[k.saturating_sub(1)].0;
        let bracket_hi = grid[(k + 1).min(SEED_GRID - 1)].0;
        candidates.push(grid[k]);
        candidates.push(obj.golden(bracket_lo, bracket_hi, tol_omega)?);
    }
    let (omega_star, cost_value) = pick(candidates);
    Ok(OmegaOptimum {
        omega_star,
        cost_value,
        result: sci_bound(a, b, omega_star)?,
        convexity_exploited: convex,
    })
}

/// `(ω, J(B_SCI(ω)))` on a uniform grid of `grid_size` points.
pub fn cost_curve(
    a: &SplitEstimate,
    b: &SplitEstimate,
    cost: &CostFunction,
    grid_size: usize,
) -> Result<Vec<(f64, f64)>> {
    if grid_size < 3 {
        return Err(FusionError::ParameterOutOfRange {
            name: "gridSize",
            value: grid_size as f64,
        });
    }
    check_dim(a.dim(), b.dim())?;
    (0..grid_size)
        .map(|k| {
            let w = k as f64 / (grid_size - 1) as f64;
            let r = sci_bound(a, b, w)?;
            Ok((w, cost.evaluate(&r.bound)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{identity_pair, sample_a, sample_b, random_pair};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn scalar(p: f64, q: f64) -> SplitEstimate {
        SplitEstimate::from_row_slices(1, &[p], &[q]).unwrap()
    }

    fn grid_argmin(a: &SplitEstimate, b: &SplitEstimate, cost: &CostFunction, n: usize) -> (f64, f64) {
        cost_curve(a, b, cost, n)
            .unwrap()
            .into_iter()
            .fold((0.0, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc })
    }

    #[test]
    fn identity_trace_optimum_is_half() {
        let (a, b) = identity_pair(2);
        let o = optimize_omega(&a, &b, &CostFunction::Trace, DEFAULT_TOL_OMEGA).unwrap();
        assert!((o.omega_star - 0.5).abs() < 1e-8);
        assert_relative_eq!(o.result.bound.matrix(), &(DMatrix::identity(2, 2) * 1.5), epsilon = 1e-12);
        assert!(o.convexity_exploited);
    }

    #[test]
    fn ci_limit_picks_smaller_covariance() {
        let o = optimize_omega(&scalar(1.0, 0.0), &scalar(2.0, 0.0), &CostFunction::Trace, 1e-9)
            .unwrap();
        assert_eq!(o.omega_star, 1.0);
        assert_eq!(o.cost_value, 1.0);
    }

    #[test]
    fn swap_mirrors_optimum() {
        for seed in 0..5 {
            let (a, b) = random_pair(3, seed);
            for cost in [CostFunction::Trace, CostFunction::LogDet] {
                let o = optimize_omega(&a, &b, &cost, 1e-10).unwrap();
                let s = optimize_omega(&b, &a, &cost, 1e-10).unwrap();
                assert!((o.omega_star - (1.0 - s.omega_star)).abs() < 1e-6);
                assert_relative_eq!(o.result.bound.matrix(), s.result.bound.matrix(), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn sample_trace_and_logdet_differ() {
        let (a, b) = (sample_a(), sample_b());
        let t = optimize_omega(&a, &b, &CostFunction::Trace, 1e-10).unwrap();
        let d = optimize_omega(&a, &b, &CostFunction::LogDet, 1e-10).unwrap();
        assert!((t.omega_star - d.omega_star).abs() > 1e-3);
        for (o, cost) in [(t, CostFunction::Trace), (d, CostFunction::LogDet)] {
            let (_, best) = grid_argmin(&a, &b, &cost, 20001);
            assert!(o.cost_value <= best + 1e-10);
        }
    }

    #[test]
    fn flat_cost_ties_to_smallest_omega() {
        let n = 2;
        let zero = crate::spd::SpdMatrix::zeros(n);
        let a = SplitEstimate::new(zero.clone(), crate::spd::SpdMatrix::identity(n)).unwrap();
        let o = optimize_omega(&a, &a, &CostFunction::Trace, 1e-9).unwrap();
        assert_eq!(o.omega_star, OPEN_ENDPOINT_OFFSET);
        assert_relative_eq!(o.cost_value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn grid_costs_flagged() {
        let (a, b) = (sample_a(), sample_b());
        let o = optimize_omega(&a, &b, &CostFunction::MaxEigenvalue, 1e-10).unwrap();
        assert!(!o.convexity_exploited);
        let (_, best) = grid_argmin(&a, &b, &CostFunction::MaxEigenvalue, 20001);
        assert!(o.cost_value <= best + 1e-9);
        let c = CostFunction::custom(|m| m.matrix()[(0, 0)]);
        let o = optimize_omega(&a, &b, &c, 1e-10).unwrap();
        assert!(!o.convexity_exploited);
        let nan = CostFunction::custom(|_| f64::NAN);
        assert!(matches!(
            optimize_omega(&a, &b, &nan, 1e-9),
            Err(FusionError::NonFiniteCost { .. })
        ));
    }

    #[test]
    fn cost_names_parse() {
        assert!(matches!("trace".parse::<CostFunction>(), Ok(CostFunction::Trace)));
        assert!(matches!("logdet".parse::<CostFunction>(), Ok(CostFunction::LogDet)));
        assert!(matches!("maxEigenvalue".parse::<CostFunction>(), Ok(CostFunction::MaxEigenvalue)));
        assert!(matches!("volume".parse::<CostFunction>(), Err(FusionError::InvalidInput(_))));
    }

    #[test]
    fn cost_curve_endpoints_and_convexity() {
        let (a, b) = (sample_a(), sample_b());
        let curve = cost_curve(&a, &b, &CostFunction::Trace, 101).unwrap();
        assert_eq!(curve[0].1, 16.0);
        assert_eq!(curve[100].1, 10.0);
        for w in curve.windows(3) {
            assert!(w[0].1 - 2.0 * w[1].1 + w[2].1 >= -1e-9 * 16.0);
        }
        assert!(cost_curve(&a, &b, &CostFunction::Trace, 2).is_err());
    }
}
