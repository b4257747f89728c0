//! CSV tables of the planar geometry: CI and SCI bound families, the
//! boundary of `V*`, fused covariances for rank-one cross-covariances and
//! `V*` under the bounded-correlation model.
//!
//! Every table has the header `label,theta,x1,x2`. For ellipses `theta` is
//! the parameter of `x = C^{1/2} (cos θ, sin θ)`; for `V*` it is the polar
//! angle of the point.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::admissible::rank_one_cross_cov;
use crate::error::{FusionError, Result};
use crate::fusion::{ci_bound, fused_covariance, sci_bound, FusionGains, SplitEstimate};
use crate::spd::{ellipse_boundary, SpdMatrix};
use crate::volume::{v_star_boundary, SciPrecisionCurve};

pub const POLYLINE_POINTS: usize = 360;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub file_name: &'static str,
    pub rows: Vec<(String, f64, f64, f64)>,
}

impl CsvTable {
    fn new(file_name: &'static str) -> Self {
        Self {
            file_name,
            rows: Vec::new(),
        }
    }

    fn extend(&mut self, label: &str, thetas: &[f64], points: &[[f64; 2]]) {
        for (t, p) in thetas.iter().zip(points) {
            self.rows.push((label.to_string(), *t, p[0], p[1]));
        }
    }

    fn ellipse(&mut self, label: &str, c: &SpdMatrix) -> Result<()> {
        let e = ellipse_boundary(c, POLYLINE_POINTS)?;
        self.extend(label, &e.thetas, &e.points);
        Ok(())
    }

    /// Labels in order of first appearance.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (l, ..) in &self.rows {
            if out.last() != Some(&l.as_str()) {
                out.push(l);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,theta,x1,x2\n");
        for (label, t, x1, x2) in &self.rows {
            writeln!(s, "{label},{t:.16e},{x1:.16e},{x2:.16e}").unwrap();
        }
        s
    }
}

fn omega_label(omega: f64) -> String {
    format!("omega={omega:.1}")
}

/// Fused covariances `C_F(I/2, P_AB)` for the rank-one cross-covariances
/// along `x_i = (cos(πi/5), sin(πi/5))`, `i = 0..4`.
pub fn rank_one_fused(a: &SplitEstimate, b: &SplitEstimate) -> Result<Vec<(DVector<f64>, SpdMatrix)>> {
    let gains = FusionGains::average(a.dim());
    (0..5)
        .map(|i| {
            let t = PI * i as f64 / 5.0;
            let x = DVector::from_vec(vec![t.cos(), t.sin()]);
            let pab = rank_one_cross_cov(a.p(), b.p(), &x)?;
            Ok((x, fused_covariance(&gains, a, b, &pab)?))
        })
        .collect()
}

/// `V*` for the split `P = ρC`, `Q = (1-ρ)C` of both covariances.
pub fn rho_v_star(c_a: &SpdMatrix, c_b: &SpdMatrix, rho: f64, count: usize) -> Result<crate::volume::Polyline2D> {
    let a = SplitEstimate::from_correlation_bound(c_a, rho)?;
    let b = SplitEstimate::from_correlation_bound(c_b, rho)?;
    v_star_boundary(&SciPrecisionCurve::new(a, b)?, count)
}

pub fn figure_tables(a: &SplitEstimate, b: &SplitEstimate) -> Result<Vec<CsvTable>> {
    if a.dim() != 2 {
        return Err(FusionError::DimensionNotTwo { found: a.dim() });
    }
    let mut ci = CsvTable::new("ci_bounds.csv");
    let mut sci = CsvTable::new("sci_bounds.csv");
    for i in 0..=10 {
        let omega = i as f64 / 10.0;
        ci.ellipse(&omega_label(omega), &ci_bound(a.c(), b.c(), omega, None)?.bound)?;
        sci.ellipse(&omega_label(omega), &sci_bound(a, b, omega)?.bound)?;
    }

    let mut vstar = CsvTable::new("vstar_boundary.csv");
    let boundary = v_star_boundary(&SciPrecisionCurve::new(a.clone(), b.clone())?, POLYLINE_POINTS)?;
    vstar.extend("vstar", &boundary.thetas, &boundary.points);

    let mut worst = CsvTable::new("worstcase_ellipses.csv");
    for (i, (_, cf)) in rank_one_fused(a, b)?.iter().enumerate() {
        worst.ellipse(&format!("x{i}"), cf)?;
    }

    let mut rho = CsvTable::new("rho_sweep.csv");
    for i in 0..=4 {
        let r = 0.25 * i as f64;
        let line = rho_v_star(a.c(), b.c(), r, POLYLINE_POINTS)?;
        rho.extend(&format!("rho={r:.2}"), &line.thetas, &line.points);
    }
    Ok(vec![ci, sci, vstar, worst, rho])
}

/// Writes all tables into `dir` and returns the written paths.
pub fn write_figures(a: &SplitEstimate, b: &SplitEstimate, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let tables = figure_tables(a, b).map_err(std::io::Error::other)?;
    std::fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(t.file_name);
            std::fs::write(&path, t.to_csv())?;
            Ok(path)
        })
        .collect()
}
