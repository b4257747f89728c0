use conservafuse::io::{DirectionAnalysisJson, ErrorJson, OptimizeJson, Problem, ProblemFile};
use conservafuse::volume::touching_direction;
use conservafuse::{
    ci_bound, ellipse_boundary, optimize_omega, sci_bound, v_star_boundary, CostFunction,
    FusionError, SciPrecisionCurve, SpdMatrix, Tolerances,
};
use nalgebra::DVector;
use serde_json::{json, Value};

pub const MAX_POINTS: usize = 2000;
const OPTIMIZE_TOL: f64 = 1e-9;

fn fail(e: FusionError) -> String {
    let body = ErrorJson::new(e.kind(), e.to_string(), if e.is_numeric() { 3 } else { 2 });
    serde_json::to_string(&body).expect("serializable error")
}

fn load(problem: &str) -> Result<Problem, FusionError> {
    let p = ProblemFile::parse(problem)?.validate(&Tolerances::default())?;
    if p.a.dim() != 2 {
        return Err(FusionError::DimensionNotTwo { found: p.a.dim() });
    }
    Ok(p)
}

fn outline(m: &SpdMatrix, points: usize) -> Result<Value, FusionError> {
    Ok(json!(ellipse_boundary(m, points)?.points))
}

fn scene_value(problem: &str, omega: f64, points: usize) -> Result<Value, FusionError> {
    if points < 3 || points > MAX_POINTS {
        return Err(FusionError::ParameterOutOfRange { name: "points", value: points as f64 });
    }
    let p = load(problem)?;
    let sci = sci_bound(&p.a, &p.b, omega)?;
    let ci = ci_bound(p.a.c(), p.b.c(), omega, None)?;
    let curve = SciPrecisionCurve::new(p.a.clone(), p.b.clone())?;
    let touch = touching_direction(&curve, omega)?.map(|x| {
        let s = 1.0 / conservafuse::spd::quad_form(&sci.bound.inverse().expect("strict bound"), &x).sqrt();
        [s * x[0], s * x[1]]
    });
    Ok(json!({
        "omega": omega,
        "C_A": outline(p.a.c(), points)?,
        "C_B": outline(p.b.c(), points)?,
        "ci": outline(&ci.bound, points)?,
        "sci": outline(&sci.bound, points)?,
        "vstar": v_star_boundary(&curve, points)?.points,
        "touch": touch,
        "sciBound": sci.bound.to_rows(),
    }))
}

/// Drawing data for one value of `omega`, each curve sampled at `points` angles.
pub fn scene(problem: &str, omega: f64, points: usize) -> Result<String, String> {
    scene_value(problem, omega, points).map(|v| v.to_string()).map_err(fail)
}

pub fn optimize(problem: &str, cost: &str) -> Result<String, String> {
    let run = || -> Result<String, FusionError> {
        let p = load(problem)?;
        let cost: CostFunction = cost.parse()?;
        let opt = optimize_omega(&p.a, &p.b, &cost, OPTIMIZE_TOL)?;
        Ok(serde_json::to_string(&OptimizeJson::new(&cost, &opt)).expect("serializable output"))
    };
    run().map_err(fail)
}

pub fn analyze(problem: &str, angle: f64) -> Result<String, String> {
    let run = || -> Result<String, FusionError> {
        let p = load(problem)?;
        let curve = SciPrecisionCurve::new(p.a, p.b)?;
        let (s, c) = angle.sin_cos();
        let d = curve.analyze(&DVector::from_vec(vec![c, s]))?;
        Ok(serde_json::to_string(&DirectionAnalysisJson::new(&d)).expect("serializable output"))
    };
    run().map_err(fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "estA": {"P": [[1, -1], [-1, 4]], "Q": [[1, 0], [0, 4]]},
        "estB": {"P": [[9, 2], [2, 1]], "Q": [[4, 0], [0, 2]]}
    }"#;

    fn parsed(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn scene_has_all_curves() {
        let v = parsed(&scene(SAMPLE, 0.4, 90).unwrap());
        for key in ["C_A", "C_B", "ci", "sci", "vstar"] {
            assert_eq!(v[key].as_array().unwrap().len(), 90, "{key}");
        }
        assert!(v["touch"].is_array());
    }

    #[test]
    fn scene_endpoint_matches_second_estimate() {
        let v = parsed(&scene(SAMPLE, 0.0, 12).unwrap());
        assert_eq!(v["sci"], v["C_B"]);
        assert_eq!(v["sciBound"], json!([[13.0, 2.0], [2.0, 3.0]]));
    }

    #[test]
    fn touching_point_lies_on_v_star() {
        let p = load(SAMPLE).unwrap();
        let curve = SciPrecisionCurve::new(p.a, p.b).unwrap();
        let v = parsed(&scene(SAMPLE, 0.4, 12).unwrap());
        let t: Vec<f64> = serde_json::from_value(v["touch"].clone()).unwrap();
        let x = DVector::from_vec(t);
        assert!((curve.g_value(&x).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn optimize_reports_interior_optimum() {
        let v = parsed(&optimize(SAMPLE, "trace").unwrap());
        let w = v["omega_star"].as_f64().unwrap();
        assert!(w > 0.0 && w < 1.0);
        let e = parsed(&optimize(SAMPLE, "volume").unwrap_err());
        assert_eq!(e["exit_code"], 2);
    }

    #[test]
    fn analyze_returns_case() {
        let v = parsed(&analyze(SAMPLE, 0.7).unwrap());
        assert!((1..=3).contains(&v["case"].as_u64().unwrap()));
    }

    #[test]
    fn errors_are_json() {
        let e = parsed(&scene(SAMPLE, 1.5, 12).unwrap_err());
        assert_eq!(e["error"], "OmegaOutOfRange");
        let e = parsed(&scene("{", 0.5, 12).unwrap_err());
        assert_eq!(e["error"], "InvalidInput");
        let e = parsed(&scene(SAMPLE, 0.5, 1).unwrap_err());
        assert_eq!(e["error"], "ParameterOutOfRange");
    }
}
