//! Conservative fusion of two estimates whose errors are correlated to an
//! unknown degree.
//!
//! Each estimate carries a covariance split `C = P + Q` where only `P` may be
//! correlated with the other estimate. The crate provides the classical
//! fusion rules (information filter, covariance intersection, Bar-Shalom and
//! Campo), split covariance intersection (SCI), the minimal region `V*`
//! that every conservative bound must contain, and the search for the SCI
//! parameter minimizing an increasing cost.
//!
//! ```
//! use conservafuse::{fixtures, sci_bound};
//!
//! let (a, b) = (fixtures::sample_a(), fixtures::sample_b());
//! let fused = sci_bound(&a, &b, 0.0).unwrap();
//! assert_eq!(fused.bound.matrix(), b.c().matrix());
//! ```

pub mod admissible;
pub mod audit;
pub mod error;
pub mod figures;
pub mod fixtures;
pub mod fusion;
pub mod io;
pub mod optimize;
pub mod oracle;
pub mod spd;
pub mod volume;

pub use admissible::{
    is_admissible, rank_one_cross_cov, sample_cross_cov, worst_case_cross_cov, AdmissibleSet,
    CrossCovariance, MixedSampler, SamplerMix, WorstCase,
};
pub use audit::{audit, AuditConfig, AuditReport};
pub use error::{FusionError, Result};
pub use fusion::{
    bar_shalom_campo, ci_bound, fused_covariance, information_fusion, optimal_covariance_forms,
    rho_bound, rho_bound_gamma, sci_bound, FusionGains, FusionParameter, FusionResult,
    SplitEstimate,
};
pub use optimize::{cost_curve, optimize_omega, CostFunction, OmegaOptimum};
pub use spd::{ellipse_boundary, loewner_leq, validate_spd, Ellipse2D, SpdMatrix, Tolerances};
pub use volume::{
    analyze_direction, is_tight, v_star_boundary, v_star_membership, DirectionAnalysis,
    DirectionCase, SciPrecisionCurve, TightnessReport,
};
