//! Radial p-Laplacian reaction problems `-Δ_p u = λ f(u)` in the unit ball.
//!
//! Profiles live on log-spaced radial grids and are integrated in flux form.
//! On top of that sit exact reference solutions, a shooting solver, the
//! monotone iteration for minimal solutions, a discretized second-variation
//! form and a suite of integrability and pointwise estimates.

pub mod error;
pub mod estimates;
pub mod exponents;
pub mod grid;
pub mod nonlinearity;
pub mod oracle;
pub mod profile;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
pub use exponents::{
    classify_regime, consistency_q0_mcs, critical_dimension, exponent_report, m_cs, q_exponent, ExponentReport,
    ExtendedReal, Regime,
};
pub use grid::{integrate_radial, make_grid, QuadratureRule, RadialGrid};
pub use nonlinearity::{NonlinearityKind, NonlinearitySpec, ProblemSpec, Table};
pub use oracle::{exact_exponential, exact_power, ode_residual, ExactKind, ExactSolution, LiouvilleDisk};
pub use profile::{energy, energy_with, RadialProfile};
pub use stability::{
    assemble_q, default_partition, hardy_inequality_check, key_estimate_lhs, lemma21_identity, lemma21_rhs, min_eigenvalue, q_apply, stability_report,
    AssembledForm, StabilityControls, StabilityReport, TestFunctionFamily, Verdict,
};
pub use estimates::{
    check_regularity, flux_monotonicity_check, gradient_l1_bound, lq_norm, singularity_exponent_fit, w1q_norm, EstimateControls, EstimateReport,
    GradientL1Bound, SingularityFit,
};
