//! The second variation of the energy: quadrature, P1 discretization, its
//! smallest eigenvalue and the identities and inequalities it implies.

mod eigen;
mod form;
mod identities;
mod test_functions;

pub use eigen::{min_eigenvalue, EigenBracket, Tridiagonal};
pub use form::{
    assemble_q, default_partition, q_apply, q_apply_on, stability_report, AssembledForm, StabilityControls,
    StabilityReport, Verdict,
};
pub use identities::{
    hardy_inequality_check, key_estimate_lhs, lemma21_identity, lemma21_rhs, HardyResult, IdentityResult,
    KeyEstimate,
};
pub use test_functions::TestFunctionFamily;
