//! Shooting from the center, monotone iteration for minimal solutions,
//! bracketing of the extremal parameter and bifurcation curves.

mod bifurcation;
mod continuation;
mod iterate;
mod shoot;

pub use bifurcation::{bifurcation_curve, BifurcationControls, BifurcationPoint};
pub use continuation::{
    extremal_profile, lambda_star_estimate, uniform_bound_check, ContinuationControls, ContinuationResult,
    LambdaRecord, UniformBound,
};
pub use iterate::{minimal_iterate, Divergence, IterateControls, IterateOutcome};
pub use shoot::{shoot, shoot_with, ShootControls, ShootResult};
