//! Spectral computation of spatially periodic traveling waves for the
//! two-fluid gravity-capillary vortex sheet problem.
//!
//! The solver works with the tangent-angle / sheet-strength unknowns
//! (θ, γ₁; c): the interface is rebuilt from θ with the period enforced, the
//! interface velocity comes from the periodic Birkhoff-Rott integral, and
//! traveling waves are zeros of a smoothing fixed-point map. Branches of
//! nontrivial waves are continued in the speed c from the closed-form
//! bifurcation points of the flat state by a pseudo-arclength Newton method,
//! and each branch is classified against a set of blow-up / self-intersection
//! diagnostics.

pub mod birkhoff;
pub mod continuation;
pub mod error;
pub mod geometry;
pub mod linear;
pub mod spectral;
pub mod system;

pub use birkhoff::{
    birkhoff_rott, normal_tangential_components, remainder_operator, velocity_off_curve,
    KernelEvaluation,
};
pub use continuation::{
    classify_outcome, newton_solve, trace_branch, BranchRecord, BranchSign, Classification,
    NewtonFailure, NewtonSettings, OutcomeFlags, OutcomeThresholds, SolveConstraint,
    TerminationReason, TraceControls, TraceResult,
};
pub use error::{Result, WaveError};
pub use geometry::CurveGeometry;
pub use linear::{
    bifurcation_speeds, block_eigenvalue, branch_seed, crossing_number_is_one, fourier_block,
    numeric_jacobian_check, resonance_index, symmetric_block, BifurcationPoint, LinearBlock,
};
pub use spectral::{random_field, ComplexField, Grid, Parity, SpectralField};
pub use system::{
    atwood_from_densities, fixed_point_gamma, fixed_point_theta, kinematic_residual, residual,
    tangent_angle_forcing, PhysicalParameters, Residual, WaveState,
};
