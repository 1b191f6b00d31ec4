//! The nonlinear traveling-wave system: physical parameters, the wave state
//! (θ, γ₁; c), the forcing Φ̃ of the tangent-angle equation, the smoothing
//! fixed-point maps Θ and Γ, and the residual whose zeros are traveling
//! waves.

use std::f64::consts::PI;

use crate::birkhoff::{birkhoff_rott, normal_tangential_components, KernelEvaluation};
use crate::error::{Result, WaveError};
use crate::geometry::{CurveGeometry, DEFAULT_CHORD_ARC_REL, DEFAULT_H_MIN};
use crate::spectral::{Grid, Parity, SpectralField};

/// Fixed constants of one problem instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParameters {
    /// Surface tension τ > 0.
    pub tau: f64,
    /// Horizontal period M > 0.
    pub period: f64,
    /// Gravitational acceleration g, any sign.
    pub gravity: f64,
    /// Atwood number A = (ρ₁ − ρ₂)/(ρ₁ + ρ₂) ∈ [−1, 1].
    pub atwood: f64,
    /// Mean vortex sheet strength γ̄.
    pub gamma_bar: f64,
}

impl PhysicalParameters {
    pub fn new(tau: f64, period: f64, gravity: f64, atwood: f64, gamma_bar: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(WaveError::InvalidParameters(format!(
                "surface tension must be positive, got {tau}"
            )));
        }
        if !(period > 0.0) {
            return Err(WaveError::InvalidParameters(format!(
                "period must be positive, got {period}"
            )));
        }
        if !(atwood.abs() <= 1.0) {
            return Err(WaveError::InvalidParameters(format!(
                "Atwood number must lie in [-1, 1], got {atwood}"
            )));
        }
        if !(gravity.is_finite() && gamma_bar.is_finite()) {
            return Err(WaveError::InvalidParameters(
                "gravity and mean sheet strength must be finite".into(),
            ));
        }
        Ok(Self {
            tau,
            period,
            gravity,
            atwood,
            gamma_bar,
        })
    }

    pub fn from_densities(
        tau: f64,
        period: f64,
        gravity: f64,
        rho_lower: f64,
        rho_upper: f64,
        gamma_bar: f64,
    ) -> Result<Self> {
        let atwood = atwood_from_densities(rho_lower, rho_upper)?;
        Self::new(tau, period, gravity, atwood, gamma_bar)
    }
}

/// Atwood number A = (ρ₁ − ρ₂)/(ρ₁ + ρ₂) from the two densities.
pub fn atwood_from_densities(rho_lower: f64, rho_upper: f64) -> Result<f64> {
    assert!(rho_lower >= 0.0 && rho_upper >= 0.0, "densities must be non-negative");
    let total = rho_lower + rho_upper;
    if total <= 0.0 {
        return Err(WaveError::BothDensitiesZero);
    }
    Ok((rho_lower - rho_upper) / total)
}

/// The unknown triple of the traveling-wave system: odd tangent angle θ,
/// even mean-zero sheet-strength deviation γ₁, and the wave speed c.
#[derive(Clone, Debug)]
pub struct WaveState {
    pub theta: SpectralField,
    pub gamma1: SpectralField,
    pub c: f64,
}

impl WaveState {
    pub fn new(theta: SpectralField, gamma1: SpectralField, c: f64) -> Self {
        assert_eq!(theta.grid(), gamma1.grid(), "grid mismatch");
        assert!(c.is_finite());
        Self { theta, gamma1, c }
    }

    /// The trivial (flat interface) state at speed c.
    pub fn flat(grid: Grid, c: f64) -> Self {
        Self {
            theta: SpectralField::zeros(grid).with_parity(Parity::Odd),
            gamma1: SpectralField::zeros(grid),
            c,
        }
    }

    pub fn grid(&self) -> Grid {
        self.theta.grid()
    }

    /// Projects θ onto the odd and γ₁ onto the even mean-zero subspace.
    pub fn project_symmetric(&self) -> Self {
        Self {
            theta: self.theta.project_parity(Parity::Odd),
            gamma1: self.gamma1.project_parity(Parity::Even).project_mean_zero(),
            c: self.c,
        }
    }

    /// H1 norm of the tangent angle, the branch amplitude diagnostic.
    pub fn amplitude(&self) -> f64 {
        self.theta.norm_h1()
    }

    /// Largest parity defect of the two fields.
    pub fn parity_defect(&self) -> f64 {
        self.theta
            .parity_defect(Parity::Odd)
            .max(self.gamma1.parity_defect(Parity::Even))
    }

    /// Spectral interpolation onto another grid.
    pub fn resample(&self, grid: Grid) -> Self {
        Self {
            theta: self.theta.resample(grid),
            gamma1: self.gamma1.resample(grid),
            c: self.c,
        }
    }
}

/// Residual of the fixed-point system at one state.
#[derive(Clone, Debug)]
pub struct Residual {
    pub r_theta: SpectralField,
    pub r_gamma: SpectralField,
    /// Discrete H1×H1 norm of (r_theta, r_gamma).
    pub norm_h1: f64,
}

fn gamma_total(state: &WaveState, params: &PhysicalParameters) -> SpectralField {
    state
        .gamma1
        .add_scalar(params.gamma_bar)
        .with_parity(Parity::Even)
}

fn check_chord_arc(geometry: &CurveGeometry, inner: bool) -> Result<f64> {
    let infimum = geometry.chord_arc_infimum();
    let floor = DEFAULT_CHORD_ARC_REL * geometry.sigma();
    if infimum < floor {
        return Err(if inner {
            WaveError::InnerCurveSelfIntersecting(infimum)
        } else {
            WaveError::SelfIntersecting(infimum)
        });
    }
    Ok(infimum)
}

/// Forcing Φ̃(θ, γ̄ + γ₁; c) of the tangent-angle equation θ_αα + Φ̃ = 0,
/// evaluated with the tangential velocity product in its smooth (remainder
/// only) form. The output has zero mean: every term is either a perfect
/// α-derivative or sin θ minus its mean.
pub fn tangent_angle_forcing(state: &WaveState, params: &PhysicalParameters) -> Result<SpectralField> {
    let geometry = CurveGeometry::from_tangent_angle(&state.theta, params.period)?;
    check_chord_arc(&geometry, false)?;
    forcing_with_geometry(state, params, &geometry)
}

fn forcing_with_geometry(
    state: &WaveState,
    params: &PhysicalParameters,
    geometry: &CurveGeometry,
) -> Result<SpectralField> {
    let gamma = gamma_total(state, params);
    let kernels = KernelEvaluation::evaluate(geometry, &gamma)?;
    // tangential product via the remainder only; the Hilbert part is purely
    // imaginary against T because T/∂_αZ is real
    let (_, wt) = normal_tangential_components(geometry, &kernels.k_values);
    let wt = wt.with_parity(Parity::Even);

    let cos_theta = state.theta.cos();
    let sin_theta = state.theta.sin();
    let q = cos_theta.scale(state.c).sub(&wt);

    let m = params.period;
    let cb = geometry.cos_mean();
    let sb = geometry.sin_mean();

    let transport = q.mul(&gamma).derivative().scale(1.0 / params.tau);
    let bernoulli = gamma.mul(&gamma).derivative().scale(PI * cb / (2.0 * m));
    let buoyancy = sin_theta.add_scalar(-sb).scale(params.gravity * m / (PI * cb));
    let kinetic = q.mul(&q).derivative().scale(m / (2.0 * PI * cb));

    let atwood_part = bernoulli.add(&buoyancy).add(&kinetic).scale(params.atwood / params.tau);
    Ok(transport.sub(&atwood_part))
}

/// The smoothing map Θ(θ, γ₁; c) = −∂_α⁻² Φ̃, two derivatives smoother than
/// the forcing. Output is projected onto the odd subspace.
pub fn fixed_point_theta(state: &WaveState, params: &PhysicalParameters) -> Result<SpectralField> {
    let phi = tangent_angle_forcing(state, params)?;
    Ok(phi
        .inverse_second_derivative()?
        .scale(-1.0)
        .project_parity(Parity::Odd))
}

/// The smoothing map Γ(θ, γ₁; c). All curve quantities inside are taken at
/// the inner angle Θ(θ, γ₁; c), not at θ. Output is even with zero mean.
pub fn fixed_point_gamma(state: &WaveState, params: &PhysicalParameters) -> Result<SpectralField> {
    let theta_map = fixed_point_theta(state, params)?;
    gamma_map_at_inner(state, params, &theta_map)
}

fn gamma_map_at_inner(
    state: &WaveState,
    params: &PhysicalParameters,
    inner_theta: &SpectralField,
) -> Result<SpectralField> {
    let inner_geometry = CurveGeometry::from_tangent_angle(inner_theta, params.period)?;
    check_chord_arc(&inner_geometry, true)?;
    let gamma = gamma_total(state, params);
    let kernels = KernelEvaluation::evaluate(&inner_geometry, &gamma)?;
    let (kn, _) = normal_tangential_components(&inner_geometry, &kernels.k_values);
    let speed_abs = inner_geometry.dz().abs();
    let integrand = speed_abs
        .mul(&kn)
        .add(&speed_abs.mul(&inner_theta.sin()).scale(state.c));
    Ok(integrand
        .hilbert()
        .scale(2.0)
        .project_parity(Parity::Even)
        .project_mean_zero())
}

/// Residual of the fixed-point system: (θ − Θ, γ₁ − Γ). Θ is evaluated once
/// and shared with Γ's inner composition.
pub fn residual(state: &WaveState, params: &PhysicalParameters) -> Result<Residual> {
    let theta_map = fixed_point_theta(state, params)?;
    let gamma_map = gamma_map_at_inner(state, params, &theta_map)?;
    let r_theta = state.theta.sub(&theta_map).project_parity(Parity::Odd);
    let r_gamma = state
        .gamma1
        .sub(&gamma_map)
        .project_parity(Parity::Even)
        .project_mean_zero();
    let norm_h1 = (r_theta.norm_h1().powi(2) + r_gamma.norm_h1().powi(2)).sqrt();
    Ok(Residual {
        r_theta,
        r_gamma,
        norm_h1,
    })
}

/// Direct evaluation of the kinematic equation Re(B[Z[θ]]γ·N[θ]) + c sin θ.
/// Diagnostic only: on converged fixed points this vanishes.
pub fn kinematic_residual(state: &WaveState, params: &PhysicalParameters) -> Result<SpectralField> {
    let geometry = CurveGeometry::from_tangent_angle(&state.theta, params.period)?;
    check_chord_arc(&geometry, false)?;
    let gamma = gamma_total(state, params);
    let b = birkhoff_rott(&geometry, &gamma)?;
    let (normal, _) = normal_tangential_components(&geometry, &b);
    Ok(normal.add(&state.theta.sin().scale(state.c)))
}

/// Floor on mean(cos θ) used by the wave maps, re-exported for callers that
/// need to reason about the numerical domain.
pub const H_MIN: f64 = DEFAULT_H_MIN;
