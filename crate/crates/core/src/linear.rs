//! Closed-form linearization of the fixed-point system at the flat state:
//! per-wavenumber 2×2 blocks, their nontrivial eigenvalue, the bifurcation
//! speeds where it crosses zero, the crossing-number test, and branch-seed
//! eigenfunctions. A finite-difference cross-check against the nonlinear
//! residual is included.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Result, WaveError};
use crate::spectral::{Grid, Parity, SpectralField};
use crate::system::{residual, PhysicalParameters, WaveState};

/// Tolerance of the integer resonance test on l_k = AgM/(πτk).
pub const RESONANCE_TOL: f64 = 1e-9;

/// Wider tolerance used to warn about nearly resonant wavenumbers, where the
/// simple-crossing argument degenerates continuously.
pub const NEAR_RESONANCE_TOL: f64 = 1e-6;

/// Fourier-side 2×2 block of the flat-state linearization at wavenumber k.
#[derive(Clone, Copy, Debug)]
pub struct LinearBlock {
    pub k: i64,
    pub entries: [[Complex64; 2]; 2],
}

impl LinearBlock {
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.entries[0][0] * v[0] + self.entries[0][1] * v[1],
            self.entries[1][0] * v[0] + self.entries[1][1] * v[1],
        ]
    }

    /// Both eigenvalues of the block (one is identically 1).
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let tr = self.entries[0][0] + self.entries[1][1];
        let det = self.entries[0][0] * self.entries[1][1] - self.entries[0][1] * self.entries[1][0];
        let disc = (tr * tr - 4.0 * det).sqrt();
        ((tr + disc) / 2.0, (tr - disc) / 2.0)
    }

    /// Eigenvector associated with the nontrivial eigenvalue λ_k(c).
    pub fn nontrivial_eigenvector(&self, c: f64, m: f64) -> [Complex64; 2] {
        [
            Complex64::new(0.0, self.k.signum() as f64 * PI / (c * m)),
            Complex64::ONE,
        ]
    }
}

/// The nontrivial eigenvalue λ_k(c) of the k-th block; the other eigenvalue
/// is identically 1.
pub fn block_eigenvalue(k: u32, c: f64, params: &PhysicalParameters) -> f64 {
    let k = k as f64;
    let m = params.period;
    let gb = params.gamma_bar;
    let numerator = 2.0 * gb * c * params.atwood * m * PI - m * m * c * c - gb * gb * PI * PI;
    1.0 + numerator / (m * PI * params.tau) / k
        + params.gravity * params.atwood * m / (PI * params.tau) / (k * k)
}

/// Discriminant whose positivity makes the bifurcation speeds real:
/// π²γ̄²A²k² + πτk³M − π²k²γ̄² + kAgM².
pub fn speed_discriminant(k: u32, params: &PhysicalParameters) -> f64 {
    let k = k as f64;
    let m = params.period;
    let gb = params.gamma_bar;
    let a = params.atwood;
    PI * PI * gb * gb * a * a * k * k + PI * params.tau * k.powi(3) * m
        - PI * PI * k * k * gb * gb
        + k * a * params.gravity * m * m
}

/// Both roots c_±(k) of λ_k(c) = 0, or `None` when the discriminant is not
/// positive (no real crossing speed).
pub fn bifurcation_speeds(k: u32, params: &PhysicalParameters) -> Option<(f64, f64)> {
    let disc = speed_discriminant(k, params);
    if disc <= 0.0 {
        return None;
    }
    let m = params.period;
    let center = PI * params.gamma_bar * params.atwood / m;
    let spread = disc.sqrt() / (k as f64 * m);
    Some((center + spread, center - spread))
}

/// The resonance index l_k = AgM/(πτk); a second block eigenvalue vanishes
/// at c_±(k) exactly when l_k is a positive integer different from k.
pub fn resonance_index(k: u32, params: &PhysicalParameters) -> f64 {
    params.atwood * params.gravity * params.period / (PI * params.tau * k as f64)
}

fn is_resonant(k: u32, params: &PhysicalParameters, tol: f64) -> bool {
    let l = resonance_index(k, params);
    let rounded = l.round();
    (l - rounded).abs() < tol && rounded >= 1.0 && rounded != k as f64
}

/// True when the linearization has crossing number one at c = c_±(k): the
/// discriminant is positive and l_k is not a positive integer other than k.
pub fn crossing_number_is_one(k: u32, params: &PhysicalParameters) -> bool {
    speed_discriminant(k, params) > 0.0 && !is_resonant(k, params, RESONANCE_TOL)
}

/// True when l_k is within [`NEAR_RESONANCE_TOL`] of a positive integer other
/// than k but not flagged as exactly resonant.
pub fn near_resonance_warning(k: u32, params: &PhysicalParameters) -> bool {
    is_resonant(k, params, NEAR_RESONANCE_TOL) && !is_resonant(k, params, RESONANCE_TOL)
}

/// The Fourier-side block of the flat-state linearization for k ≠ 0.
pub fn fourier_block(k: i64, c: f64, params: &PhysicalParameters) -> LinearBlock {
    assert!(k != 0, "the zero block is the identity");
    let m = params.period;
    let tau = params.tau;
    let gb = params.gamma_bar;
    let a = params.atwood;
    let g = params.gravity;
    let kf = k as f64;
    let kabs = kf.abs();
    let sgn = kf.signum();

    let a1 = (PI * gb / m) * (gb / tau - c * a * m / (PI * tau));
    let a2 = a * g * m / (PI * tau);
    let b1 = a * gb * PI / (tau * m) - c / tau;
    let d1 = gb * c * (gb / tau - c * a * m / (PI * tau));
    let d2 = c * m * m * a * g / (PI * PI * tau);
    let e1 = c * (a * gb / tau - c * m / (PI * tau));

    LinearBlock {
        k,
        entries: [
            [
                Complex64::new(1.0 - a1 / kabs + a2 / (kf * kf), 0.0),
                Complex64::new(0.0, b1 / kf),
            ],
            [
                Complex64::new(0.0, d1 / kf - d2 * sgn / (kf * kf)),
                Complex64::new(1.0 + e1 / kabs, 0.0),
            ],
        ],
    }
}

/// Restriction of the k-th block to the symmetric subspace, in the real basis
/// {(sin kα, 0), (0, cos kα)}. Shares its eigenvalues {1, λ_k(c)} with the
/// Fourier-side block.
pub fn symmetric_block(k: u32, c: f64, params: &PhysicalParameters) -> [[f64; 2]; 2] {
    let m = params.period;
    let tau = params.tau;
    let gb = params.gamma_bar;
    let a = params.atwood;
    let g = params.gravity;
    let kf = k as f64;

    let a1 = (PI * gb / m) * (gb / tau - c * a * m / (PI * tau));
    let a2 = a * g * m / (PI * tau);
    let b1 = a * gb * PI / (tau * m) - c / tau;
    let d1 = gb * c * (gb / tau - c * a * m / (PI * tau));
    let d2 = c * m * m * a * g / (PI * PI * tau);
    let e1 = c * (a * gb / tau - c * m / (PI * tau));

    [
        [1.0 - a1 / kf + a2 / (kf * kf), -b1 / kf],
        [d1 / kf - d2 / (kf * kf), 1.0 + e1 / kf],
    ]
}

/// Flat-state linearization DΘ applied to a symmetric direction, assembled
/// from the multiplier operators:
/// DΘ = −(πγ̄/M)(γ̄/τ − cAM/πτ) ∂⁻²∂H θ̆ + (AgM/πτ) ∂⁻²P θ̆ + (Aγ̄π/τM − c/τ) ∂⁻²∂ γ̆.
pub fn d_theta_flat(
    theta_dir: &SpectralField,
    gamma_dir: &SpectralField,
    c: f64,
    params: &PhysicalParameters,
) -> SpectralField {
    let m = params.period;
    let tau = params.tau;
    let gb = params.gamma_bar;
    let a = params.atwood;

    let coeff_h = -(PI * gb / m) * (gb / tau - c * a * m / (PI * tau));
    let coeff_p = a * params.gravity * m / (PI * tau);
    let coeff_g = a * gb * PI / (tau * m) - c / tau;

    let term_h = theta_dir
        .hilbert()
        .derivative()
        .inverse_second_derivative()
        .expect("mean-zero by construction")
        .scale(coeff_h);
    let term_p = theta_dir
        .project_mean_zero()
        .inverse_second_derivative()
        .expect("mean-zero by construction")
        .scale(coeff_p);
    let term_g = gamma_dir
        .derivative()
        .inverse_second_derivative()
        .expect("mean-zero by construction")
        .scale(coeff_g);
    term_h.add(&term_p).add(&term_g)
}

/// Flat-state linearization DΓ = (cM/π) H DΘ.
pub fn d_gamma_flat(
    theta_dir: &SpectralField,
    gamma_dir: &SpectralField,
    c: f64,
    params: &PhysicalParameters,
) -> SpectralField {
    d_theta_flat(theta_dir, gamma_dir, c, params)
        .hilbert()
        .scale(c * params.period / PI)
}

/// A bifurcation point of the trivial branch: wavenumber, speed, the
/// crossing-number certificate, and the symmetric eigenfunction pair.
#[derive(Clone, Debug)]
pub struct BifurcationPoint {
    pub k: u32,
    pub sign_plus: bool,
    pub speed: f64,
    pub in_k: bool,
    pub eigen_theta: SpectralField,
    pub eigen_gamma: SpectralField,
}

impl BifurcationPoint {
    /// Builds the bifurcation point for (k, ±) on the given grid, or `None`
    /// when the speeds are not real. `in_k` records the crossing-number-one
    /// certificate; the eigenfunctions are
    /// (θ, γ₁) = (−(π/cM) sin kα, cos kα).
    pub fn compute(
        k: u32,
        sign_plus: bool,
        params: &PhysicalParameters,
        grid: Grid,
    ) -> Option<Self> {
        let (c_plus, c_minus) = bifurcation_speeds(k, params)?;
        let speed = if sign_plus { c_plus } else { c_minus };
        let in_k = crossing_number_is_one(k, params);
        let kf = k as f64;
        let eigen_theta = if speed != 0.0 {
            SpectralField::from_fn(grid, Parity::Odd, |a| {
                -(PI / (speed * params.period)) * (kf * a).sin()
            })
        } else {
            SpectralField::zeros(grid).with_parity(Parity::Odd)
        };
        let eigen_gamma = SpectralField::from_fn(grid, Parity::Even, |a| (kf * a).cos());
        Some(Self {
            k,
            sign_plus,
            speed,
            in_k,
            eigen_theta,
            eigen_gamma,
        })
    }
}

/// Predictor state into the nontrivial branch: ε times the symmetric
/// eigenfunction pair at the bifurcation speed.
pub fn branch_seed(point: &BifurcationPoint, epsilon: f64) -> Result<WaveState> {
    if point.speed == 0.0 {
        return Err(WaveError::ZeroSpeed);
    }
    Ok(WaveState::new(
        point.eigen_theta.scale(epsilon),
        point.eigen_gamma.scale(epsilon),
        point.speed,
    ))
}

/// Builds the finite-difference Jacobian of the residual at the flat state in
/// the symmetric Fourier basis (directions sin kα for θ, cos kα for γ₁,
/// k ≤ k_max) and returns the maximum relative error of the per-k 2×2 blocks
/// against [`symmetric_block`]. Central differences with the given step.
pub fn numeric_jacobian_check(
    c: f64,
    params: &PhysicalParameters,
    k_max: u32,
    grid: Grid,
    fd_step: f64,
) -> f64 {
    assert!((k_max as usize) < grid.n() / 2);
    let mut worst: f64 = 0.0;
    for k in 1..=k_max {
        let kf = k as f64;
        let theta_dir = SpectralField::from_fn(grid, Parity::Odd, |a| (kf * a).sin());
        let gamma_dir = SpectralField::from_fn(grid, Parity::Even, |a| (kf * a).cos());

        let respond = |dir_theta: &SpectralField, dir_gamma: &SpectralField| -> (f64, f64) {
            let eval = |s: f64| {
                let state = WaveState::new(dir_theta.scale(s), dir_gamma.scale(s), c);
                residual(&state, params).expect("flat-state neighborhood is admissible")
            };
            let plus = eval(fd_step);
            let minus = eval(-fd_step);
            let dr_theta = plus.r_theta.sub(&minus.r_theta).scale(1.0 / (2.0 * fd_step));
            let dr_gamma = plus.r_gamma.sub(&minus.r_gamma).scale(1.0 / (2.0 * fd_step));
            (dr_theta.sine_coefficient(k as usize), dr_gamma.cosine_coefficient(k as usize))
        };

        let zeros_theta = SpectralField::zeros(grid).with_parity(Parity::Odd);
        let zeros_gamma = SpectralField::zeros(grid);
        let (j11, j21) = respond(&theta_dir, &zeros_gamma);
        let (j12, j22) = respond(&zeros_theta, &gamma_dir);
        let fd = [[j11, j12], [j21, j22]];

        let exact = symmetric_block(k, c, params);
        let scale = exact
            .iter()
            .flatten()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((fd[i][j] - exact[i][j]).abs() / scale);
            }
        }
    }
    worst
}
