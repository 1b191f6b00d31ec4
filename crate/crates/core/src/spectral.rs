//! Periodic Fourier collocation grid and the multiplier operators that the
//! rest of the solver is built on: the periodic Hilbert transform, spectral
//! differentiation, the periodic second antiderivative, means and parity
//! projections.
//!
//! Conventions: the forward transform divides by `n_points`, so the k = 0
//! coefficient is the mean of the field. The Nyquist mode (k = n/2) is zeroed
//! by every multiplier operator so that real-valued outputs are unambiguous.

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;

use crate::error::{Result, WaveError};

/// Relative L2 tolerance below which discarded coefficients still let a field
/// claim a parity.
pub const PARITY_TOL: f64 = 1e-10;

/// Relative tolerance on the mean of inputs to [`SpectralField::inverse_second_derivative`].
pub const MEAN_TOL: f64 = 1e-10;

/// Default relative floor of the optional Krasny-style coefficient filter.
pub const KRASNY_FLOOR: f64 = 1e-13;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fft = if inverse {
            planner.plan_fft_inverse(buf.len())
        } else {
            planner.plan_fft_forward(buf.len())
        };
        fft.process(buf);
    });
}

/// Forward transform of complex samples, normalized so entry 0 is the mean.
pub(crate) fn fft_forward(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len() as f64;
    let mut buf = values.to_vec();
    fft_in_place(&mut buf, false);
    for v in &mut buf {
        *v /= n;
    }
    buf
}

/// Inverse of [`fft_forward`]: reconstructs samples from mean-normalized coefficients.
pub(crate) fn fft_inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    fft_in_place(&mut buf, true);
    buf
}

/// Uniform collocation grid on [0, 2π) with an even number of nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    n_points: usize,
}

impl Grid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 8 || n_points % 2 != 0 {
            return Err(WaveError::InvalidGrid(n_points));
        }
        Ok(Self { n_points })
    }

    pub fn n(&self) -> usize {
        self.n_points
    }

    pub fn node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    /// Signed wavenumber of coefficient index `i`; the Nyquist index maps to +n/2.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n_points as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }
}

/// Symmetry class of a periodic scalar field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Pure sine series: f(-α) = -f(α), zero mean.
    Odd,
    /// Pure cosine series (mean included): f(-α) = f(α).
    Even,
    /// No symmetry tracked.
    None,
}

impl Parity {
    /// Parity after one application of ∂_α or H (both flip sine ↔ cosine).
    pub fn flipped(self) -> Parity {
        match self {
            Parity::Odd => Parity::Even,
            Parity::Even => Parity::Odd,
            Parity::None => Parity::None,
        }
    }

    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Even, Parity::Even) | (Parity::Odd, Parity::Odd) => Parity::Even,
            (Parity::Even, Parity::Odd) | (Parity::Odd, Parity::Even) => Parity::Odd,
            _ => Parity::None,
        }
    }
}

/// Real 2π-periodic scalar field stored as collocation values.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    values: Vec<f64>,
    parity: Parity,
}

impl SpectralField {
    pub fn new(grid: Grid, values: Vec<f64>, parity: Parity) -> Self {
        assert_eq!(values.len(), grid.n(), "value count must match the grid");
        assert!(
            values.iter().all(|v| v.is_finite()),
            "field values must be finite"
        );
        Self { grid, values, parity }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::new(grid, vec![0.0; grid.n()], Parity::Even)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self::new(grid, vec![value; grid.n()], Parity::Even)
    }

    pub fn from_fn(grid: Grid, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.node(j))).collect();
        Self::new(grid, values, parity)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    /// Fourier coefficients, normalized so index 0 is the mean.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&buf)
    }

    pub fn from_coefficients(grid: Grid, coeffs: &[Complex64], parity: Parity) -> Self {
        assert_eq!(coeffs.len(), grid.n());
        let values = fft_inverse(coeffs).iter().map(|v| v.re).collect();
        Self::new(grid, values, parity)
    }

    /// Mean over one period, i.e. the k = 0 Fourier coefficient.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.n() as f64
    }

    fn apply_multiplier(&self, parity: Parity, m: impl Fn(i64) -> Complex64) -> Self {
        let n = self.grid.n();
        let mut coeffs = self.coefficients();
        for (i, c) in coeffs.iter_mut().enumerate() {
            if i == n / 2 {
                *c = Complex64::ZERO; // Nyquist: no unambiguous real representative
            } else {
                *c *= m(self.grid.wavenumber(i));
            }
        }
        Self::from_coefficients(self.grid, &coeffs, parity)
    }

    /// Spectral derivative: multiplier ik. Output has zero mean; parity flips.
    pub fn derivative(&self) -> Self {
        self.apply_multiplier(self.parity.flipped(), |k| Complex64::new(0.0, k as f64))
    }

    /// Periodic Hilbert transform: multiplier -i sgn(k). Annihilates constants;
    /// output has zero mean; parity flips.
    pub fn hilbert(&self) -> Self {
        self.apply_multiplier(self.parity.flipped(), |k| {
            Complex64::new(0.0, -(k.signum() as f64))
        })
    }

    /// Periodic second antiderivative: multiplier -1/k² on the mean-zero
    /// subspace. Errors with [`WaveError::NonZeroMean`] if the input mean is
    /// not negligible relative to its sup norm.
    pub fn inverse_second_derivative(&self) -> Result<Self> {
        let mean = self.mean();
        let scale = 1.0 + self.sup_norm();
        if mean.abs() > MEAN_TOL * scale {
            return Err(WaveError::NonZeroMean(mean));
        }
        Ok(self.apply_multiplier(self.parity, |k| {
            if k == 0 {
                Complex64::ZERO
            } else {
                Complex64::new(-1.0 / (k * k) as f64, 0.0)
            }
        }))
    }

    /// Subtracts the mean.
    pub fn project_mean_zero(&self) -> Self {
        let m = self.mean();
        let values = self.values.iter().map(|v| v - m).collect();
        Self::new(self.grid, values, self.parity)
    }

    /// Orthogonal projection onto the requested parity class, realized by
    /// reflection averaging on the grid (exactly keeps sine or cosine
    /// coefficients respectively; the even projection retains the mean).
    pub fn project_parity(&self, parity: Parity) -> Self {
        let n = self.grid.n();
        let values: Vec<f64> = (0..n)
            .map(|j| {
                let mirrored = self.values[(n - j) % n];
                match parity {
                    Parity::Odd => 0.5 * (self.values[j] - mirrored),
                    Parity::Even => 0.5 * (self.values[j] + mirrored),
                    Parity::None => self.values[j],
                }
            })
            .collect();
        Self::new(self.grid, values, parity)
    }

    /// Relative L2 norm of the part discarded by `project_parity`.
    pub fn parity_defect(&self, parity: Parity) -> f64 {
        let total = self.norm_l2();
        if total == 0.0 {
            return 0.0;
        }
        let kept = self.project_parity(parity);
        let discarded: f64 = self
            .values
            .iter()
            .zip(kept.values.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        (discarded / self.grid.n() as f64).sqrt() / total
    }

    /// Zeroes coefficients below `floor` times the largest coefficient
    /// magnitude (round-off noise control in nonlinear products).
    pub fn krasny_filter(&self, floor: f64) -> Self {
        let mut coeffs = self.coefficients();
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = floor * max;
        for c in &mut coeffs {
            if c.norm() < cut {
                *c = Complex64::ZERO;
            }
        }
        Self::from_coefficients(self.grid, &coeffs, self.parity)
    }

    /// Discrete L2 norm with the (1/2π)∫ normalization.
    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.grid.n() as f64).sqrt()
    }

    /// Discrete H1 norm: Σ_k (1 + k²)|f̂(k)|² over signed wavenumbers.
    pub fn norm_h1(&self) -> f64 {
        let coeffs = self.coefficients();
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.grid.wavenumber(i) as f64;
                (1.0 + k * k) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coefficient of sin(kα), 1 ≤ k < n/2.
    pub fn sine_coefficient(&self, k: usize) -> f64 {
        debug_assert!(k >= 1 && k < self.grid.n() / 2);
        let coeffs = self.coefficients();
        -2.0 * coeffs[k].im
    }

    /// Coefficient of cos(kα), 1 ≤ k < n/2.
    pub fn cosine_coefficient(&self, k: usize) -> f64 {
        debug_assert!(k >= 1 && k < self.grid.n() / 2);
        let coeffs = self.coefficients();
        2.0 * coeffs[k].re
    }

    /// Spectral interpolation onto another grid (coefficients zero-padded or
    /// truncated; the source Nyquist mode is dropped).
    pub fn resample(&self, grid: Grid) -> Self {
        let n_old = self.grid.n();
        let n_new = grid.n();
        if n_new == n_old {
            return self.clone();
        }
        let coeffs = self.coefficients();
        let mut out = vec![Complex64::ZERO; n_new];
        let k_keep = (n_old.min(n_new)) / 2;
        for i in 0..n_old {
            let k = self.grid.wavenumber(i);
            if k.unsigned_abs() as usize >= k_keep {
                continue;
            }
            let dest = if k >= 0 { k as usize } else { (n_new as i64 + k) as usize };
            out[dest] = coeffs[i];
        }
        Self::from_coefficients(grid, &out, self.parity)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64, parity: Parity) -> Self {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::new(self.grid, values, parity)
    }

    /// cos of the field; even when the input is odd.
    pub fn cos(&self) -> Self {
        let parity = match self.parity {
            Parity::Odd => Parity::Even,
            _ => Parity::None,
        };
        self.map(f64::cos, parity)
    }

    /// sin of the field; odd when the input is odd.
    pub fn sin(&self) -> Self {
        let parity = match self.parity {
            Parity::Odd => Parity::Odd,
            _ => Parity::None,
        };
        self.map(f64::sin, parity)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v, self.parity)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let parity = self.parity.product(other.parity);
        self.zip(other, |a, b| a * b).with_parity(parity)
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        self.map(|v| v + s, self.parity)
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let parity = if self.parity == other.parity {
            self.parity
        } else {
            Parity::None
        };
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values, parity)
    }
}

/// Band-limited random field with the requested parity, for property tests
/// and the verification suite. Coefficients are uniform in [-1, 1] scaled by
/// `amplitude`, wavenumbers 1..=k_max (k_max is clamped below Nyquist).
pub fn random_field(
    grid: Grid,
    k_max: usize,
    amplitude: f64,
    parity: Parity,
    rng: &mut impl Rng,
) -> SpectralField {
    let k_max = k_max.min(grid.n() / 2 - 1);
    let mut values = vec![0.0; grid.n()];
    for k in 1..=k_max {
        let (a, b) = match parity {
            Parity::Odd => (0.0, rng.random_range(-1.0..1.0)),
            Parity::Even => (rng.random_range(-1.0..1.0), 0.0),
            Parity::None => (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        };
        for (j, v) in values.iter_mut().enumerate() {
            let x = k as f64 * grid.node(j);
            *v += amplitude * (a * x.cos() + b * x.sin());
        }
    }
    SpectralField::new(grid, values, parity)
}

/// Complex 2π-periodic field stored as collocation values; houses curve data.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.n());
        assert!(values.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.node(j))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn re(&self) -> SpectralField {
        SpectralField::new(self.grid, self.values.iter().map(|v| v.re).collect(), Parity::None)
    }

    pub fn im(&self) -> SpectralField {
        SpectralField::new(self.grid, self.values.iter().map(|v| v.im).collect(), Parity::None)
    }

    pub fn abs(&self) -> SpectralField {
        SpectralField::new(
            self.grid,
            self.values.iter().map(|v| v.norm()).collect(),
            Parity::None,
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Periodic antiderivative of the mean-zero part, normalized to vanish at
    /// α = 0. The mean of the input is ignored; the Nyquist mode is dropped.
    pub fn antiderivative_of_mean_zero_part(&self) -> Self {
        let n = self.grid.n();
        let mut coeffs = fft_forward(&self.values);
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = self.grid.wavenumber(i);
            if i == n / 2 || k == 0 {
                *c = Complex64::ZERO;
            } else {
                *c /= Complex64::new(0.0, k as f64);
            }
        }
        let correction: Complex64 = coeffs.iter().sum();
        coeffs[0] = -correction; // enforce A(0) = 0
        Self::new(self.grid, fft_inverse(&coeffs))
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.grid.n() as f64
    }
}
