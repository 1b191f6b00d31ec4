//! Periodic Birkhoff-Rott integral with a cotangent kernel, its splitting
//! into a Hilbert-transform part plus a smooth remainder, and the induced
//! velocity field off the curve.
//!
//! The principal-value quadrature is the alternating-point trapezoidal rule:
//! at node j the sum runs over nodes of opposite index parity with doubled
//! weights. For analytic curves and densities this is spectrally accurate.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Result, WaveError};
use crate::geometry::CurveGeometry;
use crate::spectral::{ComplexField, Parity, SpectralField};

/// Clamp on the imaginary part of the cotangent argument; beyond it the
/// kernel equals its asymptote ∓i to machine precision and evaluating
/// cos/sin would overflow.
const COT_IM_CLAMP: f64 = 700.0;

/// Relative node-coincidence floor: pair distances below this times the
/// period mean the kernel evaluation would blow up.
const NODE_COINCIDENCE_REL: f64 = 1e-12;

fn cot(z: Complex64) -> Complex64 {
    if z.im > COT_IM_CLAMP {
        return -Complex64::i();
    }
    if z.im < -COT_IM_CLAMP {
        return Complex64::i();
    }
    z.cos() / z.sin()
}

/// Evaluates B[w]γ(α_j) = (1/2iM) PV ∫ γ(α') cot((π/M)(w(α_j) − w(α'))) dα'
/// at every node by the alternating-point trapezoidal rule.
///
/// `gamma_total` is the full sheet strength γ̄ + γ₁; the mean is never split
/// off here.
pub fn birkhoff_rott(geometry: &CurveGeometry, gamma_total: &SpectralField) -> Result<ComplexField> {
    let grid = geometry.grid();
    assert_eq!(grid, gamma_total.grid(), "grid mismatch");
    let n = grid.n();
    let m = geometry.period();
    let w = geometry.z().values();
    let gamma = gamma_total.values();
    let scale = PI / m;
    let floor = NODE_COINCIDENCE_REL * m;

    let prefactor = Complex64::new(0.0, -1.0) * (2.0 * grid.spacing()) / (2.0 * m);
    let mut out = vec![Complex64::ZERO; n];
    for (j, out_j) in out.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        let mut jp = (j + 1) % n;
        // fixed summation order over the n/2 opposite-parity nodes
        for _ in 0..n / 2 {
            let diff = w[j] - w[jp];
            if diff.norm() < floor {
                return Err(WaveError::SelfIntersecting(diff.norm()));
            }
            acc += gamma[jp] * cot(scale * diff);
            jp = (jp + 2) % n;
        }
        *out_j = prefactor * acc;
    }
    Ok(ComplexField::new(grid, out))
}

/// Joint evaluation of B, its Hilbert part (1/2i·w_α)Hγ and the remainder
/// K = B − hilbert part. The splitting identity b = hilbert_part + k holds
/// pointwise by construction.
#[derive(Clone, Debug)]
pub struct KernelEvaluation {
    pub b_values: ComplexField,
    pub k_values: ComplexField,
    pub hilbert_part: ComplexField,
}

impl KernelEvaluation {
    pub fn evaluate(geometry: &CurveGeometry, gamma_total: &SpectralField) -> Result<Self> {
        let b_values = birkhoff_rott(geometry, gamma_total)?;
        let h_gamma = gamma_total.hilbert();
        let hilbert_part = ComplexField::new(
            geometry.grid(),
            geometry
                .dz()
                .values()
                .iter()
                .zip(h_gamma.values())
                .map(|(&dz, &h)| Complex64::new(h, 0.0) / (2.0 * Complex64::i() * dz))
                .collect(),
        );
        let k_values = b_values.zip(&hilbert_part, |b, h| b - h);
        Ok(Self {
            b_values,
            k_values,
            hilbert_part,
        })
    }
}

/// The remainder operator K[w]γ = B[w]γ − (1/2i·w_α)Hγ, one derivative
/// smoother than γ.
pub fn remainder_operator(
    geometry: &CurveGeometry,
    gamma_total: &SpectralField,
) -> Result<ComplexField> {
    Ok(KernelEvaluation::evaluate(geometry, gamma_total)?.k_values)
}

/// Pointwise normal and tangential components (Re(W·N), Re(W·T)) of a
/// conjugate-velocity field W sampled on the curve.
pub fn normal_tangential_components(
    geometry: &CurveGeometry,
    w: &ComplexField,
) -> (SpectralField, SpectralField) {
    let normal = w.zip(geometry.normal(), |a, b| a * b).re().with_parity(Parity::None);
    let tangential = w.zip(geometry.tangent(), |a, b| a * b).re().with_parity(Parity::None);
    (normal, tangential)
}

/// Eulerian fluid velocity at a point off the curve, by the plain trapezoid
/// rule (no principal value is needed away from the sheet).
pub fn velocity_off_curve(
    geometry: &CurveGeometry,
    gamma_total: &SpectralField,
    point: Complex64,
) -> Result<Complex64> {
    let grid = geometry.grid();
    let m = geometry.period();
    let w = geometry.z().values();
    let floor = 1e-6 * m;
    let mut min_dist = f64::INFINITY;
    for &wj in w {
        for image in [-1.0, 0.0, 1.0] {
            min_dist = min_dist.min((point - wj - Complex64::new(image * m, 0.0)).norm());
        }
    }
    if min_dist < floor {
        return Err(WaveError::TooCloseToCurve(min_dist));
    }
    let scale = PI / m;
    let mut acc = Complex64::ZERO;
    for (j, &wj) in w.iter().enumerate() {
        acc += gamma_total.values()[j] * cot(scale * (point - wj));
    }
    let integral = acc * grid.spacing() / (2.0 * Complex64::i() * m);
    Ok(integral.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_field, Grid, SpectralField};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat_geometry(n: usize, m: f64) -> CurveGeometry {
        let g = Grid::new(n).unwrap();
        let theta = SpectralField::zeros(g).with_parity(Parity::Odd);
        CurveGeometry::from_tangent_angle(&theta, m).unwrap()
    }

    fn test_geometry(n: usize) -> CurveGeometry {
        let g = Grid::new(n).unwrap();
        let theta = SpectralField::from_fn(g, Parity::Odd, |a| 0.2 * a.sin() + 0.05 * (2.0 * a).sin());
        CurveGeometry::from_tangent_angle(&theta, 2.0 * PI).unwrap()
    }

    /// Independent dense PV quadrature of B on the flat curve (fresh loop,
    /// not through `birkhoff_rott`).
    fn flat_oracle(gamma: impl Fn(f64) -> f64, alpha: f64, m: f64, n_fine: usize) -> Complex64 {
        let h = 2.0 * PI / n_fine as f64;
        let scale = PI / m;
        let drift = m / (2.0 * PI);
        let mut acc = Complex64::ZERO;
        // alternating rule around the singular point alpha: offset grid by h/2 + alpha
        for j in 0..n_fine {
            let ap = alpha + h / 2.0 + j as f64 * h;
            let z = Complex64::new(scale * drift * (alpha - ap), 0.0);
            acc += gamma(ap) * (z.cos() / z.sin());
        }
        acc * h / (2.0 * Complex64::i() * m)
    }

    #[test]
    fn flat_curve_constant_gamma_gives_zero() {
        let geom = flat_geometry(64, 2.0 * PI);
        let gamma = SpectralField::constant(geom.grid(), 0.8);
        let b = birkhoff_rott(&geom, &gamma).unwrap();
        assert!(b.sup_norm() < 1e-13);
    }

    #[test]
    fn flat_curve_reduces_to_hilbert_transform() {
        let m = 2.0 * PI;
        let geom = flat_geometry(64, m);
        let gamma = SpectralField::from_fn(geom.grid(), Parity::Even, |a| (2.0 * a).cos());
        let b = birkhoff_rott(&geom, &gamma).unwrap();
        // B = (π/iM)Hγ on the flat curve: for γ = cos 2α this is −(i/2)sin 2α
        for (j, v) in b.values().iter().enumerate() {
            let expected = Complex64::new(0.0, -0.5 * (2.0 * geom.grid().node(j)).sin());
            assert!((v - expected).norm() < 1e-12, "node {j}: {v} vs {expected}");
        }
        // dense independent PV quadrature oracle
        for j in [0usize, 5, 17, 40] {
            let alpha = geom.grid().node(j);
            let oracle = flat_oracle(|a| (2.0 * a).cos(), alpha, m, 8192);
            assert!((b.values()[j] - oracle).norm() < 1e-10);
        }
    }

    #[test]
    fn linear_in_gamma_and_zero_for_zero_gamma() {
        let geom = test_geometry(64);
        let g = geom.grid();
        let zero = SpectralField::zeros(g);
        assert!(birkhoff_rott(&geom, &zero).unwrap().sup_norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g1 = random_field(g, 10, 1.0, Parity::None, &mut rng);
        let g2 = random_field(g, 10, 1.0, Parity::None, &mut rng);
        let combo = g1.scale(0.7).add(&g2.scale(-1.3));
        let b_combo = birkhoff_rott(&geom, &combo).unwrap();
        let b1 = birkhoff_rott(&geom, &g1).unwrap();
        let b2 = birkhoff_rott(&geom, &g2).unwrap();
        let recombined = b1.zip(&b2, |x, y| 0.7 * x - 1.3 * y);
        for (a, b) in b_combo.values().iter().zip(recombined.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn remainder_vanishes_on_flat_curve() {
        let geom = flat_geometry(64, 2.0 * PI);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gamma = random_field(geom.grid(), 12, 1.0, Parity::None, &mut rng).add_scalar(0.5);
        let k = remainder_operator(&geom, &gamma).unwrap();
        assert!(k.sup_norm() < 1e-12);
    }

    #[test]
    fn splitting_identity_holds_pointwise() {
        let geom = test_geometry(64);
        let gamma = SpectralField::from_fn(geom.grid(), Parity::Even, |a| 1.0 + 0.3 * a.cos());
        let eval = KernelEvaluation::evaluate(&geom, &gamma).unwrap();
        for ((b, h), k) in eval
            .b_values
            .values()
            .iter()
            .zip(eval.hilbert_part.values())
            .zip(eval.k_values.values())
        {
            assert!((b - (h + k)).norm() < 1e-14);
        }
    }

    #[test]
    fn remainder_converges_spectrally() {
        // ‖K‖ errors vs a 1024-point reference must collapse fast as n doubles
        let m = 2.0 * PI;
        let reference = {
            let geom = {
                let g = Grid::new(1024).unwrap();
                let theta = SpectralField::from_fn(g, Parity::Odd, |a| 0.2 * a.sin());
                CurveGeometry::from_tangent_angle(&theta, m).unwrap()
            };
            let gamma = SpectralField::constant(geom.grid(), 1.0);
            remainder_operator(&geom, &gamma).unwrap()
        };
        let mut errors = Vec::new();
        for n in [32usize, 64, 128] {
            let g = Grid::new(n).unwrap();
            let theta = SpectralField::from_fn(g, Parity::Odd, |a| 0.2 * a.sin());
            let geom = CurveGeometry::from_tangent_angle(&theta, m).unwrap();
            let gamma = SpectralField::constant(g, 1.0);
            let k = remainder_operator(&geom, &gamma).unwrap();
            let stride = 1024 / n;
            let err = k
                .values()
                .iter()
                .enumerate()
                .map(|(j, v)| (v - reference.values()[j * stride]).norm())
                .fold(0.0, f64::max);
            errors.push(err);
        }
        // successive ratios below 1e-2 until the round-off floor
        assert!(errors[1] < (1e-2 * errors[0]).max(2e-13), "32→64: {errors:?}");
        assert!(errors[2] < (1e-2 * errors[1]).max(2e-13), "64→128: {errors:?}");
    }

    #[test]
    fn normal_component_has_zero_mean() {
        // incompressibility: the mean of Re(B·N) vanishes spectrally
        let geom = test_geometry(128);
        let gamma = SpectralField::from_fn(geom.grid(), Parity::None, |a| {
            0.5 + a.cos() + 0.3 * (2.0 * a).sin()
        });
        let b = birkhoff_rott(&geom, &gamma).unwrap();
        let (normal, _) = normal_tangential_components(&geom, &b);
        assert!(normal.mean().abs() < 1e-10);
    }

    #[test]
    fn components_on_flat_curve() {
        let m = 2.0 * PI;
        let geom = flat_geometry(64, m);
        let zero = ComplexField::new(geom.grid(), vec![Complex64::ZERO; 64]);
        let (n0, t0) = normal_tangential_components(&geom, &zero);
        assert!(n0.sup_norm() < 1e-15 && t0.sup_norm() < 1e-15);

        let k = 3.0;
        let w = ComplexField::from_fn(geom.grid(), |a| {
            Complex64::new(0.0, -(PI / m) * (k * a).sin())
        });
        let (normal, tangential) = normal_tangential_components(&geom, &w);
        for (j, v) in normal.values().iter().enumerate() {
            let expected = (PI / m) * (k * geom.grid().node(j)).sin();
            assert_abs_diff_eq!(*v, expected, epsilon = 1e-13);
        }
        assert!(tangential.sup_norm() < 1e-13);
        // cross-check via the splitting: on the flat curve the normal
        // component of B[γ = cos kα] is (1/2σ)Hγ
        let gamma = SpectralField::from_fn(geom.grid(), Parity::Even, |a| (k * a).cos());
        let b = birkhoff_rott(&geom, &gamma).unwrap();
        let (normal_b, _) = normal_tangential_components(&geom, &b);
        let h_over_2sigma = gamma.hilbert().scale(1.0 / (2.0 * geom.sigma()));
        assert!(normal_b.sub(&h_over_2sigma).sup_norm() < 1e-12);
    }

    #[test]
    fn off_curve_velocity_matches_oracle() {
        let m = 2.0 * PI;
        let geom = flat_geometry(64, m);
        let c0 = 0.9;
        let gamma = SpectralField::constant(geom.grid(), c0);

        // dense trapezoid oracle (fresh loop)
        let point = Complex64::new(1.3, 0.7);
        let n_fine = 100_000;
        let h = 2.0 * PI / n_fine as f64;
        let mut acc = Complex64::ZERO;
        for j in 0..n_fine {
            let ap = j as f64 * h;
            let z = (PI / m) * (point - Complex64::new(ap, 0.0));
            acc += c0 * (z.cos() / z.sin());
        }
        let oracle = (acc * h / (2.0 * Complex64::i() * m)).conj();
        let u = velocity_off_curve(&geom, &gamma, point).unwrap();
        assert!((u - oracle).norm() < 1e-10);

        // far-field limit of the flat sheet: u → ∓πγ̄/M as y → ±∞
        let far_up = velocity_off_curve(&geom, &gamma, Complex64::new(0.4, 40.0)).unwrap();
        assert!((far_up - Complex64::new(-PI * c0 / m, 0.0)).norm() < 1e-12);
        let far_down = velocity_off_curve(&geom, &gamma, Complex64::new(0.4, -40.0)).unwrap();
        assert!((far_down - Complex64::new(PI * c0 / m, 0.0)).norm() < 1e-12);

        // γ = 0 gives zero velocity; periodicity in the point
        let zero = SpectralField::zeros(geom.grid());
        assert!(velocity_off_curve(&geom, &zero, point).unwrap().norm() < 1e-15);
        let shifted = velocity_off_curve(&geom, &gamma, point + Complex64::new(m, 0.0)).unwrap();
        assert!((shifted - u).norm() < 1e-12);
    }

    #[test]
    fn off_curve_velocity_rejects_points_on_the_sheet() {
        let geom = flat_geometry(64, 2.0 * PI);
        let gamma = SpectralField::constant(geom.grid(), 1.0);
        let near = Complex64::new(geom.grid().node(3), 1e-9);
        assert!(matches!(
            velocity_off_curve(&geom, &gamma, near),
            Err(WaveError::TooCloseToCurve(_))
        ));
    }

    #[test]
    fn linearization_at_flat_state_matches_derivative_formula() {
        // (B[ε·dir] − B[−ε·dir]) / 2ε against DW = (π/iM)Hγ̆ − (πγ̄/M)Hθ̆
        let m = 2.0 * PI;
        let n = 64;
        let g = Grid::new(n).unwrap();
        let gamma_bar = 0.7;
        let eps = 1e-6;
        let theta_dir = SpectralField::from_fn(g, Parity::Odd, |a| (2.0 * a).sin());
        let gamma_dir = SpectralField::from_fn(g, Parity::Even, |a| (3.0 * a).cos());

        let eval = |s: f64| -> ComplexField {
            let theta = theta_dir.scale(s);
            let gamma = gamma_dir.scale(s).add_scalar(gamma_bar);
            let geom = CurveGeometry::from_tangent_angle(&theta, m).unwrap();
            birkhoff_rott(&geom, &gamma).unwrap()
        };
        let plus = eval(eps);
        let minus = eval(-eps);
        let fd = plus.zip(&minus, |a, b| (a - b) / (2.0 * eps));

        let h_gamma = gamma_dir.hilbert();
        let h_theta = theta_dir.hilbert();
        for j in 0..n {
            let expected = Complex64::new(0.0, -PI / m) * h_gamma.values()[j]
                - (PI * gamma_bar / m) * h_theta.values()[j];
            assert!(
                (fd.values()[j] - expected).norm() < 1e-4,
                "node {j}: fd {} vs {expected}",
                fd.values()[j]
            );
        }
    }

    #[test]
    fn alternating_rule_self_convergence() {
        // errors vs a 1024-point reference decay faster than any fixed power
        let m = 2.0 * PI;
        let theta_fn = |a: f64| 0.3 * a.sin();
        let gamma_fn = |a: f64| 1.0 + 0.4 * (2.0 * a).cos();
        let b_at = |n: usize| -> ComplexField {
            let g = Grid::new(n).unwrap();
            let theta = SpectralField::from_fn(g, Parity::Odd, theta_fn);
            let gamma = SpectralField::from_fn(g, Parity::Even, gamma_fn);
            let geom = CurveGeometry::from_tangent_angle(&theta, m).unwrap();
            birkhoff_rott(&geom, &gamma).unwrap()
        };
        let reference = b_at(1024);
        let mut prev_err = f64::INFINITY;
        for n in [16usize, 32, 64] {
            let b = b_at(n);
            let stride = 1024 / n;
            let err = b
                .values()
                .iter()
                .enumerate()
                .map(|(j, v)| (v - reference.values()[j * stride]).norm())
                .fold(0.0, f64::max);
            // each doubling must beat fourth-order decay by a wide margin,
            // until the round-off floor
            assert!(
                err < (prev_err / 16.0).max(5e-13),
                "n={n}: err={err}, prev={prev_err}"
            );
            prev_err = err;
        }
        assert!(prev_err < 1e-10);
    }
}
