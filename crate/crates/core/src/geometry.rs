//! Reconstruction of the renormalized interface curve from the tangent angle,
//! its frame, and the geometric diagnostics (length, curvature, chord-arc
//! infimum, tangential velocity jump).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Result, WaveError};
use crate::spectral::{ComplexField, Grid, SpectralField};

/// Default floor on mean(cos θ) below which the curve is treated as having
/// left the graphlike set (length per period diverging).
pub const DEFAULT_H_MIN: f64 = 1e-3;

/// Default chord-arc threshold, relative to σ, used as the numerical
/// self-intersection boundary.
pub const DEFAULT_CHORD_ARC_REL: f64 = 1e-3;

/// The interface curve rebuilt from a tangent angle θ with period M enforced,
/// together with its tangent frame and scaling constants.
///
/// The curve is stored as a periodic part plus the linear drift (M/2π)α, so
/// the wrap-around identity Z(α + 2π) = Z(α) + M holds exactly by
/// construction.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    grid: Grid,
    period: f64,
    sigma: f64,
    length: f64,
    cos_mean: f64,
    sin_mean: f64,
    z_periodic: ComplexField,
    z: ComplexField,
    dz: ComplexField,
    tangent: ComplexField,
    normal: ComplexField,
}

impl CurveGeometry {
    /// Builds the renormalized curve from an odd tangent angle with the
    /// default graphlike floor.
    pub fn from_tangent_angle(theta: &SpectralField, period: f64) -> Result<Self> {
        Self::from_tangent_angle_with_floor(theta, period, DEFAULT_H_MIN)
    }

    pub fn from_tangent_angle_with_floor(
        theta: &SpectralField,
        period: f64,
        h_min: f64,
    ) -> Result<Self> {
        assert!(period > 0.0, "period must be positive");
        let grid = theta.grid();
        let exp_itheta = ComplexField::new(
            grid,
            theta
                .values()
                .iter()
                .map(|&t| Complex64::from_polar(1.0, t))
                .collect(),
        );
        let m0 = exp_itheta.mean();
        let cos_mean = m0.re;
        let sin_mean = m0.im;
        if cos_mean <= h_min {
            return Err(WaveError::NotGraphlike(cos_mean));
        }
        let sigma = period / (2.0 * PI * cos_mean);
        let length = period / cos_mean;

        // ∫₀^α e^{iθ} = A(α) + m0·α with A the periodic antiderivative of the
        // mean-zero part; the sin̄θ correction cancels Im(m0), leaving exactly
        // Z = σA + (M/2π)α.
        let z_periodic = exp_itheta.antiderivative_of_mean_zero_part().map(|v| sigma * v);
        let drift = period / (2.0 * PI);
        let z = ComplexField::new(
            grid,
            z_periodic
                .values()
                .iter()
                .enumerate()
                .map(|(j, &v)| v + drift * grid.node(j))
                .collect(),
        );
        let dz = exp_itheta.map(|v| sigma * (v - Complex64::new(0.0, sin_mean)));
        let tangent = dz.map(|v| v / v.norm());
        let normal = tangent.map(|v| Complex64::i() * v);

        Ok(Self {
            grid,
            period,
            sigma,
            length,
            cos_mean,
            sin_mean,
            z_periodic,
            z,
            dz,
            tangent,
            normal,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// σ = M / (2π mean(cos θ)).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Interface length per period, L = M / mean(cos θ).
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cos_mean(&self) -> f64 {
        self.cos_mean
    }

    pub fn sin_mean(&self) -> f64 {
        self.sin_mean
    }

    /// Curve samples Z(α_j).
    pub fn z(&self) -> &ComplexField {
        &self.z
    }

    /// Periodic part Z(α) − (M/2π)α.
    pub fn z_periodic(&self) -> &ComplexField {
        &self.z_periodic
    }

    /// ∂_α Z samples.
    pub fn dz(&self) -> &ComplexField {
        &self.dz
    }

    /// Unit tangent T = ∂_αZ / |∂_αZ|.
    pub fn tangent(&self) -> &ComplexField {
        &self.tangent
    }

    /// Unit upward normal N = iT.
    pub fn normal(&self) -> &ComplexField {
        &self.normal
    }

    /// Curvature diagnostic κ = θ_α / σ. On converged waves (mean sin θ = 0)
    /// this is the geometric curvature of the interface.
    pub fn curvature(&self, theta: &SpectralField) -> SpectralField {
        theta.derivative().scale(1.0 / self.sigma)
    }

    /// Infimum over grid node pairs (with periodic images m ∈ {-1, 0, 1}) of
    /// |Z(α') + mM − Z(α)| / |α' + 2πm − α|, including the diagonal limit
    /// |∂_αZ(α)|. Strictly positive results certify no self-intersection at
    /// grid resolution. Images |m| ≥ 2 cannot attain the infimum because the
    /// numerator grows like M|m|.
    pub fn chord_arc_infimum(&self) -> f64 {
        let n = self.grid.n();
        let z = self.z.values();
        let mut inf = self.dz.values().iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
        for j in 0..n {
            for jp in 0..n {
                for m in [-1i64, 0, 1] {
                    if m == 0 && jp == j {
                        continue;
                    }
                    let dalpha = self.grid.node(jp) + 2.0 * PI * m as f64 - self.grid.node(j);
                    if dalpha == 0.0 {
                        continue;
                    }
                    let chord = z[jp] + Complex64::new(self.period * m as f64, 0.0) - z[j];
                    inf = inf.min(chord.norm() / dalpha.abs());
                }
            }
        }
        inf
    }

    /// Tangential velocity jump j = 2π(γ̄ + γ₁)/L across the interface.
    pub fn tangential_velocity_jump(
        &self,
        gamma1: &SpectralField,
        gamma_bar: f64,
    ) -> SpectralField {
        gamma1
            .add_scalar(gamma_bar)
            .scale(2.0 * PI / self.length)
            .with_parity(gamma1.parity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Parity;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    /// Composite-Simpson oracle for ∫₀^x f, on a fine subdivision.
    fn simpson_integral(f: impl Fn(f64) -> Complex64, x: f64, panels: usize) -> Complex64 {
        let h = x / panels as f64;
        let mut acc = Complex64::ZERO;
        for p in 0..panels {
            let a = p as f64 * h;
            acc += (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h)) * (h / 6.0);
        }
        acc
    }

    #[test]
    fn flat_curve_is_the_line() {
        let g = grid(64);
        let theta = SpectralField::zeros(g).with_parity(Parity::Odd);
        let geom = CurveGeometry::from_tangent_angle(&theta, 2.0 * PI).unwrap();
        assert_abs_diff_eq!(geom.sigma(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(geom.length(), 2.0 * PI, epsilon = 1e-14);
        for (j, z) in geom.z().values().iter().enumerate() {
            assert!((z - Complex64::new(g.node(j), 0.0)).norm() < 1e-13);
        }
        for t in geom.tangent().values() {
            assert!((t - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        for n in geom.normal().values() {
            assert!((n - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn flat_curve_with_period_four() {
        let g = grid(64);
        let theta = SpectralField::zeros(g).with_parity(Parity::Odd);
        let geom = CurveGeometry::from_tangent_angle(&theta, 4.0).unwrap();
        assert_abs_diff_eq!(geom.length(), 4.0, epsilon = 1e-14);
        for (j, z) in geom.z().values().iter().enumerate() {
            assert!((z - Complex64::new(2.0 / PI * g.node(j), 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn curve_matches_quadrature_oracle() {
        let g = grid(128);
        let theta = SpectralField::from_fn(g, Parity::Odd, |a| 0.3 * a.sin());
        let m = 2.0 * PI;
        let geom = CurveGeometry::from_tangent_angle(&theta, m).unwrap();
        let sin_mean = geom.sin_mean();
        assert_abs_diff_eq!(sin_mean, 0.0, epsilon = 1e-15); // odd θ
        let sigma = geom.sigma();
        let mut max_im: f64 = 0.0;
        for j in (0..g.n()).step_by(7) {
            let alpha = g.node(j);
            let integral = simpson_integral(
                |b| Complex64::from_polar(1.0, 0.3 * b.sin()),
                alpha,
                4000,
            );
            let expected = sigma * (integral - Complex64::new(0.0, sin_mean * alpha));
            let got = geom.z().values()[j];
            assert!(
                (got - expected).norm() < 1e-10,
                "node {j}: got {got}, oracle {expected}"
            );
            max_im = max_im.max(got.im.abs());
        }
        assert!(max_im > 0.1);
    }

    #[test]
    fn arc_length_normalization_for_odd_theta() {
        let g = grid(64);
        let theta = SpectralField::from_fn(g, Parity::Odd, |a| 0.4 * (2.0 * a).sin());
        let geom = CurveGeometry::from_tangent_angle(&theta, 2.0 * PI).unwrap();
        // sin̄θ = 0 for odd θ, so |∂_αZ| ≡ σ
        for v in geom.dz().values() {
            assert_abs_diff_eq!(v.norm(), geom.sigma(), epsilon = 1e-13);
        }
        // quadrature of |∂_αZ| equals the length, and L·cos̄θ = M
        let quad: f64 =
            geom.dz().values().iter().map(|v| v.norm()).sum::<f64>() * g.spacing();
        assert_abs_diff_eq!(quad, geom.length(), epsilon = 1e-10);
        assert_abs_diff_eq!(geom.length() * geom.cos_mean(), 2.0 * PI, epsilon = 1e-13);
        // frame: |T| = 1 and N = iT pointwise
        for (t, n) in geom.tangent().values().iter().zip(geom.normal().values()) {
            assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-14);
            assert!((n - Complex64::i() * t).norm() < 1e-14);
        }
    }

    #[test]
    fn not_graphlike_below_floor() {
        let g = grid(64);
        // mean cos θ ≈ J₀(2.5) ≈ -0.048 < h_min
        let theta = SpectralField::from_fn(g, Parity::Odd, |a| 2.5 * a.sin());
        match CurveGeometry::from_tangent_angle(&theta, 2.0 * PI) {
            Err(WaveError::NotGraphlike(c)) => assert!(c < DEFAULT_H_MIN),
            other => panic!("expected NotGraphlike, got {other:?}"),
        }
    }

    #[test]
    fn curvature_of_flat_and_small_waves() {
        let g = grid(64);
        let flat = SpectralField::zeros(g).with_parity(Parity::Odd);
        let geom = CurveGeometry::from_tangent_angle(&flat, 2.0 * PI).unwrap();
        assert!(geom.curvature(&flat).sup_norm() < 1e-14);

        let eps = 1e-3;
        let theta = SpectralField::from_fn(g, Parity::Odd, |a| eps * a.sin());
        let geom = CurveGeometry::from_tangent_angle(&theta, 2.0 * PI).unwrap();
        // oracle for σ: dense quadrature of mean(cos θ)
        let fine = 200_000;
        let cos_mean_oracle = (0..fine)
            .map(|j| (eps * (2.0 * PI * j as f64 / fine as f64).sin()).cos())
            .sum::<f64>()
            / fine as f64;
        let sigma_oracle = 1.0 / cos_mean_oracle;
        assert_abs_diff_eq!(geom.sigma(), sigma_oracle, epsilon = 1e-12);
        assert!((geom.sigma() - 1.0).abs() < eps * eps); // σ → 1 as ε → 0
        let kappa = geom.curvature(&theta);
        for (j, v) in kappa.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, eps * g.node(j).cos() / sigma_oracle, epsilon = 1e-12);
        }
        // κ is linear in θ_α at fixed σ
        let kappa2 = geom.curvature(&theta.scale(2.0));
        assert!(kappa2.sub(&kappa.scale(2.0)).sup_norm() < 1e-14);
    }

    #[test]
    fn chord_arc_of_flat_curve_is_one() {
        // Oracle: for Z(α) = α every chord ratio and the diagonal limit are 1,
        // confirmed by brute force on a 4096-node grid.
        let fine = CurveGeometry::from_tangent_angle(
            &SpectralField::zeros(grid(4096)).with_parity(Parity::Odd),
            2.0 * PI,
        )
        .unwrap();
        assert_abs_diff_eq!(fine.chord_arc_infimum(), 1.0, epsilon = 1e-12);
        for n in [64usize, 128, 256] {
            let geom = CurveGeometry::from_tangent_angle(
                &SpectralField::zeros(grid(n)).with_parity(Parity::Odd),
                2.0 * PI,
            )
            .unwrap();
            assert_abs_diff_eq!(geom.chord_arc_infimum(), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn chord_arc_bounded_by_diagonal_limit() {
        let g = grid(128);
        let theta = SpectralField::from_fn(g, Parity::Odd, |a| 0.8 * a.sin());
        let geom = CurveGeometry::from_tangent_angle(&theta, 2.0 * PI).unwrap();
        let min_dz = geom.dz().values().iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
        assert!(geom.chord_arc_infimum() <= min_dz + 1e-14);
    }

    /// Oracle: march along a dense polyline of the curve (with periodic
    /// images) and look for genuine segment crossings.
    fn polyline_self_intersects(theta_amp: f64, n: usize) -> bool {
        let g = grid(n);
        let theta = SpectralField::from_fn(g, Parity::Odd, |a| theta_amp * a.sin());
        let geom =
            CurveGeometry::from_tangent_angle_with_floor(&theta, 2.0 * PI, 1e-8).unwrap();
        let z = geom.z().values();
        // vertex idx (possibly wrapping past n) shifted by m periods
        let vertex = |idx: usize, m: i64| -> Complex64 {
            let wraps = (idx / n) as i64;
            z[idx % n] + Complex64::new(2.0 * PI * (m + wraps) as f64, 0.0)
        };
        let seg = |j: usize, m: i64| (vertex(j, m), vertex(j + 1, m));
        let cross = |o: Complex64, d: Complex64, p: Complex64| {
            (d.re - o.re) * (p.im - o.im) - (d.im - o.im) * (p.re - o.re)
        };
        let proper_crossing = |s: (Complex64, Complex64), t: (Complex64, Complex64)| {
            let d1 = cross(s.0, s.1, t.0) * cross(s.0, s.1, t.1);
            let d2 = cross(t.0, t.1, s.0) * cross(t.0, t.1, s.1);
            d1 < 0.0 && d2 < 0.0
        };
        for j in 0..n {
            let s = seg(j, 0);
            // same-period pairs (strict inequalities ignore shared endpoints)
            for jp in j + 1..n {
                if proper_crossing(s, seg(jp, 0)) {
                    return true;
                }
            }
            // next-period image; the m = -1 case follows by symmetry
            for jp in 0..n {
                if proper_crossing(s, seg(jp, 1)) {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn chord_arc_detects_self_intersection() {
        // The oracle first detects a crossing for θ = a sin α near a ≈ 2.19
        // (scanned in steps of 0.01 on a 512-segment polyline).
        assert!(!polyline_self_intersects(2.0, 512));
        assert!(polyline_self_intersects(2.2, 512));
        let g = grid(256);
        let theta = SpectralField::from_fn(g, Parity::Odd, |a| 2.2 * a.sin());
        let geom =
            CurveGeometry::from_tangent_angle_with_floor(&theta, 2.0 * PI, 1e-8).unwrap();
        assert!(geom.chord_arc_infimum() < 1e-2);
    }

    #[test]
    fn velocity_jump_formula() {
        let g = grid(64);
        let flat = SpectralField::zeros(g).with_parity(Parity::Odd);
        let geom = CurveGeometry::from_tangent_angle(&flat, 2.0 * PI).unwrap();
        let gamma1 = SpectralField::zeros(g);
        let j = geom.tangential_velocity_jump(&gamma1, 1.0);
        for v in j.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        assert!(geom.tangential_velocity_jump(&gamma1, 0.0).sup_norm() < 1e-15);
        // doubling L at fixed γ halves j: use M = 4π flat curve (L = 4π)
        let geom2 = CurveGeometry::from_tangent_angle(&flat, 4.0 * PI).unwrap();
        let j2 = geom2.tangential_velocity_jump(&gamma1, 1.0);
        for v in j2.values() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-14);
        }
    }
}
