//! Mollifier family and the interaction kernel `J_eps(x) = rho_eps(|x|) / |x|^2`.
//!
//! Profiles are polynomial bumps on the unit ball carrying a factor `r^2`, so
//! the kernel itself is a bounded polynomial bump with no singularity at the
//! origin. The normalization constant is computed at construction so that
//! `int_0^inf rho(r) r^(n-1) dr = 2 / C_n` with `C_n = |S^(n-1)| / n`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quadrature;

/// Relative tolerance used for every kernel quadrature.
pub const QUAD_TOL: f64 = 1e-13;

/// Radial profile shapes. All vanish like `r^2` at the origin and are
/// supported on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// `r^2 (1 - r^2)^3`
    #[default]
    Poly23,
    /// `r^2 (1 - r^2)^4`
    Poly24,
}

impl Profile {
    pub const ALL: [Profile; 2] = [Profile::Poly23, Profile::Poly24];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Poly23 => "poly-2-3",
            Profile::Poly24 => "poly-2-4",
        }
    }

    fn outer_power(self) -> i32 {
        match self {
            Profile::Poly23 => 3,
            Profile::Poly24 => 4,
        }
    }

    /// Unnormalized profile at radius `r >= 0`.
    pub fn shape(self, r: f64) -> f64 {
        r * r * self.shape_over_r2(r)
    }

    /// `shape(r) / r^2`, including its finite limit at `r = 0`.
    pub fn shape_over_r2(self, r: f64) -> f64 {
        let r = r.abs();
        if r >= 1.0 {
            return 0.0;
        }
        (1.0 - r * r).powi(self.outer_power())
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "profile",
                name: s.to_string(),
            })
    }
}

/// Surface measure of the unit sphere `S^(n-1)`.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("sphere_area: unsupported dimension {dim}"),
    }
}

/// `C_n = int_{S^(n-1)} |e_1 . sigma|^2 = |S^(n-1)| / n`.
pub fn sphere_constant(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    dim: usize,
    profile: Profile,
    support_radius: f64,
    norm_constant: f64,
}

impl MollifierSpec {
    pub fn new(dim: usize, profile: Profile) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let raw = quadrature::adaptive(|r| profile.shape(r) * r.powi(dim as i32 - 1), 0.0, 1.0, QUAD_TOL);
        Ok(Self {
            dim,
            profile,
            support_radius: 1.0,
            norm_constant: normalization_target(dim) / raw,
        })
    }

    /// Same shape with a caller-chosen scale; used to show that the
    /// normalization matters.
    pub fn with_norm_constant(mut self, norm_constant: f64) -> Self {
        self.norm_constant = norm_constant;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn norm_constant(&self) -> f64 {
        self.norm_constant
    }

    /// Normalized profile `rho(r)`; even in `r`.
    pub fn value(&self, r: f64) -> f64 {
        self.norm_constant * self.profile.shape(r.abs() / self.support_radius)
    }

    /// `int_0^inf rho(r) r^(n-1) dr`, by quadrature.
    pub fn radial_mass(&self) -> f64 {
        let n = self.dim as i32;
        quadrature::adaptive(
            |r| self.value(r) * r.powi(n - 1),
            0.0,
            self.support_radius,
            QUAD_TOL,
        )
    }

    pub fn at_scale(self, epsilon: f64) -> Result<Kernel> {
        Kernel::new(self, epsilon)
    }
}

/// `2 / C_n`.
pub fn normalization_target(dim: usize) -> f64 {
    2.0 / sphere_constant(dim)
}

/// A mollifier at length scale `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    mollifier: MollifierSpec,
    epsilon: f64,
}

impl Kernel {
    pub fn new(mollifier: MollifierSpec, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel scale must be positive, got {epsilon}"
            )));
        }
        Ok(Self { mollifier, epsilon })
    }

    pub fn mollifier(&self) -> &MollifierSpec {
        &self.mollifier
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.mollifier.dim
    }

    /// Radius of the support of `J_eps`.
    pub fn radius(&self) -> f64 {
        self.epsilon * self.mollifier.support_radius
    }

    /// `rho_eps(r) = eps^-n rho(r / eps)`.
    pub fn rho(&self, r: f64) -> f64 {
        self.epsilon.powi(-(self.dim() as i32)) * self.mollifier.value(r / self.epsilon)
    }

    /// `J_eps` as a function of the distance `r = |x|`.
    pub fn j_radial(&self, r: f64) -> f64 {
        let m = &self.mollifier;
        let s = r.abs() / (self.epsilon * m.support_radius);
        let scale = m.norm_constant * self.epsilon.powi(-(self.dim() as i32) - 2)
            / (m.support_radius * m.support_radius);
        scale * m.profile.shape_over_r2(s)
    }

    /// `J_eps(x)` at a point; only the first `dim` coordinates are read.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x[..self.dim()].iter().map(|v| v * v).sum();
        self.j_radial(r2.sqrt())
    }

    /// `int J_eps(|x|) g(x) dx` over the support ball.
    ///
    /// 1D: adaptive Gauss-Legendre on `[-eps R, eps R]`. 2D: adaptive
    /// Gauss-Legendre in the radius with an `angular`-point trapezoid rule in
    /// the angle.
    pub fn integrate_weighted<G: Fn(&[f64]) -> f64>(&self, g: G, angular: usize) -> f64 {
        let r_max = self.radius();
        match self.dim() {
            1 => quadrature::adaptive(|x| self.j_radial(x) * g(&[x]), -r_max, r_max, QUAD_TOL),
            _ => {
                let m = angular.max(8);
                let dtheta = 2.0 * PI / m as f64;
                let ring = |r: f64, abs: bool| {
                    let s: f64 = (0..m)
                        .map(|k| {
                            let th = k as f64 * dtheta;
                            let v = g(&[r * th.cos(), r * th.sin()]);
                            if abs {
                                v.abs()
                            } else {
                                v
                            }
                        })
                        .sum();
                    s * dtheta
                };
                // the angular sum may cancel exactly, so the tolerance is taken
                // relative to the integral of |g|
                let scale = quadrature::GaussLegendre::new(20).integrate(
                    |r| self.j_radial(r) * r * ring(r, true),
                    0.0,
                    r_max,
                );
                quadrature::adaptive_abs(
                    |r| self.j_radial(r) * r * ring(r, false),
                    0.0,
                    r_max,
                    QUAD_TOL * scale,
                )
            }
        }
    }

    /// `int_{R^n} J_eps(|x|) dx`.
    pub fn total_mass(&self) -> f64 {
        self.integrate_weighted(|_| 1.0, 8)
    }

    /// `int J_eps(|x|) x_axis dx`; zero by oddness.
    pub fn moment_first(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        Ok(self.integrate_weighted(|x| x[axis], 64))
    }

    /// `int J_eps(|x|) x_axis^2 dx`; equals 2 under the normalization.
    pub fn moment_second(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        Ok(self.integrate_weighted(|x| x[axis] * x[axis], 64))
    }

    /// `1/2 int J_eps(|x|) |x|^2 dx = 1/2 int rho_eps(|x|) dx`; equals `n`.
    pub fn moment_second_trace(&self) -> f64 {
        let r_max = self.radius();
        let n = self.dim() as i32;
        0.5 * sphere_area(self.dim())
            * quadrature::adaptive(|r| self.rho(r) * r.powi(n - 1), 0.0, r_max, QUAD_TOL)
    }

    /// `int_0^inf rho_eps(r) r^(n-1) dr`; independent of `eps`.
    pub fn radial_mass(&self) -> f64 {
        let n = self.dim() as i32;
        quadrature::adaptive(|r| self.rho(r) * r.powi(n - 1), 0.0, self.radius(), QUAD_TOL)
    }

    /// `sigma_eps(xi) = F(J_eps)(0) - F(J_eps)(xi) = int J_eps(|x|) (1 - cos(x . xi)) dx`.
    pub fn fourier_symbol(&self, xi: &[f64]) -> f64 {
        let n = self.dim();
        let xi = &xi[..n];
        let norm: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        // 1 - cos(t) = 2 sin^2(t/2) avoids cancellation for small arguments.
        let angular = 64 + 4 * (self.radius() * norm).ceil() as usize;
        self.integrate_weighted(
            |x| {
                let t: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
                let s = (0.5 * t).sin();
                2.0 * s * s
            },
            angular,
        )
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exact rational integrals of the unnormalized profiles.
    fn exact_poly23(dim: usize) -> f64 {
        match dim {
            // int_0^1 r^2 - 3r^4 + 3r^6 - r^8 dr
            1 => 1.0 / 3.0 - 3.0 / 5.0 + 3.0 / 7.0 - 1.0 / 9.0,
            // int_0^1 r^3 (1-r^2)^3 dr = B(2,4)/2
            2 => 1.0 / 40.0,
            _ => unreachable!(),
        }
    }

    #[test]
    fn norm_constant_matches_exact_polynomial_integral() {
        let m1 = MollifierSpec::new(1, Profile::Poly23).unwrap();
        assert!((exact_poly23(1) - 16.0 / 315.0).abs() < 1e-15);
        assert!((m1.norm_constant() - 315.0 / 16.0).abs() < 1e-10 * 315.0 / 16.0);

        let m2 = MollifierSpec::new(2, Profile::Poly23).unwrap();
        let expected = (2.0 / PI) / exact_poly23(2);
        assert!((m2.norm_constant() - 80.0 / PI).abs() < 1e-10 * expected);
    }

    #[test]
    fn sphere_constants() {
        assert_eq!(sphere_constant(1), 2.0);
        assert!((sphere_constant(2) - PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            MollifierSpec::new(3, Profile::Poly23),
            Err(Error::UnsupportedDimension(3))
        ));
        assert!("gauss".parse::<Profile>().is_err());
        assert_eq!("poly-2-4".parse::<Profile>().unwrap(), Profile::Poly24);
        let m = MollifierSpec::new(1, Profile::Poly23).unwrap();
        assert!(Kernel::new(m, 0.0).is_err());
        assert!(Kernel::new(m, 0.1).unwrap().moment_first(1).is_err());
    }

    #[test]
    fn profile_is_even_nonnegative_and_compact() {
        for p in Profile::ALL {
            let m = MollifierSpec::new(2, p).unwrap();
            for i in 0..200 {
                let r = -1.5 + 3.0 * i as f64 / 199.0;
                assert_eq!(m.value(r), m.value(-r));
                assert!(m.value(r) >= 0.0);
                if r.abs() >= 1.0 {
                    assert_eq!(m.value(r), 0.0);
                }
            }
        }
    }

    #[test]
    fn j_at_origin_is_the_analytic_limit() {
        let m = MollifierSpec::new(1, Profile::Poly23).unwrap();
        let eps = 0.1;
        let k = m.at_scale(eps).unwrap();
        let expected = m.norm_constant() * eps.powi(-3);
        assert!((k.eval(&[0.0]) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn j_by_direct_substitution() {
        let m = MollifierSpec::new(1, Profile::Poly23).unwrap();
        let k = m.at_scale(1.0).unwrap();
        let expected = m.norm_constant() * 0.75f64.powi(3);
        assert!((k.eval(&[0.5]) - expected).abs() < 1e-13);
        // rho(r)/r^2 agrees away from the origin
        assert!((k.rho(0.5) / 0.25 - expected).abs() < 1e-12);
        assert_eq!(k.eval(&[1.0]), 0.0);
        assert_eq!(k.eval(&[-1.3]), 0.0);
    }

    #[test]
    fn radial_mass_is_scale_invariant() {
        for dim in 1..=2 {
            let m = MollifierSpec::new(dim, Profile::Poly23).unwrap();
            let target = normalization_target(dim);
            for eps in [1.0, 0.2, 0.05, 0.01] {
                let k = m.at_scale(eps).unwrap();
                assert!((k.radial_mass() - target).abs() < 1e-10 * target);
            }
        }
    }

    #[test]
    fn half_support_first_moment_is_positive() {
        let k = MollifierSpec::new(1, Profile::Poly23)
            .unwrap()
            .at_scale(0.1)
            .unwrap();
        let half = k.integrate_weighted(|x| if x[0] > 0.0 { x[0] } else { 0.0 }, 8);
        assert!(half > 0.1);
        assert!(k.moment_first(0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn unnormalized_profile_breaks_second_moment() {
        let m = MollifierSpec::new(1, Profile::Poly23)
            .unwrap()
            .with_norm_constant(1.0);
        let k = m.at_scale(0.1).unwrap();
        assert!((k.moment_second(0).unwrap() - 2.0).abs() > 1.0);
    }

    #[test]
    fn total_mass_closed_form() {
        // 1D: 2 C eps^-2 int_0^1 (1-s^2)^3 ds = 18 / eps^2
        // 2D: 2 pi C eps^-2 int_0^1 (1-s^2)^3 s ds = 20 / eps^2
        for (dim, full) in [(1usize, 18.0), (2, 20.0)] {
            let k = MollifierSpec::new(dim, Profile::Poly23)
                .unwrap()
                .at_scale(0.1)
                .unwrap();
            assert!((k.total_mass() - full / 0.01).abs() < 1e-9 * full / 0.01);
        }
    }

    #[test]
    fn symbol_vanishes_at_zero_and_is_nonnegative() {
        let k = MollifierSpec::new(2, Profile::Poly23)
            .unwrap()
            .at_scale(0.2)
            .unwrap();
        assert_eq!(k.fourier_symbol(&[0.0, 0.0]), 0.0);
        for a in [0.3, 1.0, 7.0, 40.0, 300.0] {
            assert!(k.fourier_symbol(&[a, -0.5 * a]) >= 0.0);
        }
    }
}
