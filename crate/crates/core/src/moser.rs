//! Truncated-logarithm Moser functions `omega_j` centred at the origin.
//!
//! `omega_j = sqrt(log j / 2 pi)` on `|x| <= d/j`, `log(d/|x|) / sqrt(2 pi log j)`
//! on `d/j < |x| < d` and `0` outside, so that `||grad omega_j||_2 = 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{DiscreteField, FeSpace};
use crate::mesh::{check_gamma, Mesh, Point};
use crate::nonlinearity::EXP_LIMIT;
use crate::quadrature::{radial_integrate, AdaptiveOptions, QuadratureRule};

fn check_jd(j: u32, d: f64) -> Result<()> {
    if j < 2 {
        return Err(Error::InvalidParameter(format!("Moser index j must be at least 2, got {j}")));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidParameter(format!("radius d must be positive, got {d}")));
    }
    Ok(())
}

/// `omega_j` as a function of `r = |x|`.
pub fn moser_radial(r: f64, j: u32, d: f64) -> f64 {
    let lj = (j as f64).ln();
    if r <= d / j as f64 {
        (lj / (2.0 * PI)).sqrt()
    } else if r < d {
        (d / r).ln() / (2.0 * PI * lj).sqrt()
    } else {
        0.0
    }
}

/// `d omega_j / dr`.
pub fn moser_radial_derivative(r: f64, j: u32, d: f64) -> f64 {
    if r > d / j as f64 && r < d {
        -1.0 / (r * (2.0 * PI * (j as f64).ln()).sqrt())
    } else {
        0.0
    }
}

pub fn moser_value(x: Point, j: u32, d: f64) -> f64 {
    moser_radial(x[0].hypot(x[1]), j, d)
}

/// `int omega_j / |x|^gamma dx = d^(2-g) / (2-g)^2 sqrt(2 pi / log j) (1 - j^-(2-g))`.
pub fn moser_integral_first(j: u32, d: f64, gamma: f64) -> Result<f64> {
    check_jd(j, d)?;
    check_gamma(gamma)?;
    let p = 2.0 - gamma;
    let lj = (j as f64).ln();
    Ok(d.powf(p) / (p * p) * (2.0 * PI / lj).sqrt() * -(-p * lj).exp_m1())
}

/// `int omega_j^2 / |x|^gamma dx = 2 d^(2-g) / ((2-g)^3 log j) [1 - ((2-g) log j + 1) / j^(2-g)]`.
pub fn moser_integral_second(j: u32, d: f64, gamma: f64) -> Result<f64> {
    check_jd(j, d)?;
    check_gamma(gamma)?;
    let p = 2.0 - gamma;
    let lj = (j as f64).ln();
    Ok(2.0 * d.powf(p) / (p.powi(3) * lj) * (1.0 - (p * lj + 1.0) * (-p * lj).exp()))
}

/// `||grad omega_j||_2^2` by radial quadrature; equals 1 analytically.
pub fn moser_radial_grad_norm_sq(j: u32, d: f64) -> Result<f64> {
    check_jd(j, d)?;
    let opts = AdaptiveOptions::default().with_breakpoints(vec![d / j as f64]);
    radial_integrate(|r| moser_radial_derivative(r, j, d).powi(2), d, 0.0, &opts)
}

/// Nodal interpolant of `omega_j` on a finite element space.
pub fn moser_interpolant(space: &FeSpace, j: u32, d: f64) -> Result<DiscreteField> {
    check_jd(j, d)?;
    check_contains_ball(space.mesh(), d)?;
    Ok(space.interpolate(|x| moser_value(x, j, d)))
}

fn check_contains_ball(mesh: &Mesh, d: f64) -> Result<()> {
    let rmin = mesh
        .vertices()
        .iter()
        .zip(mesh.boundary_flags())
        .filter(|(_, &b)| b)
        .map(|(p, _)| p[0].hypot(p[1]))
        .fold(f64::INFINITY, f64::min);
    if rmin < d * (1.0 - 1e-9) {
        return Err(Error::InvalidDomain(format!(
            "mesh boundary comes within {rmin} of the origin, inside the support radius {d}"
        )));
    }
    Ok(())
}

/// Dirichlet norm of the interpolant of `omega_j` on `mesh`.
pub fn moser_grad_norm(j: u32, d: f64, mesh: &Mesh) -> Result<f64> {
    let space = FeSpace::new(Arc::new(mesh.clone()), 0.0, QuadratureRule { order: 1, radial_nodes: 1, angular_nodes: 1 })?;
    let u = moser_interpolant(&space, j, d)?;
    Ok(space.stiffness().quad_form(u.coeffs()).max(0.0).sqrt())
}

/// `ln int_{|x| <= d/j} e^(alpha t^2 omega_j^2) / |x|^gamma dx`.
pub fn ln_inner_disk_exponential(t: f64, j: u32, d: f64, gamma: f64, alpha: f64) -> Result<f64> {
    check_jd(j, d)?;
    check_gamma(gamma)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let p = 2.0 - gamma;
    let lj = (j as f64).ln();
    Ok((2.0 * PI * d.powf(p) / p).ln() - p * lj + alpha * t * t / (2.0 * PI) * lj)
}

/// `(2 pi d^(2-g) / (2-g)) j^-(2-g) j^(alpha t^2 / 2 pi)`, evaluated in the log
/// domain; `+inf` when the logarithm exceeds the overflow limit.
pub fn inner_disk_exponential(t: f64, j: u32, d: f64, gamma: f64, alpha: f64) -> Result<f64> {
    let ln = ln_inner_disk_exponential(t, j, d, gamma, alpha)?;
    Ok(if ln > EXP_LIMIT { f64::INFINITY } else { ln.exp() })
}

/// One row of the criticality probe `S(j) = int e^(alpha omega_j^2) / |x|^gamma dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalityRow {
    pub j: u32,
    pub inner: f64,
    pub annulus: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityProbe {
    pub alpha: f64,
    pub gamma: f64,
    pub d: f64,
    /// `alpha / 4 pi + gamma / 2 <= 1`.
    pub critical: bool,
    pub rows: Vec<CriticalityRow>,
}

impl CriticalityProbe {
    pub fn max_s(&self) -> f64 {
        self.rows.iter().map(|r| r.s).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].s > w[0].s)
    }

    pub fn at(&self, j: u32) -> Option<f64> {
        self.rows.iter().find(|r| r.j == j).map(|r| r.s)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,inner,annulus,s\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", r.j, r.inner, r.annulus, r.s));
        }
        s
    }
}

/// `S(j)` for each `j`: closed-form inner disk plus adaptive radial quadrature on the annulus.
pub fn criticality_probe(alpha: f64, gamma: f64, d: f64, js: &[u32]) -> Result<CriticalityProbe> {
    let rows = js
        .iter()
        .map(|&j| {
            let inner = inner_disk_exponential(1.0, j, d, gamma, alpha)?;
            let rj = d / j as f64;
            let opts = AdaptiveOptions::default().with_breakpoints(vec![rj]);
            let annulus = radial_integrate(
                |r| if r <= rj { 0.0 } else { (alpha * moser_radial(r, j, d).powi(2)).exp() },
                d,
                gamma,
                &opts,
            )?;
            Ok(CriticalityRow { j, inner, annulus, s: inner + annulus })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalityProbe { alpha, gamma, d, critical: alpha / (4.0 * PI) + gamma / 2.0 <= 1.0, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use approx::assert_relative_eq;

    #[test]
    fn branches_are_continuous() {
        for j in [2u32, 7, 64] {
            let d = 1.3;
            let rj = d / j as f64;
            assert_relative_eq!(moser_radial(rj * (1.0 - 1e-13), j, d), moser_radial(rj * (1.0 + 1e-13), j, d), max_relative = 1e-11);
            assert!(moser_radial(d * (1.0 - 1e-13), j, d).abs() < 1e-12);
            assert_eq!(moser_radial(d, j, d), 0.0);
        }
        assert_relative_eq!(moser_value([0.0, 0.0], 2, 1.0), (2f64.ln() / (2.0 * PI)).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn closed_forms_at_j2() {
        assert_relative_eq!(moser_integral_first(2, 1.0, 0.0).unwrap(), 0.1875 * (2.0 * PI / 2f64.ln()).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(moser_integral_first(2, 1.0, 1.0).unwrap(), 0.5 * (2.0 * PI / 2f64.ln()).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn inner_disk_collapses_at_t0() {
        let (alpha, gamma, d) = (4.0 * PI, 0.5, 0.7);
        let t0 = (4.0 * PI * (1.0 - gamma / 2.0) / alpha).sqrt();
        for j in [2u32, 16, 4096] {
            let v = inner_disk_exponential(t0, j, d, gamma, alpha).unwrap();
            assert_relative_eq!(v, 2.0 * PI * d.powf(1.5) / 1.5, max_relative = 1e-12);
        }
        // area of the disk of radius 1/8 times j^(alpha/2pi) = 64
        assert_relative_eq!(inner_disk_exponential(1.0, 8, 1.0, 0.0, 4.0 * PI).unwrap(), PI, max_relative = 1e-13);
        assert_eq!(inner_disk_exponential(100.0, 4096, 1.0, 0.0, 4.0 * PI).unwrap(), f64::INFINITY);
    }

    #[test]
    fn annulus_matches_log_variable_quadrature() {
        // independent oracle: s = log(d/r) gives 2 pi d^(2-g) int_0^{log j} e^(alpha s^2 / (2 pi log j) - (2-g) s) ds
        let (alpha, gamma, d, j) = (5.0 * PI, 0.5, 1.0f64, 64u32);
        let lj = (j as f64).ln();
        let (x, w) = gauss_legendre(80);
        let oracle: f64 = x
            .iter()
            .zip(&w)
            .map(|(&x, &w)| {
                let s = 0.5 * lj * (1.0 + x);
                0.5 * lj * w * (alpha * s * s / (2.0 * PI * lj) - (2.0 - gamma) * s).exp()
            })
            .sum::<f64>()
            * 2.0
            * PI
            * d.powf(2.0 - gamma);
        let probe = criticality_probe(alpha, gamma, d, &[j]).unwrap();
        assert_relative_eq!(probe.rows[0].annulus, oracle, max_relative = 1e-10);
    }

    #[test]
    fn interpolant_requires_the_ball() {
        let mesh = crate::mesh::ring_disk(1.0, 4);
        assert!(moser_grad_norm(4, 1.5, &mesh).is_err());
        let g = moser_grad_norm(4, 1.0, &mesh).unwrap();
        assert!((g - 1.0).abs() < 0.3);
    }
}
