//! Mountain-pass endpoint selection and path descent.

use serde::{Deserialize, Serialize};

use super::cone::ConeOptions;
use super::lmm::Lmm;
use super::{finite_energy, Geometry, MinimaxError, MinimaxResult};
use crate::energy::energy;
use crate::error::{Error, Result};
use crate::fem::DiscreteField;
use crate::nonlinearity::{NonlinearitySpec, ProblemSpec};
use crate::spectral::AssembledForms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub path_points: usize,
    /// Residual dual-norm tolerance.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { path_points: 32, tol: 1e-6, max_iterations: 5000, max_halvings: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub radius: f64,
    pub energy: f64,
    pub doublings: u32,
    #[serde(skip)]
    pub field: DiscreteField,
}

/// Largest number of radius doublings tried from `rho`.
pub const MAX_DOUBLINGS: u32 = 10;

/// `R e / ||e||` for the first `R = rho 2^k`, `k <= 10`, with `E <= 0`.
pub fn mountain_pass_endpoint(
    direction: &DiscreteField,
    forms: &AssembledForms,
    spec: &NonlinearitySpec,
    rho: f64,
) -> Result<Endpoint> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let n = forms.norm(direction);
    if n == 0.0 {
        return Err(Error::InvalidParameter("endpoint direction is zero".into()));
    }
    let mut last = f64::NAN;
    for k in 0..=MAX_DOUBLINGS {
        let radius = rho * 2f64.powi(k as i32);
        let field = direction.scaled(radius / n);
        let e = energy(&field, forms, spec)?.total;
        if e <= 0.0 {
            return Ok(Endpoint { radius, energy: e, doublings: k, field });
        }
        last = e;
    }
    Err(MinimaxError::EndpointNotNegative { energy: last, radius: rho * 2f64.powi(MAX_DOUBLINGS as i32) }.into())
}

fn value(u: &DiscreteField, forms: &AssembledForms, spec: &NonlinearitySpec) -> Result<f64> {
    Ok(finite_energy(u, forms, spec)?.unwrap_or(f64::NEG_INFINITY))
}

/// The polygon `0 -> t_star v -> T v -> endpoint` with `E(T v) <= 0`, sampled at
/// `n` points in total, monotone in `t` along the ray.
fn admissible_path(
    v: &DiscreteField,
    t_star: f64,
    endpoint: &DiscreteField,
    n: usize,
    forms: &AssembledForms,
    spec: &NonlinearitySpec,
) -> Result<Vec<DiscreteField>> {
    let mut far = 2.0 * t_star;
    for _ in 0..MAX_DOUBLINGS {
        if value(&v.scaled(far), forms, spec)? <= 0.0 {
            break;
        }
        far *= 2.0;
    }
    let ray = n / 2;
    let mut nodes: Vec<DiscreteField> = (0..ray).map(|i| v.scaled(far * i as f64 / (ray - 1) as f64)).collect();
    nodes.push(v.scaled(t_star));
    let tail = v.scaled(far);
    let leg = n - ray;
    nodes.extend((1..=leg).map(|i| tail.axpy(i as f64 / leg as f64, &(endpoint - &tail))));
    Ok(nodes)
}

/// Mountain-pass solve from a path through `endpoint`.
///
/// The maximizer of `E` on the current ray descends along the `H^1_0` gradient,
/// which is orthogonal to the ray at its maximizer; the path is re-laid
/// monotonically along the new ray and joined to the fixed endpoint. The
/// returned `path_max` is the largest energy sampled on the final path.
pub fn mountain_pass_solve(
    endpoint: &DiscreteField,
    forms: &AssembledForms,
    problem: &ProblemSpec,
    spec: &NonlinearitySpec,
    opts: &PathOptions,
) -> Result<MinimaxResult> {
    if opts.path_points < 16 {
        return Err(Error::InvalidParameter(format!("path needs at least 16 points, got {}", opts.path_points)));
    }
    forms.space().check(endpoint)?;
    let e_end = energy(endpoint, forms, spec)?.total;
    if e_end > 0.0 {
        return Err(MinimaxError::EndpointNotNegative { energy: e_end, radius: forms.norm(endpoint) }.into());
    }
    let identity = |u: &DiscreteField| u.clone();
    let lmm = Lmm { support: &[], forms, spec, cone: ConeOptions::default(), project: &identity };
    let out = lmm.run(&endpoint.scaled(0.5), Vec::new(), opts.tol, opts.max_iterations, opts.max_halvings)?;
    let t_star = out.peak.coords[0];
    let path = admissible_path(&out.direction, t_star, endpoint, opts.path_points, forms, spec)?;
    let path_max = path.iter().map(|u| value(u, forms, spec)).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let mut result =
        MinimaxResult::certify(Geometry::MountainPass, out.peak.field, out.iterations, problem.threshold(), forms, spec)?;
    result.path_max = Some(path_max);
    if !(result.level > 0.0) {
        return Err(MinimaxError::NotCertified(format!("level {} is not positive", result.level)).into());
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{ring_disk, DomainSpec};
    use crate::moser::moser_interpolant;
    use crate::nonlinearity::Family;
    use crate::spectral::assemble;
    use std::f64::consts::PI;

    #[test]
    fn canonical_mountain_pass_converges() {
        let problem = ProblemSpec::new(4.0 * PI, 0.0, DomainSpec::disk(1.0)).unwrap();
        let spec = NonlinearitySpec::new(Family::Rational { beta0: 1.0 }, 4.0 * PI).unwrap();
        let forms = assemble(&ring_disk(1.0, 8), 0.0).unwrap();
        let w = moser_interpolant(forms.space(), 2, 1.0).unwrap();
        let end = mountain_pass_endpoint(&w, &forms, &spec, 0.05).unwrap();
        assert!(end.energy <= 0.0);
        let res = mountain_pass_solve(&end.field, &forms, &problem, &spec, &PathOptions::default()).unwrap();
        assert!(res.residual_norm < 1e-6);
        assert!(res.level > 0.0 && res.level < 0.5);
        assert!(res.weak_identity < 1e-6 * res.norm);
        assert!((res.path_max.unwrap() - res.level).abs() < 1e-12);
    }

    #[test]
    fn zero_nonlinearity_has_no_endpoint() {
        let spec = NonlinearitySpec::new(Family::Rational { beta0: 0.0 }, 4.0 * PI).unwrap();
        let forms = assemble(&ring_disk(1.0, 4), 0.0).unwrap();
        let w = moser_interpolant(forms.space(), 2, 1.0).unwrap();
        let err = mountain_pass_endpoint(&w, &forms, &spec, 0.05).unwrap_err();
        assert!(matches!(err, Error::Minimax(MinimaxError::EndpointNotNegative { .. })));
    }
}
