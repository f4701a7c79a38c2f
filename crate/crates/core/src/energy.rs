//! The functional `E(u) = ||u||^2 / 2 - int G(u) / |x|^gamma` and its derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::DiscreteField;
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::AssembledForms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub total: f64,
    /// `||u||^2 / 2`.
    pub quadratic: f64,
    /// `int G(u) / |x|^gamma`.
    pub potential: f64,
    /// Set when `alpha u^2` exceeds the overflow limit at a quadrature point;
    /// the potential then saturates at `+inf` and the total at `-inf`.
    pub overflow: bool,
}

fn check_field(forms: &AssembledForms, u: &DiscreteField) -> Result<()> {
    forms.space().check(u)
}

/// Largest `|u|` over the quadrature points.
pub fn max_abs_at_points(u: &DiscreteField, forms: &AssembledForms) -> Result<f64> {
    Ok(forms.space().values_at_points(u)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}

pub fn overflows(u: &DiscreteField, forms: &AssembledForms, spec: &NonlinearitySpec) -> Result<bool> {
    Ok(spec.overflows(max_abs_at_points(u, forms)?))
}

pub fn energy(u: &DiscreteField, forms: &AssembledForms, spec: &NonlinearitySpec) -> Result<EnergyValue> {
    check_field(forms, u)?;
    let quadratic = 0.5 * forms.norm_sq(u);
    if overflows(u, forms, spec)? {
        return Ok(EnergyValue { total: f64::NEG_INFINITY, quadratic, potential: f64::INFINITY, overflow: true });
    }
    let potential = forms.space().integrate_field(u, |v, _| spec.g(v))?;
    Ok(EnergyValue { total: quadratic - potential, quadratic, potential, overflow: false })
}

/// `r_i = int grad u . grad phi_i - int phi_i h(u) e^(alpha u^2) / |x|^gamma`.
/// The exponential saturates at the overflow limit.
pub fn residual(u: &DiscreteField, forms: &AssembledForms, spec: &NonlinearitySpec) -> Result<DiscreteField> {
    check_field(forms, u)?;
    let ku = forms.stiffness().mul_vec(u.coeffs());
    let load = forms.space().load_vector(u, |v, _| spec.f_saturated(v))?;
    Ok(DiscreteField::from_vector(ku - load.into_inner()))
}

/// `int u h(u) e^(alpha u^2) / |x|^gamma`.
pub fn nonlinear_pairing(u: &DiscreteField, forms: &AssembledForms, spec: &NonlinearitySpec) -> Result<f64> {
    forms.space().integrate_field(u, |v, _| v * spec.f_saturated(v))
}

/// Riesz representative `g = K^-1 r` of the residual in the Dirichlet inner product.
pub fn h1_gradient(r: &DiscreteField, forms: &AssembledForms) -> Result<DiscreteField> {
    if r.len() != forms.num_dofs() {
        return Err(Error::DimensionMismatch { expected: forms.num_dofs(), found: r.len() });
    }
    Ok(DiscreteField::from_vector(forms.solve_stiffness(r.coeffs())))
}

/// `sqrt(r^T K^-1 r)`, the dual norm of the residual.
pub fn dual_norm(r: &DiscreteField, forms: &AssembledForms) -> Result<f64> {
    let g = h1_gradient(r, forms)?;
    Ok(r.dot(&g).max(0.0).sqrt())
}
