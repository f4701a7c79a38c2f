//! Mountain-pass and linking constructions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{dual_norm, energy, nonlinear_pairing, residual};
use crate::error::Result;
use crate::fem::DiscreteField;
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::AssembledForms;

mod cone;
mod linking;
mod lmm;
mod path;
mod ridge;
mod sphere;

pub use cone::{maximize_cone, ConeMaximum, ConeOptions};
pub use linking::{
    linking_boundary, linking_descent, linking_sup, LinkingBoundary, LinkingDescentOptions, LinkingSet, LinkingSup,
    LinkingSupOptions,
};
pub use path::{mountain_pass_endpoint, mountain_pass_solve, Endpoint, PathOptions};
pub use ridge::{ridge_derivative, ridge_scan, ridge_value, select_j0, RidgeOptions, RidgeProfile};
pub use sphere::{random_smooth_fields, sphere_infimum, SphereInfimum, SphereOptions};

/// Failures specific to the minimax algorithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinimaxError {
    #[error("ridge maximizer not bracketed for j = {j} within t <= {t_cap}")]
    BracketNotFound { j: u32, t_cap: f64 },
    #[error("endpoint energy {energy} is positive; no mountain-pass endpoint found up to R = {radius}")]
    EndpointNotNegative { energy: f64, radius: f64 },
    #[error("line search stagnated at iteration {iteration}")]
    LineSearchStagnation { iteration: usize },
    #[error("iteration budget of {iterations} exhausted (residual {residual:e})")]
    IterationBudget { iterations: usize, residual: f64 },
    #[error("every trial step hit the exponential overflow barrier")]
    OverflowBarrier,
    #[error("ascent is unbounded above (energy {value:e})")]
    Unbounded { value: f64 },
    #[error("descent converged to the trivial solution (norm {norm:e})")]
    Trivial { norm: f64 },
    #[error("geometry not certified: {0}")]
    NotCertified(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    MountainPass,
    Linking,
}

/// A converged critical point together with its certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxResult {
    pub geometry: Geometry,
    /// `E(u)` at the returned field.
    pub level: f64,
    #[serde(skip)]
    pub field: DiscreteField,
    /// Dual norm of the residual.
    pub residual_norm: f64,
    pub iterations: usize,
    pub threshold: f64,
    pub below_threshold: bool,
    /// `||u||`.
    pub norm: f64,
    /// `| ||u||^2 - int u h(u) e^(alpha u^2) / |x|^gamma |`.
    pub weak_identity: f64,
    /// True when no minimax characterisation backs the level.
    pub heuristic: bool,
    /// Largest energy sampled on the final admissible path (mountain pass only).
    pub path_max: Option<f64>,
}

impl MinimaxResult {
    pub(crate) fn certify(
        geometry: Geometry,
        field: DiscreteField,
        iterations: usize,
        threshold: f64,
        forms: &AssembledForms,
        spec: &NonlinearitySpec,
    ) -> Result<Self> {
        let level = energy(&field, forms, spec)?.total;
        let residual_norm = dual_norm(&residual(&field, forms, spec)?, forms)?;
        let norm_sq = forms.norm_sq(&field);
        let weak_identity = (norm_sq - nonlinear_pairing(&field, forms, spec)?).abs();
        Ok(MinimaxResult {
            geometry,
            level,
            field,
            residual_norm,
            iterations,
            threshold,
            below_threshold: level < threshold,
            norm: norm_sq.sqrt(),
            weak_identity,
            heuristic: geometry == Geometry::Linking,
            path_max: None,
        })
    }
}

/// Finite energy, or `None` when the field trips the overflow barrier.
pub(crate) fn finite_energy(u: &DiscreteField, forms: &AssembledForms, spec: &NonlinearitySpec) -> Result<Option<f64>> {
    let e = energy(u, forms, spec)?;
    Ok(if e.overflow || !e.total.is_finite() { None } else { Some(e.total) })
}

/// Residual, its Riesz representative and the dual norm.
pub(crate) fn gradient(
    u: &DiscreteField,
    forms: &AssembledForms,
    spec: &NonlinearitySpec,
) -> Result<(DiscreteField, DiscreteField, f64)> {
    let r = residual(u, forms, spec)?;
    let g = crate::energy::h1_gradient(&r, forms)?;
    let dn = r.dot(&g).max(0.0).sqrt();
    Ok((r, g, dn))
}

/// Energies closer than this (relative) are indistinguishable in double precision.
pub(crate) const ENERGY_NOISE: f64 = 1e-12;

/// Norm below which a field counts as the trivial solution.
pub(crate) const TRIVIAL_NORM: f64 = 1e-8;
