//! Linking geometry on `Q_{j,R} = {v + t omega_j : v in V, t >= 0, ||u|| <= R}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cone::{maximize_cone, ConeMaximum, ConeOptions};
use super::path::MAX_DOUBLINGS;
use super::lmm::Lmm;
use super::{Geometry, MinimaxError, MinimaxResult};
use crate::energy::energy;
use crate::error::{Error, Result};
use crate::fem::DiscreteField;
use crate::moser::moser_interpolant;
use crate::nonlinearity::{NonlinearitySpec, ProblemSpec};
use crate::spectral::{AssembledForms, SpectralSplit};

/// Boundary values of `E` on `dQ_{j,R}` at or below this count as nonpositive.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// The data defining `Q_{j,R}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingSet {
    pub j: u32,
    pub radius: f64,
    pub dim_v: usize,
    #[serde(skip)]
    pub basis: Vec<DiscreteField>,
    #[serde(skip)]
    pub omega: DiscreteField,
}

impl LinkingSet {
    pub fn new(split: &SpectralSplit, forms: &AssembledForms, problem: &ProblemSpec, j: u32, radius: f64) -> Result<Self> {
        let omega = moser_interpolant(forms.space(), j, problem.inradius())?;
        Ok(LinkingSet { j, radius, dim_v: split.dim_v(), basis: split.basis().to_vec(), omega })
    }

    /// `sum c_i e_i + t omega_j`.
    pub fn point(&self, coords: &[f64]) -> DiscreteField {
        let mut out = self.omega.scaled(coords[self.dim_v]);
        for (b, &c) in self.basis.iter().zip(coords) {
            out = out.axpy(c, b);
        }
        out
    }

    fn generators(&self) -> Vec<DiscreteField> {
        let mut g = self.basis.clone();
        g.push(self.omega.clone());
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkingSupOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Random directions per boundary piece.
    pub boundary_samples: usize,
    /// Starting radius for the doubling search on `R`.
    pub rho: f64,
    pub cone: ConeOptions,
}

impl Default for LinkingSupOptions {
    fn default() -> Self {
        LinkingSupOptions { restarts: 8, seed: 0x5eed, boundary_samples: 200, rho: 0.05, cone: ConeOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingBoundary {
    pub radius: f64,
    pub doublings: u32,
    /// Largest sampled `E` on `{||u|| = R, t >= 0}`.
    pub sphere_sup: f64,
    /// Largest sampled `E` on `{v in V, ||v|| <= R}`.
    pub v_sup: f64,
    pub samples: usize,
    /// Both suprema are at most [`BOUNDARY_TOL`].
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingSup {
    pub j: u32,
    pub value: f64,
    /// Coefficients on the `V` basis followed by `t`.
    pub coords: Vec<f64>,
    pub t: f64,
    pub grad_norm: f64,
    pub threshold: f64,
    pub below_threshold: bool,
    pub restarts: usize,
    pub seed: u64,
    pub boundary: LinkingBoundary,
    #[serde(skip)]
    pub argmax: DiscreteField,
}

fn unit_sample(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn sampled_max(fields: &[DiscreteField], forms: &AssembledForms, spec: &NonlinearitySpec) -> Result<f64> {
    let vals: Vec<f64> = fields.par_iter().map(|u| Ok(energy(u, forms, spec)?.total)).collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Chooses `R = rho 2^k` until `E <= BOUNDARY_TOL` on the sampled boundary of `Q_{j,R}`.
pub fn linking_boundary(
    set: &LinkingSet,
    forms: &AssembledForms,
    spec: &NonlinearitySpec,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<LinkingBoundary> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let dim = set.dim_v + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sphere_dirs: Vec<DiscreteField> = (0..samples)
        .map(|_| {
            let mut c = unit_sample(&mut rng, dim);
            c[dim - 1] = c[dim - 1].abs();
            set.point(&c)
        })
        .collect();
    sphere_dirs.push(set.omega.clone());
    sphere_dirs.extend(set.basis.iter().cloned());
    let v_dirs: Vec<(DiscreteField, f64)> = (0..samples)
        .map(|_| {
            let mut c = unit_sample(&mut rng, dim);
            c[dim - 1] = 0.0;
            (set.point(&c), rng.gen_range(0.0..1.0))
        })
        .collect();
    let on_sphere = |dirs: &[DiscreteField], radius: f64| -> Vec<DiscreteField> {
        dirs.iter().filter_map(|d| {
            let n = forms.norm(d);
            (n > 0.0).then(|| d.scaled(radius / n))
        })
        .collect()
    };
    let mut last = None;
    for k in 0..=MAX_DOUBLINGS {
        let radius = rho * 2f64.powi(k as i32);
        let sphere_sup = sampled_max(&on_sphere(&sphere_dirs, radius), forms, spec)?;
        let balls: Vec<DiscreteField> = v_dirs
            .iter()
            .filter_map(|(d, s)| {
                let n = forms.norm(d);
                (n > 0.0).then(|| d.scaled(radius * s / n))
            })
            .collect();
        let v_sup = sampled_max(&balls, forms, spec)?;
        let certified = sphere_sup <= BOUNDARY_TOL && v_sup <= BOUNDARY_TOL;
        let b = LinkingBoundary { radius, doublings: k, sphere_sup, v_sup, samples, certified };
        if certified {
            return Ok(b);
        }
        last = Some(b);
    }
    Ok(last.unwrap())
}

/// Multi-start quasi-Newton maximization of `E` over the cone `V + R_+ omega_j`.
pub fn linking_sup(
    split: &SpectralSplit,
    j: u32,
    forms: &AssembledForms,
    problem: &ProblemSpec,
    spec: &NonlinearitySpec,
    opts: &LinkingSupOptions,
) -> Result<LinkingSup> {
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter("linking_sup needs at least one start".into()));
    }
    let set = LinkingSet::new(split, forms, problem, j, opts.rho)?;
    let gens = set.generators();
    let dim = gens.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let t0 = problem.t0();
    let starts: Vec<Vec<f64>> = (0..opts.restarts)
        .map(|i| {
            let mut x: Vec<f64> = split
                .lambdas()
                .iter()
                .map(|l| if i == 0 { 0.0 } else { 0.5 * rng.gen_range(-1.0..1.0) / l.sqrt() })
                .collect();
            x.push(if i == 0 { 0.5 * t0 } else { t0 * rng.gen_range(0.2..1.5) });
            x
        })
        .collect();
    let runs: Vec<Result<ConeMaximum>> =
        starts.par_iter().map(|x0| maximize_cone(&gens, x0, forms, spec, &opts.cone)).collect();
    let mut best: Option<ConeMaximum> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(m) => {
                if best.as_ref().map_or(true, |b| m.value > b.value) {
                    best = Some(m);
                }
            }
            Err(Error::Minimax(MinimaxError::Unbounded { value })) => {
                return Err(MinimaxError::Unbounded { value }.into());
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.unwrap_or_else(|| MinimaxError::NotCertified("no cone ascent succeeded".into()).into()));
    };
    let boundary = linking_boundary(&set, forms, spec, opts.rho, opts.boundary_samples, opts.seed ^ 0xb0d)?;
    let threshold = problem.threshold();
    Ok(LinkingSup {
        j,
        value: best.value,
        t: best.coords[dim - 1],
        coords: best.coords,
        grad_norm: best.grad_norm,
        threshold,
        below_threshold: best.value < threshold,
        restarts: opts.restarts,
        seed: opts.seed,
        boundary,
        argmax: best.field,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkingDescentOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub cone: ConeOptions,
}

impl Default for LinkingDescentOptions {
    fn default() -> Self {
        LinkingDescentOptions { tol: 1e-6, max_iterations: 1000, max_halvings: 40, cone: ConeOptions::default() }
    }
}

/// Local minimax descent with support space `V`: the direction `v` in `W` moves
/// down the gradient evaluated at the maximizer of `E` over `V + R_+ v`.
/// The result is heuristic: no minimax characterisation of its level is claimed.
pub fn linking_descent(
    start: &DiscreteField,
    split: &SpectralSplit,
    forms: &AssembledForms,
    problem: &ProblemSpec,
    spec: &NonlinearitySpec,
    opts: &LinkingDescentOptions,
) -> Result<MinimaxResult> {
    forms.space().check(start)?;
    let project = |u: &DiscreteField| split.project_w(u);
    let lmm = Lmm { support: split.basis(), forms, spec, cone: opts.cone, project: &project };
    let out = lmm.run(start, split.v_coefficients(start), opts.tol, opts.max_iterations, opts.max_halvings)?;
    let result = MinimaxResult::certify(Geometry::Linking, out.peak.field, out.iterations, problem.threshold(), forms, spec)?;
    if !(result.level > 0.0) {
        return Err(MinimaxError::NotCertified(format!("level {} is not positive", result.level)).into());
    }
    Ok(result)
}
