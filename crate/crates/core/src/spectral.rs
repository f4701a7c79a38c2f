//! Stiffness and weighted mass matrices and the eigenproblem
//! `-Lap u = lambda u / |x|^gamma` with Dirichlet boundary conditions.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{DiscreteField, FeSpace};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::{CsrMatrix, EnvelopeCholesky};

/// Problems with fewer unknowns than this are solved densely.
pub const DENSE_LIMIT: usize = 400;

/// `K` and `M_gamma` on the free vertices together with a factorization of `K`.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    space: FeSpace,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    factor: EnvelopeCholesky,
}

/// Assembles with the default quadrature rule.
pub fn assemble(mesh: &Mesh, gamma: f64) -> Result<AssembledForms> {
    assemble_with_rule(Arc::new(mesh.clone()), gamma, QuadratureRule::default())
}

pub fn assemble_with_rule(mesh: Arc<Mesh>, gamma: f64, rule: QuadratureRule) -> Result<AssembledForms> {
    let space = FeSpace::new(mesh, gamma, rule)?;
    if space.num_dofs() == 0 {
        return Err(Error::InvalidDomain("mesh has no interior vertices".into()));
    }
    let stiffness = space.stiffness();
    let mass = space.weighted_mass();
    let factor = EnvelopeCholesky::factor(&stiffness)?;
    Ok(AssembledForms { space, stiffness, mass, factor })
}

impl AssembledForms {
    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn num_dofs(&self) -> usize {
        self.space.num_dofs()
    }

    pub fn gamma(&self) -> f64 {
        self.space.gamma()
    }

    /// Solves `K x = b`.
    pub fn solve_stiffness(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }

    /// `||u||^2 = u^T K u`, the squared Dirichlet norm.
    pub fn norm_sq(&self, u: &DiscreteField) -> f64 {
        self.stiffness.quad_form(u.coeffs())
    }

    pub fn norm(&self, u: &DiscreteField) -> f64 {
        self.norm_sq(u).max(0.0).sqrt()
    }

    /// `u^T K v`.
    pub fn inner(&self, u: &DiscreteField, v: &DiscreteField) -> f64 {
        self.stiffness.bilinear(u.coeffs(), v.coeffs())
    }

    pub fn mass_inner(&self, u: &DiscreteField, v: &DiscreteField) -> f64 {
        self.mass.bilinear(u.coeffs(), v.coeffs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularEigenpair {
    /// One-based position in the spectrum.
    pub index: usize,
    pub lambda: f64,
    /// Normalized so that `field^T M field = 1`.
    pub field: DiscreteField,
    /// `||K x - lambda M x|| / ||K x||`.
    pub residual: f64,
}

/// Iteration controls for [`solve_eigs_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-10, max_iterations: 1000, seed: 0x5eed }
    }
}

/// The `count` smallest eigenpairs in nondecreasing order.
pub fn solve_eigs(forms: &AssembledForms, count: usize) -> Result<Vec<SingularEigenpair>> {
    solve_eigs_with(forms, count, &EigenOptions::default())
}

pub fn solve_eigs_with(forms: &AssembledForms, count: usize, opts: &EigenOptions) -> Result<Vec<SingularEigenpair>> {
    let n = forms.num_dofs();
    if count == 0 || count > n {
        return Err(Error::InvalidParameter(format!(
            "eigenpair count must lie in 1..={n}, got {count}"
        )));
    }
    let (values, vectors) = if n < DENSE_LIMIT {
        dense_generalized(&forms.stiffness.to_dense(), &forms.mass.to_dense())?
    } else {
        subspace_iteration(forms, count, opts)?
    };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut x = vectors.column(i).into_owned();
        let mnorm = forms.mass.quad_form(&x).sqrt();
        x /= mnorm;
        // deterministic sign: the entry of largest magnitude is positive
        let imax = x.iamax();
        if x[imax] < 0.0 {
            x = -x;
        }
        let lambda = values[i];
        let residual = eig_residual(forms, &x, lambda);
        out.push(SingularEigenpair { index: i + 1, lambda, field: DiscreteField::from_vector(x), residual });
    }
    Ok(out)
}

fn eig_residual(forms: &AssembledForms, x: &DVector<f64>, lambda: f64) -> f64 {
    let kx = forms.stiffness.mul_vec(x);
    let mx = forms.mass.mul_vec(x);
    (&kx - mx * lambda).norm() / kx.norm()
}

/// Generalized symmetric-definite problem `A x = lambda B x`, ascending order,
/// eigenvectors `B`-orthonormal.
pub fn dense_generalized(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let chol = b.clone().cholesky().ok_or(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or(Error::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or(Error::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut y = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        y.set_column(c, &eig.eigenvectors.column(i));
    }
    let vectors = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or(Error::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
    Ok((values, vectors))
}

/// Block inverse iteration (shift 0) with Rayleigh-Ritz projection.
fn subspace_iteration(forms: &AssembledForms, count: usize, opts: &EigenOptions) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = forms.num_dofs();
    let p = (2 * count).max(count + 8).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0));
    let mut worst = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let mx = forms.mass.mul_dense(&x);
        let mut y = DMatrix::zeros(n, p);
        for c in 0..p {
            y.set_column(c, &forms.factor.solve(&mx.column(c).into_owned()));
        }
        let ky = forms.stiffness.mul_dense(&y);
        let my = forms.mass.mul_dense(&y);
        let kr = y.transpose() * &ky;
        let mr = y.transpose() * &my;
        let (vals, q) = dense_generalized(&((&kr + kr.transpose()) * 0.5), &((&mr + mr.transpose()) * 0.5))?;
        x = &y * &q;
        let kx = &ky * &q;
        let mxn = &my * &q;
        worst = (0..count)
            .map(|i| {
                let r = kx.column(i) - mxn.column(i) * vals[i];
                r.norm() / kx.column(i).norm()
            })
            .fold(0.0, f64::max);
        if worst < opts.tol {
            return Ok((vals, x));
        }
    }
    Err(Error::EigenNotConverged { iterations: opts.max_iterations, residual: worst })
}

/// `u^T K u / u^T M u`.
pub fn rayleigh_quotient(u: &DiscreteField, forms: &AssembledForms) -> Result<f64> {
    forms.space.check(u)?;
    let den = forms.mass.quad_form(u.coeffs());
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("Rayleigh quotient of the zero field".into()));
    }
    Ok(forms.stiffness.quad_form(u.coeffs()) / den)
}

/// `V = span(u_1, ..., u_{k-1})` and its `K`-orthogonal complement `W`.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    k: usize,
    basis: Vec<DiscreteField>,
    stiff_basis: Vec<DVector<f64>>,
    lambdas: Vec<f64>,
    lambda_k: f64,
}

/// Relative gap below which `lambda_{k-1}` and `lambda_k` are treated as equal.
pub const GAP_TOL: f64 = 1e-6;

pub fn split(forms: &AssembledForms, pairs: &[SingularEigenpair], k: usize) -> Result<SpectralSplit> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("split needs k >= 2, got {k}")));
    }
    if pairs.len() < k {
        return Err(Error::MissingInput(format!("split needs {k} eigenpairs, got {}", pairs.len())));
    }
    let (lo, hi) = (pairs[k - 2].lambda, pairs[k - 1].lambda);
    if hi - lo <= GAP_TOL * hi {
        return Err(Error::SpectralGap { below: k - 1, above: k, lower: lo, upper: hi });
    }
    let basis: Vec<DiscreteField> = pairs[..k - 1].iter().map(|p| p.field.clone()).collect();
    let stiff_basis = basis.iter().map(|b| forms.stiffness.mul_vec(b.coeffs())).collect();
    Ok(SpectralSplit {
        k,
        basis,
        stiff_basis,
        lambdas: pairs[..k - 1].iter().map(|p| p.lambda).collect(),
        lambda_k: hi,
    })
}

impl SpectralSplit {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim_v(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DiscreteField] {
        &self.basis
    }

    /// `lambda_1, ..., lambda_{k-1}`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda_k(&self) -> f64 {
        self.lambda_k
    }

    /// Coefficients of the `K`-orthogonal projection onto `V`.
    pub fn v_coefficients(&self, u: &DiscreteField) -> Vec<f64> {
        self.basis
            .iter()
            .zip(&self.stiff_basis)
            .map(|(b, kb)| kb.dot(u.coeffs()) / kb.dot(b.coeffs()))
            .collect()
    }

    pub fn combine(&self, coeffs: &[f64]) -> DiscreteField {
        let n = self.basis[0].len();
        let mut out = DVector::zeros(n);
        for (b, &c) in self.basis.iter().zip(coeffs) {
            out.axpy(c, b.coeffs(), 1.0);
        }
        DiscreteField::from_vector(out)
    }

    pub fn project_v(&self, u: &DiscreteField) -> DiscreteField {
        self.combine(&self.v_coefficients(u))
    }

    pub fn project_w(&self, u: &DiscreteField) -> DiscreteField {
        u - &self.project_v(u)
    }
}
