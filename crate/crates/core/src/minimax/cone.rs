//! Maximization of `E` over a finite-dimensional cone `{sum x_i b_i : x_last >= 0}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{MinimaxError, ENERGY_NOISE};
use crate::energy::{energy, residual};
use crate::error::{Error, Result};
use crate::fem::DiscreteField;
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::AssembledForms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeOptions {
    pub max_iterations: usize,
    /// Stop once the projected coordinate gradient falls below this (infinity norm).
    pub grad_tol: f64,
    /// A maximizer whose projected gradient exceeds this is reported as not converged.
    pub accept_tol: f64,
    /// Energies above this are reported as unbounded ascent.
    pub unbounded_level: f64,
}

impl Default for ConeOptions {
    fn default() -> Self {
        ConeOptions { max_iterations: 400, grad_tol: 1e-11, accept_tol: 1e-7, unbounded_level: 1e8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeMaximum {
    pub coords: Vec<f64>,
    pub value: f64,
    pub field: DiscreteField,
    pub grad_norm: f64,
    pub iterations: usize,
    /// The last coordinate sits on the constraint `x_last = 0`.
    pub at_boundary: bool,
}

struct Cone<'a> {
    basis: &'a [DiscreteField],
    forms: &'a AssembledForms,
    spec: &'a NonlinearitySpec,
}

struct Eval {
    field: DiscreteField,
    /// `E`, or `-inf` on overflow.
    value: f64,
    grad: DVector<f64>,
}

impl Cone<'_> {
    fn field(&self, x: &DVector<f64>) -> DiscreteField {
        let mut out = DVector::zeros(self.forms.num_dofs());
        for (b, &c) in self.basis.iter().zip(x.iter()) {
            out.axpy(c, b.coeffs(), 1.0);
        }
        DiscreteField::from_vector(out)
    }

    fn eval(&self, x: &DVector<f64>) -> Result<Eval> {
        let field = self.field(x);
        let e = energy(&field, self.forms, self.spec)?;
        let value = if e.overflow { f64::NEG_INFINITY } else { e.total };
        let r = residual(&field, self.forms, self.spec)?;
        let grad = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|b| r.dot(b)));
        Ok(Eval { field, value, grad })
    }
}

/// Keeps `x_last >= 0`. From an interior point the last coordinate may shrink by
/// at most half per step, so the ascent cannot land on the saddle at `x_last = 0`,
/// where the radial derivative of an even energy vanishes.
fn project(x: &mut DVector<f64>, prev: f64) {
    let last = x.len() - 1;
    x[last] = x[last].max(0.5 * prev.max(0.0));
}

/// Ascent gradient with the component along an active constraint removed.
fn projected(x: &DVector<f64>, g: &DVector<f64>) -> (DVector<f64>, bool) {
    let last = x.len() - 1;
    let mut p = g.clone();
    let active = x[last] <= 0.0 && g[last] <= 0.0;
    if active {
        p[last] = 0.0;
    }
    (p, active)
}

/// Projected BFGS ascent followed by Newton polishing with a difference Hessian.
pub fn maximize_cone(
    basis: &[DiscreteField],
    x0: &[f64],
    forms: &AssembledForms,
    spec: &NonlinearitySpec,
    opts: &ConeOptions,
) -> Result<ConeMaximum> {
    let n = basis.len();
    if n == 0 || x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n.max(1), found: x0.len() });
    }
    let cone = Cone { basis, forms, spec };
    let mut x = DVector::from_column_slice(x0);
    project(&mut x, 0.0);
    let mut cur = cone.eval(&x)?;
    if !cur.value.is_finite() {
        return Err(MinimaxError::OverflowBarrier.into());
    }
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        let (pg, active) = projected(&x, &cur.grad);
        if pg.amax() < opts.grad_tol {
            break;
        }
        iterations += 1;
        let mut dir = &hinv * &pg;
        if active {
            dir[n - 1] = 0.0;
        }
        if dir.dot(&pg) <= 0.0 {
            hinv = DMatrix::identity(n, n);
            dir = pg.clone();
        }
        // keep every trial within a box proportional to the current point
        let cap = 0.5 * (1.0 + x.amax());
        let mut step = (cap / dir.amax()).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let mut xn = &x + step * &dir;
            project(&mut xn, x[n - 1]);
            let trial = cone.eval(&xn)?;
            if trial.value > opts.unbounded_level {
                return Err(MinimaxError::Unbounded { value: trial.value }.into());
            }
            let gain = cur.grad.dot(&(&xn - &x));
            if trial.value.is_finite() && trial.value >= cur.value + 1e-4 * gain {
                accepted = Some((xn, trial));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, next)) = accepted else { break };
        let s = &xn - &x;
        // ascent on E is descent on -E; curvature pair uses -grad
        let y = &cur.grad - &next.grad;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let a = &i - rho * &s * y.transpose();
            let b = &i - rho * &y * s.transpose();
            hinv = &a * &hinv * &b + rho * &s * s.transpose();
        }
        let stalled = (next.value - cur.value).abs() <= ENERGY_NOISE * cur.value.abs().max(1.0) && s.amax() < 1e-14;
        x = xn;
        cur = next;
        if stalled {
            break;
        }
    }
    polish(&cone, &mut x, &mut cur)?;
    let (pg, active) = projected(&x, &cur.grad);
    if !(pg.amax() <= opts.accept_tol) {
        return Err(MinimaxError::IterationBudget { iterations, residual: pg.amax() }.into());
    }
    Ok(ConeMaximum {
        coords: x.iter().copied().collect(),
        value: cur.value,
        field: cur.field,
        grad_norm: pg.amax(),
        iterations,
        at_boundary: active,
    })
}

/// Newton steps on the free coordinates; kept only while the gradient shrinks.
fn polish(cone: &Cone, x: &mut DVector<f64>, cur: &mut Eval) -> Result<()> {
    let n = x.len();
    for _ in 0..6 {
        let (pg, active) = projected(x, &cur.grad);
        let free: Vec<usize> = (0..n).filter(|&i| !(active && i == n - 1)).collect();
        if free.is_empty() || pg.amax() == 0.0 {
            return Ok(());
        }
        let m = free.len();
        let mut hess = DMatrix::zeros(m, m);
        for (c, &i) in free.iter().enumerate() {
            let h = 1e-5 * (1.0 + x[i].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let gp = cone.eval(&xp)?.grad;
            let gm = cone.eval(&xm)?.grad;
            for (r, &k) in free.iter().enumerate() {
                hess[(r, c)] = (gp[k] - gm[k]) / (2.0 * h);
            }
        }
        let hess = 0.5 * (&hess + hess.transpose());
        // only polish where the restricted energy is locally concave
        if (-&hess).cholesky().is_none() {
            return Ok(());
        }
        let rhs = DVector::from_iterator(m, free.iter().map(|&i| -pg[i]));
        let Some(delta) = hess.lu().solve(&rhs) else { return Ok(()) };
        let mut xn = x.clone();
        for (c, &i) in free.iter().enumerate() {
            xn[i] += delta[c];
        }
        project(&mut xn, x[n - 1]);
        let next = cone.eval(&xn)?;
        let (npg, _) = projected(&xn, &next.grad);
        if !next.value.is_finite() || npg.amax() >= pg.amax() {
            return Ok(());
        }
        *x = xn;
        *cur = next;
    }
    Ok(())
}
