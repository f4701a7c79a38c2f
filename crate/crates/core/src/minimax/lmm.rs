//! Local minimax descent shared by the mountain-pass and linking solvers.
//!
//! For a support space `L` (empty for mountain pass, `V` for linking) and a unit
//! direction `v` orthogonal to `L`, `p(v)` maximizes `E` over `L + R_+ v`. The
//! direction then moves down the `H^1_0` gradient at `p(v)`, with a backtracking
//! rule on `E(p(v))`, until the residual at `p(v)` is below tolerance.

use super::cone::{maximize_cone, ConeMaximum, ConeOptions};
use super::{gradient, MinimaxError, ENERGY_NOISE, TRIVIAL_NORM};
use crate::energy::{dual_norm, residual};
use crate::error::Result;
use crate::fem::DiscreteField;
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::AssembledForms;

pub(crate) struct Lmm<'a> {
    pub support: &'a [DiscreteField],
    pub forms: &'a AssembledForms,
    pub spec: &'a NonlinearitySpec,
    pub cone: ConeOptions,
    /// Projection onto the complement of the support.
    pub project: &'a (dyn Fn(&DiscreteField) -> DiscreteField + Sync),
}

pub(crate) struct LmmOutcome {
    pub peak: ConeMaximum,
    pub direction: DiscreteField,
    pub iterations: usize,
}

/// Largest change of the unit direction per step.
const MAX_TURN: f64 = 0.5;

impl Lmm<'_> {
    fn peak(&self, v: &DiscreteField, x0: &[f64]) -> Result<ConeMaximum> {
        let mut gens = self.support.to_vec();
        gens.push(v.clone());
        maximize_cone(&gens, x0, self.forms, self.spec, &self.cone)
    }

    /// Descends from the cone through `start`; returns the converged peak.
    pub fn run(&self, start: &DiscreteField, x_support: Vec<f64>, tol: f64, max_iterations: usize, max_halvings: usize) -> Result<LmmOutcome> {
        let forms = self.forms;
        let w = (self.project)(start);
        let nw = forms.norm(&w);
        if nw < TRIVIAL_NORM {
            return Err(MinimaxError::Trivial { norm: forms.norm(start) }.into());
        }
        let mut v = w.scaled(1.0 / nw);
        let mut x0 = x_support;
        x0.push(nw);
        let mut cur = self.peak(&v, &x0)?;
        let mut step: f64 = 1.0;
        let mut dn = f64::INFINITY;
        for it in 0..max_iterations {
            let t = *cur.coords.last().unwrap();
            let norm = forms.norm(&cur.field);
            if t <= TRIVIAL_NORM || norm < TRIVIAL_NORM {
                return Err(MinimaxError::Trivial { norm }.into());
            }
            let (_, g, norm_r) = gradient(&cur.field, forms, self.spec)?;
            dn = norm_r;
            if dn < tol {
                return Ok(LmmOutcome { peak: cur, direction: v, iterations: it });
            }
            let gw = (self.project)(&g);
            let gw_norm = forms.norm(&gw);
            let mut s = step.min(MAX_TURN * t / gw_norm.max(f64::MIN_POSITIVE));
            let mut accepted = None;
            for h in 0..max_halvings {
                let trial_dir = v.axpy(-s / t, &gw);
                let n = forms.norm(&trial_dir);
                let vt = trial_dir.scaled(1.0 / n);
                let mut xt = cur.coords.clone();
                *xt.last_mut().unwrap() = t * n;
                if let Ok(m) = self.peak(&vt, &xt) {
                    let armijo = m.value <= cur.value - 0.25 * s * gw_norm * gw_norm;
                    let noisy = (m.value - cur.value).abs() <= ENERGY_NOISE * cur.value.abs().max(1.0)
                        && dual_norm(&residual(&m.field, forms, self.spec)?, forms)? < dn;
                    if m.value.is_finite() && (armijo || noisy) {
                        accepted = Some((vt, m, h));
                        break;
                    }
                }
                s *= 0.5;
            }
            let Some((vt, m, halvings)) = accepted else {
                return Err(MinimaxError::LineSearchStagnation { iteration: it }.into());
            };
            step = if halvings == 0 { 2.0 * s } else { s };
            v = vt;
            cur = m;
        }
        Err(MinimaxError::IterationBudget { iterations: max_iterations, residual: dn }.into())
    }
}
