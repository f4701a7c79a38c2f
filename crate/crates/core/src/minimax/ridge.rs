//! Ridge profiles `H_j(t) = E(t omega_j)` evaluated radially.
//!
//! `omega_j` is radial with unit Dirichlet norm and support in the ball of radius
//! `d` about the origin, so `H_j(t) = t^2/2 - 2 pi int_0^d G(t omega_j(r)) r^(1-gamma) dr`
//! holds exactly and no mesh enters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MinimaxError;
use crate::error::{Error, Result};
use crate::moser::moser_radial;
use crate::nonlinearity::{NonlinearitySpec, ProblemSpec};
use crate::quadrature::{radial_integrate, AdaptiveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeOptions {
    /// Grid points on `[0, t_cap]`, endpoints included.
    pub samples: usize,
    /// `t_cap = t_cap_factor * t_0`.
    pub t_cap_factor: f64,
}

impl Default for RidgeOptions {
    fn default() -> Self {
        RidgeOptions { samples: 201, t_cap_factor: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeProfile {
    pub j: u32,
    /// `(t, H_j(t))` on the scan grid; `-inf` where the exponential overflows.
    pub samples: Vec<(f64, f64)>,
    pub t_star: f64,
    pub h_star: f64,
    pub threshold: f64,
    pub below_threshold: bool,
    /// `H_j(2 t_star)`.
    pub h_double: f64,
    /// `H_j(2 t_star) < H_star` and the last three grid values strictly decrease.
    pub tail_decreasing: bool,
}

impl RidgeProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,h\n");
        for (t, h) in &self.samples {
            s.push_str(&format!("{t:e},{h:e}\n"));
        }
        s
    }
}

fn check_j(j: u32) -> Result<()> {
    if j < 2 {
        return Err(Error::InvalidParameter(format!("Moser index j must be at least 2, got {j}")));
    }
    Ok(())
}

fn radial_opts(j: u32, d: f64) -> AdaptiveOptions {
    AdaptiveOptions::default().with_breakpoints(vec![d / j as f64])
}

fn peak(j: u32) -> f64 {
    ((j as f64).ln() / (2.0 * std::f64::consts::PI)).sqrt()
}

/// `H_j(t)`; `-inf` once `alpha (t max omega_j)^2` exceeds the overflow limit.
pub fn ridge_value(t: f64, j: u32, problem: &ProblemSpec, spec: &NonlinearitySpec) -> Result<f64> {
    check_j(j)?;
    if spec.overflows(t * peak(j)) {
        return Ok(f64::NEG_INFINITY);
    }
    let d = problem.inradius();
    let p = radial_integrate(|r| spec.g(t * moser_radial(r, j, d)), d, problem.gamma, &radial_opts(j, d))?;
    Ok(0.5 * t * t - p)
}

/// `H_j'(t) = t - int omega_j h(t omega_j) e^(alpha t^2 omega_j^2) / |x|^gamma dx`.
pub fn ridge_derivative(t: f64, j: u32, problem: &ProblemSpec, spec: &NonlinearitySpec) -> Result<f64> {
    check_j(j)?;
    if spec.overflows(t * peak(j)) {
        return Ok(f64::NEG_INFINITY);
    }
    let d = problem.inradius();
    let p = radial_integrate(
        |r| {
            let w = moser_radial(r, j, d);
            w * spec.f(t * w)
        },
        d,
        problem.gamma,
        &radial_opts(j, d),
    )?;
    Ok(t - p)
}

const GOLDEN_TOL: f64 = 1e-7;
const BISECTION_TOL: f64 = 1e-14;

fn profile(j: u32, problem: &ProblemSpec, spec: &NonlinearitySpec, opts: &RidgeOptions) -> Result<RidgeProfile> {
    let t_cap = opts.t_cap_factor * problem.t0();
    let n = opts.samples;
    let h = |t: f64| ridge_value(t, j, problem, spec);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = t_cap * i as f64 / (n - 1) as f64;
        samples.push((t, if i == 0 { 0.0 } else { h(t)? }));
    }
    let imax = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.1.is_finite())
        .fold(0, |best, (i, s)| if s.1 > samples[best].1 { i } else { best });
    if imax == n - 1 {
        return Err(MinimaxError::BracketNotFound { j, t_cap }.into());
    }
    let (t_star, h_star) = if imax == 0 {
        (0.0, 0.0)
    } else {
        refine(j, samples[imax - 1].0, samples[imax + 1].0, problem, spec)?
    };
    let threshold = problem.threshold();
    let h_double = h(2.0 * t_star)?;
    let tail = &samples[n - 3..];
    let tail_decreasing = h_double < h_star
        && tail.windows(2).all(|w| w[1].1 < w[0].1 || (w[1].1 == f64::NEG_INFINITY && w[0].1 == f64::NEG_INFINITY));
    Ok(RidgeProfile { j, samples, t_star, h_star, threshold, below_threshold: h_star < threshold, h_double, tail_decreasing })
}

/// Golden section on `[a, b]`, then bisection on `H_j'` around the estimate.
fn refine(j: u32, a: f64, b: f64, problem: &ProblemSpec, spec: &NonlinearitySpec) -> Result<(f64, f64)> {
    let h = |t: f64| ridge_value(t, j, problem, spec);
    let dh = |t: f64| ridge_derivative(t, j, problem, spec);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (h(x1)?, h(x2)?);
    while b - a > GOLDEN_TOL * b.max(1.0) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = h(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = h(x1)?;
        }
    }
    let (mut best_t, mut best_h) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let (mut lo, mut hi) = (a, b);
    if dh(lo)? > 0.0 && dh(hi)? < 0.0 {
        while hi - lo > BISECTION_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if dh(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let v = h(t)?;
        if v >= best_h {
            best_t = t;
            best_h = v;
        }
    }
    Ok((best_t, best_h))
}

/// Profiles for every `j`, computed in parallel and returned in input order.
pub fn ridge_scan(js: &[u32], problem: &ProblemSpec, spec: &NonlinearitySpec, opts: &RidgeOptions) -> Result<Vec<RidgeProfile>> {
    if opts.samples < 4 || !(opts.t_cap_factor > 0.0) {
        return Err(Error::InvalidParameter("ridge scan needs at least 4 samples and a positive cap".into()));
    }
    for &j in js {
        check_j(j)?;
    }
    js.par_iter().map(|&j| profile(j, problem, spec, opts)).collect()
}

/// Smallest `j` whose ridge maximum lies strictly below the threshold.
pub fn select_j0(profiles: &[RidgeProfile]) -> Option<u32> {
    profiles.iter().filter(|p| p.below_threshold && p.h_star > 0.0).map(|p| p.j).min()
}
