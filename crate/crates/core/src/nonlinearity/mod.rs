//! Nonlinearities `h` with finite `beta = liminf t h(t)`, their primitives
//! `G(t) = int_0^t h(s) e^(alpha s^2) ds`, and the hypothesis checker.

pub mod hypotheses;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{check_gamma, DomainSpec};
use crate::quadrature::{adaptive_integrate, gauss_legendre, AdaptiveOptions};
use crate::special::{ei, ei_scaled};

pub use hypotheses::{check_hypotheses, ConditionRecord, HypothesisConstants, HypothesisReport, Theorem, Verdict};

/// Exponents `alpha t^2` above this are treated as overflow.
pub const EXP_LIMIT: f64 = 700.0;

/// `alpha`, `gamma` and the domain, with the criticality flag
/// `alpha / 4 pi + gamma / 2 <= 1` stored explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemInput")]
pub struct ProblemSpec {
    pub alpha: f64,
    pub gamma: f64,
    pub domain: DomainSpec,
    pub critical: bool,
}

#[derive(Deserialize)]
struct ProblemInput {
    alpha: f64,
    gamma: f64,
    domain: DomainSpec,
}

impl TryFrom<ProblemInput> for ProblemSpec {
    type Error = Error;
    fn try_from(p: ProblemInput) -> Result<Self> {
        ProblemSpec::new(p.alpha, p.gamma, p.domain)
    }
}

impl ProblemSpec {
    pub fn new(alpha: f64, gamma: f64, domain: DomainSpec) -> Result<Self> {
        check_alpha(alpha)?;
        check_gamma(gamma)?;
        domain.validate()?;
        Ok(ProblemSpec { alpha, gamma, domain, critical: alpha / (4.0 * PI) + gamma / 2.0 <= 1.0 })
    }

    /// The compactness threshold `2 pi (1 - gamma/2) / alpha`.
    pub fn threshold(&self) -> f64 {
        threshold(self.alpha, self.gamma)
    }

    /// `t_0 = sqrt(4 pi (1 - gamma/2) / alpha)`, where `alpha t_0^2 / 2 pi = 2 - gamma`.
    pub fn t0(&self) -> f64 {
        (4.0 * PI * (1.0 - self.gamma / 2.0) / self.alpha).sqrt()
    }

    pub fn inradius(&self) -> f64 {
        self.domain.inradius()
    }
}

pub fn threshold(alpha: f64, gamma: f64) -> f64 {
    2.0 * PI * (1.0 - gamma / 2.0) / alpha
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Family of `h`. All builtin families are odd in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `h = beta0 t / (1 + t^2)`.
    Rational { beta0: f64 },
    /// `h = beta0 t / (1 + t^2) - nu t e^(-(alpha + 1) t^2)`.
    SignPerturbed { beta0: f64, nu: f64 },
    /// `h = a t e^(-alpha t^2) + beta0 t / (1 + t^2)`.
    ShiftedQuadratic { beta0: f64, a: f64 },
    /// Piecewise-linear `h` through `(t, h)` nodes with `t >= 0`, extended
    /// oddly and continued by `beta / t` past the last node.
    UserTable {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Rational { .. } => "rational",
            Family::SignPerturbed { .. } => "sign_perturbed",
            Family::ShiftedQuadratic { .. } => "shifted_quadratic",
            Family::UserTable { .. } => "user_table",
        }
    }
}

/// A family bound to a value of `alpha`, ready for evaluation.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    family: Family,
    alpha: f64,
    table: Option<Arc<TableCache>>,
}

#[derive(Debug)]
struct TableCache {
    t: Vec<f64>,
    h: Vec<f64>,
    /// `G` at the nodes.
    g: Vec<f64>,
    beta: f64,
}

impl NonlinearitySpec {
    pub fn new(family: Family, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative, got {v}")))
            }
        };
        let mut table = None;
        match &family {
            Family::Rational { beta0 } => nonneg("beta0", *beta0)?,
            Family::SignPerturbed { beta0, nu } => {
                nonneg("beta0", *beta0)?;
                nonneg("nu", *nu)?;
            }
            Family::ShiftedQuadratic { beta0, a } => {
                nonneg("beta0", *beta0)?;
                nonneg("a", *a)?;
            }
            Family::UserTable { points, path } => {
                let pts = match (points, path) {
                    (Some(p), _) => p.clone(),
                    (None, Some(path)) => read_table(path)?,
                    (None, None) => return Err(Error::MissingInput("user_table needs points or a path".into())),
                };
                table = Some(Arc::new(TableCache::new(pts, alpha)?));
            }
        }
        Ok(NonlinearitySpec { family, alpha, table })
    }

    pub fn rational(beta0: f64, alpha: f64) -> Result<Self> {
        Self::new(Family::Rational { beta0 }, alpha)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The declared `beta = liminf t h(t)` of the family.
    pub fn beta_declared(&self) -> f64 {
        match &self.family {
            Family::Rational { beta0 }
            | Family::SignPerturbed { beta0, .. }
            | Family::ShiftedQuadratic { beta0, .. } => *beta0,
            Family::UserTable { .. } => self.table.as_ref().unwrap().beta,
        }
    }

    /// The quadratic coefficient `lim 2 G(t) / t^2` at the origin, i.e. `h'(0)`.
    pub fn slope_at_zero(&self) -> f64 {
        match &self.family {
            Family::Rational { beta0 } => *beta0,
            Family::SignPerturbed { beta0, nu } => beta0 - nu,
            Family::ShiftedQuadratic { beta0, a } => beta0 + a,
            Family::UserTable { .. } => {
                let c = self.table.as_ref().unwrap();
                c.h[1] / c.t[1]
            }
        }
    }

    /// True for families whose hypothesis checks have an analytic tail argument.
    pub fn is_builtin(&self) -> bool {
        !matches!(self.family, Family::UserTable { .. })
    }

    /// True when `e^(alpha t^2)` exceeds the overflow limit and actually enters `G`.
    pub fn overflows(&self, t: f64) -> bool {
        self.alpha * t * t > EXP_LIMIT && (!self.is_builtin() || self.beta_declared() > 0.0)
    }

    pub fn h(&self, t: f64) -> f64 {
        let rational = |b: f64| b * t / (1.0 + t * t);
        match &self.family {
            Family::Rational { beta0 } => rational(*beta0),
            Family::SignPerturbed { beta0, nu } => rational(*beta0) - nu * t * (-(self.alpha + 1.0) * t * t).exp(),
            Family::ShiftedQuadratic { beta0, a } => a * t * (-self.alpha * t * t).exp() + rational(*beta0),
            Family::UserTable { .. } => self.table.as_ref().unwrap().h(t),
        }
    }

    /// `h(t) e^(alpha t^2)`, the right-hand side of the equation.
    pub fn f(&self, t: f64) -> f64 {
        let e = (self.alpha * t * t).exp();
        let rational = |b: f64| b * t / (1.0 + t * t) * e;
        match &self.family {
            Family::Rational { beta0 } => rational(*beta0),
            Family::SignPerturbed { beta0, nu } => rational(*beta0) - nu * t * (-t * t).exp(),
            Family::ShiftedQuadratic { beta0, a } => a * t + rational(*beta0),
            Family::UserTable { .. } => self.table.as_ref().unwrap().h(t) * e,
        }
    }

    /// `f` with the exponent capped at [`EXP_LIMIT`].
    pub fn f_saturated(&self, t: f64) -> f64 {
        let cap = (EXP_LIMIT / self.alpha).sqrt();
        if t.abs() > cap {
            self.f(cap.copysign(t))
        } else {
            self.f(t)
        }
    }

    /// `G(t) = int_0^t h(s) e^(alpha s^2) ds`; `+inf` once the exponent overflows.
    pub fn g(&self, t: f64) -> f64 {
        let s = t * t;
        match &self.family {
            Family::Rational { beta0 } => rational_g(*beta0, self.alpha, s),
            Family::SignPerturbed { beta0, nu } => rational_g(*beta0, self.alpha, s) + 0.5 * nu * (-s).exp_m1(),
            Family::ShiftedQuadratic { beta0, a } => 0.5 * a * s + rational_g(*beta0, self.alpha, s),
            Family::UserTable { .. } => self.table.as_ref().unwrap().g(t.abs(), self.alpha),
        }
    }

    /// `2 G(t) / t^2`, continued by `h'(0)` at the origin.
    pub fn quotient(&self, t: f64) -> f64 {
        if t == 0.0 {
            self.slope_at_zero()
        } else {
            2.0 * self.g(t) / (t * t)
        }
    }
}

/// `(beta0/2) int_0^s e^(alpha y) / (1 + y) dy`, which is `G(t)` at `s = t^2`.
fn rational_g(beta0: f64, alpha: f64, s: f64) -> f64 {
    if beta0 == 0.0 || s == 0.0 {
        return 0.0;
    }
    if s <= 1.0 && alpha * s <= 2.0 {
        // the Ei difference cancels here; the integrand is entire on a neighbourhood of [0, s]
        let (x, w) = gl24();
        let sum: f64 = x
            .iter()
            .zip(w)
            .map(|(&x, &w)| {
                let y = 0.5 * s * (1.0 + x);
                w * (alpha * y).exp() / (1.0 + y)
            })
            .sum();
        return 0.25 * beta0 * s * sum;
    }
    let z = alpha * s;
    if z > EXP_LIMIT {
        return f64::INFINITY;
    }
    // (beta0/2) e^(alpha s) [e^-x Ei(x) at x = alpha (1 + s)  -  e^-(alpha s) e^-alpha Ei(alpha)]
    let scaled = ei_scaled(alpha * (1.0 + s)) - ei_scaled(alpha) * (-z).exp();
    0.5 * beta0 * z.exp() * scaled
}

fn gl24() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let r = RULE.get_or_init(|| gauss_legendre(24));
    (&r.0, &r.1)
}

impl TableCache {
    fn new(mut pts: Vec<[f64; 2]>, alpha: f64) -> Result<Self> {
        if pts.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidParameter("user table contains non-finite values".into()));
        }
        if pts.first().map_or(true, |p| p[0] > 0.0) {
            pts.insert(0, [0.0, 0.0]);
        }
        if pts[0][0] != 0.0 || pts[0][1] != 0.0 {
            return Err(Error::InvalidParameter("user table must start at t = 0 with h(0) = 0".into()));
        }
        if pts.len() < 2 || pts.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::InvalidParameter(
                "user table needs at least two nodes with strictly increasing t".into(),
            ));
        }
        let (t, h): (Vec<f64>, Vec<f64>) = pts.iter().map(|p| (p[0], p[1])).unzip();
        let beta = t.last().unwrap() * h.last().unwrap();
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "user table tail t h(t) must be positive at the last node, got {beta}"
            )));
        }
        let mut g = vec![0.0; t.len()];
        for i in 1..t.len() {
            g[i] = g[i - 1] + segment_integral(&t, &h, i - 1, t[i], alpha)?;
        }
        Ok(TableCache { t, h, g, beta })
    }

    fn h(&self, t: f64) -> f64 {
        let a = t.abs();
        let n = self.t.len();
        let v = if a >= self.t[n - 1] {
            self.beta / a
        } else {
            let i = self.t.partition_point(|&x| x <= a) - 1;
            let s = (a - self.t[i]) / (self.t[i + 1] - self.t[i]);
            self.h[i] + s * (self.h[i + 1] - self.h[i])
        };
        if t < 0.0 {
            -v
        } else {
            v
        }
    }

    fn g(&self, a: f64, alpha: f64) -> f64 {
        let n = self.t.len();
        let last = self.t[n - 1];
        if a >= last {
            if alpha * a * a > EXP_LIMIT {
                return f64::INFINITY;
            }
            return self.g[n - 1] + 0.5 * self.beta * (ei(alpha * a * a) - ei(alpha * last * last));
        }
        let i = self.t.partition_point(|&x| x <= a) - 1;
        // a failed segment integral would have failed when the cache was built
        self.g[i] + segment_integral(&self.t, &self.h, i, a, alpha).unwrap_or(f64::NAN)
    }
}

/// `int_{t_i}^{b} h(s) e^(alpha s^2) ds` with `h` linear on segment `i`.
fn segment_integral(t: &[f64], h: &[f64], i: usize, b: f64, alpha: f64) -> Result<f64> {
    let (t0, t1, h0, h1) = (t[i], t[i + 1], h[i], h[i + 1]);
    let lin = |s: f64| h0 + (s - t0) / (t1 - t0) * (h1 - h0);
    let opts = AdaptiveOptions { rel_tol: 1e-13, abs_tol: 1e-300, ..Default::default() };
    Ok(adaptive_integrate(|s| lin(s) * (alpha * s * s).exp(), t0, b, &opts)?.0)
}

fn read_table(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = std::fs::read_to_string(path)?;
    parse_table(&text)
}

/// Two whitespace- or comma-separated columns `t h`; `#` starts a comment.
pub fn parse_table(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut out = vec![];
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if cols.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected two columns", n + 1)));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)));
        out.push([parse(cols[0])?, parse(cols[1])?]);
    }
    Ok(out)
}

pub fn h_eval(spec: &NonlinearitySpec, t: f64) -> f64 {
    spec.h(t)
}

pub fn g_eval(spec: &NonlinearitySpec, t: f64) -> f64 {
    spec.g(t)
}

/// Range of `t h(t)` sampled over `t_max/2 <= |t| <= t_max`. This estimates
/// `beta`; a liminf cannot be established from finitely many samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaProbe {
    pub min: f64,
    pub max: f64,
    pub t_max: f64,
    pub samples: usize,
}

pub fn beta_probe(spec: &NonlinearitySpec, t_max: f64, samples: usize) -> Result<BetaProbe> {
    if !(t_max >= 100.0) || samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "beta probe needs t_max >= 100 and at least 2 samples, got {t_max}, {samples}"
        )));
    }
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..samples {
        let t = t_max * (0.5 + 0.5 * i as f64 / (samples - 1) as f64);
        for s in [t, -t] {
            let v = s * spec.h(s);
            min = min.min(v);
            max = max.max(v);
        }
    }
    Ok(BetaProbe { min, max, t_max, samples })
}
