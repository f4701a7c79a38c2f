//! Grid and threshold checks of the growth conditions on `G` and `beta`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::{beta_probe, BetaProbe, NonlinearitySpec, ProblemSpec};
use crate::error::{Error, Result};
use crate::mesh::GeometryConstants;

/// Range of the grid for global-in-`t` conditions.
pub const T_CHECK: f64 = 20.0;
/// Points of the grid for global-in-`t` conditions.
pub const GLOBAL_POINTS: usize = 100_000;
/// Points per sign on `(0, delta]` for local conditions.
pub const LOCAL_POINTS: usize = 4_000;
/// Relative slack for pointwise comparisons.
pub const CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "1.1")]
    MountainPass,
    #[serde(rename = "1.2")]
    SignChanging,
    #[serde(rename = "1.3")]
    Linking,
}

impl std::str::FromStr for Theorem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1.1" => Ok(Theorem::MountainPass),
            "1.2" => Ok(Theorem::SignChanging),
            "1.3" => Ok(Theorem::Linking),
            _ => Err(Error::InvalidParameter(format!("unknown theorem '{s}', expected 1.1, 1.2 or 1.3"))),
        }
    }
}

impl Theorem {
    pub fn label(self) -> &'static str {
        match self {
            Theorem::MountainPass => "1.1",
            Theorem::SignChanging => "1.2",
            Theorem::Linking => "1.3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Indeterminate,
}

/// Constants entering the conditions. Which ones are required depends on the theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisConstants {
    #[serde(default)]
    pub sigma0: Option<f64>,
    pub sigma1: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub c_user: Option<f64>,
}

fn default_delta() -> f64 {
    0.1
}

impl Default for HypothesisConstants {
    fn default() -> Self {
        HypothesisConstants { sigma0: None, sigma1: 1.0, delta: default_delta(), k: None, c_user: None }
    }
}

/// Sampling grid of a pointwise check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub both_signs: bool,
}

/// Outcome of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub id: String,
    pub statement: String,
    pub verdict: Verdict,
    /// Smallest slack over the grid (pointwise checks, in units of `2G/t^2`)
    /// or `value - bound` (threshold checks). Nonnegative when satisfied.
    pub margin: f64,
    /// Grid point realizing the margin.
    pub worst_t: Option<f64>,
    pub grid: Option<Grid>,
    pub tolerance: f64,
    /// Right-hand side of a threshold condition.
    pub bound: Option<f64>,
    /// Left-hand side of a threshold condition (the declared beta).
    pub value: Option<f64>,
    /// Verdict of a threshold condition evaluated with the probed beta.
    pub probed_verdict: Option<Verdict>,
    /// Largest grid delta for which a local condition holds.
    pub largest_delta: Option<f64>,
    /// Largest sigma_1 admissible at the requested delta.
    pub largest_sigma1: Option<f64>,
    pub note: String,
}

/// Constants actually used, echoed into the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsedConstants {
    pub sigma0: Option<f64>,
    pub sigma1: f64,
    pub delta: f64,
    pub k: Option<usize>,
    pub c_user: Option<f64>,
    pub kappa: f64,
    pub d: f64,
    pub lambda1: Option<f64>,
    pub lambda_k_minus_1: Option<f64>,
    pub lambda_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub theorem: Theorem,
    pub family: String,
    pub alpha: f64,
    pub gamma: f64,
    pub critical: bool,
    pub threshold: f64,
    pub constants: UsedConstants,
    pub beta_declared: f64,
    pub beta_probe: BetaProbe,
    pub records: Vec<ConditionRecord>,
    pub verdict: Verdict,
}

impl HypothesisReport {
    pub fn record(&self, id: &str) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

/// Right-hand side of the sign-changing threshold on beta.
pub fn sign_changing_bound(kappa: f64, alpha: f64, sigma0: f64) -> f64 {
    let e = (sigma0 / kappa).exp();
    if sigma0 <= kappa * LN_2 {
        2.0 * kappa / alpha * e / (3.0 - e)
    } else {
        2.0 * kappa / alpha * e
    }
}

/// Right-hand side of the linking threshold on beta for a user-supplied `c`.
pub fn linking_bound(kappa: f64, alpha: f64, sigma0: f64, c_user: f64) -> f64 {
    2.0 * kappa / alpha * (c_user / sigma0).exp()
}

/// Checks the hypotheses of the chosen theorem. `eigenvalues[i]` is `lambda_{i+1}`.
pub fn check_hypotheses(
    problem: &ProblemSpec,
    spec: &NonlinearitySpec,
    theorem: Theorem,
    constants: &HypothesisConstants,
    eigenvalues: &[f64],
) -> Result<HypothesisReport> {
    if (spec.alpha() - problem.alpha).abs() > 1e-14 * problem.alpha {
        return Err(Error::InvalidParameter("nonlinearity and problem use different alpha".into()));
    }
    let positive = |name: &str, v: Option<f64>| -> Result<f64> {
        match v {
            Some(x) if x.is_finite() && x > 0.0 => Ok(x),
            Some(x) => Err(Error::InvalidParameter(format!("{name} must be positive, got {x}"))),
            None => Err(Error::MissingInput(format!("{name} is required for theorem {}", theorem.label()))),
        }
    };
    let sigma1 = positive("sigma1", Some(constants.sigma1))?;
    let delta = positive("delta", Some(constants.delta))?;
    let geo = GeometryConstants::new(problem.inradius(), problem.gamma)?;
    let kappa = geo.kappa;
    let alpha = problem.alpha;
    let lambda = |i: usize| -> Result<f64> {
        eigenvalues
            .get(i - 1)
            .copied()
            .ok_or_else(|| Error::MissingInput(format!("lambda_{i} is required but {} eigenvalues were supplied", eigenvalues.len())))
    };
    let probe = beta_probe(spec, 1000.0, 2000)?;
    let beta = spec.beta_declared();

    let mut used = UsedConstants {
        sigma0: constants.sigma0,
        sigma1,
        delta,
        k: constants.k,
        c_user: constants.c_user,
        kappa,
        d: geo.d,
        lambda1: None,
        lambda_k_minus_1: None,
        lambda_k: None,
    };
    let mut records = vec![];
    match theorem {
        Theorem::MountainPass => {
            let l1 = lambda(1)?;
            used.lambda1 = Some(l1);
            records.push(global_lower(spec, "1.6", "G(t) >= 0 for t >= 0", 0.0, false));
            records.push(local_upper(spec, "1.7", "G(t) <= (lambda_1 - sigma_1) t^2 / 2 for |t| <= delta", l1, sigma1, delta));
            records.push(threshold_record("1.8", "beta > kappa / alpha", beta, &probe, kappa / alpha, String::new()));
        }
        Theorem::SignChanging => {
            let s0 = positive("sigma0", constants.sigma0)?;
            let l1 = lambda(1)?;
            used.lambda1 = Some(l1);
            records.push(global_lower(spec, "1.9", "G(t) >= -sigma_0 t^2 / 2 for t >= 0", -s0, false));
            records.push(local_upper(spec, "1.7", "G(t) <= (lambda_1 - sigma_1) t^2 / 2 for |t| <= delta", l1, sigma1, delta));
            let branch = if s0 <= kappa * LN_2 {
                "sigma_0 <= kappa log 2: bound (2 kappa / alpha) e^(sigma_0/kappa) / (3 - e^(sigma_0/kappa))"
            } else {
                "sigma_0 > kappa log 2: bound (2 kappa / alpha) e^(sigma_0/kappa)"
            };
            records.push(threshold_record(
                "1.10",
                "beta above the sign-changing threshold",
                beta,
                &probe,
                sign_changing_bound(kappa, alpha, s0),
                branch.into(),
            ));
        }
        Theorem::Linking => {
            let s0 = positive("sigma0", constants.sigma0)?;
            let c_user = positive("c_user", constants.c_user)?;
            let k = constants
                .k
                .ok_or_else(|| Error::MissingInput("k is required for theorem 1.3".into()))?;
            if k < 2 {
                return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
            }
            let (lkm1, lk) = (lambda(k - 1)?, lambda(k)?);
            used.lambda_k_minus_1 = Some(lkm1);
            used.lambda_k = Some(lk);
            records.push(global_lower(spec, "1.11", "G(t) >= (lambda_{k-1} + sigma_0) t^2 / 2 for all t", lkm1 + s0, true));
            records.push(local_upper(spec, "1.12", "G(t) <= (lambda_k - sigma_1) t^2 / 2 for |t| <= delta", lk, sigma1, delta));
            records.push(threshold_record(
                "1.13",
                "beta > (2 kappa / alpha) e^(c / sigma_0)",
                beta,
                &probe,
                linking_bound(kappa, alpha, s0, c_user),
                format!("conditional on the user-supplied constant c = {c_user}"),
            ));
        }
    }
    let mut verdict = if records.iter().any(|r| r.verdict == Verdict::Violated) {
        Verdict::Violated
    } else if records.iter().all(|r| r.verdict == Verdict::Satisfied) {
        Verdict::Satisfied
    } else {
        Verdict::Indeterminate
    };
    if !problem.critical {
        verdict = Verdict::Violated;
    }
    Ok(HypothesisReport {
        theorem,
        family: spec.family().name().into(),
        alpha,
        gamma: problem.gamma,
        critical: problem.critical,
        threshold: problem.threshold(),
        constants: used,
        beta_declared: beta,
        beta_probe: probe,
        records,
        verdict,
    })
}

fn grid_t(i: usize, n: usize, t_max: f64) -> f64 {
    t_max * (i + 1) as f64 / n as f64
}

/// `2G(t)/t^2 >= level` on the grid, with the analytic tail argument for builtin families.
fn global_lower(spec: &NonlinearitySpec, id: &str, statement: &str, level: f64, both_signs: bool) -> ConditionRecord {
    let n = GLOBAL_POINTS;
    let mut margin = spec.slope_at_zero() - level;
    let mut worst = 0.0;
    let mut nan = false;
    for i in 0..n {
        let t = grid_t(i, n, T_CHECK);
        for s in if both_signs { vec![t, -t] } else { vec![t] } {
            let q = spec.quotient(s);
            if q.is_nan() {
                nan = true;
                continue;
            }
            let m = q - level;
            if m < margin {
                margin = m;
                worst = s;
            }
        }
    }
    let tol = CHECK_TOL * level.abs().max(1.0);
    let grid = Grid { t_min: 0.0, t_max: T_CHECK, points: n, both_signs };
    let (verdict, note) = if margin < -tol {
        (Verdict::Violated, "violated on the grid".to_string())
    } else if nan {
        (Verdict::Indeterminate, "G could not be evaluated at some grid points".to_string())
    } else if !spec.is_builtin() {
        (Verdict::Indeterminate, format!("grid-only check; indeterminate beyond |t| <= {T_CHECK}"))
    } else {
        tail_argument(spec, level)
    };
    ConditionRecord {
        id: id.into(),
        statement: statement.into(),
        verdict,
        margin,
        worst_t: Some(worst),
        grid: Some(grid),
        tolerance: tol,
        bound: Some(level),
        value: None,
        probed_verdict: None,
        largest_delta: None,
        largest_sigma1: None,
        note,
    }
}

/// For the builtin families `f(t)/t = beta0 e^(alpha t^2)/(1 + t^2) - nu e^(-t^2) + a`
/// is nondecreasing for `t >= T` as soon as `alpha (1 + T^2) >= 1`. If moreover
/// `f(T)/T >= level`, then `(G - level t^2/2)' >= 0` on `[T, inf)` and the grid
/// value at `T` propagates to the whole tail.
fn tail_argument(spec: &NonlinearitySpec, level: f64) -> (Verdict, String) {
    let t = T_CHECK;
    let growth = spec.f(t) / t;
    if spec.alpha() * (1.0 + t * t) >= 1.0 && growth >= level {
        (
            Verdict::Satisfied,
            format!("grid on (0, {t}] plus monotone tail: f(t)/t >= {growth:.3e} >= {level} for t >= {t}"),
        )
    } else {
        (Verdict::Indeterminate, format!("grid holds; no tail certificate beyond |t| = {t}"))
    }
}

/// `2G(t)/t^2 <= lambda - sigma1` for `0 < |t| <= delta`.
fn local_upper(spec: &NonlinearitySpec, id: &str, statement: &str, lambda: f64, sigma1: f64, delta: f64) -> ConditionRecord {
    let level = lambda - sigma1;
    let n = LOCAL_POINTS;
    let mut sup = spec.slope_at_zero();
    let mut worst = 0.0;
    for i in 0..n {
        let t = grid_t(i, n, delta);
        for s in [t, -t] {
            let q = spec.quotient(s);
            if !(q <= sup) {
                sup = q;
                worst = s;
            }
        }
    }
    let margin = level - sup;
    let tol = CHECK_TOL * level.abs().max(1.0);
    let verdict = if margin.is_nan() {
        Verdict::Indeterminate
    } else if margin < -tol {
        Verdict::Violated
    } else {
        Verdict::Satisfied
    };
    // largest delta: scan outward until the inequality first fails
    let scan = 20_000;
    let mut largest = 0.0;
    if spec.slope_at_zero() <= level + tol {
        largest = T_CHECK;
        for i in 0..scan {
            let t = grid_t(i, scan, T_CHECK);
            if !(spec.quotient(t).max(spec.quotient(-t)) <= level + tol) {
                largest = if i == 0 { 0.0 } else { grid_t(i - 1, scan, T_CHECK) };
                break;
            }
        }
    }
    ConditionRecord {
        id: id.into(),
        statement: statement.into(),
        verdict,
        margin,
        worst_t: Some(worst),
        grid: Some(Grid { t_min: 0.0, t_max: delta, points: n, both_signs: true }),
        tolerance: tol,
        bound: Some(level),
        value: None,
        probed_verdict: None,
        largest_delta: Some(largest),
        largest_sigma1: Some(lambda - sup),
        note: format!("sup of 2G(t)/t^2 on |t| <= {delta} is {sup:.6e}"),
    }
}

fn threshold_record(id: &str, statement: &str, beta: f64, probe: &BetaProbe, bound: f64, note: String) -> ConditionRecord {
    let judge = |b: f64| if b > bound { Verdict::Satisfied } else { Verdict::Violated };
    ConditionRecord {
        id: id.into(),
        statement: statement.into(),
        verdict: judge(beta),
        margin: beta - bound,
        worst_t: None,
        grid: None,
        tolerance: 0.0,
        bound: Some(bound),
        value: Some(beta),
        probed_verdict: Some(judge(probe.min)),
        largest_delta: None,
        largest_sigma1: None,
        note: if note.is_empty() {
            "evaluated with the declared beta; probed verdict uses the window minimum".into()
        } else {
            note
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;
    use crate::nonlinearity::Family;
    use std::f64::consts::PI;

    fn disk_problem() -> ProblemSpec {
        ProblemSpec::new(4.0 * PI, 0.0, DomainSpec::disk(1.0)).unwrap()
    }

    #[test]
    fn bound_branches() {
        let kappa = 2.0;
        let alpha = 4.0 * PI;
        assert!((sign_changing_bound(kappa, alpha, 0.0) - kappa / alpha).abs() < 1e-15);
        assert!((sign_changing_bound(kappa, alpha, 3.0) - 4.0 / (4.0 * PI) * 1.5f64.exp()).abs() < 1e-14);
        // continuity at sigma0 = kappa log 2: both branches give 4 kappa / alpha
        let s = kappa * LN_2;
        assert!((sign_changing_bound(kappa, alpha, s) - 4.0 * kappa / alpha).abs() < 1e-12);
        assert!((sign_changing_bound(kappa, alpha, s * (1.0 + 1e-12)) - 4.0 * kappa / alpha).abs() < 1e-9);
    }

    #[test]
    fn missing_inputs_are_reported() {
        let p = disk_problem();
        let spec = NonlinearitySpec::rational(1.0, p.alpha).unwrap();
        let c = HypothesisConstants::default();
        assert!(matches!(check_hypotheses(&p, &spec, Theorem::MountainPass, &c, &[]), Err(Error::MissingInput(_))));
        assert!(matches!(check_hypotheses(&p, &spec, Theorem::SignChanging, &c, &[5.78]), Err(Error::MissingInput(_))));
        let c = HypothesisConstants { sigma0: Some(0.5), k: Some(1), c_user: Some(1.0), ..c };
        assert!(check_hypotheses(&p, &spec, Theorem::Linking, &c, &[5.78, 14.7]).is_err());
        let c = HypothesisConstants { sigma1: -1.0, ..HypothesisConstants::default() };
        assert!(check_hypotheses(&p, &spec, Theorem::MountainPass, &c, &[5.78]).is_err());
    }

    #[test]
    fn user_table_global_checks_are_indeterminate() {
        let p = disk_problem();
        let pts: Vec<[f64; 2]> = (0..=50).map(|i| i as f64 * 0.1).map(|t| [t, t / (1.0 + t * t)]).collect();
        let spec = NonlinearitySpec::new(Family::UserTable { points: Some(pts), path: None }, p.alpha).unwrap();
        let c = HypothesisConstants { sigma1: 4.0, ..Default::default() };
        let r = check_hypotheses(&p, &spec, Theorem::MountainPass, &c, &[5.78]).unwrap();
        assert_eq!(r.record("1.6").unwrap().verdict, Verdict::Indeterminate);
        assert_eq!(r.verdict, Verdict::Indeterminate);
    }

    #[test]
    fn supercritical_problem_is_never_satisfied() {
        let p = ProblemSpec::new(5.0 * PI, 0.0, DomainSpec::disk(1.0)).unwrap();
        let spec = NonlinearitySpec::rational(1.0, p.alpha).unwrap();
        let c = HypothesisConstants { sigma1: 4.0, ..Default::default() };
        let r = check_hypotheses(&p, &spec, Theorem::MountainPass, &c, &[5.78]).unwrap();
        assert!(!r.critical);
        assert_eq!(r.verdict, Verdict::Violated);
    }
}
