//! Configuration-driven pipelines: mesh, eigenpairs, hypothesis checks,
//! geometry, solve, and the resulting report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::DiscreteField;
use crate::mesh::{build_mesh, refine, GeometryConstants, Mesh};
use crate::minimax::{
    linking_descent, linking_sup, mountain_pass_endpoint, mountain_pass_solve, ridge_scan, select_j0, sphere_infimum,
    Endpoint, LinkingDescentOptions, LinkingSup, LinkingSupOptions, MinimaxError, MinimaxResult, PathOptions,
    RidgeOptions, RidgeProfile, SphereInfimum, SphereOptions,
};
use crate::moser::{moser_grad_norm, moser_interpolant};
use crate::nonlinearity::hypotheses::{linking_bound, sign_changing_bound};
use crate::nonlinearity::{
    check_hypotheses, Family, HypothesisConstants, HypothesisReport, NonlinearitySpec, ProblemSpec, Theorem, Verdict,
};
use crate::quadrature::QuadratureRule;
use crate::spectral::{assemble_with_rule, solve_eigs_with, split, AssembledForms, EigenOptions, SingularEigenpair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Target edge length of the coarsest mesh.
    pub target_h: f64,
    /// Number of mesh levels; the run uses the finest.
    pub levels: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { target_h: 0.125, levels: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Residual dual-norm tolerance.
    pub tol: f64,
    pub max_iterations: usize,
    pub path_points: usize,
    /// Sphere radius for the positivity check and start of the radius doubling.
    pub rho: f64,
    /// Largest Moser index scanned.
    pub j_max: u32,
    /// Fixed Moser index; the smallest certified index is used when absent.
    pub j: Option<u32>,
    pub sphere_samples: usize,
    pub restarts: usize,
    pub boundary_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iterations: 5000,
            path_points: 32,
            rho: 0.05,
            j_max: 64,
            j: None,
            sphere_samples: 500,
            restarts: 8,
            boundary_samples: 200,
        }
    }
}

fn default_seed() -> u64 {
    0x5eed
}

/// A single JSON experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub nonlinearity: Family,
    pub theorem: Theorem,
    #[serde(default)]
    pub hypotheses: HypothesisConstants,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quadrature: QuadratureRule,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Parses and validates a config. Relative table paths resolve against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut config: ExperimentConfig = serde_json::from_str(text)?;
        if let (Some(base), Family::UserTable { path: Some(p), .. }) = (base, &mut config.nonlinearity) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidParameter(m));
        if !(self.mesh.target_h.is_finite() && self.mesh.target_h > 0.0) {
            return invalid(format!("mesh.target_h must be positive, got {}", self.mesh.target_h));
        }
        if self.mesh.levels == 0 {
            return invalid("mesh.levels must be at least 1".into());
        }
        let s = &self.solver;
        if !(s.tol.is_finite() && s.tol > 0.0) || !(s.rho.is_finite() && s.rho > 0.0) {
            return invalid("solver.tol and solver.rho must be positive".into());
        }
        if s.j_max < 2 || s.j.is_some_and(|j| j < 2) {
            return invalid("Moser indices start at 2".into());
        }
        if s.path_points < 16 {
            return invalid(format!("solver.path_points must be at least 16, got {}", s.path_points));
        }
        if s.sphere_samples == 0 || s.restarts == 0 || s.boundary_samples == 0 || s.max_iterations == 0 {
            return invalid("sample, restart and iteration counts must be positive".into());
        }
        if self.theorem == Theorem::Linking && self.hypotheses.k.is_none_or(|k| k < 2) {
            return invalid("theorem 1.3 needs hypotheses.k >= 2".into());
        }
        self.quadrature.validate()?;
        self.spec().map(|_| ())
    }

    pub fn spec(&self) -> Result<NonlinearitySpec> {
        NonlinearitySpec::new(self.nonlinearity.clone(), self.problem.alpha)
    }

    /// Mesh at refinement `level` (0 is the coarsest).
    pub fn mesh_at(&self, level: usize) -> Result<Mesh> {
        let mut mesh = build_mesh(&self.problem.domain, self.mesh.target_h)?;
        for _ in 0..level {
            mesh = refine(&mesh);
        }
        Ok(mesh)
    }

    pub fn assemble_at(&self, level: usize) -> Result<AssembledForms> {
        assemble_with_rule(Arc::new(self.mesh_at(level)?), self.problem.gamma, self.quadrature)
    }

    /// Eigenpairs needed by the hypothesis checks and the spectral split.
    pub fn eigen_count(&self) -> usize {
        match self.theorem {
            Theorem::Linking => self.hypotheses.k.unwrap_or(2),
            _ => 2,
        }
    }

    fn eigen_options(&self) -> EigenOptions {
        EigenOptions { seed: self.seed, ..EigenOptions::default() }
    }

    pub fn eigenpairs(&self, forms: &AssembledForms) -> Result<Vec<SingularEigenpair>> {
        solve_eigs_with(forms, self.eigen_count().min(forms.num_dofs()), &self.eigen_options())
    }

    pub fn sphere_options(&self) -> SphereOptions {
        SphereOptions { samples: self.solver.sphere_samples, seed: self.seed }
    }

    pub fn path_options(&self) -> PathOptions {
        PathOptions {
            path_points: self.solver.path_points,
            tol: self.solver.tol,
            max_iterations: self.solver.max_iterations,
            ..PathOptions::default()
        }
    }

    pub fn linking_sup_options(&self) -> LinkingSupOptions {
        LinkingSupOptions {
            restarts: self.solver.restarts,
            seed: self.seed,
            boundary_samples: self.solver.boundary_samples,
            rho: self.solver.rho,
            ..LinkingSupOptions::default()
        }
    }

    pub fn descent_options(&self) -> LinkingDescentOptions {
        LinkingDescentOptions {
            tol: self.solver.tol,
            max_iterations: self.solver.max_iterations,
            ..LinkingDescentOptions::default()
        }
    }

    pub fn ridge_js(&self) -> Vec<u32> {
        (2..=self.solver.j_max).collect()
    }
}

/// Overall result of a run, mapped onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Certified,
    HypothesesUnsatisfied,
    NotConverged,
    ThresholdNotCertified,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Certified => 0,
            Outcome::HypothesesUnsatisfied => 2,
            Outcome::NotConverged => 3,
            Outcome::ThresholdNotCertified => 4,
        }
    }

    /// Outcome implied by a solver-stage error.
    pub fn of_error(e: &Error) -> Outcome {
        match e {
            Error::Minimax(
                MinimaxError::BracketNotFound { .. }
                | MinimaxError::EndpointNotNegative { .. }
                | MinimaxError::NotCertified(_)
                | MinimaxError::Unbounded { .. },
            ) => Outcome::ThresholdNotCertified,
            _ => Outcome::NotConverged,
        }
    }
}

/// A failure inside a pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
    pub outcome: Outcome,
}

impl StageFailure {
    fn geometry(stage: &str, message: String) -> Self {
        StageFailure { stage: stage.into(), message, outcome: Outcome::ThresholdNotCertified }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub level: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub dofs: usize,
    pub max_edge: f64,
}

impl MeshSummary {
    fn of(mesh: &Mesh, level: usize) -> Self {
        MeshSummary {
            level,
            vertices: mesh.num_vertices(),
            triangles: mesh.num_triangles(),
            dofs: mesh.num_free(),
            max_edge: mesh.max_edge_length(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub index: usize,
    pub lambda: f64,
    pub residual: f64,
}

/// Every constant the run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConstants {
    pub alpha: f64,
    pub gamma: f64,
    pub d: f64,
    pub kappa: f64,
    pub critical: bool,
    pub threshold: f64,
    pub t0: f64,
    pub lambdas: Vec<f64>,
    /// `kappa / alpha`.
    pub mountain_pass_beta_bound: f64,
    pub sign_changing_beta_bound: Option<f64>,
    pub linking_beta_bound: Option<f64>,
    pub exp_limit: f64,
}

/// Ridge profile without its samples (those go to CSV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeSummary {
    pub j: u32,
    pub t_star: f64,
    pub h_star: f64,
    pub below_threshold: bool,
    pub tail_decreasing: bool,
}

impl From<&RidgeProfile> for RidgeSummary {
    fn from(p: &RidgeProfile) -> Self {
        RidgeSummary {
            j: p.j,
            t_star: p.t_star,
            h_star: p.h_star,
            below_threshold: p.below_threshold,
            tail_decreasing: p.tail_decreasing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub constants: ReportConstants,
    pub mesh: MeshSummary,
    pub eigenvalues: Vec<EigenRow>,
    pub hypotheses: HypothesisReport,
    pub sphere: Option<SphereInfimum>,
    pub ridge: Vec<RidgeSummary>,
    pub j0: Option<u32>,
    pub endpoint: Option<Endpoint>,
    pub linking: Option<LinkingSup>,
    pub solution: Option<MinimaxResult>,
    pub failure: Option<StageFailure>,
    pub outcome: Outcome,
    /// Wall-clock seconds per stage; excluded from [`RunReport::numerics`].
    pub timings: BTreeMap<String, f64>,
    #[serde(skip)]
    pub profiles: Vec<RidgeProfile>,
    #[serde(skip)]
    pub field: Option<DiscreteField>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The report without timings, for reproducibility comparisons.
    pub fn numerics(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Writes `report.json`, CSV sidecars and the solution field into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        let mut eig = String::from("index,lambda,residual\n");
        for r in &self.eigenvalues {
            let _ = writeln!(eig, "{},{:e},{:e}", r.index, r.lambda, r.residual);
        }
        std::fs::write(dir.join("eigenvalues.csv"), eig)?;
        let mut ridge = String::from("j,t_star,h_star,below_threshold,tail_decreasing\n");
        for r in &self.ridge {
            let _ = writeln!(ridge, "{},{:e},{:e},{},{}", r.j, r.t_star, r.h_star, r.below_threshold, r.tail_decreasing);
        }
        std::fs::write(dir.join("ridge.csv"), ridge)?;
        for p in &self.profiles {
            std::fs::write(dir.join(format!("ridge_j{}.csv", p.j)), p.to_csv())?;
        }
        if let Some(u) = &self.field {
            u.write(dir.join("solution.txt"))?;
        }
        Ok(())
    }
}

/// An error tagged with the pipeline stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} stage: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

struct Clock(BTreeMap<String, f64>);

impl Clock {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.insert(stage.into(), start.elapsed().as_secs_f64());
        out
    }
}

pub fn report_constants(config: &ExperimentConfig, lambdas: &[f64]) -> Result<ReportConstants> {
    let p = &config.problem;
    let geo = GeometryConstants::new(p.inradius(), p.gamma)?;
    let s0 = config.hypotheses.sigma0.filter(|s| *s > 0.0);
    Ok(ReportConstants {
        alpha: p.alpha,
        gamma: p.gamma,
        d: geo.d,
        kappa: geo.kappa,
        critical: p.critical,
        threshold: p.threshold(),
        t0: p.t0(),
        lambdas: lambdas.to_vec(),
        mountain_pass_beta_bound: geo.kappa / p.alpha,
        sign_changing_beta_bound: s0.map(|s| sign_changing_bound(geo.kappa, p.alpha, s)),
        linking_beta_bound: s0.zip(config.hypotheses.c_user).map(|(s, c)| linking_bound(geo.kappa, p.alpha, s, c)),
        exp_limit: crate::nonlinearity::EXP_LIMIT,
    })
}

/// Geometry and solve results of one run.
#[derive(Default)]
struct Geometry {
    sphere: Option<SphereInfimum>,
    profiles: Vec<RidgeProfile>,
    j0: Option<u32>,
    endpoint: Option<Endpoint>,
    linking: Option<LinkingSup>,
    solution: Option<MinimaxResult>,
}

fn geometry_and_solve(
    config: &ExperimentConfig,
    forms: &AssembledForms,
    pairs: &[SingularEigenpair],
    spec: &NonlinearitySpec,
    out: &mut Geometry,
    clock: &mut Clock,
) -> std::result::Result<(), StageFailure> {
    let fail = |stage: &'static str| move |e: Error| StageFailure { stage: stage.into(), message: e.to_string(), outcome: Outcome::of_error(&e) };
    let problem = &config.problem;
    let s = &config.solver;
    out.profiles = clock.time("ridge", || ridge_scan(&config.ridge_js(), problem, spec, &RidgeOptions::default())).map_err(fail("ridge"))?;
    out.j0 = select_j0(&out.profiles);
    let j = s.j.or(out.j0).ok_or_else(|| {
        StageFailure::geometry("ridge", format!("no j <= {} has a ridge maximum below the threshold {}", s.j_max, problem.threshold()))
    })?;
    match config.theorem {
        Theorem::MountainPass | Theorem::SignChanging => {
            let sphere = clock
                .time("sphere", || sphere_infimum(forms, spec, s.rho, &config.sphere_options(), None, &[]))
                .map_err(fail("sphere"))?;
            let positive = sphere.min > 0.0;
            out.sphere = Some(sphere);
            if !positive {
                return Err(StageFailure::geometry("sphere", "sampled sphere minimum is not positive".into()));
            }
            let omega = moser_interpolant(forms.space(), j, problem.inradius()).map_err(fail("endpoint"))?;
            let end = mountain_pass_endpoint(&omega, forms, spec, s.rho).map_err(fail("endpoint"))?;
            let field = end.field.clone();
            out.endpoint = Some(end);
            out.solution = Some(
                clock
                    .time("solve", || mountain_pass_solve(&field, forms, problem, spec, &config.path_options()))
                    .map_err(fail("solve"))?,
            );
        }
        Theorem::Linking => {
            let k = config.hypotheses.k.unwrap_or(2);
            let sp = split(forms, pairs, k).map_err(fail("split"))?;
            let sphere = clock
                .time("sphere", || sphere_infimum(forms, spec, s.rho, &config.sphere_options(), Some(&sp), &[]))
                .map_err(fail("sphere"))?;
            let positive = sphere.min > 0.0;
            out.sphere = Some(sphere);
            if !positive {
                return Err(StageFailure::geometry("sphere", "sampled W-sphere minimum is not positive".into()));
            }
            let sup = clock
                .time("linking", || linking_sup(&sp, j, forms, problem, spec, &config.linking_sup_options()))
                .map_err(fail("linking"))?;
            let start = sup.argmax.clone();
            out.linking = Some(sup);
            out.solution = Some(
                clock
                    .time("solve", || linking_descent(&start, &sp, forms, problem, spec, &config.descent_options()))
                    .map_err(fail("solve"))?,
            );
        }
    }
    Ok(())
}

fn outcome_of(hyp: &HypothesisReport, g: &Geometry, failure: &Option<StageFailure>, config: &ExperimentConfig) -> Outcome {
    if hyp.verdict == Verdict::Violated {
        return Outcome::HypothesesUnsatisfied;
    }
    if let Some(f) = failure {
        return f.outcome;
    }
    let below = match config.theorem {
        Theorem::Linking => g.linking.as_ref().is_some_and(|l| l.below_threshold && l.boundary.certified),
        _ => g.profiles.iter().any(|p| Some(p.j) == g.j0.or(config.solver.j) && p.below_threshold),
    };
    match &g.solution {
        Some(sol) if sol.below_threshold && below => Outcome::Certified,
        Some(_) => Outcome::ThresholdNotCertified,
        None => Outcome::NotConverged,
    }
}

/// Runs the pipeline for the targeted theorem. Solver-stage failures are
/// recorded in the report; setup failures are returned with their stage.
pub fn run_experiment(config: &ExperimentConfig) -> std::result::Result<RunReport, StageError> {
    config.validate().stage("config")?;
    let mut clock = Clock(BTreeMap::new());
    let spec = config.spec().stage("config")?;
    let level = config.mesh.levels - 1;
    let mesh = clock.time("mesh", || config.mesh_at(level)).stage("mesh")?;
    let mesh_summary = MeshSummary::of(&mesh, level);
    let forms = clock
        .time("assemble", || assemble_with_rule(Arc::new(mesh), config.problem.gamma, config.quadrature))
        .stage("assemble")?;
    let pairs = clock.time("eigs", || config.eigenpairs(&forms)).stage("eigs")?;
    let lambdas: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    let hyp = clock
        .time("check", || check_hypotheses(&config.problem, &spec, config.theorem, &config.hypotheses, &lambdas))
        .stage("check")?;
    let constants = report_constants(config, &lambdas).stage("check")?;
    let mut g = Geometry::default();
    let failure = geometry_and_solve(config, &forms, &pairs, &spec, &mut g, &mut clock).err();
    let outcome = outcome_of(&hyp, &g, &failure, config);
    let report = RunReport {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        constants,
        mesh: mesh_summary,
        eigenvalues: pairs.iter().map(|p| EigenRow { index: p.index, lambda: p.lambda, residual: p.residual }).collect(),
        hypotheses: hyp,
        sphere: g.sphere,
        ridge: g.profiles.iter().map(RidgeSummary::from).collect(),
        j0: g.j0,
        endpoint: g.endpoint,
        linking: g.linking,
        field: g.solution.as_ref().map(|s| s.field.clone()),
        solution: g.solution,
        failure,
        outcome,
        timings: clock.0,
        profiles: g.profiles,
    };
    if let Some(dir) = &config.output_dir {
        report.write(dir).stage("output")?;
    }
    Ok(report)
}

/// One mesh level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub dofs: usize,
    pub max_edge: f64,
    pub lambda1: f64,
    /// Observed order from this and the two coarser levels.
    pub lambda1_rate: Option<f64>,
    /// `| ||omega_j||_h - 1 |` for the interpolant.
    pub moser_error: f64,
    pub moser_rate: Option<f64>,
    /// Level of the computed solution, when the solve succeeds.
    pub level_c: Option<f64>,
    pub level_c_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub moser_j: u32,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut s = String::from("level,dofs,max_edge,lambda1,lambda1_rate,moser_error,moser_rate,level_c,level_c_rate\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{},{:e},{},{},{}",
                r.level,
                r.dofs,
                r.max_edge,
                r.lambda1,
                opt(r.lambda1_rate),
                r.moser_error,
                opt(r.moser_rate),
                opt(r.level_c),
                opt(r.level_c_rate)
            );
        }
        s
    }
}

/// `log2((a - b) / (b - c))` for three successive uniform refinements.
pub fn richardson_rate(a: f64, b: f64, c: f64) -> Option<f64> {
    let r = (a - b) / (b - c);
    (r.is_finite() && r > 0.0).then(|| r.log2())
}

/// `log2(e_coarse / e_fine)` for one uniform refinement.
pub fn error_rate(coarse: f64, fine: f64) -> Option<f64> {
    let r = coarse / fine;
    (r.is_finite() && r > 0.0).then(|| r.log2())
}

/// Per-level `lambda_1`, Moser interpolation error and solution level, with
/// observed convergence rates. Levels refine the configured base mesh.
pub fn convergence_table(config: &ExperimentConfig, levels: usize, solve: bool) -> std::result::Result<ConvergenceTable, StageError> {
    if levels < 2 {
        return Err(StageError { stage: "config", source: Error::InvalidParameter(format!("need at least 2 levels, got {levels}")) });
    }
    config.validate().stage("config")?;
    let spec = config.spec().stage("config")?;
    let j = match config.solver.j {
        Some(j) => j,
        None if solve => {
            let profiles = ridge_scan(&config.ridge_js(), &config.problem, &spec, &RidgeOptions::default()).stage("ridge")?;
            select_j0(&profiles).unwrap_or(2)
        }
        None => 2,
    };
    let d = config.problem.inradius();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let mesh = config.mesh_at(level).stage("mesh")?;
        let moser_error = (moser_grad_norm(j, d, &mesh).stage("moser")? - 1.0).abs();
        let (dofs, max_edge) = (mesh.num_free(), mesh.max_edge_length());
        let forms = assemble_with_rule(Arc::new(mesh), config.problem.gamma, config.quadrature).stage("assemble")?;
        let pairs = config.eigenpairs(&forms).stage("eigs")?;
        let level_c = if solve { solve_level(config, &forms, &pairs, &spec, j).ok() } else { None };
        let lambda1 = pairs[0].lambda;
        let n = rows.len();
        let lambda1_rate = (n >= 2).then(|| richardson_rate(rows[n - 2].lambda1, rows[n - 1].lambda1, lambda1)).flatten();
        let moser_rate = (n >= 1).then(|| error_rate(rows[n - 1].moser_error, moser_error)).flatten();
        let level_c_rate = match (n >= 2, level_c) {
            (true, Some(c)) => rows[n - 2].level_c.zip(rows[n - 1].level_c).and_then(|(a, b)| richardson_rate(a, b, c)),
            _ => None,
        };
        rows.push(ConvergenceRow { level, dofs, max_edge, lambda1, lambda1_rate, moser_error, moser_rate, level_c, level_c_rate });
    }
    Ok(ConvergenceTable { moser_j: j, rows })
}

fn solve_level(
    config: &ExperimentConfig,
    forms: &AssembledForms,
    pairs: &[SingularEigenpair],
    spec: &NonlinearitySpec,
    j: u32,
) -> Result<f64> {
    let problem = &config.problem;
    match config.theorem {
        Theorem::Linking => {
            let sp = split(forms, pairs, config.hypotheses.k.unwrap_or(2))?;
            let sup = linking_sup(&sp, j, forms, problem, spec, &config.linking_sup_options())?;
            Ok(linking_descent(&sup.argmax, &sp, forms, problem, spec, &config.descent_options())?.level)
        }
        _ => {
            let omega = moser_interpolant(forms.space(), j, problem.inradius())?;
            let end = mountain_pass_endpoint(&omega, forms, spec, config.solver.rho)?;
            Ok(mountain_pass_solve(&end.field, forms, problem, spec, &config.path_options())?.level)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"{
        "problem": {"alpha": 12.566370614359172, "gamma": 0.0, "domain": {"shape": "disk", "radius": 1.0}},
        "nonlinearity": {"family": "rational", "beta0": 1.0},
        "theorem": "1.1",
        "hypotheses": {"sigma1": 4.0},
        "mesh": {"target_h": 0.125, "levels": 1},
        "solver": {"j_max": 8, "sphere_samples": 50}
    }"#;

    #[test]
    fn gamma_two_is_rejected() {
        let text = CANONICAL.replace("\"gamma\": 0.0", "\"gamma\": 2.0");
        assert!(ExperimentConfig::from_json(&text, None).is_err());
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = CANONICAL.replace("\"theorem\"", "\"bogus\": 1, \"theorem\"");
        assert!(ExperimentConfig::from_json(&text, None).is_err());
    }

    #[test]
    fn linking_without_k_is_rejected() {
        let text = CANONICAL.replace("\"1.1\"", "\"1.3\"");
        assert!(ExperimentConfig::from_json(&text, None).is_err());
    }

    #[test]
    fn canonical_run_is_certified() {
        let config = ExperimentConfig::from_json(CANONICAL, None).unwrap();
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.outcome, Outcome::Certified, "{:?}", report.failure);
        assert_eq!(report.j0, Some(2));
        assert_eq!(report.constants.threshold, 0.5);
        let sol = report.solution.as_ref().unwrap();
        assert!(sol.residual_norm < 1e-6 && sol.level > 0.0 && sol.level < 0.5);
    }

    #[test]
    fn rates_of_exact_sequences() {
        assert!((richardson_rate(1.0 + 1.0, 1.0 + 0.25, 1.0 + 0.0625).unwrap() - 2.0).abs() < 1e-12);
        assert!((error_rate(0.4, 0.1).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(error_rate(0.0, 0.0), None);
    }
}
