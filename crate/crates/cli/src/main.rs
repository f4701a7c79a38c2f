//! Command line front end: each subcommand runs one pipeline stage from a JSON config.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tm_core::energy::energy;
use tm_core::experiment::{convergence_table, run_experiment, ExperimentConfig, Outcome, RidgeSummary};
use tm_core::fem::DiscreteField;
use tm_core::mesh::{build_mesh, refine, DomainSpec, Mesh};
use tm_core::minimax::{
    linking_descent, linking_sup, mountain_pass_endpoint, mountain_pass_solve, ridge_scan, select_j0, RidgeOptions,
};
use tm_core::moser::{criticality_probe, moser_grad_norm, moser_integral_first, moser_integral_second, moser_radial_grad_norm_sq};
use tm_core::nonlinearity::{check_hypotheses, Verdict};
use tm_core::quadrature::QuadratureRule;
use tm_core::spectral::{assemble_with_rule, solve_eigs_with, split, EigenOptions};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "TMSOLVE_THREADS";

#[derive(Parser)]
#[command(version, about = "Finite element experiments for singular critical-growth problems")]
struct Cli {
    /// Random seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Element quadrature order; overrides the config.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Radial and angular nodes on elements touching the origin; overrides the config.
    #[arg(long, global = true)]
    polar_nodes: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh level (0 is the coarsest); defaults to the finest configured level.
    #[arg(long)]
    level: Option<usize>,
    /// Output directory or file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the mesh from a config or from --shape/--radius/--h and print its summary.
    Mesh {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum, conflicts_with = "config")]
        shape: Option<Shape>,
        /// Disk radius, or half the side of the square.
        #[arg(long, default_value_t = 1.0, conflicts_with = "config")]
        radius: f64,
        #[arg(long, conflicts_with = "config")]
        h: Option<f64>,
    },
    /// Smallest eigenvalues of the singular eigenproblem, per refinement level.
    Eigs {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Mesh file, instead of a config.
        #[arg(long, conflicts_with = "config")]
        mesh: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        gamma: Option<f64>,
        /// Uniform refinements of the base mesh to report.
        #[arg(long, default_value_t = 1)]
        levels: usize,
        /// Directory for the eigenfields of the finest level.
        #[arg(long)]
        fields: Option<PathBuf>,
    },
    /// Closed-form Moser integrals, the gradient norm check and the exponential probe as CSV.
    Moser {
        #[arg(long, default_value_t = 2)]
        j: u32,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Exponent for the probe; defaults to the critical value 4 pi (1 - gamma/2).
        #[arg(long)]
        alpha: Option<f64>,
        /// Index range `a:b` (powers of two) for the probe.
        #[arg(long, default_value = "2:4096")]
        probe: String,
        /// Mesh for the interpolant norm.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the hypotheses of a theorem, from a config or from flags.
    Check {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        flags: CheckFlags,
    },
    /// Ridge profiles over a range of Moser indices.
    Ridge {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Index range `a:b`.
        #[arg(long)]
        j: Option<String>,
    },
    /// Mountain-pass solve.
    SolveMp {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Moser index; overrides the config and the ridge selection.
        #[arg(long)]
        j: Option<u32>,
    },
    /// Supremum of the energy over the linking cone.
    LinkSup {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Split index: V spans the first k - 1 eigenfunctions; overrides the config.
        #[arg(long)]
        k: Option<usize>,
        /// Moser index; overrides the config and the ridge selection.
        #[arg(long)]
        j: Option<u32>,
    },
    /// Linking descent from the cone maximizer.
    LinkSolve {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Split index: V spans the first k - 1 eigenfunctions; overrides the config.
        #[arg(long)]
        k: Option<usize>,
        /// Moser index; overrides the config and the ridge selection.
        #[arg(long)]
        j: Option<u32>,
    },
    /// Full pipeline with report.
    Run(ConfigArgs),
    /// Convergence table over mesh levels.
    Table {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of mesh levels, each a uniform refinement of the previous.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Skip the nonlinear solve on each level.
        #[arg(long)]
        no_solve: bool,
    },
    /// Energy of a field stored as a plain-text coefficient vector.
    Energy {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        field: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Disk,
    Square,
}

/// Problem description for `check` without a config file.
#[derive(Args)]
struct CheckFlags {
    /// 1.1, 1.2 or 1.3.
    #[arg(long, conflicts_with = "config")]
    theorem: Option<String>,
    /// rational, sign_perturbed or shifted_quadratic.
    #[arg(long, conflicts_with = "config")]
    family: Option<String>,
    #[arg(long, conflicts_with = "config")]
    beta0: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    nu: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    a: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    k: Option<usize>,
    #[arg(long, conflicts_with = "config")]
    c_user: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.0, conflicts_with = "config")]
    gamma: f64,
    #[arg(long, conflicts_with = "config")]
    sigma0: Option<f64>,
    #[arg(long, default_value_t = 1.0, conflicts_with = "config")]
    sigma1: f64,
    #[arg(long, default_value_t = 0.1, conflicts_with = "config")]
    delta: f64,
    /// Radius of the disk domain.
    #[arg(long, default_value_t = 1.0, conflicts_with = "config")]
    radius: f64,
    /// Mesh size for the eigenvalues.
    #[arg(long, default_value_t = 0.125, conflicts_with = "config")]
    h: f64,
}

impl CheckFlags {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let need = |name: &str, v: Option<f64>| v.with_context(|| format!("--{name} is required without --config"));
        let theorem = self.theorem.as_deref().context("--theorem is required without --config")?;
        let family = self.family.as_deref().context("--family is required without --config")?;
        let beta0 = need("beta0", self.beta0)?;
        let nonlinearity = match family {
            "rational" => serde_json::json!({"family": family, "beta0": beta0}),
            "sign_perturbed" => serde_json::json!({"family": family, "beta0": beta0, "nu": need("nu", self.nu)?}),
            "shifted_quadratic" => serde_json::json!({"family": family, "beta0": beta0, "a": need("a", self.a)?}),
            other => bail!("unknown family '{other}'; tabulated h needs a config file"),
        };
        let doc = serde_json::json!({
            "problem": {"alpha": need("alpha", self.alpha)?, "gamma": self.gamma, "domain": {"shape": "disk", "radius": self.radius}},
            "nonlinearity": nonlinearity,
            "theorem": theorem,
            "hypotheses": {"sigma0": self.sigma0, "sigma1": self.sigma1, "delta": self.delta, "k": self.k, "c_user": self.c_user},
            "mesh": {"target_h": self.h, "levels": 1},
        });
        Ok(ExperimentConfig::from_json(&doc.to_string(), None)?)
    }
}

fn rule(cli: &Cli, mut rule: QuadratureRule) -> QuadratureRule {
    if let Some(order) = cli.quad_order {
        rule.order = order;
    }
    if let Some(n) = cli.polar_nodes {
        rule.radial_nodes = n;
        rule.angular_nodes = n;
    }
    rule
}

fn overrides(cli: &Cli, mut config: ExperimentConfig) -> anyhow::Result<ExperimentConfig> {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.quadrature = rule(cli, config.quadrature);
    config.validate()?;
    Ok(config)
}

fn load(cli: &Cli, args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    let path = args.config.as_ref().context("--config is required")?;
    let config = ExperimentConfig::read(path).with_context(|| format!("reading config {}", path.display()))?;
    overrides(cli, config)
}

fn level(config: &ExperimentConfig, args: &ConfigArgs) -> usize {
    args.level.unwrap_or(config.mesh.levels - 1)
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print<T: Serialize>(value: &T) -> anyhow::Result<()> {
    emit(&format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn parse_range(s: &str) -> anyhow::Result<(u32, u32)> {
    let (a, b) = s.split_once(':').context("range must look like a:b")?;
    let (a, b) = (a.trim().parse()?, b.trim().parse()?);
    if a < 2 || b < a {
        bail!("invalid index range {s}");
    }
    Ok((a, b))
}

/// Exit code for a solver error: geometry or convergence failures map onto the
/// documented codes, anything else is a plain error.
fn solver_failure(e: tm_core::Error) -> anyhow::Result<ExitCode> {
    match &e {
        tm_core::Error::Minimax(_) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(Outcome::of_error(&e).exit_code() as u8))
        }
        _ => Err(e.into()),
    }
}

fn select_j(config: &ExperimentConfig, j: Option<u32>) -> anyhow::Result<Option<u32>> {
    if let Some(j) = j.or(config.solver.j) {
        return Ok(Some(j));
    }
    let spec = config.spec()?;
    let profiles = ridge_scan(&config.ridge_js(), &config.problem, &spec, &RidgeOptions::default())?;
    Ok(select_j0(&profiles))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Mesh { cfg, shape, radius, h } => {
            let (mesh, lvl) = match (&cfg.config, h) {
                (Some(_), _) => {
                    let config = load(&cli, cfg)?;
                    let lvl = level(&config, cfg);
                    (config.mesh_at(lvl)?, lvl)
                }
                (None, Some(h)) => {
                    let domain = match shape.unwrap_or(Shape::Disk) {
                        Shape::Disk => DomainSpec::disk(*radius),
                        Shape::Square => DomainSpec::square(*radius),
                    };
                    let mut mesh = build_mesh(&domain, *h)?;
                    for _ in 0..cfg.level.unwrap_or(0) {
                        mesh = refine(&mesh);
                    }
                    (mesh, cfg.level.unwrap_or(0))
                }
                (None, None) => bail!("either --config or --h is required"),
            };
            if let Some(out) = &cfg.out {
                mesh.write(out)?;
            }
            print(&serde_json::json!({
                "level": lvl,
                "vertices": mesh.num_vertices(),
                "triangles": mesh.num_triangles(),
                "dofs": mesh.num_free(),
                "max_edge": mesh.max_edge_length(),
                "inradius": mesh.inradius(),
            }))?;
        }
        Command::Eigs { cfg, count, mesh, gamma, levels, fields } => {
            let (base, gamma, quad, seed) = match (&cfg.config, mesh) {
                (Some(_), _) => {
                    let config = load(&cli, cfg)?;
                    (config.mesh_at(level(&config, cfg))?, config.problem.gamma, config.quadrature, config.seed)
                }
                (None, Some(path)) => (
                    Mesh::read(path)?,
                    gamma.unwrap_or(0.0),
                    rule(&cli, QuadratureRule::default()),
                    cli.seed.unwrap_or(EigenOptions::default().seed),
                ),
                (None, None) => bail!("either --config or --mesh is required"),
            };
            if *levels == 0 {
                bail!("--levels must be at least 1");
            }
            let opts = EigenOptions { seed, ..EigenOptions::default() };
            let mut mesh = base;
            let mut rows = Vec::new();
            let mut lambdas: Vec<Vec<f64>> = Vec::new();
            for l in 0..*levels {
                if l > 0 {
                    mesh = refine(&mesh);
                }
                let forms = assemble_with_rule(std::sync::Arc::new(mesh.clone()), gamma, quad)?;
                let pairs = solve_eigs_with(&forms, *count, &opts)?;
                lambdas.push(pairs.iter().map(|p| p.lambda).collect());
                rows.push(serde_json::json!({
                    "level": l,
                    "dofs": forms.num_dofs(),
                    "max_edge": mesh.max_edge_length(),
                    "eigenvalues": pairs
                        .iter()
                        .map(|p| serde_json::json!({"index": p.index, "lambda": p.lambda, "residual": p.residual}))
                        .collect::<Vec<_>>(),
                }));
                if l + 1 == *levels {
                    if let Some(dir) = fields {
                        std::fs::create_dir_all(dir)?;
                        for p in &pairs {
                            p.field.write(dir.join(format!("eigenfield_{}.txt", p.index)))?;
                        }
                    }
                }
            }
            // observed order of each eigenvalue from the last three levels
            let rates: Vec<Option<f64>> = match lambdas.len() {
                n if n >= 3 => (0..lambdas[n - 1].len())
                    .map(|i| tm_core::experiment::richardson_rate(lambdas[n - 3][i], lambdas[n - 2][i], lambdas[n - 1][i]))
                    .collect(),
                _ => Vec::new(),
            };
            let report = serde_json::json!({"gamma": gamma, "levels": rows, "rates": rates});
            if let Some(out) = &cfg.out {
                std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
            }
            print(&report)?;
        }
        Command::Moser { j, gamma, d, alpha, probe, mesh, out } => {
            // the probe runs at the critical exponent unless --alpha is given
            let alpha = alpha.unwrap_or(4.0 * std::f64::consts::PI * (1.0 - gamma / 2.0));
            let (a, b) = parse_range(probe)?;
            let js: Vec<u32> = (0..32).map(|k| 1u32 << k).filter(|&j| j >= a && j <= b).collect();
            let p = criticality_probe(alpha, *gamma, *d, &js)?;
            let mut text = String::new();
            let mut line = |k: &str, v: String| text.push_str(&format!("# {k} {v}\n"));
            line("j", j.to_string());
            line("gamma", gamma.to_string());
            line("d", d.to_string());
            line("integral_first", format!("{:e}", moser_integral_first(*j, *d, *gamma)?));
            line("integral_second", format!("{:e}", moser_integral_second(*j, *d, *gamma)?));
            line("radial_grad_norm", format!("{:e}", moser_radial_grad_norm_sq(*j, *d)?.sqrt()));
            if let Some(path) = mesh {
                line("interpolant_grad_norm", format!("{:e}", moser_grad_norm(*j, *d, &Mesh::read(path)?)?));
            }
            line("alpha", alpha.to_string());
            line("critical", p.critical.to_string());
            text.push_str(&p.to_csv());
            if let Some(out) = out {
                std::fs::write(out, &text)?;
            }
            emit(&text)?;
        }
        Command::Check { cfg: args, flags } => {
            let config = match &args.config {
                Some(_) => load(&cli, args)?,
                None => overrides(&cli, flags.config()?)?,
            };
            let forms = config.assemble_at(level(&config, args))?;
            let lambdas: Vec<f64> = config.eigenpairs(&forms)?.iter().map(|p| p.lambda).collect();
            let report = check_hypotheses(&config.problem, &config.spec()?, config.theorem, &config.hypotheses, &lambdas)?;
            if let Some(out) = &args.out {
                write_json(out, "hypotheses.json", &report)?;
            }
            print(&report)?;
            if report.verdict == Verdict::Violated {
                return Ok(ExitCode::from(Outcome::HypothesesUnsatisfied.exit_code() as u8));
            }
        }
        Command::Ridge { cfg, j } => {
            let config = load(&cli, cfg)?;
            let js = match j {
                Some(r) => {
                    let (a, b) = parse_range(r)?;
                    (a..=b).collect()
                }
                None => config.ridge_js(),
            };
            let profiles = ridge_scan(&js, &config.problem, &config.spec()?, &RidgeOptions::default())?;
            if let Some(out) = &cfg.out {
                std::fs::create_dir_all(out)?;
                for p in &profiles {
                    std::fs::write(out.join(format!("ridge_j{}.csv", p.j)), p.to_csv())?;
                }
            }
            let j0 = select_j0(&profiles);
            let summary: Vec<RidgeSummary> = profiles.iter().map(RidgeSummary::from).collect();
            print(&serde_json::json!({"threshold": config.problem.threshold(), "j0": j0, "profiles": summary}))?;
            if j0.is_none() {
                return Ok(ExitCode::from(Outcome::ThresholdNotCertified.exit_code() as u8));
            }
        }
        Command::SolveMp { cfg, j } => {
            let config = load(&cli, cfg)?;
            let Some(j) = select_j(&config, *j)? else {
                eprintln!("error: no Moser index below the threshold");
                return Ok(ExitCode::from(Outcome::ThresholdNotCertified.exit_code() as u8));
            };
            let spec = config.spec()?;
            let forms = config.assemble_at(level(&config, cfg))?;
            let omega = tm_core::moser::moser_interpolant(forms.space(), j, config.problem.inradius())?;
            let end = match mountain_pass_endpoint(&omega, &forms, &spec, config.solver.rho) {
                Ok(e) => e,
                Err(e) => return solver_failure(e),
            };
            let res = match mountain_pass_solve(&end.field, &forms, &config.problem, &spec, &config.path_options()) {
                Ok(r) => r,
                Err(e) => return solver_failure(e),
            };
            if let Some(out) = &cfg.out {
                write_json(out, "solve_mp.json", &res)?;
                res.field.write(out.join("solution.txt"))?;
            }
            print(&serde_json::json!({"j": j, "endpoint": end, "result": res}))?;
            if !res.below_threshold {
                return Ok(ExitCode::from(Outcome::ThresholdNotCertified.exit_code() as u8));
            }
        }
        Command::LinkSup { cfg, k, j } | Command::LinkSolve { cfg, k, j } => {
            let solve = matches!(cli.command, Command::LinkSolve { .. });
            let mut config = load(&cli, cfg)?;
            if let Some(k) = k {
                config.hypotheses.k = Some(*k);
            }
            let k = config.hypotheses.k.unwrap_or(2);
            let Some(j) = select_j(&config, *j)? else {
                eprintln!("error: no Moser index below the threshold");
                return Ok(ExitCode::from(Outcome::ThresholdNotCertified.exit_code() as u8));
            };
            let spec = config.spec()?;
            let forms = config.assemble_at(level(&config, cfg))?;
            let opts = EigenOptions { seed: config.seed, ..EigenOptions::default() };
            let pairs = solve_eigs_with(&forms, k, &opts)?;
            let sp = split(&forms, &pairs, k)?;
            let sup = match linking_sup(&sp, j, &forms, &config.problem, &spec, &config.linking_sup_options()) {
                Ok(s) => s,
                Err(e) => return solver_failure(e),
            };
            if let Some(out) = &cfg.out {
                write_json(out, "link_sup.json", &sup)?;
            }
            if !solve {
                print(&sup)?;
                let ok = sup.below_threshold && sup.boundary.certified;
                return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(Outcome::ThresholdNotCertified.exit_code() as u8) });
            }
            let res = match linking_descent(&sup.argmax, &sp, &forms, &config.problem, &spec, &config.descent_options()) {
                Ok(r) => r,
                Err(e) => return solver_failure(e),
            };
            if let Some(out) = &cfg.out {
                write_json(out, "link_solve.json", &res)?;
                res.field.write(out.join("solution.txt"))?;
            }
            print(&serde_json::json!({"sup": sup, "result": res}))?;
            if !res.below_threshold {
                return Ok(ExitCode::from(Outcome::ThresholdNotCertified.exit_code() as u8));
            }
        }
        Command::Run(args) => {
            let mut config = load(&cli, args)?;
            if let Some(out) = &args.out {
                config.output_dir = Some(out.clone());
            }
            let report = run_experiment(&config)?;
            emit(&format!("{}\n", report.to_json()?))?;
            if let Some(f) = &report.failure {
                eprintln!("{} stage: {}", f.stage, f.message);
            }
            return Ok(ExitCode::from(report.outcome.exit_code() as u8));
        }
        Command::Table { cfg, levels, no_solve } => {
            let config = load(&cli, cfg)?;
            let table = convergence_table(&config, *levels, !no_solve)?;
            if let Some(out) = &cfg.out {
                std::fs::write(out, table.to_csv())?;
            }
            print(&table)?;
        }
        Command::Energy { cfg, field } => {
            let config = load(&cli, cfg)?;
            let forms = config.assemble_at(level(&config, cfg))?;
            let u = DiscreteField::read(field)?;
            print(&energy(&u, &forms, &config.spec()?)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| run(cli));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2:64").unwrap(), (2, 64));
        assert!(parse_range("1:4").is_err());
        assert!(parse_range("8:4").is_err());
        assert!(parse_range("8").is_err());
    }
}
