//! `anisoweight`: command-line front end.
//!
//! Exit codes: 0 success, 1 analysis failure, 2 usage error.

mod commands;
mod config;
mod output;

use anisoweight::ineq::TestFunction;
use anisoweight::plap::BoundaryDatum;
use clap::{Args, Parser, Subcommand};
use config::{parse_function, parse_phi0, parse_theta, Format, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Analysis(String),
}

#[derive(Parser)]
#[command(name = "anisoweight", version, about = "Anisotropic power weights: regions, measures, A_p scans, inequalities and the weighted p-Laplacian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Region membership with violated-inequality witnesses.
    Classify,
    /// μ(B) and the scaling exponent of μ(B_r(0)).
    Measure,
    /// A_p quotients over an adversarial ball family.
    ApScan,
    /// Doubling ratios over an adversarial ball family.
    DoublingScan,
    /// Sobolev and Poincaré ratios over a seeded test-function family.
    Ineq,
    /// Solve the weighted p-Laplace Dirichlet problem on the half-ball.
    Solve,
    /// Decay, oscillation and Hölder diagnostics; convergence table for manufactured data.
    Decay,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Measure => "measure",
            Command::ApScan => "ap-scan",
            Command::DoublingScan => "doubling-scan",
            Command::Ineq => "ineq",
            Command::Solve => "solve",
            Command::Decay => "decay",
        }
    }
}

#[derive(Args, Default)]
struct Flags {
    /// Flat TOML file with any of the keys below; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// manufactured-p2 | decay-x2 | witness-doubling
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Write the resolved configuration as TOML.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    /// θ1,θ2,θ3
    #[arg(long, global = true, value_parser = parse_theta, allow_hyphen_values = true)]
    theta: Option<[f64; 3]>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    p0: Option<f64>,
    #[arg(long, global = true)]
    m: Option<f64>,
    #[arg(long, global = true)]
    p_tilde: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Quadrature relative tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    count: Option<usize>,
    #[arg(long, global = true)]
    r_min: Option<f64>,
    #[arg(long, global = true)]
    r_max: Option<f64>,
    #[arg(long, global = true)]
    num_radii: Option<usize>,
    #[arg(long, global = true)]
    levels: Option<usize>,
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    half: bool,
    #[arg(long, global = true)]
    fit_scaling: bool,
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    grading: Option<f64>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    refinements: Option<usize>,
    #[arg(long, global = true)]
    solver_tol: Option<f64>,
    /// Test function as JSON, e.g. '{"kind":"affine","slope":[0,8],"offset":0}'.
    #[arg(long, global = true, value_parser = parse_function)]
    f0: Option<TestFunction>,
    #[arg(long, global = true, value_parser = parse_function)]
    f1: Option<TestFunction>,
    /// zero | const:V | sine:K[:A] | JSON
    #[arg(long, global = true, value_parser = parse_phi0)]
    phi0: Option<BoundaryDatum>,
    #[arg(long, global = true)]
    fit_min: Option<f64>,
    #[arg(long, global = true)]
    fit_max: Option<f64>,
    /// Hölder exponent for the pairwise modulus.
    #[arg(long, global = true)]
    holder: Option<f64>,
    #[arg(long, global = true)]
    pairs: Option<usize>,
    /// Solved field (JSON) to analyse instead of solving.
    #[arg(long, global = true)]
    field: Option<PathBuf>,
    #[arg(long, global = true)]
    field_out: Option<PathBuf>,
    /// Exit with code 1 when the analysis verdict is negative.
    #[arg(long, global = true)]
    require: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

impl Flags {
    fn to_config(&self) -> RunConfig {
        let flag = |b: bool| b.then_some(true);
        RunConfig {
            subcommand: None,
            preset: self.preset.clone(),
            theta: self.theta,
            n: self.n,
            p: self.p,
            q: self.q,
            p0: self.p0,
            m: self.m,
            p_tilde: self.p_tilde,
            seed: self.seed,
            tol: self.tol,
            count: self.count,
            r_min: self.r_min,
            r_max: self.r_max,
            num_radii: self.num_radii,
            levels: self.levels,
            radius: self.radius,
            half: flag(self.half),
            fit_scaling: flag(self.fit_scaling),
            h: self.h,
            grading: self.grading,
            depth: self.depth,
            refinements: self.refinements,
            solver_tol: self.solver_tol,
            f0: self.f0.clone(),
            f1: self.f1.clone(),
            phi0: self.phi0.clone(),
            fit_min: self.fit_min,
            fit_max: self.fit_max,
            holder: self.holder,
            pairs: self.pairs,
            field: self.field.clone(),
            field_out: self.field_out.clone(),
            require: flag(self.require),
            out: self.out.clone(),
            format: self.format,
        }
    }
}

fn resolve(cmd: Command, flags: &Flags) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let top = flags.to_config();
    let preset = top.preset.clone().or_else(|| file.preset.clone());
    let base = match preset {
        Some(name) => RunConfig::preset(&name)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.overlay(file).overlay(top);
    if let Some(s) = &cfg.subcommand {
        if s != cmd.name() {
            return Err(CliError::Usage(format!("config is for `{s}`, not `{}`", cmd.name())));
        }
    }
    cfg.subcommand = Some(cmd.name().into());
    Ok(cfg)
}

fn run(cmd: Command, flags: &Flags) -> Result<Option<String>, CliError> {
    let cfg = resolve(cmd, flags)?;
    if let Some(path) = &flags.save_config {
        std::fs::write(path, cfg.to_toml())
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let outcome = match cmd {
        Command::Classify => commands::classify_cmd(&cfg),
        Command::Measure => commands::measure_cmd(&cfg),
        Command::ApScan => commands::ap_scan_cmd(&cfg),
        Command::DoublingScan => commands::doubling_scan_cmd(&cfg),
        Command::Ineq => commands::ineq_cmd(&cfg),
        Command::Solve => commands::solve_cmd(&cfg),
        Command::Decay => commands::decay_cmd(&cfg),
    }?;
    let bytes = output::render(&cfg, &outcome.result, &outcome.table)?;
    output::write(&cfg, &bytes)?;
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, &cli.flags) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(why)) => {
            eprintln!("anisoweight: {why}");
            ExitCode::from(1)
        }
        Err(CliError::Analysis(e)) => {
            eprintln!("anisoweight: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(e)) => {
            eprintln!("anisoweight: {e}");
            ExitCode::from(2)
        }
    }
}
