//! Command-line front door: weight analysis, norm computation, one-shot
//! commutator evaluation, and verification campaigns.
//!
//! Every subcommand takes one config path (see [`crate::config`]) and
//! writes JSON/CSV artifacts into the config's output directory, which the
//! `REALINTERP_OUT` environment variable overrides. Exit codes: 0 pass,
//! 1 failed verification assertion, 2 config error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commutators::{difference_representation, higher_commutator, SelectorContext};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::harness::Suite;
use crate::jmethod::{jnorm, JNormMethod, Representation};
use crate::weights::{g_transform, w_norm_with_burn_in, WeightProfile};

/// Discrete real-interpolation toolkit: weight calculus, J-method norms,
/// commutators, and empirical verification suites.
#[derive(Debug, Parser)]
#[command(name = "realinterp", version, arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weight calculus curves (w, Pw, w#, Gw) and summary statistics.
    Weight { config: PathBuf },
    /// J-method norm of the configured element, with certification.
    Jnorm { config: PathBuf },
    /// One-shot commutator evaluation.
    Commute { config: PathBuf },
    /// Run a verification suite and write its report.
    Verify {
        /// representation | commutator | higher | probe
        suite: String,
        config: PathBuf,
    },
}

/// Runs a parsed invocation, returning the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Weight { config } => cmd_weight(config),
        Command::Jnorm { config } => cmd_jnorm(config),
        Command::Commute { config } => cmd_commute(config),
        Command::Verify { suite, config } => cmd_verify(suite, config),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = std::env::var("REALINTERP_OUT").unwrap_or_else(|_| cfg.output_dir());
    let path = PathBuf::from(dir);
    std::fs::create_dir_all(&path)
        .map_err(|e| Error::Config(format!("output dir {}: {e}", path.display())))?;
    Ok(path)
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn representation_csv(rep: &Representation) -> String {
    let grid = rep.grid();
    let dim = rep.pair().dim();
    let mut out = String::from("t");
    for d in 0..dim {
        out.push_str(&format!(",u{d}"));
    }
    out.push('\n');
    for (k, row) in rep.u().iter().enumerate() {
        out.push_str(&format!("{:e}", grid.node(k)));
        for v in row {
            out.push_str(&format!(",{v:e}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct WeightSummary {
    version: &'static str,
    config: RunConfig,
    w_norm: f64,
    w1_seminorm: f64,
    decomposition_bounded_sup: f64,
    decomposition_lipschitz_w1: f64,
}

/// `realinterp weight <config>`: CSV of (t, w, Pw, w#, Gw) plus a JSON
/// summary of the W-norm, the W1-seminorm, and the decomposition norms.
pub fn cmd_weight(config_path: &Path) -> Result<i32> {
    let cfg = RunConfig::load(config_path)?;
    let out_dir = resolve_out_dir(&cfg)?;
    let grid = cfg.grid()?;
    let family = cfg.weight()?;
    let profile = WeightProfile::compute(&family, &grid, crate::weights::DEFAULT_BURN_IN)?;
    let gw = g_transform(&profile.w)?;
    let dec = crate::weights::decompose_bounded_lipschitz(
        &family,
        &grid,
        crate::weights::DEFAULT_BURN_IN,
    )?;
    let lipschitz_w1 = crate::weights::w1_seminorm_values(
        &dec.lipschitz_part,
        crate::weights::DEFAULT_BURN_IN,
    );

    let mut csv = String::from("t,w,pw,sharp,gw\n");
    for k in 0..grid.n_nodes() {
        csv.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e}\n",
            grid.node(k),
            profile.w.values()[k],
            profile.hardy.values()[k],
            profile.sharp.values()[k],
            gw.values()[k],
        ));
    }
    write_artifact(&out_dir, "weight_curves.csv", &csv)?;

    let summary = WeightSummary {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        w_norm: profile.w_norm,
        w1_seminorm: profile.w1_seminorm,
        decomposition_bounded_sup: dec.w_norm,
        decomposition_lipschitz_w1: lipschitz_w1,
    };
    write_artifact(&out_dir, "weight_summary.json", &json_line(&summary))?;
    println!("w_norm = {:.6}, w1_seminorm = {:.6}", profile.w_norm, profile.w1_seminorm);
    Ok(0)
}

#[derive(Serialize)]
struct JnormArtifact {
    version: &'static str,
    config: RunConfig,
    method: String,
    value: f64,
    representation_cost: f64,
    /// Values for every method that ran (oracle only on small instances
    /// unless explicitly requested).
    fundamental: f64,
    solver: f64,
    oracle: Option<f64>,
    /// Factor-2 certificate: chosen cost over the solver value.
    certification_factor: f64,
    certified: bool,
}

/// `realinterp jnorm <config>`: JSON with per-method values and the
/// certification status, plus a CSV dump of the chosen representation.
pub fn cmd_jnorm(config_path: &Path) -> Result<i32> {
    let cfg = RunConfig::load(config_path)?;
    let out_dir = resolve_out_dir(&cfg)?;
    let grid = cfg.grid()?;
    let tq = cfg.tq()?;
    let pair = cfg.pair()?;
    let section = cfg
        .jnorm
        .clone()
        .ok_or_else(|| Error::Config("jnorm requires a [jnorm] section with f".into()))?;
    if section.f.is_empty() {
        return Err(Error::Config("jnorm.f must be a non-empty vector".into()));
    }
    let method = section.method()?;
    let budget = section.budget();

    let (fundamental, fundamental_rep) =
        jnorm(&section.f, &pair, &tq, &grid, JNormMethod::Fundamental, &budget)?;
    let (solver, solver_rep) = jnorm(&section.f, &pair, &tq, &grid, JNormMethod::Solver, &budget)?;
    let oracle_run = if method == JNormMethod::Oracle {
        Some(jnorm(&section.f, &pair, &tq, &grid, JNormMethod::Oracle, &budget)?)
    } else {
        match jnorm(&section.f, &pair, &tq, &grid, JNormMethod::Oracle, &budget) {
            Ok(run) => Some(run),
            Err(Error::OracleTooLarge { .. }) => None,
            Err(e) => return Err(e),
        }
    };
    let oracle = oracle_run.as_ref().map(|(v, _)| *v);
    let (value, rep) = match method {
        JNormMethod::Fundamental => (fundamental, fundamental_rep),
        JNormMethod::Solver => (solver, solver_rep),
        JNormMethod::Oracle => oracle_run.expect("oracle ran for method=oracle"),
    };
    let certification_factor = if solver > 0.0 { rep.cost(&tq) / solver } else { 1.0 };

    let artifact = JnormArtifact {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        method: section.method.clone(),
        value,
        representation_cost: rep.cost(&tq),
        fundamental,
        solver,
        oracle,
        certification_factor,
        certified: certification_factor <= 2.0,
    };
    write_artifact(&out_dir, "jnorm.json", &json_line(&artifact))?;
    write_artifact(&out_dir, "jnorm_representation.csv", &representation_csv(&rep))?;
    println!("jnorm = {value:.9} (method {})", section.method);
    Ok(0)
}

#[derive(Serialize)]
struct CommuteArtifact {
    version: &'static str,
    config: RunConfig,
    order: u32,
    output: Vec<f64>,
    output_norm: f64,
    input_norm: f64,
    pair_norm: f64,
    w_norm: f64,
    /// `||C_n f|| / (||T|| ||w||_W^n ||f||)`; 0 when degenerate.
    ratio: f64,
}

/// `realinterp commute <config>`: evaluates the order-n commutator of the
/// configured operator and weight on one element.
pub fn cmd_commute(config_path: &Path) -> Result<i32> {
    let cfg = RunConfig::load(config_path)?;
    let out_dir = resolve_out_dir(&cfg)?;
    let grid = cfg.grid()?;
    let tq = cfg.tq()?;
    let pair = cfg.pair()?;
    let family = cfg.weight()?;
    let section = cfg
        .commute
        .clone()
        .ok_or_else(|| Error::Config("commute requires a [commute] section with f".into()))?;
    if section.f.is_empty() {
        return Err(Error::Config("commute.f must be a non-empty vector".into()));
    }
    if section.order == 0 {
        return Err(Error::Config("commute.order must be at least 1".into()));
    }
    let ctx = Arc::new(SelectorContext::new(
        grid.clone(),
        tq,
        JNormMethod::Solver,
        crate::jmethod::SolverConfig {
            max_iters: section.solver_iters,
            tolerance: 0.0,
            patience: 0,
        },
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(section.seed);
    let t_op = cfg.operator().realize(&mut rng, &pair, &pair)?;

    let output = higher_commutator(&t_op, &family, &section.f, section.order, &ctx)?;
    let output_norm = ctx.norm(&output, &t_op.dst)?;
    let input_norm = ctx.norm(&section.f, &t_op.src)?;
    let w_norm = w_norm_with_burn_in(&family, &grid, section.burn_in)?;
    let denom = t_op.pair_norm * w_norm.powi(section.order as i32) * input_norm;
    let artifact = CommuteArtifact {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        order: section.order,
        output: output.clone(),
        output_norm,
        input_norm,
        pair_norm: t_op.pair_norm,
        w_norm,
        ratio: if denom >= 1e-12 { output_norm / denom } else { 0.0 },
    };
    write_artifact(&out_dir, "commute.json", &json_line(&artifact))?;
    let diff = difference_representation(&t_op, &section.f, &ctx)?;
    write_artifact(&out_dir, "commute_difference.csv", &representation_csv(&diff))?;
    println!(
        "order-{} commutator norm = {output_norm:.9}, ratio = {:.6}",
        section.order, artifact.ratio
    );
    Ok(0)
}

/// `realinterp verify <suite> <config>`: runs the suite and writes the
/// report; exits 0 iff every check passed.
pub fn cmd_verify(suite_name: &str, config_path: &Path) -> Result<i32> {
    let cfg = RunConfig::load(config_path)?;
    let out_dir = resolve_out_dir(&cfg)?;
    let suite = Suite::parse(suite_name)?;
    let ensemble = cfg.ensemble(suite)?;
    let report = suite.run(&ensemble)?;
    write_artifact(
        &out_dir,
        &format!("verify_{}.json", suite.name()),
        &report.to_json(),
    )?;
    write_artifact(
        &out_dir,
        &format!("verify_{}.csv", suite.name()),
        &report.to_csv(),
    )?;
    for check in &report.checks {
        println!(
            "[{}] {} ({} {} {})",
            if check.pass { "pass" } else { "FAIL" },
            check.name,
            check.observed,
            check.op,
            check.bound,
        );
    }
    println!(
        "suite {}: {} (max ratio {:.6}, {} degenerate, {:.1}s)",
        suite.name(),
        if report.pass { "PASS" } else { "FAIL" },
        report.max_ratio,
        report.degenerate_count,
        report.wall_time.as_secs_f64(),
    );
    Ok(if report.pass { 0 } else { 1 })
}
