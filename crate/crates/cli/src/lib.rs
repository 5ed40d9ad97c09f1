//! Command-line front end for the `distgame` suites and studies.
//!
//! Every command writes its data files atomically and then a
//! `<stem>.manifest.json` beside the primary output. Exit codes: 0 success,
//! 1 a verification failed, 2 usage or runtime error.

pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use distgame::analysis::{random_table, variance_study};
use distgame::game::{
    cost_curve, diagnose_trajectory, simulate_bilinear, simulate_dynamics, DynamicsConfig,
    GameTrajectory, UpdateMode,
};
use distgame::suites::{
    cost_curve_closed_form, dynamics_sanity, finite_difference_oracle, gan_mle_suite, sce_suite,
    variance_ordering, SuiteConfig, VerificationReport,
};
use distgame::{CostKind, Discriminator, ParamVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use output::{csv, fmt_f64, sibling, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "distgame",
    version,
    about = "Estimator identities and GAN game dynamics on finite supports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Self-contrastive estimation identities on random instances.
    VerifySce(SuiteArgs),
    /// GAN generator-gradient identities under the optimal discriminator.
    VerifyGanMle(SuiteArgs),
    /// Generator cost per sample as a function of the discriminator logit.
    CostCurve(CostCurveArgs),
    /// Simulate gradient dynamics on the tabular or bilinear game.
    Dynamics(DynamicsArgs),
    /// Monte-Carlo variance of the generator gradient on concentrated data.
    Variance(VarianceArgs),
    /// Every verification suite.
    AllChecks(AllChecksArgs),
}

#[derive(Debug, Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 50)]
    k_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file; defaults to `<command>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SuiteArgs {
    fn config(&self) -> SuiteConfig {
        SuiteConfig {
            trials: self.trials,
            k_min: self.k_min,
            k_max: self.k_max,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct CostCurveArgs {
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    min: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, default_value = "cost-curve.csv")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum GameKind {
    Tabular,
    Bilinear,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Simultaneous,
    Alternating,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum CostArg {
    Minimax,
    Heuristic,
    MaximumLikelihood,
}

impl From<CostArg> for CostKind {
    fn from(c: CostArg) -> Self {
        match c {
            CostArg::Minimax => CostKind::Minimax,
            CostArg::Heuristic => CostKind::Heuristic,
            CostArg::MaximumLikelihood => CostKind::MaximumLikelihood,
        }
    }
}

#[derive(Debug, Args)]
struct DynamicsArgs {
    #[arg(long, value_enum, default_value_t = GameKind::Tabular)]
    game: GameKind,
    #[arg(long, value_enum, default_value_t = ModeArg::Simultaneous)]
    mode: ModeArg,
    /// Step size for both players unless overridden.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long)]
    eta_g: Option<f64>,
    #[arg(long)]
    eta_c: Option<f64>,
    /// Discriminator steps per generator step (alternating mode).
    #[arg(long, default_value_t = 1)]
    disc_steps: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, value_enum, default_value_t = CostArg::Minimax)]
    cost: CostArg,
    /// Support size of the tabular game.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Seeds the random data table of the tabular game.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gradient-norm tolerance for the verdict.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Initial generator scalar of the bilinear game.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u: f64,
    /// Initial discriminator scalar of the bilinear game.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    v: f64,
    #[arg(long, default_value = "dynamics.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VarianceArgs {
    /// Sample sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_values_t = [100usize, 1_000, 10_000, 100_000])]
    n_samples: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "variance.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AllChecksArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Random inputs per gradient in the finite-difference suite.
    #[arg(long, default_value_t = 20)]
    fd_trials: usize,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 50)]
    k_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "all-checks.json")]
    out: PathBuf,
}

/// Parses `argv` (program name first) and executes the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::VerifySce(args) => {
            let reports = sce_suite(&args.config())?;
            emit_reports("verify-sce", &args, reports)
        }
        Command::VerifyGanMle(args) => {
            let reports = gan_mle_suite(&args.config())?;
            emit_reports("verify-gan-mle", &args, reports)
        }
        Command::CostCurve(args) => cost_curve_cmd(&args),
        Command::Dynamics(args) => dynamics_cmd(&args),
        Command::Variance(args) => variance_cmd(&args),
        Command::AllChecks(args) => all_checks_cmd(&args),
    }
}

fn params<T: Serialize>(value: &T) -> Result<BTreeMap<String, Value>> {
    let Value::Object(map) = serde_json::to_value(value)? else {
        unreachable!("argument structs serialize to objects");
    };
    Ok(map.into_iter().collect())
}

fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn write_reports(
    command: &str,
    parameters: BTreeMap<String, Value>,
    seed: u64,
    out: &Path,
    reports: &[VerificationReport],
) -> Result<i32> {
    let text = output::json(reports)?;
    let mut manifest = RunManifest::new(command, parameters, seed);
    manifest.emit(out, &text)?;
    manifest.finish(out)?;
    print_stdout(&text)?;
    for r in reports.iter().filter(|r| !r.pass) {
        eprintln!(
            "FAIL {}: max_abs_diff {:e}, max_rel_diff {:e}, tolerance {:e}",
            r.suite, r.max_abs_diff, r.max_rel_diff, r.tolerance
        );
    }
    Ok(if reports.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_VERIFICATION_FAILED
    })
}

fn emit_reports(command: &str, args: &SuiteArgs, reports: Vec<VerificationReport>) -> Result<i32> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{command}.json")));
    let parameters = params(&json!({
        "trials": args.trials,
        "k_min": args.k_min,
        "k_max": args.k_max,
        "out": out.display().to_string(),
    }))?;
    write_reports(command, parameters, args.seed, &out, &reports)
}

fn cost_curve_cmd(args: &CostCurveArgs) -> Result<i32> {
    let rows = cost_curve(args.min, args.max, args.points)?;
    let text = csv(
        &["a", "f_minimax", "f_heuristic", "f_mle"],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.a),
                fmt_f64(r.f_minimax),
                fmt_f64(r.f_heuristic),
                fmt_f64(r.f_mle),
            ]
        }),
    );
    let parameters = params(&json!({
        "min": args.min,
        "max": args.max,
        "points": args.points,
        "out": args.out.display().to_string(),
    }))?;
    let mut manifest = RunManifest::new("cost-curve", parameters, 0);
    manifest.emit(&args.out, &text)?;
    manifest.finish(&args.out)?;
    println!("wrote {} ({} rows)", args.out.display(), rows.len());
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct DynamicsSummary {
    game: GameKind,
    mode: ModeArg,
    iterations: usize,
    truncated: bool,
    verdict: distgame::game::Verdict,
    final_value: f64,
    final_grad_norm_g: f64,
    final_grad_norm_c: f64,
    oscillation_score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_radius_sq: Option<f64>,
}

fn dynamics_config(
    args: &DynamicsArgs,
) -> Result<(DynamicsConfig, Option<distgame::DistributionTable>)> {
    let mode = match args.mode {
        ModeArg::Simultaneous => UpdateMode::Simultaneous,
        ModeArg::Alternating => UpdateMode::Alternating,
    };
    let (init_theta_g, init_disc, p_d) = match args.game {
        GameKind::Tabular => {
            if args.k < 2 {
                anyhow::bail!("--k must be at least 2, got {}", args.k);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            (
                ParamVector::zeros(args.k),
                Discriminator::constant(args.k, 0.0)?,
                Some(random_table(&mut rng, args.k)),
            )
        }
        GameKind::Bilinear => (
            ParamVector::new(vec![args.u])?,
            Discriminator::new(vec![args.v])?,
            None,
        ),
    };
    let cfg = DynamicsConfig {
        eta_g: args.eta_g.unwrap_or(args.eta),
        eta_c: args.eta_c.unwrap_or(args.eta),
        mode,
        disc_steps_per_gen_step: args.disc_steps,
        iterations: args.iters,
        init_theta_g,
        init_disc,
        cost: CostKind::from(args.cost).into(),
    };
    Ok((cfg, p_d))
}

fn trajectory_csv(traj: &GameTrajectory) -> String {
    csv(
        &[
            "iteration",
            "value",
            "grad_norm_g",
            "grad_norm_c",
            "param_norm_g",
        ],
        traj.snapshots.iter().map(|s| {
            vec![
                s.iteration.to_string(),
                fmt_f64(s.value),
                fmt_f64(s.grad_norm_g),
                fmt_f64(s.grad_norm_c),
                fmt_f64(s.theta_g.norm2()),
            ]
        }),
    )
}

fn dynamics_cmd(args: &DynamicsArgs) -> Result<i32> {
    let (cfg, p_d) = dynamics_config(args)?;
    let traj = match &p_d {
        Some(p_d) => simulate_dynamics(p_d, &cfg)?,
        None => simulate_bilinear(&cfg)?,
    };
    let report = diagnose_trajectory(&traj, args.tol)?;
    let last = traj
        .last()
        .expect("diagnosis succeeded on a non-empty trajectory");
    let summary = DynamicsSummary {
        game: args.game,
        mode: args.mode,
        iterations: last.iteration,
        truncated: traj.truncated,
        verdict: report.verdict,
        final_value: report.final_value,
        final_grad_norm_g: report.final_grad_norms.0,
        final_grad_norm_c: report.final_grad_norms.1,
        oscillation_score: report.oscillation_score,
        final_radius_sq: match args.game {
            GameKind::Bilinear => {
                Some(last.theta_g.as_slice()[0].powi(2) + last.disc.logits()[0].powi(2))
            }
            GameKind::Tabular => None,
        },
    };

    let mut parameters = params(&json!({
        "game": args.game,
        "mode": args.mode,
        "eta_g": cfg.eta_g,
        "eta_c": cfg.eta_c,
        "disc_steps": args.disc_steps,
        "iters": args.iters,
        "tol": args.tol,
        "out": args.out.display().to_string(),
    }))?;
    match args.game {
        GameKind::Tabular => {
            parameters.insert("k".into(), json!(args.k));
            parameters.insert("cost".into(), json!(args.cost));
        }
        GameKind::Bilinear => {
            parameters.insert("u".into(), json!(args.u));
            parameters.insert("v".into(), json!(args.v));
        }
    }
    let summary_text = output::json(&summary)?;
    let mut manifest = RunManifest::new("dynamics", parameters, args.seed);
    manifest.emit(&args.out, &trajectory_csv(&traj))?;
    manifest.emit(&sibling(&args.out, ".report.json"), &summary_text)?;
    manifest.finish(&args.out)?;
    print_stdout(&summary_text)?;
    Ok(EXIT_OK)
}

fn variance_cmd(args: &VarianceArgs) -> Result<i32> {
    let rows = variance_study(&args.n_samples, args.seed)?;
    let text = csv(
        &[
            "variant",
            "n_samples",
            "per_sample_variance",
            "grad_error_norm",
        ],
        rows.iter().map(|r| {
            vec![
                r.variant.as_str().to_string(),
                r.n_samples.to_string(),
                fmt_f64(r.per_sample_variance),
                fmt_f64(r.grad_error_norm),
            ]
        }),
    );
    let parameters = params(&json!({
        "n": args.n_samples,
        "out": args.out.display().to_string(),
    }))?;
    let mut manifest = RunManifest::new("variance", parameters, args.seed);
    manifest.emit(&args.out, &text)?;
    manifest.finish(&args.out)?;
    println!("wrote {} ({} rows)", args.out.display(), rows.len());
    Ok(EXIT_OK)
}

fn all_checks_cmd(args: &AllChecksArgs) -> Result<i32> {
    let cfg = SuiteConfig {
        trials: args.trials,
        k_min: args.k_min,
        k_max: args.k_max,
        seed: args.seed,
    };
    let fd_cfg = SuiteConfig {
        trials: args.fd_trials,
        ..cfg
    };
    let mut reports = sce_suite(&cfg)?;
    reports.extend(gan_mle_suite(&cfg)?);
    reports.push(cost_curve_closed_form()?);
    reports.push(variance_ordering(args.seed)?);
    reports.push(dynamics_sanity(args.seed)?);
    reports.push(finite_difference_oracle(&fd_cfg)?);
    let parameters = params(&json!({
        "trials": args.trials,
        "fd_trials": args.fd_trials,
        "k_min": args.k_min,
        "k_max": args.k_max,
        "out": args.out.display().to_string(),
    }))?;
    write_reports("all-checks", parameters, args.seed, &args.out, &reports)
}
