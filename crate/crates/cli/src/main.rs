//! `meshlab` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meshlab_core::error::Error;
use meshlab_core::lab::{
    predicted_order, run_fractional, run_sampling, run_solve, run_study, write_json, write_report, FractionalConfig,
    SamplingConfig, StudyConfig,
};
use meshlab_core::verifier::write_sampling_csv;

#[derive(Parser)]
#[command(name = "meshlab", version, about = "Meshless-methods laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding the configured one.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Scaling of the fractional semi-norm of a linear function on balls.
    VerifyFractional(Common),
    /// Empirical constants of the sampling inequality.
    VerifySampling(Common),
    /// One collocation solve at the finest h of a study configuration.
    Solve(Common),
    /// Full convergence study.
    Convergence(Common),
    /// Predicted convergence order.
    Predict(PredictArgs),
}

#[derive(Args)]
struct PredictArgs {
    /// Study configuration to read m, m̃, μ₁ and n from.
    #[arg(long, conflicts_with_all = ["m", "m_tilde", "mu1"])]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    m_tilde: Option<f64>,
    #[arg(long)]
    mu1: Option<usize>,
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Accepted for uniformity; unused.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for uniformity; unused.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidParameters(_)
            | Error::UnknownProblem(_)
            | Error::NotFractional(_)
            | Error::BudgetExceeded { .. }
            | Error::QuadratureBudget { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn out_dir(common: &Common, configured: &Path) -> PathBuf {
    common.out.clone().unwrap_or_else(|| configured.to_path_buf())
}

fn say(quiet: bool, line: String) {
    if !quiet {
        println!("{line}");
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

fn study_config(common: &Common) -> std::result::Result<StudyConfig, Failure> {
    let mut cfg = StudyConfig::from_toml(&read(&common.config)?)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.out = out_dir(common, &cfg.out);
    Ok(cfg)
}

fn fractional(common: &Common) -> std::result::Result<bool, Failure> {
    let cfg = FractionalConfig::from_toml(&read(&common.config)?)?;
    let out = run_fractional(&cfg)?;
    let dir = out_dir(common, &cfg.out);
    write_json(&out, &dir.join("report.json"))?;
    for r in &out.reports {
        say(
            common.quiet,
            format!(
                "eps={} q={} spread={:.4} slope={} predicted={:.3} {:?}",
                r.epsilon,
                r.q,
                r.spread,
                opt(r.slope),
                r.predicted_slope,
                r.verdict
            ),
        );
    }
    Ok(out.passed)
}

fn sampling(common: &Common) -> std::result::Result<bool, Failure> {
    let mut cfg = SamplingConfig::from_toml(&read(&common.config)?)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = run_sampling(&cfg)?;
    let dir = out_dir(common, &cfg.out);
    write_json(&out, &dir.join("report.json"))?;
    write_sampling_csv(&dir.join("sampling.csv"), &out.trials)?;
    for t in &out.trials {
        say(
            common.quiet,
            format!(
                "r={} mu={} l={} median={:.4e} max={:.4e} {:?}",
                t.r, t.mu, t.l, t.median, t.max_below, t.verdict
            ),
        );
    }
    Ok(out.passed)
}

fn solve(common: &Common) -> std::result::Result<bool, Failure> {
    let cfg = study_config(common)?;
    let out = run_solve(&cfg)?;
    write_json(&out, &cfg.out.join("solve.json"))?;
    let row = &out.row;
    say(
        common.quiet,
        format!(
            "h={} centers={} rows={} rank={} residual={:.3e} beta={}",
            row.h,
            row.centers,
            row.test_rows,
            row.rank,
            row.residual.unwrap_or(f64::NAN),
            opt(row.beta)
        ),
    );
    for (norm, e) in cfg.norms.iter().zip(&row.errors) {
        say(common.quiet, format!("error {norm}: {}", e.map(|v| format!("{v:.4e}")).unwrap_or("-".into())));
    }
    for d in &row.diagnostics {
        eprintln!("{d}");
    }
    Ok(out.passed)
}

fn convergence(common: &Common) -> std::result::Result<bool, Failure> {
    let cfg = study_config(common)?;
    let report = run_study(&cfg)?;
    write_report(&report, &cfg.out)?;
    for r in &report.rates {
        say(
            common.quiet,
            format!(
                "{}: fitted={} ± {} predicted={} {}",
                r.norm,
                opt(r.fitted),
                opt(r.stderr),
                opt(r.predicted),
                r.verdict.as_str()
            ),
        );
    }
    for row in &report.rows {
        for d in &row.diagnostics {
            eprintln!("h={}: {d}", row.h);
        }
    }
    Ok(report.passed)
}

fn predict(args: &PredictArgs) -> std::result::Result<bool, Failure> {
    let (m, m_tilde, mu1, n) = match &args.config {
        Some(path) => {
            let cfg = StudyConfig::from_toml(&read(path)?)?;
            (cfg.m, cfg.m_tilde()?, cfg.mu1, cfg.domain.dim())
        }
        None => match (args.m, args.m_tilde, args.mu1) {
            (Some(m), Some(mt), Some(mu1)) => (m, mt, mu1, args.n),
            _ => return Err(Failure::Usage("predict needs --config or all of --m, --m-tilde, --mu1".into())),
        },
    };
    let line = match predicted_order(m, m_tilde, mu1, n) {
        Some(p) => format!("{p}"),
        None => "None".into(),
    };
    say(args.quiet, line);
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result: std::result::Result<bool, Failure> = match &cli.command {
        Command::VerifyFractional(c) => fractional(c),
        Command::VerifySampling(c) => sampling(c),
        Command::Solve(c) => solve(c),
        Command::Convergence(c) => convergence(c),
        Command::Predict(a) => predict(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
