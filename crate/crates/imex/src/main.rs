use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imex::commands::{self, VerifyOptions};
use imex::config::parse_levels;
use imex::{CliError, CliResult, ScenarioConfig};

/// IMEX runs, refinement studies and self-checks for u_t = u_xx + G(x, u).
#[derive(Debug, Parser)]
#[command(name = "imex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario config (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trajectory with `time.steps` steps.
    Solve(Common),
    /// Refinement family, pairwise gaps and the Cauchy verdict.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated step counts; overrides `time.levels`.
        #[arg(long)]
        levels: Option<String>,
        /// Use every step count between the smallest and largest level.
        #[arg(long)]
        full_sweep: bool,
    },
    /// A-priori bounds and the Euler underestimate table.
    Bounds(Common),
    /// Resolvent self-checks on seeded random data.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated grid sizes.
        #[arg(long, default_value = "65,257,1025")]
        sizes: String,
        /// Comma-separated step sizes.
        #[arg(long, default_value = "0.001,0.1,1")]
        h: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> CliResult<(ScenarioConfig, PathBuf)> {
    let cfg = ScenarioConfig::from_file(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn parse_steps(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("step size `{}` is not a number", s.trim())))
        })
        .collect()
}

fn done(what: &str, out: &Path) {
    println!("{what}: wrote {}", out.display());
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve(common) => {
            let (cfg, out) = load(&common)?;
            let s = commands::solve(&cfg, &out)?;
            println!("steps = {}, eps = {}", s.steps, s.eps);
            if let Some(b) = s.bounds {
                println!("b = {}, a = {}", b.b, b.a);
            }
            done("solve", &out);
        }
        Command::Converge {
            common,
            levels,
            full_sweep,
        } => {
            let (cfg, out) = load(&common)?;
            let levels = levels.as_deref().map(parse_levels).transpose()?;
            let result = commands::converge(&cfg, &out, levels.as_deref(), full_sweep);
            let verdict = match &result {
                Ok(_) => "PASS",
                Err(CliError::ConvergenceFailed(_)) => "FAIL",
                Err(_) => "",
            };
            if !verdict.is_empty() {
                println!("verdict = {verdict}");
            }
            result?;
            done("converge", &out);
        }
        Command::Bounds(common) => {
            let (cfg, out) = load(&common)?;
            let s = commands::bounds(&cfg, &out)?;
            println!(
                "b = {}, a = {}, c = {}, t_safe = {}",
                s.bounds.b, s.bounds.a, s.bounds.c, s.t_safe
            );
            done("bounds", &out);
        }
        Command::Verify {
            seed,
            sizes,
            h,
            trials,
            out,
        } => {
            let opts = VerifyOptions {
                seed,
                sizes: parse_levels(&sizes)?,
                steps: parse_steps(&h)?,
                trials,
            };
            let report = commands::verify(&opts, out.as_deref())?;
            print!("{}", report.text);
            report.into_result()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("imex: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
