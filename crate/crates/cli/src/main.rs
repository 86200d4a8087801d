use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};

use toda_cli::{
    check, scan, solve, verify, CliError, Outcome, Overrides, RunConfig, ScanConfig,
    VariantSelector, VerifyThresholds,
};

#[derive(Parser)]
#[command(name = "toda", about = "Singular Toda systems on flat tori")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantSelector>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Existence verdict from the singular strengths.
    Check,
    /// Solve on the torus and write fields plus a manifest.
    Solve,
    /// Recheck a solution directory; `--config` may hold verify thresholds.
    Verify { dir: PathBuf },
    /// Randomized comparison of the two exponent conventions.
    Scan,
}

fn run_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::invalid("--config is required"))?;
    RunConfig::load(path)?.apply(&Overrides {
        variant: cli.variant,
        grid: cli.grid,
        tol: cli.tol,
        seed: cli.seed,
        out: cli.out.clone(),
    })
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Check => check(&run_config(cli)?),
        Command::Solve => solve(&run_config(cli)?),
        Command::Verify { dir } => {
            let th = match &cli.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| {
                        CliError::invalid(format!("cannot read {}: {e}", p.display()))
                    })?;
                    Some(
                        serde_json::from_str::<VerifyThresholds>(&text)
                            .map_err(|e| CliError::invalid(format!("bad thresholds: {e}")))?,
                    )
                }
                None => None,
            };
            verify(dir, th)
        }
        Command::Scan => {
            let mut cfg = match &cli.config {
                Some(p) => ScanConfig::load(p)?,
                None => ScanConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            scan(&cfg, cli.out.as_deref())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.report);
            exit(o.code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.code);
        }
    }
}
