//! Command-line front end. Artifacts go to files under --out; logs go to
//! stderr and are silenced by --quiet. Exit codes: 0 success, 2 config,
//! 3 I/O, 4 model or numerical failure, 5 requested operating point out
//! of band or bounds infeasible, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use magopt_cli::commands::{self, Ctx};
use magopt_cli::config::ConfigFile;
use magopt_cli::error::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "magopt",
    about = "Microwave-to-optical transducer modeling: steady-state conversion, \
             magnetostatic mode dispersion, 2-D maps, fits, and operating-point \
             optimization.",
    version
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for artifacts (default: $MAGOPT_OUT, else ".").
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Suppress progress logging on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Worker threads for map sweeps; 0 picks the machine default.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conversion and reflection spectra over a probe-frequency grid.
    Simulate,
    /// 2-D reflection or conversion map over (bias field, probe frequency).
    Map2d,
    /// Peak conversion as the optical free spectral range is swept.
    Fsrscan,
    /// Fit a reflection dip, a Lorentzian peak, or an avoided-crossing map.
    Fit,
    /// Maximize conversion over the microwave coupling or (FSR, field).
    Optimize,
    /// Magnetostatic mode catalog at a bias field.
    Dispersion,
    /// Efficiency budget: implied microwave extraction from measured values.
    Report,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let config_path = cli.config.as_ref().ok_or_else(|| {
        CliError::Config("missing --config <PATH>".into())
    })?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::io(config_path, e))?;
    let config = ConfigFile::parse(&text)?;
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("MAGOPT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if cli.threads > 0 {
        // one-shot process: a second build_global can only happen in tests,
        // where the first pool is just as good
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let ctx = Ctx {
        config: &config,
        out: &out,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Map2d => commands::map2d(&ctx),
        Command::Fsrscan => commands::fsrscan(&ctx),
        Command::Fit => commands::fit(&ctx),
        Command::Optimize => commands::optimize(&ctx),
        Command::Dispersion => commands::dispersion(&ctx),
        Command::Report => commands::report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            if !cli.quiet {
                for p in paths {
                    eprintln!("magopt: wrote {}", p.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("magopt: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
