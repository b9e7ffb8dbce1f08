//! `fraclab`: batch front-end for the numerical laboratory.
//!
//! Every experiment is a subcommand. Parameters come from a JSON config
//! (`--config`) overridden by flags; each run writes `summary.json` (with
//! the full resolved config) and CSV tables into the output directory.
//!
//! Exit codes: 0 success, 1 usage or config error (nothing written),
//! 2 an asserted check failed, 3 a numerical routine failed (diagnostic
//! `error.json` written).

mod commands;
mod config;
mod report;

use clap::{Parser, Subcommand};
use config::Overrides;
use report::{EXIT_CHECK_FAILED, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "fraclab", version, about = "Fractional Laplacian with Hardy potential: numerical experiments")]
struct Cli {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed of the randomized probes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dimension n.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Order s ∈ (0, 1).
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Hardy coupling λ.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Potential exponent α (default 2s).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Nonlinearity exponent p (default (n+2s)/(n−2s)).
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Log level on standard error: 0 warnings, 1 progress, 2 debug.
    #[arg(long, global = true, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Closed-form constants (Hardy, κ_s, normalizers, bubble).
    Constants,
    /// Radial quadrature against FFT multipliers and the Hardy saturator.
    FraclapValidate,
    /// Weighted flux of Poisson extensions against κ_s(−Δ)^s u.
    ExtensionValidate,
    /// Inversion involution, conformal exponent, comparison inequality, bubble invariance.
    KelvinCheck,
    /// Pohozaev and energy identities on the extended bubble.
    Pohozaev,
    /// Ground state for λ < Λ, or the indefiniteness probe for λ ≥ Λ.
    Groundstate,
    /// First Steklov eigenvalue μ₁(λ) on the weighted half-sphere.
    Eig,
    /// Ground states over a λ-grid, in parallel.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::FraclapValidate => "fraclap-validate",
            Command::ExtensionValidate => "extension-validate",
            Command::KelvinCheck => "kelvin-check",
            Command::Pohozaev => "pohozaev",
            Command::Groundstate => "groundstate",
            Command::Eig => "eig",
            Command::Sweep => "sweep",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::new().parse_filters(level).format_timestamp(None).init();
    ExitCode::from(run(&cli) as u8)
}

fn run(cli: &Cli) -> i32 {
    let ov = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        n: cli.n,
        s: cli.s,
        lambda: cli.lambda,
        alpha: cli.alpha,
        p: cli.p,
    };
    let cfg = match config::load(cli.config.as_deref(), &ov) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let sub = cli.command.name();
    let t0 = Instant::now();
    let outcome = match cli.command {
        Command::Constants => commands::constants(&cfg),
        Command::FraclapValidate => commands::fraclap_validate(&cfg),
        Command::ExtensionValidate => commands::extension_validate(&cfg),
        Command::KelvinCheck => commands::kelvin_check(&cfg),
        Command::Pohozaev => commands::pohozaev(&cfg),
        Command::Groundstate => commands::groundstate(&cfg),
        Command::Eig => commands::eig(&cfg),
        Command::Sweep => commands::sweep(&cfg),
    };
    log::info!("{sub} finished in {:?}", t0.elapsed());
    match outcome {
        Ok(out) => match report::write_outcome(sub, &cfg, &out) {
            Ok(text) => {
                print!("{text}");
                for c in out.checks.iter().filter(|c| !c.pass) {
                    eprintln!("check failed: {} = {:e} (threshold {:e})", c.name, c.value, c.threshold);
                }
                if out.passed() {
                    EXIT_OK
                } else {
                    EXIT_CHECK_FAILED
                }
            }
            Err(e) => {
                eprintln!("error: cannot write outputs to {}: {e}", cfg.out.display());
                EXIT_USAGE
            }
        },
        Err(err @ fraclab::Error::InvalidParams(_)) => {
            eprintln!("error: {err}");
            EXIT_USAGE
        }
        Err(err) => {
            eprintln!("error: {err}");
            match report::write_error(sub, &cfg, &err) {
                Ok(text) => print!("{text}"),
                Err(e) => eprintln!("error: cannot write diagnostics: {e}"),
            }
            EXIT_NUMERIC
        }
    }
}
