use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use p2dyn::verify::{run_subcommand, ExperimentConfig};
use p2dyn::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Subcommand {
    Exponents,
    Dimension,
    Slice,
    Entropy,
    Verify,
}

impl Subcommand {
    fn name(self) -> &'static str {
        match self {
            Self::Exponents => "exponents",
            Self::Dimension => "dimension",
            Self::Slice => "slice",
            Self::Entropy => "entropy",
            Self::Verify => "verify",
        }
    }
}

/// Ergodic-theory experiments on endomorphisms of P².
///
/// Exit codes: 0 pass, 1 an inequality failed, 2 configuration or usage
/// error, 3 only inconclusive results.
#[derive(Debug, Parser)]
#[command(name = "p2dyn", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// `key=value` experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out=` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match ExperimentConfig::parse(&text, cli.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = cli.out {
        config.out = out;
    }
    match run_subcommand(cli.subcommand.name(), &config) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            let code = match e {
                Error::Config(_) | Error::Parse { .. } | Error::Usage(_) | Error::InvalidArgument(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
