use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ecqt::cli::{self, Format, RunConfig, RunContext};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Verb {
    Simulate,
    Scan,
    Reformulate,
    Circuit,
    Classify,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Bin,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Bin => Format::Bin,
        }
    }
}

/// Simulate, rewrite and classify dynamics driven by history-dependent Hamiltonians.
#[derive(Debug, Parser)]
#[command(name = "ecqt", version)]
struct Args {
    verb: Verb,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Parallel workers for scans.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Seed for stochastic components (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(summary) => {
            // A closed stdout (e.g. piped into `head`) is not a failure.
            let _ = writeln!(std::io::stdout(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ecqt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> ecqt::Result<String> {
    let cfg = RunConfig::load(&args.config)?;
    let verb = format!("{:?}", args.verb).to_lowercase();
    if cfg.verb.name() != verb {
        return Err(ecqt::Error::Config(format!(
            "command verb {verb} does not match the config verb {}",
            cfg.verb.name()
        )));
    }
    let ctx = RunContext {
        out_dir: args.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out")),
        format: args.format.map(Format::from).or(cfg.format).unwrap_or_default(),
        workers: args.workers.max(1),
        seed: args.seed.unwrap_or(cfg.seed),
        config_digest: cfg.digest(),
    };
    let outcome = cli::run(&cfg, &ctx)?;
    Ok(serde_json::to_string_pretty(&outcome.summary)?)
}
