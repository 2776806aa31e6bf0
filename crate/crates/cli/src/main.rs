use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use revpot_cli::commands::{self, Run};
use revpot_cli::config::{Format, RunConfig};
use revpot_cli::CliError;

/// Reversal potentials, zero-current fluxes and reversal charges of a
/// two-ion channel, written as CSV.
#[derive(Parser)]
#[command(name = "revpot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (default: `output.path` from the config, else stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Worker threads for sweeps (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Replaces `oracle.tolerance`
    #[arg(long, global = true)]
    tol_override: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Reversal potential and zero-current flux over the grid
    Vrev,
    /// Zero-current flux over the grid
    Flux,
    /// Reversal permanent charge for each potential
    Qrev,
    /// Singular-orbit junction values and matching residuals at one point
    Profile,
    /// Finite-epsilon reversal potentials against the reduced value
    Oracle,
    /// Goldman-Hodgkin-Katz reversal potential over the transport grid
    Ghk,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Vrev => "vrev",
            Command::Flux => "flux",
            Command::Qrev => "qrev",
            Command::Profile => "profile",
            Command::Oracle => "oracle",
            Command::Ghk => "ghk",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(tol) = cli.tol_override {
        let oracle = cfg.oracle.as_mut().ok_or_else(|| {
            CliError::Config("--tol-override given without an oracle section".into())
        })?;
        oracle.tolerance = tol;
        cfg.validate()?;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }

    let Run { table, failure } = match cli.command {
        Command::Vrev => commands::vrev(&cfg)?,
        Command::Flux => commands::flux(&cfg)?,
        Command::Qrev => commands::qrev(&cfg)?,
        Command::Profile => commands::profile(&cfg)?,
        Command::Oracle => commands::oracle(&cfg)?,
        Command::Ghk => commands::ghk(&cfg)?,
    };

    let preamble = format!(
        "revpot {} {}\n\n{}",
        cli.command.name(),
        env!("CARGO_PKG_VERSION"),
        cfg.to_toml()
    );
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()));
    match out {
        Some(p) => {
            let file = fs::File::create(&p)?;
            let mut w = BufWriter::new(file);
            table.write(&mut w, &preamble)?;
            w.flush()?;
        }
        None => table.write(io::stdout().lock(), &preamble)?,
    }
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("revpot: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
