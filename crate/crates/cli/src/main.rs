use std::path::PathBuf;
use std::process::ExitCode;

use affine_husimi_cli::commands::{cmd_evolve, cmd_husimi, cmd_quantize, cmd_verify, cmd_wigner, Outcome};
use affine_husimi_cli::config::RunConfig;
use affine_husimi_cli::CliError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "affine-husimi", version, about = "Affine Husimi and Wigner transforms on the half-line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key=value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides out_dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of probe points for verify (1..=25)
    #[arg(long, global = true, default_value_t = 25)]
    probes: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Husimi field of the state and of the symbol's operator (two paths)
    Husimi,
    /// Affine Wigner function of the state
    Wigner,
    /// Kernel dump and symbol round trip
    Quantize,
    /// Identity, Mellin route and rate comparison gates
    Verify,
    /// Husimi snapshots along the propagation
    Evolve,
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let mut cfg = RunConfig::from_env(cli.config.as_deref())?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    let out = match cli.command {
        Command::Husimi => cmd_husimi(&cfg)?,
        Command::Wigner => cmd_wigner(&cfg)?,
        Command::Quantize => cmd_quantize(&cfg)?,
        Command::Verify => cmd_verify(&cfg, cli.probes)?,
        Command::Evolve => cmd_evolve(&cfg)?,
    };
    if let Some(g) = out.failed().first() {
        return Err(CliError::Gate(format!("{}: {:e} > {:e}", g.name, g.value, g.tol)));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            eprintln!("config: {}", e.to_string().lines().next().unwrap_or("bad arguments"));
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
