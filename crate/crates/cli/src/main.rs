//! `aseplab`: experiments on the open ASEP and its fluctuation limits.
//!
//! Exit codes: 0 when every graded row passes, 1 when one fails or a
//! computation breaks down, 2 on invalid input.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, ExperimentConfig, Flags};

#[derive(Parser)]
#[command(
    name = "aseplab",
    version,
    about = "Open ASEP phase diagnostics, identity checks and fluctuation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Boundary parameters, phase and bulk density of a rate set.
    Phase,
    /// Exact generating functions against the Askey-Wilson representation.
    VerifyAnsatz,
    /// Simulated height fluctuations against samples of the limit field.
    Fluctuations,
    /// Convergence of the rescaled Askey-Wilson kernel to the tangent kernel.
    TangentCheck,
    /// Excursion and meander Laplace transforms against their dual formulas.
    DualityCheck,
    /// Partition function and its phase-dependent asymptotics.
    Zn,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Phase => "phase",
            Command::VerifyAnsatz => "verify-ansatz",
            Command::Fluctuations => "fluctuations",
            Command::TangentCheck => "tangent-check",
            Command::DualityCheck => "duality-check",
            Command::Zn => "zn",
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = ExperimentConfig::resolve(&cli.flags)?;
    let report = match cli.command {
        Command::Phase => commands::phase(&cfg)?,
        Command::VerifyAnsatz => commands::verify_ansatz(&cfg)?,
        Command::Fluctuations => commands::fluctuations(&cfg)?,
        Command::TangentCheck => commands::tangent_check(&cfg)?,
        Command::DualityCheck => commands::duality_check(&cfg)?,
        Command::Zn => commands::zn(&cfg)?,
    };
    let hash = cfg.hash(cli.command.name());
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(&mut w, &cfg, &hash)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            report.write(&mut w, &cfg, &hash)?;
            w.flush()?;
        }
    }
    Ok(report.passed())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<aseplab::Error>() {
        Some(aseplab::Error::InvalidArgument { .. } | aseplab::Error::Unsupported(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
