//! `delzant`: validate polytopes, evaluate divergences and geodesics, and run
//! the boundary checks from JSON inputs.

mod commands;
mod input;
mod output;
mod tolerances;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use output::Format;
use tolerances::Tolerances;

#[derive(Parser)]
#[command(name = "delzant", version, about = "Dually flat geometry of Delzant polytopes")]
struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Seed for all random sampling.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Tolerance override, e.g. `--tol pythagoras=1e-7`. Repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    tol: Vec<String>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Delzant and zero-sum checks for a polytope.
    Validate { file: PathBuf },
    /// Bregman divergences (and KL, for zero-sum polytopes) of point pairs.
    Divergence {
        file: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
    /// Points of a flat or dual geodesic, with the limit for dual ones.
    Geodesic {
        file: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Face divergences, continuity checks and foot points on one face.
    Boundary {
        file: PathBuf,
        /// Comma-separated facet numbers, starting at 1.
        #[arg(long)]
        face: String,
        #[arg(long)]
        points: PathBuf,
    },
    /// Pythagorean relation for one triple.
    Pythagoras {
        file: PathBuf,
        #[arg(long)]
        triple: PathBuf,
    },
    /// Mixture family of a polytope, or the polytope of a mixture family.
    Torify { file: PathBuf },
    /// Run every check on the scenarios in a file.
    VerifyAll { file: PathBuf },
}

fn run(cli: &Cli) -> Result<output::Output> {
    let tol = Tolerances::with_overrides(&cli.tol)?;
    match &cli.command {
        Command::Validate { file } => commands::validate(file),
        Command::Divergence { file, points } => commands::divergence(file, points),
        Command::Geodesic { file, spec } => commands::geodesic(file, spec),
        Command::Boundary { file, face, points } => commands::boundary_cmd(file, face, points, &tol),
        Command::Pythagoras { file, triple } => commands::pythagoras(file, triple, &tol),
        Command::Torify { file } => commands::torify(file),
        Command::VerifyAll { file } => commands::verify_all(file, cli.seed, &tol),
    }
}

/// Errors in the input itself exit with 2, failures during computation with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<input::InputError>()) {
        return 2;
    }
    match err.downcast_ref::<delzant_core::Error>() {
        Some(
            delzant_core::Error::Parse(_)
            | delzant_core::Error::InvalidInput(_)
            | delzant_core::Error::DimensionMismatch { .. }
            | delzant_core::Error::Inconsistent(_),
        ) => 2,
        _ if err.chain().any(|e| e.is::<std::io::Error>()) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        let mut buf = Vec::new();
        output::write(&out, cli.format, &mut buf)?;
        match &cli.out {
            Some(path) => std::fs::write(path, &buf)
                .map_err(|e| input::InputError(format!("cannot write {}: {e}", path.display())))?,
            None => std::io::stdout().write_all(&buf)?,
        }
        Ok(out.pass)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
