//! `jdq`: joint damage quantification from color-masked reconstructions.

mod commands;
mod error;
mod timing;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing::Level;

use crate::error::{CliError, ErrorReport};
use crate::timing::RunReport;

#[derive(Debug, Parser)]
#[command(
    name = "jdq",
    version,
    about = "Quantify joint damage on color-masked meshes and images"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Write per-stage timings as JSON, including on failure.
    #[arg(long, global = true)]
    timing_json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect damaged faces and compute the Joint Damage Index.
    Quantify(commands::QuantifyArgs),
    /// Recall, error and JDI over a list of red thresholds, as CSV.
    Sweep(commands::SweepArgs),
    /// Area-weighted recall and error of a 3D detection.
    Eval3d(commands::Eval3dArgs),
    /// Pixel recall and error of a predicted mask.
    Eval2d(commands::Eval2dArgs),
    /// Paint masked pixels of an image with a sentinel color.
    Mask(commands::MaskArgs),
    /// Expand a directory of images with seeded random transforms.
    Augment(commands::AugmentArgs),
    /// Generate synthetic fixtures with known answers.
    Synth(commands::SynthArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Quantify(_) => "quantify",
            Command::Sweep(_) => "sweep",
            Command::Eval3d(_) => "eval3d",
            Command::Eval2d(_) => "eval2d",
            Command::Mask(_) => "mask",
            Command::Augment(_) => "augment",
            Command::Synth(_) => "synth",
        }
    }

    fn run(&self, run: &mut RunReport) -> Result<(), CliError> {
        match self {
            Command::Quantify(a) => commands::quantify(a, run),
            Command::Sweep(a) => commands::sweep(a, run),
            Command::Eval3d(a) => commands::eval3d(a, run),
            Command::Eval2d(a) => commands::eval2d(a, run),
            Command::Mask(a) => commands::mask(a, run),
            Command::Augment(a) => commands::augment(a, run),
            Command::Synth(a) => commands::synth(a, run),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => Level::WARN,
        1 => Level::INFO,
        _ => Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();

    let mut run = RunReport::new(cli.command.name());
    let result = cli.command.run(&mut run);
    run.finish();

    let timing = serde_json::to_string_pretty(&run).expect("run report serializes");
    if let Some(path) = &cli.timing_json {
        if let Err(e) = std::fs::write(path, format!("{timing}\n")) {
            eprintln!("warning: could not write timing report {}: {e}", path.display());
        }
    }

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let body = serde_json::to_string(&ErrorReport::new(&err)).expect("error report serializes");
            eprintln!("{body}");
            if cli.timing_json.is_none() {
                eprintln!("{timing}");
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
