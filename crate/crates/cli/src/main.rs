mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};
use output::Report;

/// Caps the rayon pool at `HANDCLOUD_THREADS` when set.
fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("HANDCLOUD_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("HANDCLOUD_THREADS must be a positive integer (got '{value}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot configure {threads} threads: {e}")))
}

fn run(cli: &Cli) -> CliResult<Report> {
    configure_threads()?;
    match &cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Fuse(a) => commands::fuse_views(a),
        Command::Segment(a) => commands::segment(a),
        Command::Template(a) => commands::template(a),
        Command::SampleMesh(a) => commands::sample_mesh(a),
        Command::TrainDemo(a) => commands::train_demo(a),
        Command::PoseMetrics(a) => commands::pose_metrics(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli).and_then(|report| report.print(cli.json)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("handcloud: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
