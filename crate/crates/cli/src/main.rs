use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use hk::config::Config;
use hk::report::report_errors;
use hk::run::{run, Command};
use hk::CliError;

#[derive(Debug, Parser)]
#[command(name = "hk", version, about = "Periodic homogenization experiments")]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Output directory; defaults to the config's `output` or `hk-out`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; falls back to HK_THREADS.
    #[arg(long, env = "HK_THREADS")]
    threads: Option<usize>,
}

fn execute(args: &Args) -> Result<(), CliError> {
    if let Some(k) = args.threads {
        // Failing here only means a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let bytes = std::fs::read(&args.config).map_err(CliError::io(&args.config))?;
    let cfg = Config::from_bytes(&bytes)?;
    let result = run(args.command, &cfg)?;
    let errors = report_errors(&result.report);
    if let Some((ptr, msg)) = errors.first() {
        return Err(CliError::Verify(format!("report does not match its schema at {ptr:?}: {msg}")));
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("hk-out").to_path_buf());
    for path in result.outputs.write_all(&dir)? {
        println!("{}", path.display());
    }
    match result.failure {
        Some(f) => Err(CliError::Verify(f)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
