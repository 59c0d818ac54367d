//! Command-line front end for `rds-sync`: spec ingestion, experiment
//! subcommands and the bundled examples.

pub mod args;
pub mod bundled;
pub mod commands;
pub mod failure;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use rds_sync::noise::{format_seed, parse_seed};

use crate::args::{Cli, Format};
use crate::commands::{Context, Rendered};
use crate::failure::Failure;

fn resolve_seed(text: Option<&str>) -> Result<u128, Failure> {
    match text {
        Some(t) => parse_seed(t).ok_or_else(|| {
            Failure::spec("InvalidSeed", format!("{t:?} is not a hex seed of at most 32 digits"))
        }),
        None => {
            let seed: u128 = rand::random();
            eprintln!("rds-sync: using generated seed {}", format_seed(seed));
            Ok(seed)
        }
    }
}

fn emit(cli: &Cli, rendered: &Rendered) -> Result<(), Failure> {
    let (body, ext) = match cli.global.format {
        Format::Json => (&rendered.json, "json"),
        Format::Csv => (&rendered.csv, "csv"),
    };
    match &cli.global.out {
        Some(dir) => {
            let io = |e: std::io::Error| Failure::internal("IoError", format!("{}: {e}", dir.display()));
            fs::create_dir_all(dir).map_err(io)?;
            let path = dir.join(format!("{}.{ext}", rendered.stem));
            fs::write(&path, body).map_err(io)?;
            eprintln!("rds-sync: wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::internal("IoError", e.to_string()))?;
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let started = Instant::now();
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.get())
            .build_global()
            .map_err(|e| Failure::internal("ThreadPool", e.to_string()))?;
    }
    let ctx = Context {
        master: resolve_seed(cli.global.seed.as_deref())?,
        tolerances: cli.global.tolerances(),
        with_meta: !cli.global.no_meta,
        started,
    };
    let rendered = commands::run(&cli.command, &ctx)?;
    emit(cli, &rendered)?;
    for line in &rendered.summary {
        eprintln!("{line}");
    }
    if rendered.failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::checks(&rendered.failed))
    }
}

/// Runs the tool on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let failure = Failure::spec("UsageError", e.render().to_string().trim_end());
            eprintln!("{}", failure.to_json());
            return failure.exit_code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            failure.exit_code
        }
    }
}
