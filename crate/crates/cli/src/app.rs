//! Command-line definition and dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analyze::analyze;
use crate::corpus::write_corpus;
use crate::io::write_atomic;
use crate::report::to_json;
use crate::settings::{CliError, NumericFlags, Outcome, Settings};
use crate::spec::load_spec;
use crate::tensor::tensor;
use crate::verify::{table, verify_all, write_reports};

#[derive(Debug, Parser)]
#[command(name = "silov", version, about = "Šilov ideals, C*-envelopes and propagation numbers of finite-dimensional operator systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct OutputFlags {
    /// Also write the JSON report to this path (atomically).
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Print nothing on stdout.
    #[arg(long)]
    pub quiet: bool,
    /// Record wall-clock stage timings; reports are then no longer
    /// byte-reproducible.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze one system spec.
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Run the tensor-product checks on two system specs.
    Tensor {
        left: PathBuf,
        right: PathBuf,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Write a corpus of system specs and its manifest.
    Corpus {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        quiet: bool,
    },
    /// Analyze every system and check every pair listed in a corpus manifest.
    VerifyAll {
        corpus_dir: PathBuf,
        /// Worker threads for file-level parallelism.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Directory for one report file per system and pair.
        #[arg(long)]
        report_dir: Option<PathBuf>,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
}

fn emit(json: &str, output: &OutputFlags, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(p) = &output.json_out {
        write_atomic(p, json.as_bytes())?;
    }
    if !output.quiet {
        out.write_all(json.as_bytes()).map_err(|e| CliError::input(format!("stdout: {e}")))?;
    }
    Ok(())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match cmd {
        Command::Analyze { path, numeric, output } => {
            let settings = Settings::from_env(&numeric)?;
            let loaded = load_spec(&path)?;
            let report = analyze(&loaded, &settings, output.timing).report;
            emit(&to_json(&report), &output, out)?;
            Ok(report.outcome())
        }
        Command::Tensor { left, right, numeric, output } => {
            let settings = Settings::from_env(&numeric)?;
            let (l, r) = (load_spec(&left)?, load_spec(&right)?);
            let report = tensor(&l, &r, &settings, output.timing);
            emit(&to_json(&report), &output, out)?;
            Ok(report.outcome())
        }
        Command::Corpus { out_dir, seed, count, quiet } => {
            let m = write_corpus(&out_dir, seed, count)?;
            if !quiet {
                let _ = writeln!(out, "wrote {} systems and {} pairs to {}", m.systems.len(), m.pairs.len(), out_dir.display());
            }
            Ok(Outcome::Ok)
        }
        Command::VerifyAll { corpus_dir, jobs, report_dir, numeric, output } => {
            let settings = Settings::from_env(&numeric)?;
            let summary = verify_all(&corpus_dir, &settings, jobs, output.timing)?;
            if let Some(p) = &output.json_out {
                write_atomic(p, to_json(&summary).as_bytes())?;
            }
            if let Some(d) = &report_dir {
                write_reports(&summary, d)?;
            }
            if !output.quiet {
                let _ = out.write_all(table(&summary).as_bytes());
            }
            Ok(summary.outcome())
        }
    }
}

/// Runs a parsed command line and returns the process exit code. Errors go
/// to `err`, reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli.command, out) {
        Ok(o) => o.code(),
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.outcome.code()
        }
    }
}

/// Convenience for tests: parse `args` (without the program name) and run.
pub fn run_args<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("silov")).chain(args.into_iter().map(Into::into));
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(cli, out, err),
        // Usage errors are input errors; help and version go to stdout.
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{}", e.render());
            Outcome::Input.code()
        }
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            0
        }
    }
}

