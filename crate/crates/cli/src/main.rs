//! `pvi` — connection formulae, expansions and numerical checks for PVI.
//!
//! Every subcommand reads one JSON document (stdin or `--in`) and writes one
//! (stdout or `--out`).  Exit codes: 0 success, 2 invalid input, 3 the
//! computation is undefined for these data, 4 traces off the cubic surface.

mod commands;
mod json;
mod schema;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::Value;

use commands::{run, CliError, Command, JobSpec, Options, DEFAULT_MAX_RESIDUAL};

#[derive(Debug, Parser)]
#[command(name = "pvi", version, about = "Painlevé VI connection formulae and critical expansions")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Args)]
struct Io {
    /// Read the input document from this file instead of stdin.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Write the output document to this file instead of stdout.
    #[arg(long = "out", value_name = "FILE")]
    output: Option<PathBuf>,
    /// Print the input schema of this command and exit.
    #[arg(long)]
    schema: bool,
    /// Seed for randomized work (batch verification).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest accepted |cubic residual| of the input traces.
    #[arg(long, default_value_t = DEFAULT_MAX_RESIDUAL)]
    max_residual: f64,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Critical constants at 0, 1 and ∞ from θ and the traces.
    Connect(Io),
    /// Full expansion at one critical point.
    Expand(Io),
    /// Evaluate an expansion (value, derivatives, PVI residual).
    Eval(Io),
    /// Apply a braid generator or symmetry to trace coordinates.
    Braid(Io),
    /// Picard solutions for θ = (0, 0, 0, 1).
    Picard(Io),
    /// Integrate PVI from 0 to 1 and compare the fitted branch at 1 with the
    /// connection formulae.
    Verify {
        #[command(flatten)]
        io: Io,
        /// Verify this many random generic datasets in parallel.
        #[arg(long, value_name = "K")]
        batch: Option<usize>,
    },
    /// Run a job document `{command, payload, seed}`.
    Job(Io),
}

fn read_input(io: &Io) -> Result<Value, CliError> {
    let text = match &io.input {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?,
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Schema(format!("stdin: {e}")))?;
            s
        }
    };
    if text.trim().is_empty() {
        return Ok(Value::Object(Default::default()));
    }
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("malformed JSON: {e}")))
}

fn write_output(io: &Io, v: &Value) -> Result<(), CliError> {
    let text = json::to_string(v);
    match &io.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Schema(format!("stdout: {e}"))),
    }
}

fn execute(sub: &Sub) -> Result<(), CliError> {
    let (io, command, batch) = match sub {
        Sub::Connect(io) => (io, Some(Command::Connect), None),
        Sub::Expand(io) => (io, Some(Command::Expand), None),
        Sub::Eval(io) => (io, Some(Command::Eval), None),
        Sub::Braid(io) => (io, Some(Command::Braid), None),
        Sub::Picard(io) => (io, Some(Command::Picard), None),
        Sub::Verify { io, batch } => (io, Some(Command::Verify), *batch),
        Sub::Job(io) => (io, None, None),
    };
    if io.schema {
        let s = match command {
            Some(c) => schema::input_schema(c),
            None => schema::job_schema(),
        };
        return write_output(io, &s);
    }
    let input = read_input(io)?;
    let mut opts = Options {
        seed: io.seed,
        max_residual: io.max_residual,
        batch,
    };
    let (command, payload) = match command {
        Some(c) => (c, input),
        None => {
            let job: JobSpec = serde_json::from_value(input).map_err(|e| CliError::Schema(e.to_string()))?;
            opts.seed = job.seed;
            (job.command, job.payload)
        }
    };
    info!("running {command:?} (seed {})", opts.seed);
    let out = run(command, payload, &opts)?;
    write_output(io, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PVI_LOG")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
