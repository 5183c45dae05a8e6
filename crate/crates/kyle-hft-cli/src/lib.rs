//! The `kyle-eq` command line: single solves, parameter sweeps, limits,
//! thresholds, Monte-Carlo verification, figure presets and SVG plots.
//!
//! Exit codes: `0` success, `1` a check or computation failed, `2` usage or
//! parameter error, `3` no equilibrium at the requested point, `4` I/O.

mod cli;
pub mod config;
pub mod figures;
pub mod plot;
pub mod sweep;
pub mod table;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::Path;

use clap::Parser;

pub use cli::run;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Carries the diagnostic JSON of the failed solve.
    NoEquilibrium(String),
    Io(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::NoEquilibrium(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::NoEquilibrium(_) => f.write_str("no equilibrium at this point"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<kyle_hft::Error> for CliError {
    fn from(e: kyle_hft::Error) -> Self {
        use kyle_hft::Error as E;
        match e {
            E::ParameterDomain(_) | E::UnsupportedConfiguration(_) | E::RegimeMismatch(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Results go to stdout or `--out`, messages to stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match cli::Cli::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            if let CliError::NoEquilibrium(json) = &e {
                println!("{json}");
            }
            eprintln!("kyle-eq: {e}");
            e.exit_code()
        }
    }
}

/// Writes `text` to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Worker pool sized by `KYLE_EQ_THREADS` (unset or `0` means one worker per
/// core).
pub fn pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var("KYLE_EQ_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("KYLE_EQ_THREADS must be a worker count, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Failed(format!("cannot start workers: {e}")))
}
