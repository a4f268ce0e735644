//! Command-line front end for `paratransfer-core`: configuration, network
//! documents, sweep drivers and CSV/JSON output.

use std::io::Write;
use std::path::Path;

use paratransfer_core::Error;

pub mod config;
pub mod experiments;
pub mod network;
pub mod table;

pub use config::{Experiment, ExperimentKind, Job, Settings};
pub use table::{Format, Table};

/// Environment variable read for the worker count.
pub const WORKERS_ENV: &str = "PARATRANSFER_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure::Config(message.into())
    }

    /// 2 for bad input, 3 for exceeded numerical resources, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Core(Error::Resource(_) | Error::Truncation { .. }) => 3,
            Failure::Core(Error::InvalidArgument(_) | Error::NodeOutOfRange { .. }) => 2,
            Failure::Core(_) | Failure::Io(_) => 1,
        }
    }
}

/// Sets up the global worker pool from [`WORKERS_ENV`]; unset or `0` means
/// one worker per core.
pub fn init_workers() -> Result<(), Failure> {
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::config(format!("{WORKERS_ENV} must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Failure::Io(format!("cannot start worker pool: {e}")))
}

/// Runs a validated job and writes its table. A file is only created once
/// the whole table exists, and is replaced atomically.
pub fn execute(job: &Job) -> Result<(), Failure> {
    let table = experiments::run(&job.experiment)?;
    let bytes = table.render(job.format);
    match &job.output {
        Some(path) => write_atomically(path, &bytes),
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let name = path
        .file_name()
        .ok_or_else(|| Failure::config(format!("{}: output is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}
