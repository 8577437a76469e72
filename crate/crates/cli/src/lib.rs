pub mod args;
pub mod commands;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use serde::Serialize;

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_NON_CONVERGENCE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;
pub const EXIT_BAD_CONFIG: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] leeyang::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(leeyang::Error::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
            CliError::Core(_) | CliError::Config(_) => EXIT_BAD_CONFIG,
            CliError::Io(_) | CliError::Json(_) | CliError::Csv(_) => EXIT_IO,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(leeyang::Error::NonConvergence { .. }) => "non_convergence",
            CliError::Core(_) => "model",
            CliError::Config(_) => "config",
            CliError::Io(_) | CliError::Json(_) | CliError::Csv(_) => "io",
        }
    }
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    schema_version: u32,
    error: &'a str,
    message: String,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a Command>,
}

fn report_error(e: &CliError, config: Option<&Command>) -> i32 {
    let code = e.exit_code();
    let diag = Diagnostic {
        schema_version: output::SCHEMA_VERSION,
        error: e.kind(),
        message: e.to_string(),
        exit_code: code,
        config,
    };
    let text = serde_json::to_string(&diag).unwrap_or_else(|_| format!("{{\"message\":\"{e}\"}}"));
    eprintln!("{text}");
    code
}

/// Runs one command and returns its output document and exit code.
pub fn run(command: &Command) -> Result<(Vec<u8>, i32), CliError> {
    let a = command.args();
    let bytes = match command {
        Command::Zeros(_) => commands::cmd_zeros(a)?,
        Command::Scan(_) => commands::cmd_scan(a)?,
        Command::Detect(_) => commands::cmd_detect(a)?,
        Command::Qfim(_) => commands::cmd_qfim(a)?,
        Command::Critical(_) => commands::cmd_critical(a)?,
        Command::Report(_) => commands::cmd_report(a)?,
        Command::Verify(_) => {
            let (bytes, pass) = verify::cmd_verify(a)?;
            return Ok((bytes, if pass { EXIT_OK } else { EXIT_VERIFY_FAILED }));
        }
    };
    Ok((bytes, EXIT_OK))
}

fn write_output(command: &Command, bytes: &[u8]) -> Result<(), CliError> {
    match &command.args().out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return report_error(&CliError::Config("thread count must be at least 1".into()), None);
        }
        // A second call in the same process keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = run(&cli.command).and_then(|(bytes, code)| {
        write_output(&cli.command, &bytes)?;
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => report_error(&e, Some(&cli.command)),
    }
}
