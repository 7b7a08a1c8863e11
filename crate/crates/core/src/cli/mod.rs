//! Batch front end. Exit codes: 0 success, 1 usage, 2 invariant or
//! assertion failure, 3 corrupt state.

mod args;
mod commands;

pub use args::{Cli, Command};

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;

use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_CORRUPT: i32 = 3;

/// A failed run with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVARIANT, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotAMartingale { .. } | Error::Quadrature { .. } => EXIT_INVARIANT,
            Error::Corrupt(_) | Error::Json(_) => EXIT_CORRUPT,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Files written by one run, collected for the manifest.
pub struct Outputs {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    fn new(dir: PathBuf) -> CliResult<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        std::fs::write(self.path(name), contents)?;
        self.record(name);
        Ok(())
    }

    pub fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    /// Effective arguments after merging the config file.
    args: &'a [String],
    config: &'a Command,
    seed: Option<u64>,
    threads: Option<usize>,
    exit_code: i32,
    wall_time_seconds: f64,
    outputs: &'a [String],
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code. Messages go to stderr, the selftest table to stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = argv.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(f) => return report(f),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &argv) {
        Ok(code) => code,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> i32 {
    eprintln!("blochlab: {}", f.message);
    f.code
}

fn execute(cli: &Cli, argv: &[String]) -> CliResult<i32> {
    let name = cli.command.name();
    let dir = match &cli.out {
        Some(d) => d.clone(),
        None => default_root().join(name),
    };
    if cli.threads == Some(0) {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::usage(e.to_string()))?;
    let mut out = Outputs::new(dir)?;
    let start = Instant::now();
    let result = pool.install(|| commands::dispatch(&cli.command, &mut out));
    let code = match &result {
        Ok(()) => EXIT_OK,
        Err(f) => f.code,
    };
    if code == EXIT_OK || code == EXIT_INVARIANT {
        let manifest = Manifest {
            subcommand: name,
            version: env!("CARGO_PKG_VERSION"),
            args: &argv[1..],
            config: &cli.command,
            seed: cli.command.seed(),
            threads: cli.threads,
            exit_code: code,
            wall_time_seconds: start.elapsed().as_secs_f64(),
            outputs: &out.files,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
        std::fs::write(out.path("manifest.json"), text + "\n")?;
    }
    result.map(|()| EXIT_OK)
}

fn default_root() -> PathBuf {
    match std::env::var_os("BLOCHLAB_DATA_DIR") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from("blochlab-data"),
    }
}

/// Splices `--key=value` pairs from the `--config` file in front of the
/// subcommand's own flags, so later (command-line) occurrences override them.
fn merge_config(argv: Vec<String>) -> CliResult<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let pairs = read_config(Path::new(&path))?;
    let Some(at) = argv.iter().skip(1).position(|a| args::SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let at = at + 2;
    let mut merged = argv[..at].to_vec();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => merged.push(format!("--{k}")),
            "false" => {}
            _ => merged.push(format!("--{k}={v}")),
        }
    }
    merged.extend_from_slice(&argv[at..]);
    Ok(merged)
}

/// `key = value` lines; `#` starts a comment.
pub fn read_config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::usage(format!("config {}:{}: expected key=value", path.display(), n + 1)));
        };
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if k.is_empty() || k == "config" {
            return Err(Failure::usage(format!("config {}:{}: bad key", path.display(), n + 1)));
        }
        pairs.push((k, v.trim().to_string()));
    }
    Ok(pairs)
}
