//! On-disk formats of a run directory.
//!
//! All numbers are written with 17 significant digits, `.` as decimal
//! separator and `\n` line endings, so every `f64` round-trips exactly.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use flola::testbed::TestFunction;
use flola::{Design, SamplerConfig, ScoreTable};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SAMPLES: &str = "samples.csv";
pub const PROPOSED: &str = "proposed.csv";
pub const OBSERVED: &str = "observed.csv";
pub const RUN_META: &str = "run.json";
pub const STATE: &str = "state.json";
pub const LOCK: &str = ".lock";

pub const RUN_SCHEMA_VERSION: u32 = 1;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn coord_header(dim: usize) -> String {
    (1..=dim)
        .map(|k| format!("x{k}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn samples_csv(design: &Design) -> String {
    let mut out = format!("{},y,iteration\n", coord_header(design.dim()));
    for p in design.points() {
        for x in &p.coords {
            out.push_str(&fmt_f64(*x));
            out.push(',');
        }
        let _ = writeln!(out, "{},{}", fmt_f64(p.response), p.iteration);
    }
    out
}

pub fn scores_csv(table: &ScoreTable) -> String {
    let mut out = String::from("index,v,e,h\n");
    for i in 0..table.v.len() {
        let _ = writeln!(
            out,
            "{i},{},{},{}",
            fmt_f64(table.v[i]),
            fmt_f64(table.e[i]),
            fmt_f64(table.h[i])
        );
    }
    out
}

pub fn scores_file(iteration: usize) -> String {
    format!("scores_{iteration}.csv")
}

pub fn proposed_csv(coords: &[f64]) -> String {
    let row: Vec<String> = coords.iter().map(|x| fmt_f64(*x)).collect();
    format!("{}\n{}\n", coord_header(coords.len()), row.join(","))
}

/// Parses `observed.csv` (`x1,...,xd,y`) into `(coords, y)` rows.
pub fn parse_observed(text: &str, dim: usize) -> Result<Vec<(Vec<f64>, f64)>, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Runtime("observed.csv is empty".into()))?;
    let expected = format!("{},y", coord_header(dim));
    if header.trim() != expected {
        return Err(CliError::Runtime(format!(
            "observed.csv header is '{}', expected '{expected}'",
            header.trim()
        )));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let vals: Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            match vals {
                Ok(v) if v.len() == dim + 1 => Ok((v[..dim].to_vec(), v[dim])),
                _ => Err(CliError::Runtime(format!(
                    "observed.csv row {}: expected {} numbers, got '{line}'",
                    k + 1,
                    dim + 1
                ))),
            }
        })
        .collect()
}

/// `run.json`: everything needed to reproduce `samples.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub command: String,
    /// Built-in test function, absent for ask/tell runs.
    pub function: Option<TestFunction>,
    pub sampler: SamplerConfig,
}

impl RunMeta {
    pub fn new(command: &str, function: Option<TestFunction>, sampler: SamplerConfig) -> Self {
        Self {
            schema_version: RUN_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            core_version: flola::VERSION.into(),
            command: command.into(),
            function,
            sampler,
        }
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

pub fn read(dir: &Path, name: &str) -> Result<String, CliError> {
    let path = dir.join(name);
    fs::read_to_string(&path)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Runtime(e.to_string()))
}

/// Exclusive claim on a run directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))?;
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(File { .. }) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Runtime(format!(
                    "{} is locked by another command (remove {} if stale)",
                    dir.display(),
                    path.display()
                )))
            }
            Err(e) => Err(CliError::Runtime(format!("locking {}: {e}", dir.display()))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
