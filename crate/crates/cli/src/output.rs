use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use subradiance::sweep::{PointStatus, SweepResult, SweepSpec};

use crate::error::{io_error, CliError};

pub use subradiance::sweep::format_float;

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(io_error(path))
}

/// Write to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(io_error("<stdout>"))
        }
    }
}

pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn write_sweep(result: &SweepResult, path: &Path) -> Result<(), CliError> {
    write_file(path, &sweep_csv(result)?)
}

/// `out.csv` → `out.json`; a path already ending in `.json` gets `.sidecar.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("sidecar.json")
    } else {
        out.with_extension("json")
    }
}

#[derive(Serialize)]
struct StatusCounts {
    ok: usize,
    undefined: usize,
    cutoff_violation: usize,
    solver_error: usize,
}

#[derive(Serialize)]
struct RowNote<'a> {
    index: usize,
    status: PointStatus,
    message: &'a str,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a SweepSpec,
    grid_size: usize,
    status_counts: StatusCounts,
    notes: Vec<RowNote<'a>>,
}

/// Resolved spec, status counts and the message of every non-ok row. Timing
/// is left out so that the file is as reproducible as the CSV.
pub fn sweep_sidecar(result: &SweepResult) -> Result<String, CliError> {
    let sidecar = Sidecar {
        spec: &result.spec,
        grid_size: result.rows.len(),
        status_counts: StatusCounts {
            ok: result.count(PointStatus::Ok),
            undefined: result.count(PointStatus::Undefined),
            cutoff_violation: result.count(PointStatus::CutoffViolation),
            solver_error: result.count(PointStatus::SolverError),
        },
        notes: result
            .rows
            .iter()
            .filter_map(|r| r.message.as_deref().map(|m| RowNote { index: r.index, status: r.status, message: m }))
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&sidecar)?;
    s.push('\n');
    Ok(s)
}
