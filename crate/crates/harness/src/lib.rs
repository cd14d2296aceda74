//! Seeded Monte-Carlo experiments over the `thzris` kernels.
//!
//! An [`ExperimentSpec`] (usually loaded from JSON) resolves to an
//! [`Experiment`]; [`run_to_dir`] executes it and writes one CSV named after
//! the sweep kind. Output is byte-identical for a given spec and master seed
//! regardless of the thread count, unless wall-clock timing is switched on.

pub mod error;
pub mod output;
pub mod runner;
pub mod spec;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub use error::SimError;
pub use runner::{run_complexity, run_convergence, run_realization, run_sweep, ConvergenceResult, SweepResult, SweepRow};
pub use spec::{Algorithm, Experiment, ExperimentSpec, SweepKind};

/// Runs `exp` and writes `<dir>/<kind>.csv`; returns the file path.
pub fn run_to_dir(exp: &Experiment, dir: &Path) -> Result<PathBuf, SimError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.csv", exp.kind));
    let mut out = BufWriter::new(File::create(&path)?);
    match exp.kind {
        SweepKind::Convergence => {
            let res = run_convergence(exp)?;
            output::write_convergence(&res, &mut out)?;
        }
        SweepKind::Complexity => {
            let rows = run_complexity(exp)?;
            output::write_complexity(&rows, &mut out)?;
        }
        _ => {
            writeln!(out, "{}", output::SWEEP_HEADER)?;
            out.flush()?;
            run_sweep(exp, |rows| {
                output::write_sweep_rows(rows, &mut out)?;
                out.flush()?;
                Ok(())
            })?;
        }
    }
    out.flush()?;
    Ok(path)
}
