//! CSV emission with a fixed number format so repeated runs diff cleanly.

use std::io::Write;

use thzris::complexity::CostRow;

use crate::runner::{ConvergenceResult, SweepRow};

pub const SWEEP_HEADER: &str = "sweep_value,algorithm,mean_rate_bpshz,std_rate,n_real,wall_ms";
pub const CONVERGENCE_HEADER: &str = "iteration,algorithm,mean_rate_bpshz";
pub const COMPLEXITY_HEADER: &str = "n_ris,cost_ao,cost_cgd,cost_agd,log10_ao,log10_cgd,log10_agd";

/// Fixed-point decimal with nine significant digits.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn write_sweep_rows<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt9(r.sweep_value),
            r.algorithm,
            fmt9(r.mean_rate),
            fmt9(r.std_rate),
            r.n_real,
            fmt9(r.wall_ms)
        )?;
    }
    Ok(())
}

pub fn write_convergence<W: Write>(res: &ConvergenceResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for (alg, curve) in &res.curves {
        for (i, v) in curve.iter().enumerate() {
            writeln!(out, "{i},{alg},{}", fmt9(*v))?;
        }
    }
    Ok(())
}

pub fn write_complexity<W: Write>(rows: &[CostRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{COMPLEXITY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n_ris,
            r.cost_ao,
            r.cost_cgd,
            r.cost_agd,
            fmt9(r.log10_ao()),
            fmt9(r.log10_cgd()),
            fmt9(r.log10_agd())
        )?;
    }
    Ok(())
}
