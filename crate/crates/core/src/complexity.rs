//! Closed-form complex-multiplication counts of the optimizers.
//!
//! Counts reach `1e25` and beyond at realistic sizes, so everything is
//! evaluated in checked `u128` arithmetic.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem sizes and iteration counts entering the cost formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub n_bs: u64,
    pub n_ms: u64,
    pub n_ris: u64,
    pub m_bs: u64,
    pub n_s: u64,
    pub b: u32,
    pub i_a: u64,
    pub i_c: u64,
    pub i_o: u64,
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let sizes = [self.n_bs, self.n_ms, self.n_ris, self.m_bs, self.n_s];
        if sizes.contains(&0) || self.b == 0 {
            return Err(Error::InvalidInput("cost model sizes and bits must be >= 1".into()));
        }
        Ok(())
    }
}

struct Acc(&'static str);

impl Acc {
    fn mul(&self, a: u128, b: u128) -> Result<u128> {
        a.checked_mul(b).ok_or(Error::Overflow(self.0))
    }

    fn add(&self, a: u128, b: u128) -> Result<u128> {
        a.checked_add(b).ok_or(Error::Overflow(self.0))
    }

    fn pow(&self, a: u128, e: u32) -> Result<u128> {
        a.checked_pow(e).ok_or(Error::Overflow(self.0))
    }

    fn product(&self, xs: &[u128]) -> Result<u128> {
        xs.iter().try_fold(1u128, |acc, &x| self.mul(acc, x))
    }
}

/// `N_BS M_BS N_s + 2 N_BS N_s + N_BS + N_MS N_s + N_MS`.
pub fn cost_cbc(m: &CostModel) -> Result<u128> {
    m.validate()?;
    let a = Acc("cbc");
    let (n_bs, m_bs, n_s, n_ms) = (m.n_bs as u128, m.m_bs as u128, m.n_s as u128, m.n_ms as u128);
    let mut total = a.product(&[n_bs, m_bs, n_s])?;
    total = a.add(total, a.product(&[2, n_bs, n_s])?)?;
    total = a.add(total, n_bs)?;
    total = a.add(total, a.mul(n_ms, n_s)?)?;
    a.add(total, n_ms)
}

/// `2^(b+1) N_RIS^2 N_s^2 + 2^b N_RIS N_s^3`.
pub fn cost_linear_search(m: &CostModel) -> Result<u128> {
    m.validate()?;
    let a = Acc("linear search");
    let (n, n_s) = (m.n_ris as u128, m.n_s as u128);
    let two_b = a.pow(2, m.b)?;
    let first = a.product(&[2, two_b, a.pow(n, 2)?, a.pow(n_s, 2)?])?;
    let second = a.product(&[two_b, n, a.pow(n_s, 3)?])?;
    a.add(first, second)
}

/// `I_o (cost_cbc + cost_linear_search)`.
pub fn cost_ao(m: &CostModel) -> Result<u128> {
    let a = Acc("ao");
    let per_iter = a.add(cost_cbc(m)?, cost_linear_search(m)?)?;
    a.mul(m.i_o as u128, per_iter)
}

fn kronecker_setup(m: &CostModel, a: &Acc) -> Result<u128> {
    let (n_bs, n_ms, n) = (m.n_bs as u128, m.n_ms as u128, m.n_ris as u128);
    a.product(&[2, a.pow(n_bs, 3)?, a.pow(n_ms, 3)?, a.pow(n, 6)?])
}

/// `ceil(5/2 I_a N_RIS^2) + 2 N_BS^3 N_MS^3 N_RIS^6`.
pub fn cost_a_gd(m: &CostModel) -> Result<u128> {
    m.validate()?;
    let a = Acc("a-gd");
    let five = a.product(&[5, m.i_a as u128, a.pow(m.n_ris as u128, 2)?])?;
    let iter = five / 2 + five % 2;
    a.add(iter, kronecker_setup(m, &a)?)
}

/// `I_c N_RIS^2 + 2 N_BS^3 N_MS^3 N_RIS^6`.
pub fn cost_c_gd(m: &CostModel) -> Result<u128> {
    m.validate()?;
    let a = Acc("c-gd");
    let iter = a.mul(m.i_c as u128, a.pow(m.n_ris as u128, 2)?)?;
    a.add(iter, kronecker_setup(m, &a)?)
}

/// One row of the cost-versus-surface-size table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostRow {
    pub n_ris: u64,
    pub cost_ao: u128,
    pub cost_cgd: u128,
    pub cost_agd: u128,
}

fn log10_u128(x: u128) -> f64 {
    if x == 0 {
        f64::NEG_INFINITY
    } else {
        (x as f64).log10()
    }
}

impl CostRow {
    pub fn log10_ao(&self) -> f64 {
        log10_u128(self.cost_ao)
    }

    pub fn log10_cgd(&self) -> f64 {
        log10_u128(self.cost_cgd)
    }

    pub fn log10_agd(&self) -> f64 {
        log10_u128(self.cost_agd)
    }
}

/// Costs for every surface size in `n_ris_grid`, other parameters from `base`.
pub fn cost_table(base: &CostModel, n_ris_grid: &[u64]) -> Result<Vec<CostRow>> {
    n_ris_grid
        .iter()
        .map(|&n| {
            let m = CostModel { n_ris: n, ..*base };
            Ok(CostRow { n_ris: n, cost_ao: cost_ao(&m)?, cost_cgd: cost_c_gd(&m)?, cost_agd: cost_a_gd(&m)? })
        })
        .collect()
}

/// Writes `n_ris,cost_ao,cost_cgd,cost_agd,log10_ao,log10_cgd,log10_agd`.
pub fn write_cost_csv<W: Write>(rows: &[CostRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n_ris,cost_ao,cost_cgd,cost_agd,log10_ao,log10_cgd,log10_agd")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            r.n_ris,
            r.cost_ao,
            r.cost_cgd,
            r.cost_agd,
            r.log10_ao(),
            r.log10_cgd(),
            r.log10_agd()
        )?;
    }
    Ok(())
}
