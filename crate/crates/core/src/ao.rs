//! Alternating optimization of the hybrid beamformers and the RIS phases.
//!
//! The beamformer half factors the SVD precoder/combiner column by column
//! into unit-modulus RF columns and a small baseband matrix. The phase half
//! is a one-vs-rest coordinate search over the discrete phase set, scored by
//! the log-determinant proxy `log2 det(rho / (delta^2 N_s) He_bar He_bar^H)`
//! with `He_bar = W^H H2 Phi H1 F`.

use std::io::Write;

use crate::beamforming::{achievable_rate, optimal_digital_beamformers, HybridBeamformers};
use crate::channel::{cascade, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{cis, hermitian_logdet2, ComplexMatrix, C64};
use crate::ris::RisState;

pub const DEFAULT_MAX_OUTER: usize = 10;
pub const DEFAULT_TOL: f64 = 1e-3;

/// How each column of a fully-digital beamformer is realized.
#[derive(Clone, Debug, PartialEq)]
pub struct CbcPlan {
    /// Columns written exactly as `d_max (p + q)`.
    pub exact_columns: Vec<usize>,
    /// Columns approximated by one phase-only column times the mean magnitude.
    pub approx_columns: Vec<usize>,
    pub d_max: Vec<f64>,
    /// `sum_i (|f_i| - ||f||_1 / N)^2` per column.
    pub variances: Vec<f64>,
}

/// Splits `col` into two unit-modulus vectors with `d_max (p + q) = col`.
pub fn constant_magnitude_split(col: &[C64], d_max: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(Error::InvalidInput(format!("split amplitude must be positive, got {d_max}")));
    }
    let bound = 2.0 * d_max;
    let mut p = Vec::with_capacity(col.len());
    let mut q = Vec::with_capacity(col.len());
    for (index, z) in col.iter().enumerate() {
        let magnitude = z.norm();
        if magnitude > bound {
            return Err(Error::InfeasibleSplit { index, magnitude, bound });
        }
        let theta = (magnitude / bound).acos();
        let arg = z.arg();
        p.push(cis(arg + theta));
        q.push(cis(arg - theta));
    }
    Ok((p, q))
}

fn column_stats(f: &ComplexMatrix, j: usize) -> (f64, f64, f64) {
    let n = f.rows() as f64;
    let mags: Vec<f64> = (0..f.rows()).map(|i| f[(i, j)].norm()).collect();
    let l1: f64 = mags.iter().sum();
    let mean = l1 / n;
    let var = mags.iter().map(|m| (m - mean) * (m - mean)).sum();
    let d_max = mags.iter().cloned().fold(0.0, f64::max);
    (d_max, var, mean)
}

/// Column classification for `m_chains` RF chains: every column exact when
/// `M >= 2 N_s`, otherwise the `2 N_s - M` least-variance columns are
/// approximated (ties broken by index).
pub fn plan_cbc(f_opt: &ComplexMatrix, m_chains: usize) -> Result<CbcPlan> {
    let n_s = f_opt.cols();
    if m_chains < n_s {
        return Err(Error::InvalidInput(format!("{m_chains} RF chains cannot carry {n_s} streams")));
    }
    let stats: Vec<(f64, f64, f64)> = (0..n_s).map(|j| column_stats(f_opt, j)).collect();
    let d_max = stats.iter().map(|s| s.0).collect();
    let variances: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let n_approx = (2 * n_s).saturating_sub(m_chains);
    let mut order: Vec<usize> = (0..n_s).collect();
    order.sort_by(|&a, &b| variances[a].total_cmp(&variances[b]).then(a.cmp(&b)));
    let mut approx_columns: Vec<usize> = order[..n_approx].to_vec();
    approx_columns.sort_unstable();
    let exact_columns = (0..n_s).filter(|j| !approx_columns.contains(j)).collect();
    Ok(CbcPlan { exact_columns, approx_columns, d_max, variances })
}

/// Hybrid factors for a given plan, before any power normalization.
///
/// RF columns are handed out in column order (two per exact column, one per
/// approximated column); unused RF columns are all-ones with zero baseband
/// rows. An all-zero column maps to an all-ones RF column and a zero
/// baseband entry.
pub fn factor_with_plan(f_opt: &ComplexMatrix, m_chains: usize, plan: &CbcPlan) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (n, n_s) = f_opt.shape();
    let needed = 2 * plan.exact_columns.len() + plan.approx_columns.len();
    if plan.exact_columns.len() + plan.approx_columns.len() != n_s || needed > m_chains {
        return Err(Error::InvalidInput(format!(
            "plan needs {needed} RF chains for {n_s} columns, {m_chains} available"
        )));
    }
    let ones = vec![C64::new(1.0, 0.0); n];
    let mut rf = ComplexMatrix::zeros(n, m_chains);
    for r in 0..m_chains {
        rf.set_column(r, &ones);
    }
    let mut bb = ComplexMatrix::zeros(m_chains, n_s);
    let mut next = 0;
    for j in 0..n_s {
        let col = f_opt.column(j);
        let d_max = col.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if plan.exact_columns.contains(&j) {
            if d_max > 0.0 {
                let (p, q) = constant_magnitude_split(&col, d_max)?;
                rf.set_column(next, &p);
                rf.set_column(next + 1, &q);
                bb[(next, j)] = C64::new(d_max, 0.0);
                bb[(next + 1, j)] = C64::new(d_max, 0.0);
            }
            next += 2;
        } else {
            if d_max > 0.0 {
                let mean = col.iter().map(|z| z.norm()).sum::<f64>() / n as f64;
                let phases: Vec<C64> = col.iter().map(|z| cis(z.arg())).collect();
                rf.set_column(next, &phases);
                bb[(next, j)] = C64::new(mean, 0.0);
            }
            next += 1;
        }
    }
    Ok((rf, bb))
}

/// Column-by-column factorization `f_opt ~ rf bb` (no normalization).
pub fn cbc_factor(f_opt: &ComplexMatrix, m_chains: usize) -> Result<(ComplexMatrix, ComplexMatrix, CbcPlan)> {
    let plan = plan_cbc(f_opt, m_chains)?;
    let (rf, bb) = factor_with_plan(f_opt, m_chains, &plan)?;
    Ok((rf, bb, plan))
}

/// Rescales `bb` so that `||rf bb||_F^2 = target`. A zero product is left alone.
pub fn normalize_power(rf: &ComplexMatrix, bb: &ComplexMatrix, target: f64) -> ComplexMatrix {
    let e = (rf * bb).frobenius_norm_sq();
    if e > 0.0 {
        bb.scale_real((target / e).sqrt())
    } else {
        bb.clone()
    }
}

/// Precoder (power-normalized to `N_s`) and combiner (not normalized)
/// factored from the SVD beamformers of `h_e`.
pub fn hybrid_beamformers(h_e: &ComplexMatrix, cfg: &SystemConfig) -> Result<HybridBeamformers> {
    let (f_opt, w_opt) = optimal_digital_beamformers(h_e, cfg.n_s)?;
    let (f_rf, f_bb, _) = cbc_factor(&f_opt, cfg.m_bs)?;
    let f_bb = normalize_power(&f_rf, &f_bb, cfg.n_s as f64);
    let (w_rf, w_bb, _) = cbc_factor(&w_opt, cfg.m_ms)?;
    Ok(HybridBeamformers { f_rf, f_bb, w_rf, w_bb, f_opt, w_opt })
}

/// `P_n` and `Q_n` for element `n`.
///
/// `h1f = H1 F` (`N_RIS x N_s`, row `n` is `h1_n^H`), `wh2 = W^H H2`
/// (`N_s x N_RIS`, column `n` is `h2_n`).
pub fn compute_pq(
    n: usize,
    h1f: &ComplexMatrix,
    wh2: &ComplexMatrix,
    phases: &[f64],
    mu_bar: f64,
) -> (ComplexMatrix, ComplexMatrix) {
    let n_s = wh2.rows();
    let mut rest = ComplexMatrix::zeros(n_s, n_s);
    for i in 0..phases.len() {
        if i != n {
            let c = cis(phases[i]) * mu_bar;
            for r in 0..n_s {
                let a = wh2[(r, i)] * c;
                for s in 0..n_s {
                    rest[(r, s)] += a * h1f[(i, s)];
                }
            }
        }
    }
    pq_from_rest(n, h1f, wh2, &rest, mu_bar)
}

fn outer_term(n: usize, h1f: &ComplexMatrix, wh2: &ComplexMatrix) -> ComplexMatrix {
    let n_s = wh2.rows();
    ComplexMatrix::from_fn(n_s, n_s, |r, s| wh2[(r, n)] * h1f[(n, s)])
}

fn pq_from_rest(
    n: usize,
    h1f: &ComplexMatrix,
    wh2: &ComplexMatrix,
    rest: &ComplexMatrix,
    mu_bar: f64,
) -> (ComplexMatrix, ComplexMatrix) {
    let t = outer_term(n, h1f, wh2);
    let rest_h = rest.adjoint();
    let p = &(&t * &t.adjoint()).scale_real(mu_bar * mu_bar) + &(rest * &rest_h);
    let q = &t * &rest_h;
    (p, q)
}

/// `log2 det(c (P + phi Q + phi^* Q^H))` with `phi = mu_bar e^{j theta}`.
fn score(p: &ComplexMatrix, q: &ComplexMatrix, theta: f64, mu_bar: f64, c: f64) -> Result<f64> {
    let phi = cis(theta) * mu_bar;
    let m = &(p + &q.scale(phi)) + &q.adjoint().scale(phi.conj());
    hermitian_logdet2(&m.scale_real(c).hermitian_part())
}

fn proxy(h1f: &ComplexMatrix, wh2: &ComplexMatrix, phases: &[f64], mu_bar: f64, c: f64) -> Result<f64> {
    let coeffs: Vec<C64> = phases.iter().map(|&p| cis(p) * mu_bar).collect();
    let scaled = ComplexMatrix::from_fn(h1f.rows(), h1f.cols(), |i, j| coeffs[i] * h1f[(i, j)]);
    let he = wh2 * &scaled;
    hermitian_logdet2(&(&he * &he.adjoint()).scale_real(c).hermitian_part())
}

/// One row of the sweep trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepTraceRow {
    pub outer_iter: usize,
    pub element_index: usize,
    pub chosen_phase_deg: f64,
    pub r_tilde: f64,
}

/// Result of one coordinate sweep.
#[derive(Clone, Debug)]
pub struct LinearSearchOutcome {
    pub ris: RisState,
    /// Proxy value of the starting state followed by the value after each
    /// element update; length `N_RIS + 1`.
    pub r_tilde: Vec<f64>,
}

/// One ascending sweep of the one-vs-rest search with `F`, `W` fixed.
///
/// The starting phases are quantized first. Each element keeps its current
/// phase unless a candidate scores strictly higher; an element whose
/// candidates all score `-inf` is left unchanged. If that happens for every
/// element the channel is reported as degenerate.
pub fn linear_search_phases(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    f: &ComplexMatrix,
    w: &ComplexMatrix,
    cfg: &SystemConfig,
    ris: &RisState,
) -> Result<LinearSearchOutcome> {
    let n = ris.len();
    if h1.rows() != n || h2.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "surface has {n} elements, H1 has {} rows, H2 has {} columns",
            h1.rows(),
            h2.cols()
        )));
    }
    let h1f = h1.checked_mul(f)?;
    let wh2 = w.adjoint().checked_mul(h2)?;
    if h1f.cols() != wh2.rows() {
        return Err(Error::DimensionMismatch("precoder and combiner carry different stream counts".into()));
    }
    let n_s = wh2.rows();
    let mu = ris.mu_bar();
    let c = cfg.rho / (cfg.delta_sq * n_s as f64);
    let mut state = ris.quantized();
    let mut phases = state.phases().to_vec();
    let candidates = state.phase_set().angles().to_vec();

    let mut total = ComplexMatrix::zeros(n_s, n_s);
    for i in 0..n {
        total = &total + &outer_term(i, &h1f, &wh2).scale(cis(phases[i]) * mu);
    }

    let mut history = Vec::with_capacity(n + 1);
    let mut current = proxy(&h1f, &wh2, &phases, mu, c)?;
    history.push(current);
    let mut all_degenerate = true;
    for k in 0..n {
        let t = outer_term(k, &h1f, &wh2);
        let rest = &total - &t.scale(cis(phases[k]) * mu);
        let (p, q) = pq_from_rest(k, &h1f, &wh2, &rest, mu);
        let mut best_theta = phases[k];
        let mut best = score(&p, &q, best_theta, mu, c)?;
        for &theta in &candidates {
            let s = score(&p, &q, theta, mu, c)?;
            if s > best {
                best = s;
                best_theta = theta;
            }
        }
        if best > f64::NEG_INFINITY {
            all_degenerate = false;
        }
        phases[k] = best_theta;
        total = &rest + &t.scale(cis(best_theta) * mu);
        // Recorded values never drop below the incumbent; recomputation noise
        // is absorbed by the max.
        current = current.max(best);
        history.push(current);
    }
    if all_degenerate {
        return Err(Error::DegenerateChannel);
    }
    state = state.with_new_phases(phases)?;
    Ok(LinearSearchOutcome { ris: state, r_tilde: history })
}

/// Result of the alternating optimization.
#[derive(Clone, Debug)]
pub struct AoOutcome {
    pub beamformers: HybridBeamformers,
    pub ris: RisState,
    pub rate: f64,
    /// Hybrid rate after initialization and after each outer iteration.
    pub rate_history: Vec<f64>,
    /// Number of outer iterations executed.
    pub outer_iterations: usize,
    pub converged: bool,
    pub sweep_trace: Vec<SweepTraceRow>,
}

fn factorize(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    cfg: &SystemConfig,
    ris: &RisState,
) -> Result<(HybridBeamformers, f64)> {
    let h_e = cascade(h1, ris, h2)?;
    let bf = hybrid_beamformers(&h_e, cfg)?;
    let rate = achievable_rate(&h_e, &bf.precoder(), &bf.combiner(), cfg)?;
    Ok((bf, rate))
}

/// Alternates hybrid factorization and one phase sweep, starting from zero
/// phases, for at most `max_outer` iterations or until the rate changes by
/// less than `tol`. The best iterate seen is returned.
pub fn ao_optimize(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    cfg: &SystemConfig,
    ris_template: &RisState,
    max_outer: usize,
    tol: f64,
) -> Result<AoOutcome> {
    let mut ris = ris_template.with_new_phases(vec![0.0; ris_template.len()])?;
    let (mut bf, mut rate) = factorize(h1, h2, cfg, &ris)?;
    let mut best = (bf.clone(), ris.clone(), rate);
    let mut rate_history = vec![rate];
    let mut sweep_trace = Vec::new();
    let mut converged = false;
    let mut outer_iterations = 0;
    for it in 1..=max_outer {
        let sweep = match linear_search_phases(h1, h2, &bf.precoder(), &bf.combiner(), cfg, &ris) {
            Ok(s) => s,
            Err(Error::DegenerateChannel) => break,
            Err(e) => return Err(e),
        };
        for (k, (&phase, &r)) in sweep.ris.phases().iter().zip(&sweep.r_tilde[1..]).enumerate() {
            sweep_trace.push(SweepTraceRow { outer_iter: it, element_index: k, chosen_phase_deg: phase.to_degrees(), r_tilde: r });
        }
        ris = sweep.ris;
        let prev = rate;
        (bf, rate) = factorize(h1, h2, cfg, &ris)?;
        rate_history.push(rate);
        outer_iterations = it;
        if rate > best.2 {
            best = (bf.clone(), ris.clone(), rate);
        }
        if (rate - prev).abs() < tol {
            converged = true;
            break;
        }
    }
    let (beamformers, ris, rate) = best;
    Ok(AoOutcome { beamformers, ris, rate, rate_history, outer_iterations, converged, sweep_trace })
}

/// Writes `outer_iter,element_index,chosen_phase_deg,r_tilde`.
pub fn write_sweep_trace_csv<W: Write>(rows: &[SweepTraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "outer_iter,element_index,chosen_phase_deg,r_tilde")?;
    for r in rows {
        writeln!(out, "{},{},{:.6},{:e}", r.outer_iter, r.element_index, r.chosen_phase_deg, r.r_tilde)?;
    }
    Ok(())
}
