//! Gradient descent on the RIS phases.
//!
//! The objective is `f(phi) = -||H2 Phi H1||_F^2 = x^H A x` with
//! `x = mu_bar e^{j phi}`. Only the diagonal-sampled entries of `A` are ever
//! read, so the optimizers work with the `N x N` reduced coupling
//! `b(p, q) = -(H2^H H2)[p, q] (H1 H1^H)[q, p]`.
//!
//! Two step rules share one loop: the adaptive rule minimizes a second-order
//! Taylor model of `f` along the negative gradient, the fixed rule uses a
//! constant step.

use std::io::Write;

use crate::beamforming::{achievable_rate, optimal_digital_beamformers};
use crate::channel::{cascade, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{cis, ComplexMatrix, C64};
use crate::ris::RisState;

pub const DEFAULT_A_GD_ITERATIONS: usize = 100;
pub const DEFAULT_C_GD_ITERATIONS: usize = 100;

/// Reduced coupling matrix, `N_RIS x N_RIS` and Hermitian.
pub fn build_coupling(h1: &ComplexMatrix, h2: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h2.cols() != h1.rows() {
        return Err(Error::DimensionMismatch(format!(
            "H2 has {} columns but H1 has {} rows",
            h2.cols(),
            h1.rows()
        )));
    }
    let g2 = &h2.adjoint() * h2;
    let g1 = h1 * &h1.adjoint();
    let n = h1.rows();
    let b = ComplexMatrix::from_fn(n, n, |p, q| -(g2[(p, q)] * g1[(q, p)]));
    Ok(b.hermitian_part())
}

fn unit_phasors(phases: &[f64]) -> Vec<C64> {
    phases.iter().map(|&p| cis(p)).collect()
}

/// `mu^2 sum_p b_pp + 2 mu^2 Re sum_{p<q} e^{j(phi_q - phi_p)} b_pq`.
pub fn objective(b_eff: &ComplexMatrix, phases: &[f64], mu_bar: f64) -> f64 {
    let n = phases.len();
    let z = unit_phasors(phases);
    let mut diag = 0.0;
    let mut cross = C64::new(0.0, 0.0);
    for p in 0..n {
        diag += b_eff[(p, p)].re;
        let zp = z[p].conj();
        for q in p + 1..n {
            cross += zp * z[q] * b_eff[(p, q)];
        }
    }
    mu_bar * mu_bar * (diag + 2.0 * cross.re)
}

/// Partial derivatives of [`objective`] with respect to each phase.
pub fn gradient(b_eff: &ComplexMatrix, phases: &[f64], mu_bar: f64) -> Vec<f64> {
    let n = phases.len();
    let z = unit_phasors(phases);
    let k = 2.0 * mu_bar * mu_bar;
    (0..n)
        .map(|m| {
            let mut s = C64::new(0.0, 0.0);
            for q in 0..n {
                if q != m {
                    s += b_eff[(m, q)] * z[q];
                }
            }
            k * (z[m].conj() * s).im
        })
        .collect()
}

/// Which branch of the step rule produced a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepCase {
    Convex,
    Concave,
    Flat,
}

/// Taylor model `c0 + c1 lambda + c2 lambda^2` of `f(phi - lambda g)` and the chosen step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub lambda: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub case: StepCase,
}

impl StepInfo {
    pub fn model(&self, lambda: f64) -> f64 {
        self.c0 + self.c1 * lambda + self.c2 * lambda * lambda
    }
}

/// Adaptive step from the second-order expansion of `e^{j lambda (g_p - g_q)}`.
///
/// `c2 > 0`: minimizer `-c1 / (2 c2)`. `c2 < 0`: `|c1| / |c2|`.
/// `c2 == 0`: `1 / (1 + ||g||_inf)`.
pub fn adaptive_step(b_eff: &ComplexMatrix, phases: &[f64], grad: &[f64], mu_bar: f64) -> StepInfo {
    let n = phases.len();
    let z = unit_phasors(phases);
    let mu2 = mu_bar * mu_bar;
    let mut c0 = 0.0;
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for p in 0..n {
        c0 += b_eff[(p, p)].re;
        for q in p + 1..n {
            let w = z[p].conj() * z[q] * b_eff[(p, q)];
            let d = grad[p] - grad[q];
            c0 += 2.0 * w.re;
            c1 -= 2.0 * w.im * d;
            c2 -= w.re * d * d;
        }
    }
    let (c0, c1, c2) = (mu2 * c0, mu2 * c1, mu2 * c2);
    let (lambda, case) = if c2 > 0.0 {
        (-c1 / (2.0 * c2), StepCase::Convex)
    } else if c2 < 0.0 {
        (c1.abs() / c2.abs(), StepCase::Concave)
    } else {
        let g_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        (1.0 / (1.0 + g_inf), StepCase::Flat)
    };
    StepInfo { lambda, c0, c1, c2, case }
}

/// Step selection for the descent loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Adaptive,
    Fixed(f64),
}

/// Fixed step for the constant-step variant: the best of
/// `10^-k / ||grad f(phi0)||_inf`, `k = 1..6`, after a single step.
pub fn calibrate_fixed_step(b_eff: &ComplexMatrix, phases: &[f64], mu_bar: f64) -> f64 {
    let g = gradient(b_eff, phases, mu_bar);
    let g_inf = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(g_inf > 0.0) {
        return 0.1;
    }
    let mut best = (f64::INFINITY, 0.0);
    for k in 1..=6 {
        let lambda = 10f64.powi(-k) / g_inf;
        let trial: Vec<f64> = phases.iter().zip(&g).map(|(p, gi)| p - lambda * gi).collect();
        let f = objective(b_eff, &trial, mu_bar);
        if f < best.0 {
            best = (f, lambda);
        }
    }
    best.1
}

/// One row of the optional per-iteration trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GdTraceRow {
    pub iteration: usize,
    pub step: f64,
    pub objective: f64,
    /// Cascaded energy `-f` of the incumbent after this iteration.
    pub incumbent: f64,
}

/// Mutable state of one descent run.
#[derive(Clone, Debug)]
pub struct GdWorkspace {
    pub b_eff: ComplexMatrix,
    pub mu_bar: f64,
    pub phases: Vec<f64>,
    pub best_phases: Vec<f64>,
    /// Incumbent cascaded energy `-f`.
    pub best_objective: f64,
    pub iteration: usize,
    pub max_iterations: usize,
}

impl GdWorkspace {
    /// Starts from all-zero phases.
    pub fn new(b_eff: ComplexMatrix, mu_bar: f64, max_iterations: usize) -> Self {
        let n = b_eff.rows();
        let phases = vec![0.0; n];
        let best_objective = -objective(&b_eff, &phases, mu_bar);
        Self { b_eff, mu_bar, best_phases: phases.clone(), phases, best_objective, iteration: 0, max_iterations }
    }

    pub fn done(&self) -> bool {
        self.iteration >= self.max_iterations
    }

    /// One descent step; returns the trace row for it.
    pub fn step(&mut self, rule: StepRule) -> GdTraceRow {
        let g = gradient(&self.b_eff, &self.phases, self.mu_bar);
        let lambda = match rule {
            StepRule::Adaptive => adaptive_step(&self.b_eff, &self.phases, &g, self.mu_bar).lambda,
            StepRule::Fixed(l) => l,
        };
        for (p, gi) in self.phases.iter_mut().zip(&g) {
            *p -= lambda * gi;
        }
        let f = objective(&self.b_eff, &self.phases, self.mu_bar);
        if -f > self.best_objective {
            self.best_objective = -f;
            self.best_phases.clone_from(&self.phases);
        }
        self.iteration += 1;
        GdTraceRow { iteration: self.iteration, step: lambda, objective: f, incumbent: self.best_objective }
    }
}

/// Result of a descent run after post-hoc quantization.
#[derive(Clone, Debug)]
pub struct GdOutcome {
    /// Quantized incumbent.
    pub ris: RisState,
    /// Unquantized incumbent.
    pub continuous_phases: Vec<f64>,
    pub rate: f64,
    pub f_opt: ComplexMatrix,
    pub w_opt: ComplexMatrix,
    /// Incumbent energy `-f`, initial point first; length `I + 1`.
    pub history: Vec<f64>,
    pub trace: Vec<GdTraceRow>,
    /// Rate of the quantized incumbent after each iteration (initial point
    /// first), when requested.
    pub rate_curve: Option<Vec<f64>>,
}

fn quantized_rate(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    cfg: &SystemConfig,
    template: &RisState,
    phases: &[f64],
) -> Result<(RisState, f64, ComplexMatrix, ComplexMatrix)> {
    let ris = template.with_new_phases(phases.to_vec())?.quantized();
    let h_e = cascade(h1, &ris, h2)?;
    let (f, w) = optimal_digital_beamformers(&h_e, cfg.n_s)?;
    let rate = achievable_rate(&h_e, &f, &w, cfg)?;
    Ok((ris, rate, f, w))
}

/// Shared descent loop. `track_rates` additionally evaluates the quantized
/// incumbent's rate after every iteration.
pub fn run_gd(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    cfg: &SystemConfig,
    ris_template: &RisState,
    rule: StepRule,
    max_iter: usize,
    track_rates: bool,
) -> Result<GdOutcome> {
    if ris_template.len() != h1.rows() {
        return Err(Error::DimensionMismatch(format!(
            "surface has {} elements, H1 has {} rows",
            ris_template.len(),
            h1.rows()
        )));
    }
    let b = build_coupling(h1, h2)?;
    let mut ws = GdWorkspace::new(b, ris_template.mu_bar(), max_iter);
    let mut history = vec![ws.best_objective];
    let mut trace = Vec::with_capacity(max_iter);
    let mut curve = if track_rates {
        Some(vec![quantized_rate(h1, h2, cfg, ris_template, &ws.best_phases)?.1])
    } else {
        None
    };
    while !ws.done() {
        let row = ws.step(rule);
        history.push(ws.best_objective);
        trace.push(row);
        if let Some(c) = curve.as_mut() {
            c.push(quantized_rate(h1, h2, cfg, ris_template, &ws.best_phases)?.1);
        }
    }
    let (ris, rate, f_opt, w_opt) = quantized_rate(h1, h2, cfg, ris_template, &ws.best_phases)?;
    Ok(GdOutcome { ris, continuous_phases: ws.best_phases, rate, f_opt, w_opt, history, trace, rate_curve: curve })
}

/// Adaptive-step descent, `max_iter` iterations from zero phases.
pub fn a_gd_optimize(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    cfg: &SystemConfig,
    ris_template: &RisState,
    max_iter: usize,
) -> Result<GdOutcome> {
    run_gd(h1, h2, cfg, ris_template, StepRule::Adaptive, max_iter, false)
}

/// Fixed-step descent. A negative or non-finite step is rejected.
pub fn c_gd_optimize(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    cfg: &SystemConfig,
    ris_template: &RisState,
    fixed_step: f64,
    max_iter: usize,
) -> Result<GdOutcome> {
    if !(fixed_step >= 0.0 && fixed_step.is_finite()) {
        return Err(Error::InvalidInput(format!("fixed step must be >= 0, got {fixed_step}")));
    }
    run_gd(h1, h2, cfg, ris_template, StepRule::Fixed(fixed_step), max_iter, false)
}

/// Writes `iteration,step,objective,incumbent`.
pub fn write_trace_csv<W: Write>(rows: &[GdTraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,step,objective,incumbent")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e},{:e}", r.iteration, r.step, r.objective, r.incumbent)?;
    }
    Ok(())
}
