//! Monte-Carlo execution: one realization, full sweeps, convergence curves
//! and the cost table.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use thzris::ao::ao_optimize;
use thzris::beamforming::optimal_rate;
use thzris::channel::{cascade, stream_rng, ChannelRealization, SystemConfig};
use thzris::complexity::{cost_table, CostModel, CostRow};
use thzris::gd::{build_coupling, calibrate_fixed_step, run_gd, StepRule};
use thzris::ris::RisState;

use crate::error::SimError;
use crate::spec::{Algorithm, Experiment, OptimizerSettings, RisParams, SweepKind};

/// Stream id of the random-phase baseline draw.
const RANDOM_PHASE_STREAM: u64 = 3;

/// Seed of realization `index`.
pub fn realization_seed(master_seed: u64, index: usize) -> u64 {
    master_seed.wrapping_add(index as u64)
}

fn numerical(seed: u64) -> impl Fn(thzris::Error) -> SimError {
    move |source| SimError::Numerical { seed, source }
}

fn c_gd_step(settings: &OptimizerSettings, h1: &thzris::ComplexMatrix, h2: &thzris::ComplexMatrix, mu: f64) -> thzris::Result<f64> {
    match settings.c_gd_step {
        Some(s) => Ok(s),
        None => {
            let b = build_coupling(h1, h2)?;
            Ok(calibrate_fixed_step(&b, &vec![0.0; h1.rows()], mu))
        }
    }
}

/// Uniform draw from the phase set for every element.
pub fn random_phase_state(template: &RisState, seed: u64) -> RisState {
    let mut rng = stream_rng(seed, RANDOM_PHASE_STREAM);
    let set = template.phase_set().angles();
    let phases = (0..template.len()).map(|_| set[rng.gen_range(0..set.len())]).collect();
    template.with_new_phases(phases).expect("same length")
}

/// Rates of every requested algorithm on the realization drawn from `seed`,
/// in the order of `algorithms`.
pub fn run_realization(
    cfg: &SystemConfig,
    ris: &RisParams,
    algorithms: &[Algorithm],
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<Vec<(Algorithm, f64)>, SimError> {
    let err = numerical(seed);
    let with_direct = algorithms.contains(&Algorithm::NoRis);
    let chan = ChannelRealization::generate(cfg, seed, with_direct).map_err(&err)?;
    let template = ris.template(cfg.n_ris)?;
    let (h1, h2) = (&chan.h1, &chan.h2);
    let mut out = Vec::with_capacity(algorithms.len());
    for &alg in algorithms {
        let rate = match alg {
            Algorithm::AGd => run_gd(h1, h2, cfg, &template, StepRule::Adaptive, settings.a_gd_iterations, false)
                .map_err(&err)?
                .rate,
            Algorithm::CGd => {
                let step = c_gd_step(settings, h1, h2, template.mu_bar()).map_err(&err)?;
                run_gd(h1, h2, cfg, &template, StepRule::Fixed(step), settings.c_gd_iterations, false)
                    .map_err(&err)?
                    .rate
            }
            Algorithm::Ao => ao_optimize(h1, h2, cfg, &template, settings.ao_max_outer, settings.ao_tol).map_err(&err)?.rate,
            Algorithm::RandomPhase => {
                let state = random_phase_state(&template, seed);
                let h_e = cascade(h1, &state, h2).map_err(&err)?;
                optimal_rate(&h_e, cfg).map_err(&err)?
            }
            Algorithm::NoRis => {
                let h = chan.h_direct.as_ref().expect("direct hop generated");
                optimal_rate(h, cfg).map_err(&err)?
            }
        };
        out.push((alg, rate));
    }
    Ok(out)
}

/// One CSV row of a parameter sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub n_real: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Mean and population standard deviation (two-pass).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, SimError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| SimError::Config(format!("cannot start worker pool: {e}")))
}

/// Algorithm, rate and elapsed milliseconds.
type Timed = (Algorithm, f64, f64);

/// Runs every realization of one sweep point in parallel; the result is in
/// realization order whatever the thread count.
fn run_point(
    exp: &Experiment,
    pool: &rayon::ThreadPool,
    cfg: &SystemConfig,
    ris: &RisParams,
) -> Result<Vec<Vec<Timed>>, SimError> {
    pool.install(|| {
        (0..exp.realizations)
            .into_par_iter()
            .map(|i| {
                let seed = realization_seed(exp.master_seed, i);
                let mut rows = Vec::with_capacity(exp.algorithms.len());
                for &alg in &exp.algorithms {
                    let start = Instant::now();
                    let r = run_realization(cfg, ris, &[alg], &exp.optimizer, seed)?;
                    rows.push((alg, r[0].1, start.elapsed().as_secs_f64() * 1e3));
                }
                Ok(rows)
            })
            .collect()
    })
}

/// Parameter sweep. `on_value` receives the rows of each sweep value as soon
/// as that value completes.
pub fn run_sweep(
    exp: &Experiment,
    mut on_value: impl FnMut(&[SweepRow]) -> Result<(), SimError>,
) -> Result<SweepResult, SimError> {
    if matches!(exp.kind, SweepKind::Convergence | SweepKind::Complexity) {
        return Err(SimError::Config(format!("'{}' is not a rate sweep", exp.kind)));
    }
    let pool = pool(exp.threads)?;
    let mut result = SweepResult::default();
    for &value in &exp.values {
        let (cfg, ris) = exp.point(value)?;
        let samples = run_point(exp, &pool, &cfg, &ris)?;
        let mut rows = Vec::with_capacity(exp.algorithms.len());
        for (k, &alg) in exp.algorithms.iter().enumerate() {
            let rates: Vec<f64> = samples.iter().map(|s| s[k].1).collect();
            let (mean, std) = mean_std(&rates);
            let wall = if exp.record_wall_time { samples.iter().map(|s| s[k].2).sum() } else { 0.0 };
            rows.push(SweepRow { sweep_value: value, algorithm: alg, mean_rate: mean, std_rate: std, n_real: rates.len(), wall_ms: wall });
        }
        on_value(&rows)?;
        result.rows.extend(rows);
    }
    Ok(result)
}

/// Per-realization convergence data.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSample {
    pub seed: u64,
    /// Best-so-far quantized rate, initial point first.
    pub a_gd: Vec<f64>,
    pub c_gd: Vec<f64>,
    pub ao: Vec<f64>,
    /// Incumbent cascaded energy per iteration.
    pub a_gd_energy: Vec<f64>,
    pub c_gd_energy: Vec<f64>,
    pub a_gd_rate: f64,
    pub c_gd_rate: f64,
    pub ao_converged: bool,
    pub ao_outer_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceResult {
    /// `(algorithm, mean curve)`; index 0 is the initial point.
    pub curves: Vec<(Algorithm, Vec<f64>)>,
    pub samples: Vec<ConvergenceSample>,
}

fn running_max(xs: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    xs.iter()
        .map(|&x| {
            best = best.max(x);
            best
        })
        .collect()
}

fn convergence_sample(exp: &Experiment, cfg: &SystemConfig, seed: u64) -> Result<ConvergenceSample, SimError> {
    let err = numerical(seed);
    let chan = ChannelRealization::generate(cfg, seed, false).map_err(&err)?;
    let template = exp.ris.template(cfg.n_ris)?;
    let (h1, h2) = (&chan.h1, &chan.h2);
    let s = &exp.optimizer;
    let a = run_gd(h1, h2, cfg, &template, StepRule::Adaptive, s.a_gd_iterations, true).map_err(&err)?;
    let step = c_gd_step(s, h1, h2, template.mu_bar()).map_err(&err)?;
    let c = run_gd(h1, h2, cfg, &template, StepRule::Fixed(step), s.c_gd_iterations, true).map_err(&err)?;
    let ao = ao_optimize(h1, h2, cfg, &template, s.ao_max_outer, s.ao_tol).map_err(&err)?;
    Ok(ConvergenceSample {
        seed,
        a_gd: running_max(a.rate_curve.as_deref().unwrap_or_default()),
        c_gd: running_max(c.rate_curve.as_deref().unwrap_or_default()),
        ao: running_max(&ao.rate_history),
        a_gd_energy: a.history,
        c_gd_energy: c.history,
        a_gd_rate: a.rate,
        c_gd_rate: c.rate,
        ao_converged: ao.converged,
        ao_outer_iterations: ao.outer_iterations,
    })
}

fn mean_curve(curves: &[&Vec<f64>]) -> Vec<f64> {
    let len = curves.iter().map(|c| c.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            // Runs that stopped early hold their final value.
            let sum: f64 = curves.iter().map(|c| c.get(i).or(c.last()).copied().unwrap_or(0.0)).sum();
            sum / curves.len() as f64
        })
        .collect()
}

/// Incumbent rate versus iteration for A-GD, C-GD (inner iterations) and AO
/// (outer iterations), averaged over realizations.
pub fn run_convergence(exp: &Experiment) -> Result<ConvergenceResult, SimError> {
    let pool = pool(exp.threads)?;
    let cfg = exp.base.clone();
    let samples: Vec<ConvergenceSample> = pool.install(|| {
        (0..exp.realizations)
            .into_par_iter()
            .map(|i| convergence_sample(exp, &cfg, realization_seed(exp.master_seed, i)))
            .collect::<Result<_, _>>()
    })?;
    let mut curves = Vec::new();
    for alg in [Algorithm::AGd, Algorithm::CGd, Algorithm::Ao] {
        if !exp.algorithms.contains(&alg) {
            continue;
        }
        let pick: Vec<&Vec<f64>> = samples
            .iter()
            .map(|s| match alg {
                Algorithm::AGd => &s.a_gd,
                Algorithm::CGd => &s.c_gd,
                _ => &s.ao,
            })
            .collect();
        curves.push((alg, mean_curve(&pick)));
    }
    Ok(ConvergenceResult { curves, samples })
}

/// Iteration counts used by the cost table.
pub const COST_I_A: u64 = 15;
pub const COST_I_C: u64 = 12;
pub const COST_I_O: u64 = 3;

/// Closed-form costs over the surface sizes in `exp.values`.
pub fn run_complexity(exp: &Experiment) -> Result<Vec<CostRow>, SimError> {
    let b = &exp.base;
    let base = CostModel {
        n_bs: b.n_bs as u64,
        n_ms: b.n_ms as u64,
        n_ris: b.n_ris as u64,
        m_bs: b.m_bs as u64,
        n_s: b.n_s as u64,
        b: exp.ris.bits,
        i_a: COST_I_A,
        i_c: COST_I_C,
        i_o: COST_I_O,
    };
    let grid: Vec<u64> = exp.values.iter().map(|&v| v as u64).collect();
    cost_table(&base, &grid).map_err(|e| SimError::Config(e.to_string()))
}
