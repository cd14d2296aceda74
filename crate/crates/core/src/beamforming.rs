//! Fully-digital SVD beamformers, the achievable rate and its Jensen bound.

use nalgebra::DMatrix;

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_logdet2, hermitian_logdet2, svd, ComplexMatrix, C64};

/// Smallest admissible reciprocal condition number of `W^H W`.
const COMBINER_RCOND: f64 = 1e-12;

/// Analog/digital factors of both ends together with the fully-digital
/// targets they approximate.
#[derive(Clone, Debug)]
pub struct HybridBeamformers {
    /// `N_BS x M_BS`, unit modulus
    pub f_rf: ComplexMatrix,
    /// `M_BS x N_s`
    pub f_bb: ComplexMatrix,
    /// `N_MS x M_MS`, unit modulus
    pub w_rf: ComplexMatrix,
    /// `M_MS x N_s`
    pub w_bb: ComplexMatrix,
    pub f_opt: ComplexMatrix,
    pub w_opt: ComplexMatrix,
}

impl HybridBeamformers {
    /// `F_RF F_BB`
    pub fn precoder(&self) -> ComplexMatrix {
        &self.f_rf * &self.f_bb
    }

    /// `W_RF W_BB`
    pub fn combiner(&self) -> ComplexMatrix {
        &self.w_rf * &self.w_bb
    }
}

/// Leading `n_s` right (precoder) and left (combiner) singular vectors of `h_e`.
pub fn optimal_digital_beamformers(h_e: &ComplexMatrix, n_s: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let budget = h_e.rows().min(h_e.cols());
    if n_s == 0 || n_s > budget {
        return Err(Error::InvalidInput(format!(
            "{n_s} streams requested from a {}x{} channel",
            h_e.rows(),
            h_e.cols()
        )));
    }
    let d = svd(h_e)?;
    Ok((d.v.leading_columns(n_s), d.u.leading_columns(n_s)))
}

/// `log2 det(I + rho / (delta^2 N_s) (W^H W)^{-1} W^H H_e F F^H H_e^H W)`.
///
/// The determinant is evaluated on the whitened form `L^{-1} M L^{-H}` with
/// `W^H W = L L^H`, which has the same eigenvalues.
pub fn achievable_rate(h_e: &ComplexMatrix, f: &ComplexMatrix, w: &ComplexMatrix, cfg: &SystemConfig) -> Result<f64> {
    let n_s = cfg.n_s;
    if f.cols() != n_s || w.cols() != n_s {
        return Err(Error::DimensionMismatch(format!(
            "precoder has {} columns and combiner {}, expected {n_s}",
            f.cols(),
            w.cols()
        )));
    }
    if h_e.cols() != f.rows() || h_e.rows() != w.rows() {
        return Err(Error::DimensionMismatch(format!(
            "channel {}x{} does not fit precoder {}x{} / combiner {}x{}",
            h_e.rows(),
            h_e.cols(),
            f.rows(),
            f.cols(),
            w.rows(),
            w.cols()
        )));
    }

    let gram = (&w.adjoint() * w).hermitian_part();
    let chol = gram.inner().clone().cholesky().ok_or(Error::IllConditionedCombiner)?;
    let l = chol.l();
    let diag: Vec<f64> = (0..n_s).map(|i| l[(i, i)].re).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(dmax > 0.0) || (dmin / dmax).powi(2) < COMBINER_RCOND {
        return Err(Error::IllConditionedCombiner);
    }

    let g = &(&w.adjoint() * h_e) * f;
    let whitened = l.solve_lower_triangular(g.inner()).ok_or(Error::IllConditionedCombiner)?;
    let c = cfg.rho / (cfg.delta_sq * n_s as f64);
    let inner = &whitened * whitened.adjoint();
    let arg = DMatrix::<C64>::identity(n_s, n_s) + inner * C64::new(c, 0.0);
    let arg = ComplexMatrix::from_inner(arg).hermitian_part();
    let rate = match cholesky_logdet2(&arg) {
        Some(v) => v,
        None => hermitian_logdet2(&arg)?,
    };
    if !rate.is_finite() {
        return Err(Error::IllConditionedCombiner);
    }
    Ok(rate.max(0.0))
}

/// Rate with the SVD beamformers of `h_e`.
pub fn optimal_rate(h_e: &ComplexMatrix, cfg: &SystemConfig) -> Result<f64> {
    let (f, w) = optimal_digital_beamformers(h_e, cfg.n_s)?;
    achievable_rate(h_e, &f, &w, cfg)
}

/// `N_s log2(1 + rho / (delta^2 N_s) tr(H_e H_e^H))`.
pub fn jensen_upper_bound(h_e: &ComplexMatrix, cfg: &SystemConfig) -> f64 {
    let n_s = cfg.n_s as f64;
    n_s * (1.0 + cfg.rho / (cfg.delta_sq * n_s) * h_e.frobenius_norm_sq()).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n_s: usize, rho: f64) -> SystemConfig {
        SystemConfig { n_s, rho, delta_sq: 1.0, ..SystemConfig::default() }
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn svd_rate_oracle(h: &ComplexMatrix, cfg: &SystemConfig) -> f64 {
        let s = svd(h).unwrap().singular_values;
        let c = cfg.rho / (cfg.delta_sq * cfg.n_s as f64);
        s.iter().take(cfg.n_s).map(|x| (1.0 + c * x * x).log2()).sum()
    }

    #[test]
    fn diagonal_channel_gives_identity_columns() {
        let h = ComplexMatrix::from_real_rows(3, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let (f, w) = optimal_digital_beamformers(&h, 2).unwrap();
        for m in [&f, &w] {
            for j in 0..2 {
                for i in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((m[(i, j)].norm() - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn too_many_streams_rejected() {
        let h = ComplexMatrix::zeros(2, 5);
        assert!(matches!(optimal_digital_beamformers(&h, 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn svd_beamformers_reach_log_det_of_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n_s in 1..=3 {
            for _ in 0..20 {
                let h = random_matrix(&mut rng, 5, 7);
                let c = cfg(n_s, 10.0);
                let got = optimal_rate(&h, &c).unwrap();
                assert!((got - svd_rate_oracle(&h, &c)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rank_one_single_stream() {
        let a = ComplexMatrix::column_vector(&[C64::new(1.0, 1.0), C64::new(0.5, 0.0)]);
        let b = ComplexMatrix::column_vector(&[C64::new(0.0, 2.0), C64::new(1.0, -1.0), C64::new(0.3, 0.0)]);
        let h = &a * &b.adjoint();
        let c = cfg(1, 4.0);
        let s1 = h.frobenius_norm();
        let want = (1.0 + 4.0 * s1 * s1).log2();
        assert!((optimal_rate(&h, &c).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn zero_precoder_gives_zero_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_matrix(&mut rng, 4, 6);
        let w = random_matrix(&mut rng, 4, 2);
        let f = ComplexMatrix::zeros(6, 2);
        assert_eq!(achievable_rate(&h, &f, &w, &cfg(2, 10.0)).unwrap(), 0.0);
    }

    #[test]
    fn rate_vanishes_monotonically_with_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_matrix(&mut rng, 4, 6);
        let (f, w) = optimal_digital_beamformers(&h, 2).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..12 {
            let rho = 10f64.powi(2 - k);
            let r = achievable_rate(&h, &f, &w, &cfg(2, rho)).unwrap();
            assert!(r <= prev + 1e-12);
            prev = r;
        }
        assert!(prev < 1e-7);
    }

    #[test]
    fn rate_invariant_to_combiner_mixing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let h = random_matrix(&mut rng, 5, 6);
            let f = random_matrix(&mut rng, 6, 2);
            let w = random_matrix(&mut rng, 5, 2);
            let t = random_matrix(&mut rng, 2, 2);
            let c = cfg(2, 3.0);
            let r1 = achievable_rate(&h, &f, &w, &c).unwrap();
            let r2 = achievable_rate(&h, &f, &(&w * &t), &c).unwrap();
            assert!((r1 - r2).abs() < 1e-8 * (1.0 + r1));
        }
    }

    #[test]
    fn rank_deficient_combiner_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_matrix(&mut rng, 4, 4);
        let f = random_matrix(&mut rng, 4, 2);
        let col = random_matrix(&mut rng, 4, 1);
        let w = ComplexMatrix::from_fn(4, 2, |i, _| col[(i, 0)]);
        assert_eq!(achievable_rate(&h, &f, &w, &cfg(2, 1.0)), Err(Error::IllConditionedCombiner));
        let zero = ComplexMatrix::zeros(4, 2);
        assert_eq!(achievable_rate(&h, &f, &zero, &cfg(2, 1.0)), Err(Error::IllConditionedCombiner));
    }

    #[test]
    fn mismatched_stream_count() {
        let h = ComplexMatrix::zeros(4, 4);
        let f = ComplexMatrix::zeros(4, 2);
        let w = ComplexMatrix::zeros(4, 2);
        assert!(matches!(achievable_rate(&h, &f, &w, &cfg(1, 1.0)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn jensen_bound_cases() {
        assert_eq!(jensen_upper_bound(&ComplexMatrix::zeros(3, 4), &cfg(2, 10.0)), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..200 {
            let n_s = 1 + i % 3;
            let h = random_matrix(&mut rng, 4, 5);
            let c = cfg(n_s, 10f64.powf(rng.gen_range(-1.0..3.0)));
            assert!(optimal_rate(&h, &c).unwrap() <= jensen_upper_bound(&h, &c) + 1e-9);
        }
    }

    #[test]
    fn trace_step_is_tight_when_all_modes_are_used() {
        // N_s log2(1 + c tr(Lambda_1^2)) meets the bound once Lambda_1 holds
        // every nonzero singular value, and stays strictly below otherwise.
        let h = ComplexMatrix::from_real_rows(3, 2, &[2.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap();
        let intermediate = |n_s: usize| {
            let c = cfg(n_s, 5.0);
            let s = svd(&h).unwrap().singular_values;
            let tr: f64 = s.iter().take(n_s).map(|x| x * x).sum();
            let k = c.rho / (c.delta_sq * n_s as f64);
            (n_s as f64 * (1.0 + k * tr).log2(), jensen_upper_bound(&h, &c), optimal_rate(&h, &c).unwrap())
        };
        let (mid, bound, rate) = intermediate(2);
        assert!((mid - bound).abs() < 1e-12);
        assert!(rate <= mid + 1e-12);
        let (mid1, bound1, rate1) = intermediate(1);
        assert!(bound1 - mid1 > 0.1);
        assert!(rate1 <= mid1 + 1e-12);
    }
}
