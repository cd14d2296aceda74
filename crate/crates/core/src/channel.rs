//! Sparse geometric THz channels: one LoS path plus `L` reflected paths per
//! hop, uniform planar arrays at every node, spreading and molecular
//! absorption loss on every path.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cis, ComplexMatrix, C64};
use crate::ris::RisState;

/// `10^(dB / 10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Scalar physical and system parameters of one link.
///
/// Gains are linear (convert dBi with [`db_to_linear`] when loading).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// carrier frequency, Hz
    pub f: f64,
    pub n_bs: usize,
    pub n_ris: usize,
    pub n_ms: usize,
    pub m_bs: usize,
    pub m_ms: usize,
    pub n_s: usize,
    /// transmit power (linear)
    pub rho: f64,
    /// noise power (linear)
    pub delta_sq: f64,
    pub g_t: f64,
    pub g_r: f64,
    /// molecular absorption coefficient, 1/m
    pub kappa: f64,
    /// reflection coefficient of the scattering material
    pub xi: f64,
    /// BS-MS distance, m
    pub r0: f64,
    /// BS-RIS distance, m
    pub r_bar0: f64,
    /// RIS-MS distance, m
    pub r_tilde0: f64,
    /// reflected paths per hop
    pub l_paths: usize,
    /// m/s
    pub c: f64,
    /// antenna spacing in wavelengths at BS and MS
    pub antenna_spacing: f64,
    /// side length of one reflecting element, m (sets the surface grid pitch)
    pub ris_element_side: f64,
}

impl Default for SystemConfig {
    /// Desk-scale link: 64/32/16 elements, 10 dB SNR.
    fn default() -> Self {
        Self {
            f: 1.6e12,
            n_bs: 64,
            n_ris: 32,
            n_ms: 16,
            m_bs: 6,
            m_ms: 4,
            n_s: 1,
            rho: 10.0,
            delta_sq: 1.0,
            g_t: db_to_linear(55.0),
            g_r: db_to_linear(55.0),
            kappa: 0.2,
            xi: 1e-6,
            r0: 25.0,
            r_bar0: 10.0,
            r_tilde0: 20.0,
            l_paths: 2,
            c: 3e8,
            antenna_spacing: 0.5,
            ris_element_side: 70e-6,
        }
    }
}

impl SystemConfig {
    /// 512 BS antennas, 128 elements, 32 MS antennas.
    pub fn paper_scale() -> Self {
        Self { n_bs: 512, n_ris: 128, n_ms: 32, ..Self::default() }
    }

    pub fn wavelength(&self) -> f64 {
        self.c / self.f
    }

    /// Surface grid pitch expressed in wavelengths.
    pub fn ris_spacing(&self) -> f64 {
        self.ris_element_side / self.wavelength()
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.rho / self.delta_sq).log10()
    }

    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.rho = db_to_linear(snr_db) * self.delta_sq;
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.n_bs > self.m_bs && self.m_bs >= self.n_s) {
            return fail(format!("need n_bs > m_bs >= n_s, got {} / {} / {}", self.n_bs, self.m_bs, self.n_s));
        }
        if !(self.n_ms > self.m_ms && self.m_ms >= self.n_s) {
            return fail(format!("need n_ms > m_ms >= n_s, got {} / {} / {}", self.n_ms, self.m_ms, self.n_s));
        }
        if self.n_s == 0 || self.n_ris == 0 {
            return fail("n_s and n_ris must be >= 1".into());
        }
        for (name, v) in [
            ("f", self.f),
            ("rho", self.rho),
            ("delta_sq", self.delta_sq),
            ("r0", self.r0),
            ("r_bar0", self.r_bar0),
            ("r_tilde0", self.r_tilde0),
            ("c", self.c),
            ("antenna_spacing", self.antenna_spacing),
            ("ris_element_side", self.ris_element_side),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [("g_t", self.g_t), ("g_r", self.g_r), ("kappa", self.kappa), ("xi", self.xi)] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be non-negative and finite, got {v}"));
            }
        }
        Ok(())
    }
}

/// Planar grid `nx x ny` for `n` elements: square when possible, otherwise
/// `nx` is the largest power-of-two divisor not exceeding `sqrt(n)`.
pub fn grid_dims(n: usize) -> (usize, usize) {
    assert!(n >= 1);
    let root = (n as f64).sqrt().round() as usize;
    if root * root == n {
        return (root, root);
    }
    let limit = (n as f64).sqrt();
    let mut nx = 1;
    while (nx * 2) as f64 <= limit && n.is_multiple_of(nx * 2) {
        nx *= 2;
    }
    (nx, n / nx)
}

/// Normalized UPA response; entry `p * ny + q` carries
/// `exp(j 2 pi d (p sin(el) cos(az) + q cos(el))) / sqrt(N)`.
pub fn upa_response(theta_az: f64, theta_el: f64, nx: usize, ny: usize, spacing_over_lambda: f64) -> ComplexMatrix {
    assert!(nx >= 1 && ny >= 1);
    let n = nx * ny;
    let norm = 1.0 / (n as f64).sqrt();
    let ux = theta_el.sin() * theta_az.cos();
    let uy = theta_el.cos();
    let k = TAU * spacing_over_lambda;
    let entries: Vec<C64> = (0..nx)
        .flat_map(|p| (0..ny).map(move |q| (p, q)))
        .map(|(p, q)| cis(k * (p as f64 * ux + q as f64 * uy)) * norm)
        .collect();
    ComplexMatrix::column_vector(&entries)
}

/// Complex LoS gain over `distance` metres.
pub fn los_gain(cfg: &SystemConfig, distance: f64) -> C64 {
    let spreading = cfg.c / (4.0 * PI * cfg.f * distance);
    let absorption = (-0.5 * cfg.kappa * distance).exp();
    let tau = distance / cfg.c;
    cis(-TAU * cfg.f * tau) * (spreading * absorption)
}

/// Complex gain of a path reflected once, with legs `r1` and `r2`.
pub fn nlos_gain(cfg: &SystemConfig, r1: f64, r2: f64) -> C64 {
    let total = r1 + r2;
    let spreading = cfg.c / (4.0 * PI * cfg.f * total);
    let absorption = (-0.5 * cfg.kappa * total).exp();
    let tau_los = cfg.r0 / cfg.c;
    let tau_ref = tau_los + (total - cfg.r0) / cfg.c;
    cis(-TAU * cfg.f * tau_ref) * (spreading * absorption * cfg.xi)
}

/// Which link a matrix describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hop {
    BsRis,
    RisMs,
    /// Blocked BS-MS link (reflected paths only).
    Direct,
}

impl Hop {
    fn stream(self) -> u64 {
        match self {
            Hop::BsRis => 0,
            Hop::RisMs => 1,
            Hop::Direct => 2,
        }
    }
}

impl FromStr for Hop {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bs_ris" => Ok(Hop::BsRis),
            "ris_ms" => Ok(Hop::RisMs),
            "direct" => Ok(Hop::Direct),
            other => Err(Error::InvalidInput(format!("unknown hop '{other}'"))),
        }
    }
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hop::BsRis => "bs_ris",
            Hop::RisMs => "ris_ms",
            Hop::Direct => "direct",
        })
    }
}

/// Parameters of one generated propagation path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub los: bool,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    /// `[re, im]`
    pub gain: [f64; 2],
    /// Reflected legs `(r1, r2)`; LoS paths store `(distance, 0)`.
    pub r1: f64,
    pub r2: f64,
}

impl PathRecord {
    pub fn gain(&self) -> C64 {
        C64::new(self.gain[0], self.gain[1])
    }
}

struct HopGeometry {
    n_tx: usize,
    n_rx: usize,
    tx_spacing: f64,
    rx_spacing: f64,
    distance: f64,
    antenna_gain: f64,
    with_los: bool,
}

fn hop_geometry(cfg: &SystemConfig, hop: Hop) -> HopGeometry {
    match hop {
        Hop::BsRis => HopGeometry {
            n_tx: cfg.n_bs,
            n_rx: cfg.n_ris,
            tx_spacing: cfg.antenna_spacing,
            rx_spacing: cfg.ris_spacing(),
            distance: cfg.r_bar0,
            antenna_gain: cfg.g_t,
            with_los: true,
        },
        Hop::RisMs => HopGeometry {
            n_tx: cfg.n_ris,
            n_rx: cfg.n_ms,
            tx_spacing: cfg.ris_spacing(),
            rx_spacing: cfg.antenna_spacing,
            distance: cfg.r_tilde0,
            antenna_gain: cfg.g_r,
            with_los: true,
        },
        Hop::Direct => HopGeometry {
            n_tx: cfg.n_bs,
            n_rx: cfg.n_ms,
            tx_spacing: cfg.antenna_spacing,
            rx_spacing: cfg.antenna_spacing,
            distance: cfg.r0,
            antenna_gain: cfg.g_t,
            with_los: false,
        },
    }
}

/// RNG for `(seed, stream)`; streams never overlap for distinct ids.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One channel matrix (`n_rx x n_tx`) and its path records. Deterministic in
/// `(cfg, hop, seed)`.
pub fn generate_channel(cfg: &SystemConfig, hop: Hop, seed: u64) -> Result<(ComplexMatrix, Vec<PathRecord>)> {
    cfg.validate()?;
    let geo = hop_geometry(cfg, hop);
    let mut rng = stream_rng(seed, hop.stream());
    let (tx_x, tx_y) = grid_dims(geo.n_tx);
    let (rx_x, rx_y) = grid_dims(geo.n_rx);
    let scale = ((geo.n_tx * geo.n_rx) as f64).sqrt();
    let mut h = ComplexMatrix::zeros(geo.n_rx, geo.n_tx);
    let mut records = Vec::with_capacity(cfg.l_paths + 1);

    let add_path = |h: &mut ComplexMatrix, rng: &mut ChaCha8Rng, los: bool, weight: f64| -> PathRecord {
        let aoa_az = rng.gen::<f64>() * TAU;
        let aoa_el = rng.gen::<f64>() * PI;
        let aod_az = rng.gen::<f64>() * TAU;
        let aod_el = rng.gen::<f64>() * PI;
        let (gain, r1, r2) = if los {
            (los_gain(cfg, geo.distance), geo.distance, 0.0)
        } else {
            let r1 = geo.distance * (0.5 + 0.5 * rng.gen::<f64>());
            let extra = 0.5 * geo.distance * rng.gen::<f64>();
            let r2 = geo.distance - r1 + extra;
            (nlos_gain(cfg, r1, r2), r1, r2)
        };
        let a_rx = upa_response(aoa_az, aoa_el, rx_x, rx_y, geo.rx_spacing);
        let a_tx = upa_response(aod_az, aod_el, tx_x, tx_y, geo.tx_spacing);
        let coeff = gain * (weight * geo.antenna_gain);
        for i in 0..geo.n_rx {
            let ri = a_rx[(i, 0)] * coeff;
            for j in 0..geo.n_tx {
                h[(i, j)] += ri * a_tx[(j, 0)].conj();
            }
        }
        PathRecord { los, aoa_az, aoa_el, aod_az, aod_el, gain: [gain.re, gain.im], r1, r2 }
    };

    if geo.with_los {
        records.push(add_path(&mut h, &mut rng, true, scale));
    }
    if cfg.l_paths > 0 {
        let w = scale / (cfg.l_paths as f64).sqrt();
        for _ in 0..cfg.l_paths {
            records.push(add_path(&mut h, &mut rng, false, w));
        }
    }
    Ok((h, records))
}

/// One draw of every channel matrix in the link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// `n_ris x n_bs`
    pub h1: ComplexMatrix,
    /// `n_ms x n_ris`
    pub h2: ComplexMatrix,
    /// `n_ms x n_bs`
    pub h_direct: Option<ComplexMatrix>,
    pub h1_paths: Vec<PathRecord>,
    pub h2_paths: Vec<PathRecord>,
    pub direct_paths: Vec<PathRecord>,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn generate(cfg: &SystemConfig, seed: u64, with_direct: bool) -> Result<Self> {
        let (h1, h1_paths) = generate_channel(cfg, Hop::BsRis, seed)?;
        let (h2, h2_paths) = generate_channel(cfg, Hop::RisMs, seed)?;
        let (h_direct, direct_paths) = if with_direct {
            let (h, p) = generate_channel(cfg, Hop::Direct, seed)?;
            (Some(h), p)
        } else {
            (None, Vec::new())
        };
        Ok(Self { h1, h2, h_direct, h1_paths, h2_paths, direct_paths, seed })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("realization serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("bad realization dump: {e}")))
    }
}

/// Cascaded channel `H2 diag(mu_bar e^{j phi}) H1`.
pub fn cascade(h1: &ComplexMatrix, phi: &RisState, h2: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = phi.len();
    if h1.rows() != n || h2.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "H1 is {}x{}, H2 is {}x{}, surface has {n} elements",
            h1.rows(),
            h1.cols(),
            h2.rows(),
            h2.cols()
        )));
    }
    let coeffs = phi.reflection_coefficients();
    let scaled = ComplexMatrix::from_fn(h1.rows(), h1.cols(), |i, j| coeffs[i] * h1[(i, j)]);
    Ok(h2 * &scaled)
}
