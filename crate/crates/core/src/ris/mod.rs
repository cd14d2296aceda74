//! Reflection state of the intelligent surface: discrete phase sets,
//! quantization and the diagonal reflection matrix.

pub mod graphene;

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cis, ComplexMatrix, C64};

/// Maximum phase response of the graphene element at 1.6 THz, in degrees.
pub const DEFAULT_PHI_MAX_DEG: f64 = 306.82;
/// Averaged reflecting amplitude.
pub const DEFAULT_MU_BAR: f64 = 0.8;
pub const DEFAULT_BITS: u32 = 3;

/// Ordered list of admissible phase shifts, in radians, ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSet {
    angles: Vec<f64>,
    phi_max: f64,
    bits: Option<u32>,
}

impl PhaseSet {
    /// `{k * phi_max / 2^b : k = 0 .. 2^b - 1}`.
    pub fn uniform(phi_max: f64, bits: u32) -> Result<Self> {
        if bits == 0 {
            return Err(Error::InvalidInput("phase set needs at least one bit".into()));
        }
        if bits > 16 {
            return Err(Error::InvalidInput(format!("{bits} bits is not a realistic phase resolution")));
        }
        if !(phi_max > 0.0 && phi_max <= TAU + 1e-12) {
            return Err(Error::InvalidInput(format!("phi_max = {phi_max} rad must lie in (0, 2pi]")));
        }
        let levels = 1usize << bits;
        let step = phi_max / levels as f64;
        Ok(Self {
            angles: (0..levels).map(|k| k as f64 * step).collect(),
            phi_max,
            bits: Some(bits),
        })
    }

    /// Arbitrary set; angles are reduced into `[0, 2pi)` and sorted.
    pub fn from_angles(angles: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut angles: Vec<f64> = angles.into_iter().map(wrap_angle).collect();
        if angles.is_empty() {
            return Err(Error::InvalidInput("phase set must be non-empty".into()));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("phase set contains a non-finite angle".into()));
        }
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        let phi_max = *angles.last().unwrap();
        Ok(Self { angles, phi_max, bits: None })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    pub fn bits(&self) -> Option<u32> {
        self.bits
    }

    pub fn contains(&self, angle: f64) -> bool {
        self.angles.contains(&angle)
    }

    /// Nearest member under circular distance; ties go to the smaller angle.
    pub fn nearest(&self, angle: f64) -> f64 {
        let a = wrap_angle(angle);
        let mut best = self.angles[0];
        let mut best_dist = circular_distance(a, best);
        for &candidate in &self.angles[1..] {
            let d = circular_distance(a, candidate);
            if d < best_dist {
                best = candidate;
                best_dist = d;
            }
        }
        best
    }

    /// CSV table `index,phase_rad,phase_deg`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,phase_rad,phase_deg")?;
        for (k, a) in self.angles.iter().enumerate() {
            writeln!(out, "{k},{a:.12},{:.9}", a.to_degrees())?;
        }
        Ok(())
    }
}

/// Phase set from `phi_max` in radians and `b` quantization bits.
pub fn build_phase_set(phi_max: f64, bits: u32) -> Result<PhaseSet> {
    PhaseSet::uniform(phi_max, bits)
}

/// Reduces an angle into `[0, 2pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `min(|a - b|, 2pi - |a - b|)` for angles in `[0, 2pi)`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (wrap_angle(a) - wrap_angle(b)).abs();
    d.min(TAU - d)
}

/// Maps every angle to its nearest set member.
pub fn quantize_phases(phases: &[f64], set: &PhaseSet) -> Vec<f64> {
    phases.iter().map(|&p| set.nearest(p)).collect()
}

/// Phase vector, admissible set and averaged amplitude of one surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RisState {
    phases: Vec<f64>,
    phase_set: PhaseSet,
    mu_bar: f64,
}

impl RisState {
    /// All-zero phases (`Phi = mu_bar * I`). Zero is a member of every uniform set.
    pub fn new(n_elements: usize, phase_set: PhaseSet, mu_bar: f64) -> Result<Self> {
        Self::with_phases(vec![0.0; n_elements], phase_set, mu_bar)
    }

    pub fn with_phases(phases: Vec<f64>, phase_set: PhaseSet, mu_bar: f64) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidInput("surface needs at least one element".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite phase".into()));
        }
        if !(0.5..=1.0).contains(&mu_bar) {
            return Err(Error::InvalidInput(format!("averaged amplitude {mu_bar} outside [0.5, 1]")));
        }
        Ok(Self { phases, phase_set, mu_bar })
    }

    /// Same set and amplitude, new phases.
    pub fn with_new_phases(&self, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != self.phases.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} phases for a {}-element surface",
                phases.len(),
                self.phases.len()
            )));
        }
        Self::with_phases(phases, self.phase_set.clone(), self.mu_bar)
    }

    pub fn quantized(&self) -> Self {
        Self {
            phases: quantize_phases(&self.phases, &self.phase_set),
            phase_set: self.phase_set.clone(),
            mu_bar: self.mu_bar,
        }
    }

    pub fn is_quantized(&self) -> bool {
        self.phases.iter().all(|&p| self.phase_set.contains(p))
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn set_phase(&mut self, n: usize, phase: f64) {
        self.phases[n] = phase;
    }

    pub fn phase_set(&self) -> &PhaseSet {
        &self.phase_set
    }

    pub fn mu_bar(&self) -> f64 {
        self.mu_bar
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// `mu_bar * exp(j phi_n)` for every element.
    pub fn reflection_coefficients(&self) -> Vec<C64> {
        self.phases.iter().map(|&p| cis(p) * self.mu_bar).collect()
    }
}

/// `diag(mu_bar e^{j phi_1}, ..., mu_bar e^{j phi_N})`.
pub fn phi_matrix(state: &RisState) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&state.reflection_coefficients())
}
