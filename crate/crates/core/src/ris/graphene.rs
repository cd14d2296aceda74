//! Closed-form electromagnetic model of a graphene-patch reflecting element:
//! intraband (Drude-type) surface conductivity, gate-voltage control of the
//! Fermi level, and the Fabry-Perot phase response of the patch.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::wrap_angle;

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Material and geometry parameters of one element.
///
/// Only `patch_width` (66 um) comes from the fabricated element geometry; the
/// remaining defaults are typical room-temperature graphene values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrapheneParams {
    /// K
    pub temperature: f64,
    /// s
    pub relaxation_time: f64,
    /// m/s
    pub fermi_velocity: f64,
    /// residual carrier density n_0, 1/m^2
    pub residual_density: f64,
    /// electrode capacitivity alpha_c, 1/(m^4 V^2)
    pub capacitivity: f64,
    /// charge-neutrality voltage, V
    pub v_cnp: f64,
    /// m
    pub graphene_thickness: f64,
    /// m
    pub patch_width: f64,
    pub mode_integer: u32,
}

impl Default for GrapheneParams {
    fn default() -> Self {
        Self {
            temperature: 300.0,
            relaxation_time: 1e-13,
            fermi_velocity: 1e6,
            residual_density: 1e15,
            capacitivity: 1e31,
            v_cnp: 0.0,
            graphene_thickness: 0.34e-9,
            patch_width: 66e-6,
            mode_integer: 1,
        }
    }
}

impl GrapheneParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("temperature", self.temperature),
            ("relaxation_time", self.relaxation_time),
            ("fermi_velocity", self.fermi_velocity),
            ("graphene_thickness", self.graphene_thickness),
            ("patch_width", self.patch_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.residual_density >= 0.0 && self.capacitivity >= 0.0) {
            return Err("carrier-density parameters must be non-negative".into());
        }
        if self.mode_integer < 1 {
            return Err("mode_integer must be >= 1".into());
        }
        Ok(())
    }
}

/// `ln(2 cosh x)` without overflow.
fn ln_two_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p()
}

/// Surface conductivity in siemens for a Fermi level given in eV.
pub fn graphene_conductivity(p: &GrapheneParams, fermi_level_ev: f64, omega: f64) -> Complex64 {
    let kt = BOLTZMANN * p.temperature;
    let ef = fermi_level_ev * ELEMENTARY_CHARGE;
    let prefactor = 2.0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (PI * REDUCED_PLANCK * REDUCED_PLANCK)
        * kt
        * ln_two_cosh(ef / (2.0 * kt));
    let i = Complex64::i();
    i * prefactor / Complex64::new(omega, 1.0 / p.relaxation_time)
}

/// `|E_F|` in eV produced by gate voltage `v_g`.
pub fn fermi_level_from_voltage(p: &GrapheneParams, v_g: f64) -> f64 {
    let dv = (p.v_cnp - v_g).abs();
    let n_d = (p.residual_density.powi(2) + p.capacitivity * dv * dv).sqrt();
    REDUCED_PLANCK * p.fermi_velocity * (PI * n_d).sqrt() / ELEMENTARY_CHARGE
}

/// `1 + i sigma / (omega eps_0 t_g)`.
pub fn effective_permittivity(p: &GrapheneParams, sigma: Complex64, omega: f64) -> Complex64 {
    1.0 + Complex64::i() * sigma / (omega * VACUUM_PERMITTIVITY * p.graphene_thickness)
}

/// Reflection phase `m pi - a k_0 Re(n_eff)` in radians (not wrapped).
pub fn element_phase_response(p: &GrapheneParams, fermi_level_ev: f64, omega: f64) -> f64 {
    let sigma = graphene_conductivity(p, fermi_level_ev, omega);
    let eps = effective_permittivity(p, sigma, omega);
    // principal root, Re >= 0
    let n_eff = eps.sqrt();
    let k0 = omega / SPEED_OF_LIGHT;
    p.mode_integer as f64 * PI - p.patch_width * k0 * n_eff.re
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrapheneSweepRow {
    pub fermi_level_ev: f64,
    pub sigma: Complex64,
    /// Phase response wrapped into `[0, 360)` degrees.
    pub phase_deg: f64,
}

pub fn graphene_sweep(p: &GrapheneParams, omega: f64, fermi_levels_ev: &[f64]) -> Vec<GrapheneSweepRow> {
    fermi_levels_ev
        .iter()
        .map(|&ef| GrapheneSweepRow {
            fermi_level_ev: ef,
            sigma: graphene_conductivity(p, ef, omega),
            phase_deg: wrap_angle(element_phase_response(p, ef, omega)).to_degrees(),
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[GrapheneSweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "fermi_level_eV,sigma_re,sigma_im,phase_deg")?;
    for r in rows {
        writeln!(
            out,
            "{:.6},{:.9e},{:.9e},{:.9}",
            r.fermi_level_ev, r.sigma.re, r.sigma.im, r.phase_deg
        )?;
    }
    Ok(())
}
