//! Gaussian-beam dipole trap: intensity profile, ground-state light shift,
//! trap depth and harmonic trap frequencies.
//!
//! The light shift uses the two-line scalar model with counter-rotating
//! terms and 1/3 : 2/3 weights for the D1 and D2 lines, valid for linearly
//! polarized light red-detuned from both lines.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::constants::{C, KB};
use crate::error::{Error, Result};
use crate::species::AtomSpecies;

/// Focused Gaussian trapping beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// 1/e² intensity waist radius, m.
    pub waist_w0: f64,
    /// Trapping wavelength, m.
    pub wavelength: f64,
    /// Optical power, W.
    pub power: f64,
    /// Axial position of the focus, m.
    pub focus_position: f64,
}

impl BeamGeometry {
    pub fn new(waist_w0: f64, wavelength: f64, power: f64, focus_position: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::Domain(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if waist_w0 <= wavelength / 2.0 {
            return Err(Error::Domain(format!(
                "waist {waist_w0} m must exceed half the wavelength {wavelength} m"
            )));
        }
        if power < 0.0 || !power.is_finite() {
            return Err(Error::Domain(format!(
                "power must be non-negative, got {power}"
            )));
        }
        Ok(Self {
            waist_w0,
            wavelength,
            power,
            focus_position,
        })
    }

    /// The geometry of the experiment: 1.4 µm waist, 810 nm light.
    pub fn with_power(power: f64) -> Result<Self> {
        Self::new(1.4e-6, 810e-9, power, 0.0)
    }

    /// Rayleigh range of this beam, m.
    pub fn rayleigh_range(&self) -> f64 {
        rayleigh_range(self.waist_w0, self.wavelength).expect("validated geometry")
    }

    /// Angular frequency of the trapping light, rad/s.
    pub fn angular_frequency(&self) -> f64 {
        TAU * C / self.wavelength
    }

    /// Returns the same beam with different power.
    pub fn at_power(&self, power: f64) -> Result<Self> {
        Self::new(self.waist_w0, self.wavelength, power, self.focus_position)
    }
}

/// Derived trap parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParameters {
    /// Trap depth |U(0,0)|, J.
    pub depth_energy: f64,
    /// Trap depth as a temperature, K.
    pub depth_temperature: f64,
    /// Radial (transverse) trap frequency, Hz.
    pub radial_frequency: f64,
    /// Axial (longitudinal) trap frequency, Hz.
    pub axial_frequency: f64,
    /// Rayleigh range, m.
    pub rayleigh_range: f64,
}

/// Rayleigh range π·w0²/λ.
pub fn rayleigh_range(w0: f64, wavelength: f64) -> Result<f64> {
    if !(w0 > 0.0) || !(wavelength > 0.0) {
        return Err(Error::Domain(format!(
            "rayleigh_range requires positive inputs, got w0={w0}, wavelength={wavelength}"
        )));
    }
    Ok(PI * w0 * w0 / wavelength)
}

/// Beam 1/e² radius at axial distance `z` from the focus, m.
pub fn beam_radius(geometry: &BeamGeometry, z: f64) -> f64 {
    let zr = geometry.rayleigh_range();
    let dz = z - geometry.focus_position;
    geometry.waist_w0 * (1.0 + (dz / zr).powi(2)).sqrt()
}

/// Gaussian beam intensity I(r, z), W/m².
pub fn beam_intensity(geometry: &BeamGeometry, r: f64, z: f64) -> f64 {
    let w = beam_radius(geometry, z);
    let w2 = w * w;
    2.0 * geometry.power / (PI * w2) * (-2.0 * r * r / w2).exp()
}

/// Ground-state polarizability prefactor: the light shift is
/// `U(r,z) = -shift_coefficient * I(r,z)` with the coefficient in J/(W/m²).
///
/// Two-line model, counter-rotating terms kept:
/// (3πc²/2)·[⅓·(Γ₁/ω₁³)(1/(ω₁−ω)+1/(ω₁+ω)) + ⅔·(Γ₂/ω₂³)(1/(ω₂−ω)+1/(ω₂+ω))]
pub fn shift_coefficient(species: &AtomSpecies, geometry: &BeamGeometry) -> Result<f64> {
    let omega = geometry.angular_frequency();
    let omega1 = species.d1_frequency();
    let omega2 = species.d2_frequency();
    if omega >= omega2 || omega >= omega1 {
        return Err(Error::UnsupportedRegime(format!(
            "trap light at {} nm is blue-detuned from a D line; only red detuning is modeled",
            geometry.wavelength * 1e9
        )));
    }
    let line = |gamma: f64, omega_line: f64| {
        gamma / omega_line.powi(3) * (1.0 / (omega_line - omega) + 1.0 / (omega_line + omega))
    };
    let weighted = line(species.d1_linewidth, omega1) / 3.0
        + 2.0 * line(species.d2_linewidth, omega2) / 3.0;
    Ok(1.5 * PI * C * C * weighted)
}

/// Dipole potential U(r, z), J. Negative (attractive) for red detuning.
pub fn dipole_potential(
    species: &AtomSpecies,
    geometry: &BeamGeometry,
    r: f64,
    z: f64,
) -> Result<f64> {
    let coefficient = shift_coefficient(species, geometry)?;
    Ok(-coefficient * beam_intensity(geometry, r, z))
}

/// Trap depth |U(0, focus)| expressed as a temperature, K.
pub fn trap_depth(species: &AtomSpecies, geometry: &BeamGeometry) -> Result<f64> {
    let u = dipole_potential(species, geometry, 0.0, geometry.focus_position)?;
    Ok(u.abs() / KB)
}

/// Harmonic trap frequencies (radial, axial) in Hz from the quadratic
/// expansion of the Gaussian potential about the focus:
/// f_r = (1/2π)·√(4U₀/(m·w0²)), f_z = (1/2π)·√(2U₀/(m·zR²)).
pub fn trap_frequencies(species: &AtomSpecies, geometry: &BeamGeometry) -> Result<(f64, f64)> {
    let depth_energy = trap_depth(species, geometry)? * KB;
    if depth_energy <= 0.0 {
        return Err(Error::Domain(
            "trap frequencies undefined for zero trap depth".into(),
        ));
    }
    let zr = geometry.rayleigh_range();
    let radial = (4.0 * depth_energy / (species.mass * geometry.waist_w0.powi(2))).sqrt() / TAU;
    let axial = (2.0 * depth_energy / (species.mass * zr * zr)).sqrt() / TAU;
    Ok((radial, axial))
}

/// Full derived parameter set for a species/beam pair.
pub fn trap_parameters(species: &AtomSpecies, geometry: &BeamGeometry) -> Result<TrapParameters> {
    let depth_temperature = trap_depth(species, geometry)?;
    let (radial_frequency, axial_frequency) = trap_frequencies(species, geometry)?;
    Ok(TrapParameters {
        depth_energy: depth_temperature * KB,
        depth_temperature,
        radial_frequency,
        axial_frequency,
        rayleigh_range: geometry.rayleigh_range(),
    })
}

/// Analytic gradient of the dipole potential, (∂U/∂x, ∂U/∂y, ∂U/∂z) in J/m
/// at the Cartesian point (x, y, z). Used by the trajectory integrator.
pub fn dipole_force_gradient(
    coefficient: f64,
    geometry: &BeamGeometry,
    x: f64,
    y: f64,
    z: f64,
) -> [f64; 3] {
    let zr = geometry.rayleigh_range();
    let w0 = geometry.waist_w0;
    let dz = z - geometry.focus_position;
    let zeta = dz / zr;
    let expansion = 1.0 + zeta * zeta;
    let w2 = w0 * w0 * expansion;
    let r2 = x * x + y * y;
    let gauss = (-2.0 * r2 / w2).exp();
    // U = -c * 2P/(pi w^2) * exp(-2 r^2/w^2)
    let u = -coefficient * 2.0 * geometry.power / (PI * w2) * gauss;
    // dU/dr = -4 r/w^2 * U ; dU/dz = U * (dz/(zr^2 expansion)) * (4 r^2/w^2 - 2)... derived below
    let du_dr_over_r = -4.0 / w2 * u;
    // d(w^2)/dz = 2 dz w0^2 / zr^2; dU/dz = U * [ (2 r^2/w^2 - 1)/w^2 ] * d(w^2)/dz... combine:
    let dw2_dz = 2.0 * dz * w0 * w0 / (zr * zr);
    let du_dz = u * (2.0 * r2 / w2 - 1.0) / w2 * dw2_dz;
    [du_dr_over_r * x, du_dr_over_r * y, du_dz]
}
