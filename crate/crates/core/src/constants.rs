//! Physical constants (CODATA 2018, SI units).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380_649e-23;

/// Speed of light in vacuum, m/s.
pub const C: f64 = 2.997_924_58e8;

/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
