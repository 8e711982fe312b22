//! Atomic species constants and the versioned data-file loader.
//!
//! Species files are plain text, one `key = value` pair per line, `#`
//! comments allowed. The `format_version` key must be present and equal
//! to 1. All other keys are SI-valued floats:
//!
//! ```text
//! # tweezer-sim species file
//! format_version = 1
//! name = Rb87
//! mass_kg = 1.44316060e-25
//! d1_wavelength_m = 794.978851e-9
//! d2_wavelength_m = 780.241209e-9
//! d1_linewidth_rad_per_s = 3.612832e7
//! d2_linewidth_rad_per_s = 3.811714e7
//! excited_lifetime_s = 26.2348e-9
//! saturation_intensity_w_per_m2 = 16.6933
//! ```

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported species-file format version.
pub const SPECIES_FORMAT_VERSION: u32 = 1;

/// The default ⁸⁷Rb species file shipped with the crate.
pub const RB87_FILE: &str = include_str!("data/rb87.species");

/// Constants of one atomic species relevant for dipole trapping and
/// resonant excitation on the D2 cycling transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub name: String,
    /// Atomic mass, kg.
    pub mass: f64,
    /// D1 line wavelength, m.
    pub d1_wavelength: f64,
    /// D2 line wavelength, m.
    pub d2_wavelength: f64,
    /// D1 natural linewidth, rad/s.
    pub d1_linewidth: f64,
    /// D2 natural linewidth, rad/s.
    pub d2_linewidth: f64,
    /// Excited-state (D2) lifetime, s.
    pub excited_lifetime: f64,
    /// Saturation intensity of the cycling transition, W/m².
    pub saturation_intensity_cycling: f64,
}

impl AtomSpecies {
    /// Validates the field invariants and returns the species.
    pub fn new(
        name: impl Into<String>,
        mass: f64,
        d1_wavelength: f64,
        d2_wavelength: f64,
        d1_linewidth: f64,
        d2_linewidth: f64,
        excited_lifetime: f64,
        saturation_intensity_cycling: f64,
    ) -> Result<Self> {
        let species = Self {
            name: name.into(),
            mass,
            d1_wavelength,
            d2_wavelength,
            d1_linewidth,
            d2_linewidth,
            excited_lifetime,
            saturation_intensity_cycling,
        };
        species.validate()?;
        Ok(species)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("d1_wavelength", self.d1_wavelength),
            ("d2_wavelength", self.d2_wavelength),
            ("d1_linewidth", self.d1_linewidth),
            ("d2_linewidth", self.d2_linewidth),
            ("excited_lifetime", self.excited_lifetime),
            (
                "saturation_intensity_cycling",
                self.saturation_intensity_cycling,
            ),
        ];
        for (field, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Domain(format!(
                    "species field {field} must be strictly positive, got {value}"
                )));
            }
        }
        let lifetime_from_linewidth = 1.0 / self.d2_linewidth;
        let rel = (self.excited_lifetime - lifetime_from_linewidth).abs() / lifetime_from_linewidth;
        if rel > 0.05 {
            return Err(Error::Domain(format!(
                "excited_lifetime {} s deviates {:.1}% from 1/d2_linewidth",
                self.excited_lifetime,
                rel * 100.0
            )));
        }
        if self.d1_wavelength <= self.d2_wavelength {
            return Err(Error::Domain(
                "d1_wavelength must exceed d2_wavelength".into(),
            ));
        }
        Ok(())
    }

    /// The default species: ⁸⁷Rb, loaded from the shipped data file.
    pub fn rb87() -> Self {
        Self::from_str(RB87_FILE).expect("shipped rb87 species file is valid")
    }

    /// Loads a species from a data file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    /// Parses the key-value species format.
    pub fn from_str(text: &str) -> Result<Self> {
        let mut pairs: HashMap<String, String> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("species file line {}: missing '='", lineno + 1))
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        let version: u32 = pairs
            .get("format_version")
            .ok_or_else(|| Error::Parse("species file: missing format_version".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("species file: bad format_version: {e}")))?;
        if version != SPECIES_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "species file: unsupported format_version {version} (expected {SPECIES_FORMAT_VERSION})"
            )));
        }
        let name = pairs
            .get("name")
            .ok_or_else(|| Error::Parse("species file: missing name".into()))?
            .clone();
        let field = |key: &str| -> Result<f64> {
            pairs
                .get(key)
                .ok_or_else(|| Error::Parse(format!("species file: missing {key}")))?
                .parse()
                .map_err(|e| Error::Parse(format!("species file: bad {key}: {e}")))
        };
        Self::new(
            name,
            field("mass_kg")?,
            field("d1_wavelength_m")?,
            field("d2_wavelength_m")?,
            field("d1_linewidth_rad_per_s")?,
            field("d2_linewidth_rad_per_s")?,
            field("excited_lifetime_s")?,
            field("saturation_intensity_w_per_m2")?,
        )
    }

    /// D1 angular transition frequency, rad/s.
    pub fn d1_frequency(&self) -> f64 {
        TAU * crate::constants::C / self.d1_wavelength
    }

    /// D2 angular transition frequency, rad/s.
    pub fn d2_frequency(&self) -> f64 {
        TAU * crate::constants::C / self.d2_wavelength
    }

    /// Natural linewidth of the D2 line as an ordinary frequency, Hz.
    pub fn natural_linewidth_hz(&self) -> f64 {
        self.d2_linewidth / TAU
    }
}
