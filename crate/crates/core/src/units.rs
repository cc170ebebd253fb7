//! Physical constants and unit-suffixed quantity parsing.
//!
//! Everything inside the crate is SI, with one exception: magnetic fields are
//! carried in gauss (and gradients in gauss per metre), because every field
//! value that enters the scattering model is quoted that way.

use std::fmt;

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Bohr magneton expressed as h × Hz per gauss.
pub const BOHR_MAGNETON_HZ_PER_GAUSS: f64 = 1.399_624_493_61e6;

/// Sodium-23 data used across the crate.
pub mod sodium {
    pub const MASS_AMU: f64 = 22.989_769_282_0;
    /// D2 line vacuum wavelength.
    pub const D_LINE_WAVELENGTH: f64 = 589.158_3e-9;
    /// D2 natural linewidth Γ/2π.
    pub const D_LINE_WIDTH_HZ: f64 = 9.795e6;
    /// Ground-state hyperfine splitting.
    pub const HYPERFINE_SPLITTING_HZ: f64 = 1_771.626_128_8e6;
    pub const NUCLEAR_SPIN: f64 = 1.5;
    pub const G_J: f64 = 2.002_296_0;
    pub const G_I: f64 = -0.000_804_610_8;
}

/// Constants shared by the numerical modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub atom_mass: f64,
    pub probe_wavelength: f64,
    pub vacuum_light_speed: f64,
    pub bohr_radius: f64,
}

impl PhysicalConstants {
    pub fn sodium() -> Self {
        Self {
            hbar: HBAR,
            atom_mass: sodium::MASS_AMU * ATOMIC_MASS_UNIT,
            probe_wavelength: sodium::D_LINE_WAVELENGTH,
            vacuum_light_speed: SPEED_OF_LIGHT,
            bohr_radius: BOHR_RADIUS,
        }
    }

    /// ħ/m, the free-particle dispersion scale.
    pub fn hbar_over_mass(&self) -> f64 {
        self.hbar / self.atom_mass
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::sodium()
    }
}

/// Linear Zeeman-regime magnetic moment µ = −∂E/∂B of a ground hyperfine
/// level from the Breit-Rabi formula, in units of h·Hz/G.
///
/// `upper` selects F = I + 1/2; otherwise F = I − 1/2.
pub fn breit_rabi_moment(upper: bool, m_f: f64, field_gauss: f64) -> f64 {
    use sodium::*;
    let hfs = HYPERFINE_SPLITTING_HZ;
    let mu_b = BOHR_MAGNETON_HZ_PER_GAUSS;
    let two_i_plus_one = 2.0 * NUCLEAR_SPIN + 1.0;
    let dx_db = (G_J - G_I) * mu_b / hfs;
    let x = dx_db * field_gauss;
    let sign = if upper { 1.0 } else { -1.0 };
    // The stretched states have a linear dependence and are handled by the
    // general expression except for the sign of the square root.
    let radicand = 1.0 + 4.0 * m_f * x / two_i_plus_one + x * x;
    let root = radicand.sqrt();
    let d_root = (4.0 * m_f / two_i_plus_one + 2.0 * x) * dx_db / (2.0 * root);
    let de_db = G_I * mu_b * m_f + sign * 0.5 * hfs * d_root;
    -de_db
}

/// Exponents of the base dimensions a quantity carries:
/// length, time, magnetic field, power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Dim {
    pub length: i8,
    pub time: i8,
    pub field: i8,
    pub power: i8,
}

impl Dim {
    pub const NONE: Dim = Dim::new(0, 0, 0, 0);
    pub const LENGTH: Dim = Dim::new(1, 0, 0, 0);
    pub const TIME: Dim = Dim::new(0, 1, 0, 0);
    pub const FREQUENCY: Dim = Dim::new(0, -1, 0, 0);
    pub const FIELD: Dim = Dim::new(0, 0, 1, 0);
    pub const FIELD_GRADIENT: Dim = Dim::new(-1, 0, 1, 0);
    pub const POWER: Dim = Dim::new(0, 0, 0, 1);
    pub const WAVENUMBER: Dim = Dim::new(-1, 0, 0, 0);
    pub const VELOCITY: Dim = Dim::new(1, -1, 0, 0);
    pub const LENGTH_PER_FIELD: Dim = Dim::new(1, 0, -1, 0);
    pub const LENGTH_PER_FIELD2: Dim = Dim::new(1, 0, -2, 0);
    pub const FREQUENCY_PER_FIELD: Dim = Dim::new(0, -1, -1, 0);
    pub const FREQUENCY_PER_LENGTH: Dim = Dim::new(-1, -1, 0, 0);

    pub const fn new(length: i8, time: i8, field: i8, power: i8) -> Self {
        Self { length, time, field, power }
    }

    fn scaled(self, p: i8) -> Self {
        Self::new(self.length * p, self.time * p, self.field * p, self.power * p)
    }

    fn add(self, o: Self) -> Self {
        Self::new(
            self.length + o.length,
            self.time + o.time,
            self.field + o.field,
            self.power + o.power,
        )
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = [
            ("m", self.length),
            ("s", self.time),
            ("G", self.field),
            ("W", self.power),
        ];
        let mut wrote = false;
        for (sym, p) in parts {
            if p != 0 {
                if wrote {
                    write!(f, "·")?;
                }
                if p == 1 {
                    write!(f, "{sym}")?;
                } else {
                    write!(f, "{sym}^{p}")?;
                }
                wrote = true;
            }
        }
        if !wrote {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// A parsed value in internal units together with its dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dim: Dim,
}

fn unit_atom(sym: &str) -> Option<(f64, Dim)> {
    let u = match sym {
        "m" => (1.0, Dim::LENGTH),
        "cm" => (1e-2, Dim::LENGTH),
        "mm" => (1e-3, Dim::LENGTH),
        "um" | "µm" | "μm" => (1e-6, Dim::LENGTH),
        "nm" => (1e-9, Dim::LENGTH),
        "a0" => (BOHR_RADIUS, Dim::LENGTH),
        "s" => (1.0, Dim::TIME),
        "ms" => (1e-3, Dim::TIME),
        "us" | "µs" | "μs" => (1e-6, Dim::TIME),
        "ns" => (1e-9, Dim::TIME),
        "Hz" => (1.0, Dim::FREQUENCY),
        "kHz" => (1e3, Dim::FREQUENCY),
        "MHz" => (1e6, Dim::FREQUENCY),
        "G" => (1.0, Dim::FIELD),
        "mG" => (1e-3, Dim::FIELD),
        "kG" => (1e3, Dim::FIELD),
        "T" => (1e4, Dim::FIELD),
        "W" => (1.0, Dim::POWER),
        "mW" => (1e-3, Dim::POWER),
        "rad" | "1" => (1.0, Dim::NONE),
        _ => return None,
    };
    Some(u)
}

fn parse_factor(tok: &str) -> Result<(f64, Dim)> {
    let (sym, pow) = match tok.split_once('^') {
        Some((s, p)) => {
            let p: i8 = p
                .parse()
                .map_err(|_| Error::Config(format!("bad exponent in unit `{tok}`")))?;
            (s, p)
        }
        None => (tok, 1),
    };
    let (scale, dim) =
        unit_atom(sym).ok_or_else(|| Error::Config(format!("unknown unit `{sym}`")))?;
    Ok((scale.powi(pow as i32), dim.scaled(pow)))
}

fn parse_unit_expr(expr: &str) -> Result<(f64, Dim)> {
    let mut scale = 1.0;
    let mut dim = Dim::NONE;
    for (i, group) in expr.split('/').enumerate() {
        let group = group.trim();
        if group.is_empty() {
            return Err(Error::Config(format!("malformed unit `{expr}`")));
        }
        for tok in group.split('*') {
            let (s, d) = parse_factor(tok.trim())?;
            if i == 0 {
                scale *= s;
                dim = dim.add(d);
            } else {
                scale /= s;
                dim = dim.add(d.scaled(-1));
            }
        }
    }
    Ok((scale, dim))
}

impl Quantity {
    /// Parse strings such as `"132.4 G"`, `"200 mG/cm"`, `"3 us"`, `"3e6"`.
    ///
    /// A bare number parses as dimensionless.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, unit) = match s.find(char::is_whitespace) {
            Some(i) => (&s[..i], s[i..].trim()),
            None => (s, ""),
        };
        let value: f64 = num
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse number in `{s}`")))?;
        if unit.is_empty() {
            return Ok(Self { value, dim: Dim::NONE });
        }
        let (scale, dim) = parse_unit_expr(unit)?;
        // Dividing by an integral reciprocal keeps "10 us" at exactly 1e-5.
        let inverse = scale.recip().round();
        let value = if scale < 1.0 && (inverse * scale - 1.0).abs() < 1e-12 { value / inverse } else { value * scale };
        Ok(Self { value, dim })
    }

    /// Parse and require the given dimension. Dimensioned quantities written
    /// without a unit are rejected.
    pub fn parse_as(s: &str, dim: Dim) -> Result<f64> {
        let q = Self::parse(s)?;
        if q.dim != dim {
            if q.dim == Dim::NONE {
                return Err(Error::Config(format!(
                    "`{s}` is missing a unit (expected {dim})"
                )));
            }
            return Err(Error::Config(format!(
                "`{s}` has dimension {}, expected {dim}",
                q.dim
            )));
        }
        Ok(q.value)
    }
}
