//! Dark-state optics: probe/coupling pulses, slow-light scalars and the
//! write-in map from a stopped probe pulse onto the |2⟩ matter field.
//!
//! Light is never propagated. The stopped pulse is laid out in space with
//! z = z_c − v_g·t (the leading edge sits deepest), and each point receives
//! the adiabatic dark-state amplitude ratio of the local Rabi frequencies.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::units::SPEED_OF_LIGHT;

/// Temporal amplitude envelope, normalized to a peak of one. `duration` is
/// always the full width at half maximum of the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Envelope {
    Gaussian,
    /// cos² window whose total support is twice the duration.
    RaisedCosine,
    /// Flat top with linear ramps of the given width (s).
    Square { ramp: f64 },
}

/// Gaussian pulses are not truncated; their nominal support (used for
/// placement checks) ends where the amplitude falls to this fraction.
const GAUSSIAN_SUPPORT_LEVEL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Peak angular Rabi frequency, rad/s.
    pub peak_rabi: f64,
    pub duration: f64,
    pub envelope: Envelope,
    /// Unit propagation direction (x, y, z).
    pub direction: [f64; 3],
    /// Carrier detuning from the bare transition, rad/s.
    pub detuning: f64,
}

impl PulseSpec {
    /// Pulse along +z with the Rabi frequency given as Ω/2π in Hz.
    pub fn along_z(rabi_hz: f64, duration: f64, envelope: Envelope) -> Self {
        Self {
            peak_rabi: 2.0 * PI * rabi_hz,
            duration,
            envelope,
            direction: [0.0, 0.0, 1.0],
            detuning: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_rabi >= 0.0 && self.peak_rabi.is_finite()) {
            return Err(Error::Pulse(format!("peak Rabi frequency {} must be ≥ 0", self.peak_rabi)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Pulse(format!("duration {} must be > 0", self.duration)));
        }
        if let Envelope::Square { ramp } = self.envelope {
            if !(0.0..=self.duration).contains(&ramp) {
                return Err(Error::Pulse(format!("ramp {ramp} must lie in [0, duration]")));
            }
        }
        Ok(())
    }

    /// Envelope amplitude at time `t` from the pulse centre.
    pub fn shape(&self, t: f64) -> f64 {
        let d = self.duration;
        match self.envelope {
            Envelope::Gaussian => (-4.0 * LN_2 * t * t / (d * d)).exp(),
            Envelope::RaisedCosine => {
                if t.abs() >= d {
                    0.0
                } else {
                    (PI * t / (2.0 * d)).cos().powi(2)
                }
            }
            Envelope::Square { ramp } => {
                let flat = 0.5 * (d - ramp);
                let a = t.abs();
                if a <= flat {
                    1.0
                } else if a >= flat + ramp {
                    0.0
                } else {
                    1.0 - (a - flat) / ramp
                }
            }
        }
    }

    /// Rabi frequency at time `t` from the pulse centre.
    pub fn rabi_at(&self, t: f64) -> f64 {
        self.peak_rabi * self.shape(t)
    }

    /// Half-width of the nominal pulse support.
    pub fn half_support(&self) -> f64 {
        match self.envelope {
            Envelope::Gaussian => {
                self.duration * ((1.0 / GAUSSIAN_SUPPORT_LEVEL).ln() / (4.0 * LN_2)).sqrt()
            }
            Envelope::RaisedCosine => self.duration,
            Envelope::Square { ramp } => 0.5 * (self.duration + ramp),
        }
    }

    /// Pulse-energy proxy ∫|Ω(t)|² dt by trapezoidal quadrature.
    pub fn energy_proxy(&self) -> f64 {
        let h = match self.envelope {
            Envelope::Gaussian => 4.0 * self.duration,
            _ => self.half_support(),
        };
        let n = 4096;
        let dt = 2.0 * h / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            sum += w * self.rabi_at(-h + i as f64 * dt).powi(2);
        }
        sum * dt
    }
}

/// Wavevector mismatch and frequency difference entering the dark-state phase.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkStateGeometry {
    /// k_p − k_c projected on the grid axes (x, z in 2D; z in 1D), rad/m.
    pub delta_k: Vec<f64>,
    /// ω_p − ω_c in the rotating frame, rad/s.
    pub frequency_difference: f64,
}

impl DarkStateGeometry {
    /// Collinear co-propagating beams: |k_p − k_c| is the hyperfine
    /// splitting over c, along z.
    pub fn collinear(dims: usize, hyperfine_hz: f64) -> Self {
        let mut delta_k = vec![0.0; dims];
        delta_k[dims - 1] = 2.0 * PI * hyperfine_hz / SPEED_OF_LIGHT;
        Self { delta_k, frequency_difference: 0.0 }
    }

    pub fn along_z(dims: usize, delta_k_z: f64) -> Self {
        let mut delta_k = vec![0.0; dims];
        delta_k[dims - 1] = delta_k_z;
        Self { delta_k, frequency_difference: 0.0 }
    }
}

/// ψ₂/ψ₁ = −(Ω_p/Ω_c)·exp[i(k_p−k_c)·R − i(ω_p−ω_c)t].
pub fn dark_state_ratio(
    probe: Complex64,
    coupling: Complex64,
    delta_k: &[f64],
    position: &[f64],
    frequency_difference: f64,
    t: f64,
) -> Result<Complex64> {
    if coupling.norm() == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let phase: f64 = delta_k.iter().zip(position).map(|(k, r)| k * r).sum::<f64>()
        - frequency_difference * t;
    Ok(-(probe / coupling) * Complex64::from_polar(1.0, phase))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowLightParams {
    pub group_velocity: f64,
    pub compression_factor: f64,
    pub transmission: f64,
}

impl SlowLightParams {
    pub fn new(group_velocity: f64, transmission: f64) -> Result<Self> {
        let compression_factor = compression_from_group_velocity(group_velocity)?;
        if !(0.0..=1.0).contains(&transmission) {
            return Err(Error::Pulse(format!("transmission {transmission} outside [0, 1]")));
        }
        Ok(Self { group_velocity, compression_factor, transmission })
    }
}

pub fn group_velocity_from_compression(compression: f64) -> Result<f64> {
    if !(compression >= 1.0) {
        return Err(Error::Pulse(format!("compression factor {compression} must be ≥ 1")));
    }
    Ok(SPEED_OF_LIGHT / compression)
}

pub fn compression_from_group_velocity(group_velocity: f64) -> Result<f64> {
    if !(group_velocity > 0.0 && group_velocity <= SPEED_OF_LIGHT) {
        return Err(Error::Pulse(format!("group velocity {group_velocity} outside (0, c]")));
    }
    Ok(SPEED_OF_LIGHT / group_velocity)
}

/// Where the stopped pulse sits in the cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    /// z of the pulse centre at the moment the coupling is switched off.
    pub center_z: f64,
    /// Optional transverse 1/e² amplitude radius along x; `None` is a probe
    /// wider than the cloud.
    pub transverse_waist: Option<f64>,
}

/// Probe Rabi frequency at a grid position for a pulse stopped at `placement`.
pub fn stopped_probe_rabi(probe: &PulseSpec, placement: &Placement, group_velocity: f64, position: &[f64]) -> f64 {
    let z = *position.last().expect("non-empty position");
    let t = -(z - placement.center_z) / group_velocity;
    let mut rabi = probe.rabi_at(t);
    if let (Some(w), true) = (placement.transverse_waist, position.len() == 2) {
        rabi *= (-(position[0] / w).powi(2)).exp();
    }
    rabi
}

/// Maps the stopped probe pulse onto ψ₂ and depletes ψ₁ accordingly.
///
/// ψ₂ = r·ψ₁ and ψ₁' = ψ₁·√(1 − |r|²) pointwise, with r the dark-state
/// ratio, so |ψ₁'|² + |ψ₂|² = |ψ₁|² everywhere.
pub fn write_imprint(
    psi1: &ComplexField,
    probe: &PulseSpec,
    coupling: &PulseSpec,
    geometry: &DarkStateGeometry,
    placement: &Placement,
    group_velocity: f64,
) -> Result<(ComplexField, ComplexField)> {
    probe.validate()?;
    coupling.validate()?;
    let grid = psi1.grid().clone();
    let za = grid.z_axis();
    let reach = probe.half_support() * group_velocity;
    for edge in [placement.center_z - reach, placement.center_z + reach] {
        if !grid.contains(za, edge) {
            return Err(Error::WriteIn(format!(
                "imprint edge at z = {edge:.3e} m lies outside the grid"
            )));
        }
    }
    if geometry.delta_k.len() != grid.dims() {
        return Err(Error::WriteIn("wavevector mismatch has wrong dimension".into()));
    }
    let omega_c = Complex64::new(coupling.peak_rabi, 0.0);
    let mut out1 = psi1.clone();
    let mut out2 = ComplexField::zeros(grid.clone());
    for (i, pos) in grid.positions().iter().enumerate() {
        let omega_p = stopped_probe_rabi(probe, placement, group_velocity, pos);
        if omega_p == 0.0 {
            continue;
        }
        let r = dark_state_ratio(
            Complex64::new(omega_p, 0.0),
            omega_c,
            &geometry.delta_k,
            pos,
            geometry.frequency_difference,
            0.0,
        )?;
        let fraction = r.norm_sqr();
        if fraction >= 1.0 {
            return Err(Error::WriteIn(format!("transfer fraction {fraction:.3} ≥ 1")));
        }
        out2.values[i] = r * psi1.values[i];
        out1.values[i] = psi1.values[i] * (1.0 - fraction).sqrt();
    }
    Ok((out1, out2))
}

/// Beer-Lambert attenuation exp(−α·∫n dz).
pub fn transmission_estimate(alpha: f64, column_density: f64) -> Result<f64> {
    if column_density < 0.0 || column_density.is_nan() {
        return Err(Error::NegativeDensity(column_density));
    }
    Ok((-alpha * column_density).exp())
}

/// α such that `column_density` transmits the fraction `transmission`.
pub fn calibrate_attenuation(column_density: f64, transmission: f64) -> Result<f64> {
    if !(column_density > 0.0) {
        return Err(Error::NegativeDensity(column_density));
    }
    if !(transmission > 0.0 && transmission <= 1.0) {
        return Err(Error::Pulse(format!("transmission {transmission} outside (0, 1]")));
    }
    Ok(-transmission.ln() / column_density)
}
