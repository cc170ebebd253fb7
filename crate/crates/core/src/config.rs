//! TOML run configuration.
//!
//! Every physical value is a string with an explicit unit (`"132.4 G"`,
//! `"200 mG/cm"`, `"3 us"`); bare numbers are accepted only for
//! dimensionless entries. Unknown keys are rejected.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::eit::{DarkStateGeometry, Envelope, Placement, PulseSpec};
use crate::error::{Error, Result};
use crate::gpe::trap::{disc_frequency, moment_from_hz_per_gauss};
use crate::gpe::{GroundStateOptions, TrapConfig, TrapModel};
use crate::grid::make_grid;
use crate::protocol::{ProtocolTimeline, ReadoutGeometry, Reservoir, Segment, Setup};
use crate::scattering::{scattering_at_field, CouplingCoefficients, ScatteringModel};
use crate::units::{breit_rabi_moment, sodium, Dim, PhysicalConstants, Quantity};

/// The shipped configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: RawGrid,
    condensate: RawCondensate,
    trap: RawTrap,
    scattering: RawScattering,
    pulses: RawPulses,
    readout: RawReadout,
    evolution: RawEvolution,
    timeline: RawTimeline,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dims: usize,
    extent: Vec<String>,
    points: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCondensate {
    atoms: f64,
    diameter: String,
    thickness: String,
    /// Transverse x width for 1D runs; defaults to the thickness.
    width: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
enum TrapKind {
    Harmonic,
    CrossedDipole,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrap {
    model: TrapKind,
    /// Trap frequencies f = ω/2π per grid axis; derived from the diameter
    /// when absent.
    frequencies: Option<Vec<String>>,
    beam_power: Option<String>,
    beam_waist: Option<String>,
    beam_wavelength: Option<String>,
    #[serde(default)]
    asymmetry: Option<String>,
    state2_moment: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawScattering {
    B0_gauss: String,
    ima12_slope_nm_per_gauss: String,
    ima12_curv: String,
    a11_nm: String,
    a22_nm: String,
    a12_nm: String,
    window: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulses {
    probe_rabi_mhz: String,
    coupling_rabi_mhz: String,
    read_coupling_rabi_mhz: String,
    probe_duration_us: String,
    envelope: String,
    ramp: Option<String>,
    placement_z_um: String,
    transverse_waist: Option<String>,
    group_velocity: String,
    delta_k: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReadout {
    transmission: f64,
    geometric_efficiency: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvolution {
    dt: String,
    ground_dt: String,
    ground_tolerance: f64,
    ground_max_iterations: u64,
    ground_check_every: u64,
    #[serde(default)]
    ground_refinements: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    from: String,
    to: String,
    points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimeline {
    bias_field: String,
    gradient: String,
    /// Gradient switch-on time; before it the gradient is off.
    gradient_on: Option<String>,
    storage: String,
    sample_interval: String,
    storage_times: Vec<String>,
    decay_window: String,
    skip_before: String,
    #[serde(default)]
    snapshot_times: Vec<String>,
    sweep: RawSweep,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<String>,
    snapshot_every: Option<String>,
}

/// A validated run configuration with all quantities in SI units (fields in
/// gauss).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub text: String,
    pub hash: [u8; 32],
    pub setup: Setup,
    pub timeline: ProtocolTimeline,
    pub storage_times: Vec<f64>,
    pub decay_window: f64,
    pub skip_before: f64,
    pub sweep_fields: Vec<f64>,
    /// Central-column transmission used to calibrate the attenuation.
    pub transmission: f64,
    pub output_directory: Option<String>,
    pub snapshot_every: Option<f64>,
    pub transverse_sigma: [f64; 2],
}

/// Parses `value` as a quantity of dimension `dim`, prefixing errors with `key`.
pub fn keyed_quantity(key: &str, value: &str, dim: Dim) -> Result<f64> {
    Quantity::parse_as(value, dim).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{key}: {msg}")),
        other => Error::Config(format!("{key}: {other}")),
    })
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key}: must be positive, got {v}")))
    }
}

pub fn config_hash(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

pub fn hex(hash: &[u8; 32]) -> String {
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn default_config() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped configuration is valid")
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let consts = PhysicalConstants::sodium();

        let g = &raw.grid;
        if g.extent.len() != g.dims || g.points.len() != g.dims {
            return Err(Error::Config(format!("grid: extent and points need {} entries", g.dims)));
        }
        let extents =
            g.extent.iter().map(|e| keyed_quantity("grid.extent", e, Dim::LENGTH)).collect::<Result<Vec<_>>>()?;
        let grid = Arc::new(make_grid(g.dims, &extents, &g.points).map_err(|e| Error::Config(format!("grid: {e}")))?);

        let c = &raw.condensate;
        let atoms = positive("condensate.atoms", c.atoms)?;
        let diameter = positive("condensate.diameter", keyed_quantity("condensate.diameter", &c.diameter, Dim::LENGTH)?)?;
        let thickness = positive("condensate.thickness", keyed_quantity("condensate.thickness", &c.thickness, Dim::LENGTH)?)?;
        let sigma_y = thickness / 4.0;
        let sigma_x = match &c.width {
            Some(w) => positive("condensate.width", keyed_quantity("condensate.width", w, Dim::LENGTH)?)? / 4.0,
            None => sigma_y,
        };
        let reduction = match g.dims {
            2 => 1.0 / ((2.0 * PI).sqrt() * sigma_y),
            _ => 1.0 / (2.0 * PI * sigma_x * sigma_y),
        };

        let s = &raw.scattering;
        if s.window.len() != 2 {
            return Err(Error::Config("scattering.window: expected [low, high]".into()));
        }
        let scattering = ScatteringModel {
            zero_crossing: keyed_quantity("scattering.B0_gauss", &s.B0_gauss, Dim::FIELD)?,
            slope: keyed_quantity("scattering.ima12_slope_nm_per_gauss", &s.ima12_slope_nm_per_gauss, Dim::LENGTH_PER_FIELD)?,
            curvature: keyed_quantity("scattering.ima12_curv", &s.ima12_curv, Dim::LENGTH_PER_FIELD2)?,
            a11: keyed_quantity("scattering.a11_nm", &s.a11_nm, Dim::LENGTH)?,
            a22: keyed_quantity("scattering.a22_nm", &s.a22_nm, Dim::LENGTH)?,
            a12: keyed_quantity("scattering.a12_nm", &s.a12_nm, Dim::LENGTH)?,
            window: (keyed_quantity("scattering.window", &s.window[0], Dim::FIELD)?, keyed_quantity("scattering.window", &s.window[1], Dim::FIELD)?),
            ..ScatteringModel::default()
        };
        scattering.validate().map_err(|e| Error::Config(format!("scattering: {e}")))?;

        let tl = &raw.timeline;
        let bias = keyed_quantity("timeline.bias_field", &tl.bias_field, Dim::FIELD)?;
        let params = scattering_at_field(&scattering, bias).map_err(|e| Error::Config(format!("timeline.bias_field: {e}")))?;
        let g11 = CouplingCoefficients::from_params(&params, &consts, reduction).g11;

        let t = &raw.trap;
        let model = match t.model {
            TrapKind::Harmonic => {
                let omega = match &t.frequencies {
                    Some(f) => {
                        if f.len() != g.dims {
                            return Err(Error::Config(format!("trap.frequencies: need {} entries", g.dims)));
                        }
                        f.iter()
                            .map(|v| keyed_quantity("trap.frequencies", v, Dim::FREQUENCY).map(|hz| 2.0 * PI * hz))
                            .collect::<Result<Vec<_>>>()?
                    }
                    None => vec![disc_frequency(diameter, atoms, g11, &consts); g.dims],
                };
                TrapModel::Harmonic { omega }
            }
            TrapKind::CrossedDipole => {
                let need = |name: &str, v: &Option<String>, dim: Dim| -> Result<f64> {
                    let v = v.as_ref().ok_or_else(|| Error::Config(format!("trap.{name}: required for crossed-dipole")))?;
                    keyed_quantity(&format!("trap.{name}"), v, dim)
                };
                TrapModel::CrossedDipole {
                    power: need("beam_power", &t.beam_power, Dim::POWER)?,
                    waist: need("beam_waist", &t.beam_waist, Dim::LENGTH)?,
                    wavelength: need("beam_wavelength", &t.beam_wavelength, Dim::LENGTH)?,
                }
            }
        };
        let asymmetry = match &t.asymmetry {
            Some(a) => moment_from_hz_per_gauss(keyed_quantity("trap.asymmetry", a, Dim::FREQUENCY_PER_LENGTH)?),
            None => 0.0,
        };
        let moment2 = match &t.state2_moment {
            Some(m) => keyed_quantity("trap.state2_moment", m, Dim::FREQUENCY_PER_FIELD)?,
            None => breit_rabi_moment(true, -1.0, bias),
        };
        let trap = TrapConfig {
            model,
            asymmetry_x: asymmetry,
            gradient: 0.0,
            moment1: 0.0,
            moment2: moment_from_hz_per_gauss(moment2),
        };

        let p = &raw.pulses;
        let envelope = match p.envelope.as_str() {
            "gaussian" => Envelope::Gaussian,
            "raised-cosine" => Envelope::RaisedCosine,
            "square" => Envelope::Square {
                ramp: match &p.ramp {
                    Some(r) => keyed_quantity("pulses.ramp", r, Dim::TIME)?,
                    None => 0.0,
                },
            },
            other => return Err(Error::Config(format!("pulses.envelope: unknown shape `{other}`"))),
        };
        let duration = keyed_quantity("pulses.probe_duration_us", &p.probe_duration_us, Dim::TIME)?;
        let probe = PulseSpec::along_z(keyed_quantity("pulses.probe_rabi_mhz", &p.probe_rabi_mhz, Dim::FREQUENCY)?, duration, envelope);
        let coupling_env = Envelope::Square { ramp: 0.0 };
        let write_coupling = PulseSpec::along_z(
            keyed_quantity("pulses.coupling_rabi_mhz", &p.coupling_rabi_mhz, Dim::FREQUENCY)?,
            duration,
            coupling_env,
        );
        let read_coupling = PulseSpec::along_z(
            keyed_quantity("pulses.read_coupling_rabi_mhz", &p.read_coupling_rabi_mhz, Dim::FREQUENCY)?,
            duration,
            coupling_env,
        );
        for (k, pulse) in [("probe", &probe), ("coupling", &write_coupling), ("read coupling", &read_coupling)] {
            pulse.validate().map_err(|e| Error::Config(format!("pulses ({k}): {e}")))?;
        }
        let dark_state = match &p.delta_k {
            Some(k) => DarkStateGeometry::along_z(g.dims, keyed_quantity("pulses.delta_k", k, Dim::WAVENUMBER)?),
            None => DarkStateGeometry::collinear(g.dims, sodium::HYPERFINE_SPLITTING_HZ),
        };
        let placement = Placement {
            center_z: keyed_quantity("pulses.placement_z_um", &p.placement_z_um, Dim::LENGTH)?,
            transverse_waist: match &p.transverse_waist {
                Some(w) => Some(positive("pulses.transverse_waist", keyed_quantity("pulses.transverse_waist", w, Dim::LENGTH)?)?),
                None => None,
            },
        };
        let group_velocity = positive("pulses.group_velocity", keyed_quantity("pulses.group_velocity", &p.group_velocity, Dim::VELOCITY)?)?;

        let r = &raw.readout;
        if !(r.transmission > 0.0 && r.transmission <= 1.0) {
            return Err(Error::Config(format!("readout.transmission: {} outside (0, 1]", r.transmission)));
        }
        let readout = ReadoutGeometry {
            attenuation: 0.0,
            geometric_efficiency: r.geometric_efficiency,
            write_group_velocity: group_velocity,
            write_coupling_rabi: write_coupling.peak_rabi,
        };
        readout.validate().map_err(|e| Error::Config(format!("readout: {e}")))?;

        let e = &raw.evolution;
        let dt = positive("evolution.dt", keyed_quantity("evolution.dt", &e.dt, Dim::TIME)?)?;
        let ground = GroundStateOptions {
            dt: positive("evolution.ground_dt", keyed_quantity("evolution.ground_dt", &e.ground_dt, Dim::TIME)?)?,
            tolerance: positive("evolution.ground_tolerance", e.ground_tolerance)?,
            max_iterations: e.ground_max_iterations,
            check_every: e.ground_check_every.max(1),
            refinements: e.ground_refinements.unwrap_or(GroundStateOptions::default().refinements),
            seed: None,
        };

        let time = |key: &str, v: &str| keyed_quantity(&format!("timeline.{key}"), v, Dim::TIME);
        let gradient = keyed_quantity("timeline.gradient", &tl.gradient, Dim::FIELD_GRADIENT)?;
        let storage = time("storage", &tl.storage)?;
        let segments = match &tl.gradient_on {
            Some(on) => {
                let on = time("gradient_on", on)?.min(storage);
                vec![
                    Segment { duration: on, bias_field: bias, gradient: 0.0 },
                    Segment { duration: storage - on, bias_field: bias, gradient },
                ]
            }
            None => vec![Segment { duration: storage, bias_field: bias, gradient }],
        };
        let timeline = ProtocolTimeline {
            segments,
            sample_interval: time("sample_interval", &tl.sample_interval)?,
            snapshot_times: tl.snapshot_times.iter().map(|s| time("snapshot_times", s)).collect::<Result<_>>()?,
            reservoir: Reservoir::Present,
        };
        timeline.validate().map_err(|e| Error::Config(format!("timeline: {e}")))?;
        let mut storage_times =
            tl.storage_times.iter().map(|s| time("storage_times", s)).collect::<Result<Vec<_>>>()?;
        if storage_times.iter().any(|&t| t < 0.0) {
            return Err(Error::Config("timeline.storage_times: negative entry".into()));
        }
        storage_times.sort_by(f64::total_cmp);
        let sw = &tl.sweep;
        let (from, to) = (keyed_quantity("timeline.sweep.from", &sw.from, Dim::FIELD)?, keyed_quantity("timeline.sweep.to", &sw.to, Dim::FIELD)?);
        if sw.points < 2 {
            return Err(Error::Config(format!("timeline.sweep.points: need at least 2, got {}", sw.points)));
        }
        let sweep_fields = (0..sw.points).map(|i| from + (to - from) * i as f64 / (sw.points - 1) as f64).collect();

        let setup = Setup {
            consts,
            grid,
            scattering,
            reduction,
            atoms,
            trap,
            ground,
            preparation_field: bias,
            probe,
            write_coupling,
            read_coupling,
            dark_state,
            placement,
            group_velocity,
            readout,
            dt,
        };
        Ok(Self {
            text: text.to_string(),
            hash: config_hash(text),
            setup,
            timeline,
            storage_times,
            decay_window: time("decay_window", &tl.decay_window)?,
            skip_before: time("skip_before", &tl.skip_before)?,
            sweep_fields,
            transmission: r.transmission,
            output_directory: raw.output.directory.clone(),
            snapshot_every: match &raw.output.snapshot_every {
                Some(s) => Some(positive("output.snapshot_every", keyed_quantity("output.snapshot_every", s, Dim::TIME)?)?),
                None => None,
            },
            transverse_sigma: [sigma_x, sigma_y],
        })
    }

    pub fn hash_hex(&self) -> String {
        hex(&self.hash)
    }

    /// Timeline whose storage spans the decay-fit window.
    pub fn decay_timeline(&self) -> ProtocolTimeline {
        self.timeline.with_storage(self.decay_window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses() {
        let c = RunConfig::default_config();
        assert_eq!(c.setup.grid.dims(), 2);
        assert_eq!(c.storage_times.len(), 8);
        assert!((c.setup.preparation_field - 132.4).abs() < 1e-12);
        assert_eq!(c.sweep_fields.len(), 9);
        assert!((c.timeline.segments.last().unwrap().gradient - 20.0).abs() < 1e-9);
        assert!((c.setup.scattering.slope / crate::scattering::DEFAULT_LOSS_SLOPE - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_unit_names_the_key() {
        let text = DEFAULT_CONFIG.replace("B0_gauss = \"132.36 G\"", "B0_gauss = \"132.36\"");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("B0_gauss") && err.contains("missing a unit"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = DEFAULT_CONFIG.replace("[grid]", "[grid]\ndimz = 3");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn hash_tracks_text() {
        let a = RunConfig::default_config();
        let b = RunConfig::parse(&format!("{DEFAULT_CONFIG}\n# comment\n")).unwrap();
        assert_ne!(a.hash, b.hash);
        assert_eq!(a.hash_hex().len(), 64);
    }
}
