//! Accounting model of the read-out.
//!
//! Each |2⟩ atom is converted into one probe photon where it sits. A photon
//! born at (x, z) leaves through the +z end of the cloud with Beer-Lambert
//! transmission
//!
//! ```text
//! T_exit(x, z) = exp(−α ∫_z^∞ n₁(x, z') dz')
//! ```
//!
//! and the detected energy is
//!
//! ```text
//! regenerated = η_geom · f_res · Σ n₂ T_exit dV
//! ```
//!
//! with η_geom a fixed collection efficiency and f_res the fraction of the
//! |1⟩ reservoir present at read-out. The attenuation α is calibrated at the
//! write-in coupling; EIT absorption scales as 1/Ω_c², so the read-out uses
//! α·(Ω_write/Ω_read)², the same rule that sets v_g ∝ Ω_c². The input proxy counts the photons that
//! had to enter the cloud to deposit the imprint: a photon stored at depth z
//! first survived the entrance path, so
//!
//! ```text
//! input = Σ n₂(0) / T_entry dV,   T_entry(x, z) = exp(−α ∫_−∞^z n₁(x, z') dz')
//! ```
//!
//! evaluated with the pre-write ground state. Fidelity is regenerated/input.

use crate::eit::PulseSpec;
use crate::error::{Error, Result};
use crate::grid::ComplexField;

/// Optical constants of the read-out model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutGeometry {
    /// Effective attenuation coefficient per unit column density of ψ₁.
    pub attenuation: f64,
    /// Collection efficiency η_geom in [0, 1].
    pub geometric_efficiency: f64,
    /// Group velocity during write-in, m/s.
    pub write_group_velocity: f64,
    /// Peak coupling Rabi frequency during write-in, rad/s.
    pub write_coupling_rabi: f64,
}

impl ReadoutGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.geometric_efficiency) {
            return Err(Error::Config(format!(
                "geometric efficiency {} outside [0, 1]",
                self.geometric_efficiency
            )));
        }
        if !(self.attenuation >= 0.0 && self.attenuation.is_finite()) {
            return Err(Error::Config(format!("attenuation {} must be ≥ 0", self.attenuation)));
        }
        if !(self.write_group_velocity > 0.0 && self.write_coupling_rabi > 0.0) {
            return Err(Error::Config("write-in group velocity and coupling must be > 0".into()));
        }
        Ok(())
    }

    /// v_g ∝ Ω_c², scaled from the write-in value.
    pub fn read_group_velocity(&self, coupling: &PulseSpec) -> f64 {
        self.write_group_velocity * (coupling.peak_rabi / self.write_coupling_rabi).powi(2)
    }

    /// Attenuation per unit column at the read-out coupling.
    pub fn read_attenuation(&self, coupling: &PulseSpec) -> f64 {
        self.attenuation * (self.write_coupling_rabi / coupling.peak_rabi).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevivalResult {
    pub regenerated: f64,
    pub input: f64,
    pub fidelity: f64,
    /// (t, photons per second), t measured from the first light leaving the
    /// grid edge.
    pub profile: Vec<(f64, f64)>,
    pub n2_at_read: f64,
}

/// Column density of ψ₁ along z, per point, in one direction. `forward`
/// integrates from the point to the +z edge, otherwise from the −z edge.
/// The point's own cell contributes half.
pub fn column_density(psi1: &ComplexField, forward: bool) -> Vec<f64> {
    let grid = psi1.grid();
    let nz = grid.points()[grid.z_axis()];
    let dz = grid.spacing()[grid.z_axis()];
    let mut out = vec![0.0; psi1.values.len()];
    for (row_in, row_out) in psi1.values.chunks(nz).zip(out.chunks_mut(nz)) {
        let mut acc = 0.0;
        let mut visit = |j: usize| {
            let n = row_in[j].norm_sqr();
            row_out[j] = (acc + 0.5 * n) * dz;
            acc += n;
        };
        if forward {
            (0..nz).rev().for_each(&mut visit);
        } else {
            (0..nz).for_each(&mut visit);
        }
    }
    out
}

/// Full column ∫n₁ dz through the row nearest x = 0 (the only row in 1D).
pub fn central_column(psi1: &ComplexField) -> f64 {
    let grid = psi1.grid();
    let nz = grid.points()[grid.z_axis()];
    let row = if grid.dims() == 2 { grid.points()[0] / 2 } else { 0 };
    psi1.values[row * nz..(row + 1) * nz].iter().map(|v| v.norm_sqr()).sum::<f64>()
        * grid.spacing()[grid.z_axis()]
}

/// Photons needed to write `psi2` into a cloud whose pre-write state was
/// `ground`.
pub fn input_proxy(ground: &ComplexField, psi2: &ComplexField, attenuation: f64) -> f64 {
    let col = column_density(ground, false);
    psi2.values
        .iter()
        .zip(&col)
        .map(|(v, c)| v.norm_sqr() * (attenuation * c).exp())
        .sum::<f64>()
        * psi2.grid().cell_volume()
}

pub fn read_out(
    psi1: &ComplexField,
    psi2: &ComplexField,
    coupling: &PulseSpec,
    geometry: &ReadoutGeometry,
    input: f64,
    reservoir_fraction: f64,
) -> Result<RevivalResult> {
    if coupling.peak_rabi == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    geometry.validate()?;
    if !(input > 0.0) {
        return Err(Error::Config(format!("input proxy {input} must be > 0")));
    }
    let grid = psi2.grid();
    let nz = grid.points()[grid.z_axis()];
    let dz = grid.spacing()[grid.z_axis()];
    let transverse = grid.cell_volume() / dz;
    let col = column_density(psi1, true);
    let gain = geometry.geometric_efficiency * reservoir_fraction;
    let alpha = geometry.read_attenuation(coupling);
    let mut per_z = vec![0.0; nz];
    for (i, (v, c)) in psi2.values.iter().zip(&col).enumerate() {
        per_z[i % nz] += v.norm_sqr() * (-alpha * c).exp() * transverse;
    }
    let regenerated = gain * per_z.iter().sum::<f64>() * dz;
    let v_read = geometry.read_group_velocity(coupling);
    let z = grid.coords(grid.z_axis());
    let z_end = z[nz - 1];
    let profile = (0..nz).rev().map(|j| ((z_end - z[j]) / v_read, gain * per_z[j] * v_read)).collect();
    Ok(RevivalResult {
        regenerated,
        input,
        fidelity: regenerated / input,
        profile,
        n2_at_read: psi2.norm(),
    })
}
