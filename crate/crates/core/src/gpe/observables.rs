use crate::error::{Error, Result};
use crate::grid::{forward_spectral, ComplexField};
use crate::scattering::CouplingCoefficients;
use crate::units::PhysicalConstants;

/// ∫R|ψ|²dV / ∫|ψ|²dV, one entry per grid axis.
pub fn center_of_mass(field: &ComplexField) -> Result<Vec<f64>> {
    let grid = field.grid();
    let density = field.density();
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok((0..grid.dims())
        .map(|a| {
            let r = grid.axis_values(a);
            r.iter().zip(&density).map(|(r, n)| r * n).sum::<f64>() / total
        })
        .collect())
}

/// z component of the centre of mass.
pub fn center_of_mass_z(field: &ComplexField) -> Result<f64> {
    let com = center_of_mass(field)?;
    Ok(com[com.len() - 1])
}

/// ∫|ψ₁|²|ψ₂|² dV.
pub fn overlap(psi1: &ComplexField, psi2: &ComplexField) -> f64 {
    psi1.values
        .iter()
        .zip(&psi2.values)
        .map(|(a, b)| a.norm_sqr() * b.norm_sqr())
        .sum::<f64>()
        * psi1.grid().cell_volume()
}

/// Mean-square extent ∫(r_a − ⟨r_a⟩)²|ψ|² dV / N along `axis`.
pub fn variance(field: &ComplexField, axis: usize) -> Result<f64> {
    let com = center_of_mass(field)?;
    let density = field.density();
    let total: f64 = density.iter().sum();
    let r = field.grid().axis_values(axis);
    Ok(r.iter().zip(&density).map(|(r, n)| (r - com[axis]).powi(2) * n).sum::<f64>() / total)
}

/// Distance between the outermost points where the density exceeds
/// `level` times its peak, measured along `axis` through the whole field.
pub fn full_width_at(field: &ComplexField, axis: usize, level: f64) -> f64 {
    let density = field.density();
    let peak = density.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let r = field.grid().axis_values(axis);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (r, n) in r.iter().zip(&density) {
        if *n >= level * peak {
            lo = lo.min(*r);
            hi = hi.max(*r);
        }
    }
    hi - lo + field.grid().spacing()[axis]
}

/// Kinetic energy ∫ψ*(−ħ²∇²/2m)ψ dV evaluated spectrally.
pub fn kinetic_energy(field: &ComplexField, consts: &PhysicalConstants) -> Result<f64> {
    let grid = field.grid();
    let spec = forward_spectral(field)?;
    let c = consts.hbar * consts.hbar / (2.0 * consts.atom_mass);
    let sum: f64 = grid.k_squared().iter().zip(&spec.coeffs).map(|(k2, v)| k2 * v.norm_sqr()).sum();
    Ok(c * sum * grid.cell_volume() / grid.len() as f64)
}

/// Breakdown of the mean-field energy functional (real parts of the
/// couplings only).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyTerms {
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }
}

pub fn energy_terms(
    psi1: &ComplexField,
    psi2: &ComplexField,
    v1: &[f64],
    v2: &[f64],
    couplings: &CouplingCoefficients,
    consts: &PhysicalConstants,
) -> Result<EnergyTerms> {
    let dv = psi1.grid().cell_volume();
    let mut potential = 0.0;
    let mut interaction = 0.0;
    for i in 0..psi1.values.len() {
        let n1 = psi1.values[i].norm_sqr();
        let n2 = psi2.values[i].norm_sqr();
        potential += v1[i] * n1 + v2[i] * n2;
        interaction += 0.5 * couplings.g11 * n1 * n1 + 0.5 * couplings.g22 * n2 * n2 + couplings.g12.re * n1 * n2;
    }
    let mut kinetic = kinetic_energy(psi1, consts)?;
    if psi2.values.iter().any(|v| v.norm_sqr() > 0.0) {
        kinetic += kinetic_energy(psi2, consts)?;
    }
    Ok(EnergyTerms { kinetic, potential: potential * dv, interaction: interaction * dv })
}

/// Total energy functional E[ψ₁, ψ₂].
pub fn energy(
    psi1: &ComplexField,
    psi2: &ComplexField,
    v1: &[f64],
    v2: &[f64],
    couplings: &CouplingCoefficients,
    consts: &PhysicalConstants,
) -> Result<f64> {
    Ok(energy_terms(psi1, psi2, v1, v2, couplings, consts)?.total())
}

/// Single-component chemical potential (E_kin + E_pot + 2E_int)/N.
pub fn chemical_potential(
    psi: &ComplexField,
    v: &[f64],
    g: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let n = psi.norm();
    if !(n > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let empty = ComplexField::zeros(psi.grid().clone());
    let t = energy_terms(psi, &empty, v, v, &CouplingCoefficients::single(g), consts)?;
    Ok((t.kinetic + t.potential + 2.0 * t.interaction) / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn gaussian(grid: &Arc<crate::grid::Grid>, z0: f64, x0: f64, w: f64) -> ComplexField {
        ComplexField::from_fn(grid.clone(), |p| {
            let z = p[p.len() - 1] - z0;
            let x = if p.len() == 2 { p[0] - x0 } else { 0.0 };
            Complex64::new((-(x * x + z * z) / (2.0 * w * w)).exp(), 0.0)
        })
    }

    #[test]
    fn com_examples() {
        let g = Arc::new(make_grid(2, &[100e-6, 100e-6], &[64, 64]).unwrap());
        let dx = g.spacing()[0];
        let c = center_of_mass(&gaussian(&g, -0.5 * dx, -0.5 * dx, 8e-6)).unwrap();
        // Cell-centred symmetric point is at −dx/2 on this grid.
        assert!(c.iter().all(|v| (v + 0.5 * dx).abs() < 1e-12 * 1e-4));
        let shifted = center_of_mass(&gaussian(&g, 7.3e-6 - 0.5 * dx, -0.5 * dx, 8e-6)).unwrap();
        assert!((shifted[1] - c[1] - 7.3e-6).abs() < dx / 100.0);
        let mut pair = gaussian(&g, 20e-6, 0.0, 5e-6);
        let other = gaussian(&g, -20e-6 - dx, 0.0, 5e-6);
        for (a, b) in pair.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        assert!((center_of_mass_z(&pair).unwrap() + 0.5 * dx).abs() < 1e-12);
        assert!(matches!(center_of_mass(&ComplexField::zeros(g)), Err(Error::ZeroNorm)));
    }

    #[test]
    fn kinetic_energy_of_gaussian() {
        // ψ = exp(−z²/2w²): ⟨T⟩/N = ħ²/(4 m w²) in 1D.
        let g = Arc::new(make_grid(1, &[200e-6], &[512]).unwrap());
        let w = 6e-6;
        let psi = gaussian(&g, -0.5 * g.spacing()[0], 0.0, w);
        let c = PhysicalConstants::sodium();
        let per_atom = kinetic_energy(&psi, &c).unwrap() / psi.norm();
        let exact = c.hbar * c.hbar / (4.0 * c.atom_mass * w * w);
        assert!((per_atom / exact - 1.0).abs() < 1e-10);
    }

    #[test]
    fn width_and_overlap() {
        let g = Arc::new(make_grid(1, &[100e-6], &[1000]).unwrap());
        let box_field = ComplexField::from_fn(g.clone(), |p| {
            Complex64::new(if p[0].abs() < 20e-6 { 2.0 } else { 0.0 }, 0.0)
        });
        assert!((full_width_at(&box_field, 0, 0.5) - 40e-6).abs() <= g.spacing()[0] * 1.0001);
        assert!((overlap(&box_field, &box_field) - 16.0 * 40e-6).abs() < 16.0 * 1e-7);
    }
}
