use std::f64::consts::PI;

use crate::grid::Grid;
use crate::units::{sodium, PhysicalConstants, PLANCK, SPEED_OF_LIGHT};

/// Shape of the state-independent optical trap.
#[derive(Debug, Clone, PartialEq)]
pub enum TrapModel {
    /// ½ m ω_a² r_a² per grid axis; `omega` is in rad/s.
    Harmonic { omega: Vec<f64> },
    /// Two far-detuned Gaussian beams along x and z.
    CrossedDipole { power: f64, waist: f64, wavelength: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    pub model: TrapModel,
    /// Linear bias along x (J/m) modelling a small trap asymmetry.
    pub asymmetry_x: f64,
    /// Magnetic field gradient along z, G/m.
    pub gradient: f64,
    /// Magnetic moments −∂E/∂B of states |1⟩ and |2⟩, J/G.
    pub moment1: f64,
    pub moment2: f64,
}

impl TrapConfig {
    pub fn harmonic(omega: Vec<f64>) -> Self {
        Self { model: TrapModel::Harmonic { omega }, asymmetry_x: 0.0, gradient: 0.0, moment1: 0.0, moment2: 0.0 }
    }

    /// Optical potential shared by both states, shifted so its minimum on
    /// the trap centre is zero.
    pub fn optical_potential(&self, grid: &Grid, consts: &PhysicalConstants) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..grid.dims()).map(|a| grid.coords(a)).collect();
        match &self.model {
            TrapModel::Harmonic { omega } => grid.map_axes(&axes, |p| {
                p.iter().zip(omega).map(|(r, w)| 0.5 * consts.atom_mass * w * w * r * r).sum()
            }),
            TrapModel::CrossedDipole { power, waist, wavelength } => {
                let depth = dipole_depth(*power, *waist, *wavelength);
                let w2 = waist * waist;
                grid.map_axes(&axes, |p| {
                    // Beam along x confines z; beam along z confines x.
                    let z = p[p.len() - 1];
                    let x = if p.len() == 2 { p[0] } else { 0.0 };
                    depth * (2.0 - (-2.0 * z * z / w2).exp() - (-2.0 * x * x / w2).exp())
                })
            }
        }
    }

    /// Potentials seen by |1⟩ and |2⟩, including asymmetry and gradient.
    pub fn potentials(&self, grid: &Grid, consts: &PhysicalConstants) -> (Vec<f64>, Vec<f64>) {
        let base = self.optical_potential(grid, consts);
        let z = grid.axis_values(grid.z_axis());
        let x = if grid.dims() == 2 { Some(grid.axis_values(0)) } else { None };
        let mut v1 = base.clone();
        let mut v2 = base;
        for i in 0..v1.len() {
            let bias = x.as_ref().map_or(0.0, |x| self.asymmetry_x * x[i]);
            v1[i] += bias - self.moment1 * self.gradient * z[i];
            v2[i] += bias - self.moment2 * self.gradient * z[i];
        }
        (v1, v2)
    }

    /// +1 or −1: the z direction in which the gradient pushes |2⟩ (0 when off).
    pub fn steering_direction(&self) -> f64 {
        let s = self.moment2 * self.gradient;
        if s == 0.0 {
            0.0
        } else {
            s.signum()
        }
    }

    /// Harmonic frequency along `axis` near the trap centre.
    pub fn curvature_frequency(&self, axis: usize, consts: &PhysicalConstants) -> f64 {
        match &self.model {
            TrapModel::Harmonic { omega } => omega[axis],
            TrapModel::CrossedDipole { power, waist, wavelength } => {
                (4.0 * dipole_depth(*power, *waist, *wavelength) / (consts.atom_mass * waist * waist)).sqrt()
            }
        }
    }
}

/// Adds a z gradient (G/m) acting through the state magnetic moments.
pub fn add_gradient(trap: &TrapConfig, gradient: f64) -> TrapConfig {
    TrapConfig { gradient, ..trap.clone() }
}

/// Peak depth (J) of one sodium dipole-trap beam, including the
/// counter-rotating term, from the D-line two-level approximation.
pub fn dipole_depth(power: f64, waist: f64, wavelength: f64) -> f64 {
    let omega0 = 2.0 * PI * SPEED_OF_LIGHT / sodium::D_LINE_WAVELENGTH;
    let omega = 2.0 * PI * SPEED_OF_LIGHT / wavelength;
    let gamma = 2.0 * PI * sodium::D_LINE_WIDTH_HZ;
    let intensity = 2.0 * power / (PI * waist * waist);
    let prefactor = 3.0 * PI * SPEED_OF_LIGHT.powi(2) / (2.0 * omega0.powi(3));
    // Red detuning gives a negative light shift; report the depth as positive.
    -prefactor * (gamma / (omega - omega0) + gamma / (omega + omega0)) * intensity
}

/// In-plane harmonic frequency that gives a Thomas-Fermi disc of the
/// requested diameter for `atoms` atoms with 2D coupling `g2d`.
///
/// n₀ = 2N/(πR²), µ = g n₀, ω = √(2µ/m)/R.
pub fn disc_frequency(diameter: f64, atoms: f64, g2d: f64, consts: &PhysicalConstants) -> f64 {
    let r = 0.5 * diameter;
    let mu = g2d * 2.0 * atoms / (PI * r * r);
    (2.0 * mu / consts.atom_mass).sqrt() / r
}

/// Moment in J/G from a value given as h·Hz/G.
pub fn moment_from_hz_per_gauss(hz_per_gauss: f64) -> f64 {
    PLANCK * hz_per_gauss
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zero_gradient_leaves_potentials() {
        let g = make_grid(2, &[100e-6, 100e-6], &[16, 16]).unwrap();
        let c = PhysicalConstants::sodium();
        let mut t = TrapConfig::harmonic(vec![200.0, 200.0]);
        t.moment2 = 1e-28;
        let (a1, a2) = t.potentials(&g, &c);
        let (b1, b2) = add_gradient(&t, 0.0).potentials(&g, &c);
        assert_eq!((a1, a2), (b1, b2));
    }

    #[test]
    fn gradient_tilts_only_state_two() {
        let g = make_grid(1, &[100e-6], &[64]).unwrap();
        let c = PhysicalConstants::sodium();
        let mut t = TrapConfig::harmonic(vec![200.0]);
        t.moment2 = moment_from_hz_per_gauss(0.7e6);
        let tilted = add_gradient(&t, 20.0);
        let (v1, v2) = t.potentials(&g, &c);
        let (w1, w2) = tilted.potentials(&g, &c);
        assert_eq!(v1, w1);
        let z = g.coords(0);
        for i in 0..z.len() {
            let expected = -t.moment2 * 20.0 * z[i];
            assert!((w2[i] - v2[i] - expected).abs() <= 1e-12 * expected.abs().max(1e-40));
        }
        assert_eq!(tilted.steering_direction(), 1.0);
        assert_eq!(add_gradient(&t, -20.0).steering_direction(), -1.0);
    }

    #[test]
    fn dipole_trap_is_attractive_and_bounded() {
        let depth = dipole_depth(0.5, 130e-6, 980e-9);
        assert!(depth > 0.0);
        // Order of a microkelvin for half a watt at ~100 µm waist.
        let kelvin = depth / 1.380_649e-23;
        assert!(kelvin > 0.1e-6 && kelvin < 5e-6, "{kelvin}");
        let g = make_grid(2, &[200e-6, 200e-6], &[32, 32]).unwrap();
        let t = TrapConfig {
            model: TrapModel::CrossedDipole { power: 0.5, waist: 130e-6, wavelength: 980e-9 },
            ..TrapConfig::harmonic(vec![])
        };
        let v = t.optical_potential(&g, &PhysicalConstants::sodium());
        assert!(v.iter().all(|&x| (0.0..=2.0 * depth).contains(&x)));
    }
}
