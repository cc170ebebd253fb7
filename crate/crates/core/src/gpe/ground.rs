//! Imaginary-time relaxation to the single-component ground state.

use std::sync::Arc;

use num_complex::Complex64;

use super::observables::energy;
use super::trap::TrapConfig;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, Spectral};
use crate::scattering::CouplingCoefficients;
use crate::units::PhysicalConstants;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateOptions {
    /// Imaginary time step, s.
    pub dt: f64,
    /// Relative energy change per step below which the state is accepted.
    pub tolerance: f64,
    pub max_iterations: u64,
    /// Steps between energy evaluations.
    pub check_every: u64,
    /// Times dt is halved after convergence. The split-step fixed point is
    /// off by O(µ dt/ħ), so each halving tightens it.
    pub refinements: u32,
    pub seed: Option<ComplexField>,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { dt: 10e-6, tolerance: 1e-9, max_iterations: 200_000, check_every: 50, refinements: 2, seed: None }
    }
}

/// One line of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub iteration: u64,
    pub energy: f64,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub psi: ComplexField,
    pub energy: f64,
    pub iterations: u64,
    pub log: Vec<ConvergenceRecord>,
}

/// Deterministic starting field: Thomas-Fermi for repulsive g, otherwise a
/// Gaussian matched to the trap curvature along each axis.
pub fn seed_field(grid: &Arc<Grid>, v: &[f64], g: f64, atoms: f64, trap: &TrapConfig, consts: &PhysicalConstants) -> ComplexField {
    let mut psi = if g > 0.0 {
        // Bisect µ so that Σ max(0, µ − V)/g dV = N.
        let dv = grid.cell_volume();
        let count = |mu: f64| v.iter().map(|&v| (mu - v).max(0.0)).sum::<f64>() / g * dv;
        let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut hi = vmin + 1e-40_f64.max(consts.hbar);
        while count(hi) < atoms {
            hi = vmin + 2.0 * (hi - vmin);
        }
        let mut lo = vmin;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count(mid) < atoms {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let values = v.iter().map(|&v| Complex64::new(((hi - v).max(0.0) / g).sqrt(), 0.0)).collect();
        ComplexField::from_values(grid.clone(), values).expect("grid-sized seed")
    } else {
        let widths: Vec<f64> = (0..grid.dims())
            .map(|a| {
                let w = trap.curvature_frequency(a, consts);
                if w > 0.0 {
                    (consts.hbar / (consts.atom_mass * w)).sqrt()
                } else {
                    0.1 * grid.extents()[a]
                }
            })
            .collect();
        ComplexField::from_fn(grid.clone(), |p| {
            let e: f64 = p.iter().zip(&widths).map(|(r, w)| r * r / (2.0 * w * w)).sum();
            Complex64::new((-e).exp(), 0.0)
        })
    };
    if psi.norm() == 0.0 {
        psi = ComplexField::from_fn(grid.clone(), |_| Complex64::new(1.0, 0.0));
    }
    psi.normalize_to(atoms);
    psi
}

/// Relaxes ψ₁ in imaginary time with renormalization to `atoms` after every
/// step. Only the real part of g₁₁ enters; the second component is absent.
pub fn ground_state(
    grid: Arc<Grid>,
    trap: &TrapConfig,
    couplings: &CouplingCoefficients,
    consts: &PhysicalConstants,
    atoms: f64,
    options: &GroundStateOptions,
) -> Result<GroundState> {
    if !(options.tolerance > 0.0) {
        return Err(Error::Config(format!("tolerance {} must be > 0", options.tolerance)));
    }
    if !(options.dt > 0.0) {
        return Err(Error::Config(format!("imaginary time step {} must be > 0", options.dt)));
    }
    if !(atoms > 0.0) {
        return Err(Error::Config(format!("atom number {atoms} must be > 0")));
    }
    let (v, _) = trap.potentials(&grid, consts);
    let g = couplings.g11;
    let single = CouplingCoefficients::single(g);
    let mut psi = match &options.seed {
        Some(s) => {
            if **s.grid() != *grid {
                return Err(Error::Shape { expected: grid.len(), found: s.values.len() });
            }
            let mut s = s.clone();
            s.normalize_to(atoms);
            s
        }
        None => seed_field(&grid, &v, g, atoms, trap, consts),
    };
    if psi.norm() == 0.0 {
        return Err(Error::ZeroNorm);
    }

    let spectral = Spectral::new(grid.clone());
    let mut scratch = spectral.make_scratch();
    let empty = ComplexField::zeros(grid.clone());
    let every = options.check_every.max(1);

    let mut last = energy(&psi, &empty, &v, &v, &single, consts)?;
    let mut log = vec![ConvergenceRecord { iteration: 0, energy: last, delta: f64::INFINITY }];
    let mut iteration = 0;
    let mut dt = options.dt;
    let mut stage = 0;
    while iteration < options.max_iterations {
        let half = 0.5 * dt / consts.hbar;
        let kin = consts.hbar / (2.0 * consts.atom_mass) * dt;
        let kinetic: Vec<f64> = grid.k_squared().iter().map(|k2| (-kin * k2).exp()).collect();
        let mut converged = false;
        while iteration < options.max_iterations {
            for _ in 0..every {
                for (p, &v) in psi.values.iter_mut().zip(&v) {
                    *p *= (-(v + g * p.norm_sqr()) * half).exp();
                }
                spectral.forward_in_place(&mut psi.values, &mut scratch)?;
                for (p, k) in psi.values.iter_mut().zip(&kinetic) {
                    *p *= k;
                }
                spectral.inverse_in_place(&mut psi.values, &mut scratch)?;
                for (p, &v) in psi.values.iter_mut().zip(&v) {
                    *p *= (-(v + g * p.norm_sqr()) * half).exp();
                }
                if psi.norm() == 0.0 {
                    return Err(Error::ZeroNorm);
                }
                psi.normalize_to(atoms);
                iteration += 1;
            }
            if !psi.is_finite() {
                return Err(Error::NonFinite { step: iteration, max_abs: psi.max_abs() });
            }
            let e = energy(&psi, &empty, &v, &v, &single, consts)?;
            let delta = ((e - last) / e).abs() / every as f64;
            log.push(ConvergenceRecord { iteration, energy: e, delta });
            log::debug!("imaginary time iteration {iteration} (dt {dt:e} s): E = {e:e} J, delta = {delta:e}");
            last = e;
            if delta < options.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            break;
        }
        if stage == options.refinements {
            return Ok(GroundState { psi, energy: last, iterations: iteration, log });
        }
        stage += 1;
        dt *= 0.5;
    }
    let last_change = log.last().map_or(f64::INFINITY, |r| r.delta);
    Err(Error::NotConverged { iterations: iteration, last_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn rejects_bad_options() {
        let g = Arc::new(make_grid(1, &[50e-6], &[64]).unwrap());
        let t = TrapConfig::harmonic(vec![200.0]);
        let c = PhysicalConstants::sodium();
        let s = CouplingCoefficients::single(0.0);
        let bad = GroundStateOptions { tolerance: 0.0, ..Default::default() };
        assert!(ground_state(g.clone(), &t, &s, &c, 1.0, &bad).is_err());
        let flat = ComplexField::from_fn(g.clone(), |_| Complex64::new(1.0, 0.0));
        let few = GroundStateOptions { max_iterations: 3, check_every: 1, seed: Some(flat), ..Default::default() };
        assert!(matches!(ground_state(g, &t, &s, &c, 1.0, &few), Err(Error::NotConverged { .. })));
    }
}
