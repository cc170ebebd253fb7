//! Real-time Strang splitting for the coupled two-component equations
//!
//! ```text
//! iħ ∂ψ₁/∂t = [−ħ²∇²/2m + V₁ + g₁₁|ψ₁|² + g₁₂|ψ₂|²] ψ₁
//! iħ ∂ψ₂/∂t = [−ħ²∇²/2m + V₂ + g₂₂|ψ₂|² + g₁₂|ψ₁|²] ψ₂
//! ```
//!
//! with Im g₁₂ ≤ 0 removing atoms from both components where they overlap.
//!
//! The pointwise half-steps are solved exactly. With κ = −2 Im g₁₂/ħ the
//! local densities obey ṅ₁ = ṅ₂ = −κ n₁ n₂, which conserves n₁ − n₂ and has
//! a closed-form solution; the phases follow from ∫n dt of that solution.
//! The kinetic step is exact in Fourier space.

use std::sync::Arc;

use num_complex::Complex64;

use super::trap::TrapConfig;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, Spectral};
use crate::scattering::CouplingCoefficients;
use crate::units::PhysicalConstants;

/// Stability heuristic: warn when dt exceeds this multiple of m·dx²/ħ.
pub const STABILITY_SAFETY: f64 = 1.0;

/// Steps between finiteness checks inside [`Propagator::run`].
const NON_FINITE_CHECK: u64 = 100;

/// Parameters of one evolution run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub duration: f64,
    pub imaginary_time: bool,
    pub snapshot_interval: f64,
    /// Dimensional-reduction factor m^(d−3) applied to the couplings.
    pub reduction: f64,
}

impl EvolutionConfig {
    pub fn steps(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }
}

/// Largest time step that satisfies the stability heuristic on `grid`.
pub fn stability_limit(grid: &Grid, consts: &PhysicalConstants) -> f64 {
    let dx = grid.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    STABILITY_SAFETY * consts.atom_mass * dx * dx / consts.hbar
}

/// exp(x)−1 over x, continuous at zero.
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0))
    } else {
        x.exp_m1() / x
    }
}

/// ln(1+a) over a, continuous at zero.
fn log1p_ratio(a: f64) -> f64 {
    if a.abs() < 1e-3 {
        1.0 + a * (-0.5 + a * (1.0 / 3.0 - 0.25 * a))
    } else {
        a.ln_1p() / a
    }
}

/// Local potential/interaction flow over a time `tau`, applied in place.
#[inline]
#[allow(clippy::too_many_arguments)]
fn local_flow(
    psi1: &mut Complex64,
    psi2: &mut Complex64,
    v1: f64,
    v2: f64,
    c: &CouplingCoefficients,
    kappa: f64,
    tau: f64,
    hbar: f64,
) {
    let n1 = psi1.norm_sqr();
    let n2 = psi2.norm_sqr();
    let (s1, s2, int1, int2) = if kappa == 0.0 {
        (1.0, 1.0, n1 * tau, n2 * tau)
    } else {
        let kd = kappa * (n1 - n2) * tau;
        let a1 = n1 * kappa * tau * expm1_ratio(kd);
        let a2 = n2 * kappa * tau * expm1_ratio(-kd);
        let int1 = n1 * tau * expm1_ratio(kd) * log1p_ratio(a1);
        let int2 = n2 * tau * expm1_ratio(-kd) * log1p_ratio(a2);
        (1.0 / (1.0 + a2), 1.0 / (1.0 + a1), int1, int2)
    };
    let phase1 = (v1 * tau + c.g11 * int1 + c.g12.re * int2) / hbar;
    let phase2 = (v2 * tau + c.g22 * int2 + c.g12.re * int1) / hbar;
    *psi1 *= Complex64::from_polar(s1.sqrt(), -phase1);
    *psi2 *= Complex64::from_polar(s2.sqrt(), -phase2);
}

/// Reusable split-step propagator for a fixed grid and time step.
pub struct Propagator {
    grid: Arc<Grid>,
    consts: PhysicalConstants,
    spectral: Spectral,
    scratch: Vec<Complex64>,
    dt: f64,
    kinetic: Option<Vec<Complex64>>,
    v1: Vec<f64>,
    v2: Vec<f64>,
    couplings: CouplingCoefficients,
    steps: u64,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator").field("dt", &self.dt).field("steps", &self.steps).finish()
    }
}

impl Propagator {
    pub fn new(
        grid: Arc<Grid>,
        consts: PhysicalConstants,
        trap: &TrapConfig,
        couplings: CouplingCoefficients,
        dt: f64,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::Config(format!("time step {dt} must be finite and non-zero")));
        }
        let limit = stability_limit(&grid, &consts);
        if dt.abs() > limit {
            log::warn!("time step {dt:e} s exceeds stability heuristic {limit:e} s");
        }
        let (v1, v2) = trap.potentials(&grid, &consts);
        let spectral = Spectral::new(grid.clone());
        let scratch = spectral.make_scratch();
        let mut p = Self {
            grid,
            consts,
            spectral,
            scratch,
            dt,
            kinetic: None,
            v1,
            v2,
            couplings,
            steps: 0,
        };
        p.kinetic = Some(p.kinetic_factors(dt));
        Ok(p)
    }

    fn kinetic_factors(&self, dt: f64) -> Vec<Complex64> {
        let c = self.consts.hbar / (2.0 * self.consts.atom_mass) * dt;
        self.grid.k_squared().iter().map(|k2| Complex64::from_polar(1.0, -c * k2)).collect()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn couplings(&self) -> &CouplingCoefficients {
        &self.couplings
    }

    pub fn potentials(&self) -> (&[f64], &[f64]) {
        (&self.v1, &self.v2)
    }

    pub fn set_couplings(&mut self, couplings: CouplingCoefficients) {
        self.couplings = couplings;
    }

    pub fn set_trap(&mut self, trap: &TrapConfig) {
        let (v1, v2) = trap.potentials(&self.grid, &self.consts);
        self.v1 = v1;
        self.v2 = v2;
    }

    /// Drop the kinetic term, leaving only the local dynamics.
    pub fn disable_kinetic(&mut self) {
        self.kinetic = None;
    }

    fn potential(&self, psi1: &mut [Complex64], psi2: &mut [Complex64], tau: f64) {
        let hbar = self.consts.hbar;
        let kappa = -2.0 * self.couplings.g12.im / hbar;
        let c = &self.couplings;
        for i in 0..psi1.len() {
            local_flow(&mut psi1[i], &mut psi2[i], self.v1[i], self.v2[i], c, kappa, tau, hbar);
        }
    }

    fn kinetic_step(&mut self, psi: &mut [Complex64]) -> Result<()> {
        let Some(factors) = &self.kinetic else {
            return Ok(());
        };
        if psi.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            return Ok(());
        }
        self.spectral.forward_in_place(psi, &mut self.scratch)?;
        for (v, f) in psi.iter_mut().zip(factors) {
            *v *= f;
        }
        self.spectral.inverse_in_place(psi, &mut self.scratch)
    }

    /// One symmetric step: half potential, full kinetic, half potential.
    pub fn step(&mut self, psi1: &mut ComplexField, psi2: &mut ComplexField) -> Result<()> {
        self.run(psi1, psi2, 1)
    }

    /// `steps` consecutive steps. Adjacent potential half-steps are merged,
    /// which is exact because the local flow is a one-parameter group.
    pub fn run(&mut self, psi1: &mut ComplexField, psi2: &mut ComplexField, steps: u64) -> Result<()> {
        if !(psi1.same_grid(psi2) && *psi1.grid().as_ref() == *self.grid) {
            return Err(Error::Shape { expected: self.grid.len(), found: psi2.values.len() });
        }
        if steps == 0 {
            return Ok(());
        }
        let half = 0.5 * self.dt;
        self.potential(&mut psi1.values, &mut psi2.values, half);
        for i in 0..steps {
            self.kinetic_step(&mut psi1.values)?;
            self.kinetic_step(&mut psi2.values)?;
            let last = i + 1 == steps;
            self.potential(&mut psi1.values, &mut psi2.values, if last { half } else { self.dt });
            self.steps += 1;
            if (last || self.steps.is_multiple_of(NON_FINITE_CHECK)) && !(psi1.is_finite() && psi2.is_finite()) {
                let max_abs = psi1.max_abs().max(psi2.max_abs());
                return Err(Error::NonFinite { step: self.steps, max_abs });
            }
        }
        Ok(())
    }

    /// A propagator with the same settings but time step −dt.
    pub fn reversed(&self) -> Self {
        let mut p = Self {
            grid: self.grid.clone(),
            consts: self.consts,
            spectral: Spectral::new(self.grid.clone()),
            scratch: self.spectral.make_scratch(),
            dt: -self.dt,
            kinetic: None,
            v1: self.v1.clone(),
            v2: self.v2.clone(),
            couplings: self.couplings,
            steps: 0,
        };
        if self.kinetic.is_some() {
            p.kinetic = Some(p.kinetic_factors(-self.dt));
        }
        p
    }
}

/// One-shot step returning new fields. Builds a propagator on each call, so
/// loops should hold a [`Propagator`] instead.
pub fn evolve_step(
    psi1: &ComplexField,
    psi2: &ComplexField,
    trap: &TrapConfig,
    couplings: &CouplingCoefficients,
    consts: &PhysicalConstants,
    dt: f64,
) -> Result<(ComplexField, ComplexField)> {
    let mut p = Propagator::new(psi1.grid().clone(), *consts, trap, *couplings, dt)?;
    let (mut a, mut b) = (psi1.clone(), psi2.clone());
    p.step(&mut a, &mut b)?;
    Ok((a, b))
}
