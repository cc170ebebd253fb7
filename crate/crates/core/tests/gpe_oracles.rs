//! Propagator and ground-state checks against closed-form results.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use stoplight_core::gpe::observables::{chemical_potential, energy, variance};
use stoplight_core::gpe::{ground_state, GroundStateOptions, Propagator, TrapConfig};
use stoplight_core::grid::{make_grid, ComplexField, Grid};
use stoplight_core::scattering::CouplingCoefficients;
use stoplight_core::units::PhysicalConstants;

fn consts() -> PhysicalConstants {
    PhysicalConstants::sodium()
}

fn gaussian(grid: &Arc<Grid>, sigma: f64, center: &[f64], atoms: f64) -> ComplexField {
    let mut f = ComplexField::from_fn(grid.clone(), |p| {
        let r2: f64 = p.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum();
        Complex64::new((-r2 / (4.0 * sigma * sigma)).exp(), 0.0)
    });
    f.normalize_to(atoms);
    f
}

fn relative_l2(a: &ComplexField, b: &ComplexField) -> f64 {
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn free_gaussian_spreads_at_the_analytic_rate() {
    let c = consts();
    let grid = Arc::new(make_grid(1, &[400e-6], &[1024]).unwrap());
    let sigma0 = 5e-6;
    let mut psi1 = gaussian(&grid, sigma0, &[0.0], 1.0);
    let mut psi2 = ComplexField::zeros(grid.clone());
    let free = TrapConfig::harmonic(vec![0.0]);
    let mut prop = Propagator::new(grid.clone(), c, &free, CouplingCoefficients::single(0.0), 50e-6).unwrap();
    let t = 0.03;
    prop.run(&mut psi1, &mut psi2, (t / 50e-6) as u64).unwrap();
    let spread = c.hbar * t / (2.0 * c.atom_mass * sigma0 * sigma0);
    let expected = sigma0 * sigma0 * (1.0 + spread * spread);
    let measured = variance(&psi1, 0).unwrap();
    assert!((measured / expected - 1.0).abs() < 1e-3, "{measured:e} vs {expected:e}");
}

fn lossless_2d_start(points: usize) -> (Arc<Grid>, TrapConfig, CouplingCoefficients, ComplexField, ComplexField) {
    let grid = Arc::new(make_grid(2, &[128e-6, 128e-6], &[points, points]).unwrap());
    let mut trap = TrapConfig::harmonic(vec![2.0 * PI * 30.0, 2.0 * PI * 30.0]);
    trap.gradient = 20.0;
    trap.moment2 = 6.626e-34 * 7e5;
    let unit = 4.0 * PI * consts().hbar.powi(2) / consts().atom_mass * 1.06e5;
    let couplings = CouplingCoefficients {
        g11: unit * 2.8e-9,
        g22: unit * 3.4e-9,
        g12: Complex64::new(unit * 3.4e-9, 0.0),
        k12: 0.0,
        reduction: 1.06e5,
    };
    let psi1 = gaussian(&grid, 15e-6, &[0.0, 0.0], 3e5);
    let psi2 = gaussian(&grid, 6e-6, &[3e-6, -20e-6], 3e4);
    (grid, trap, couplings, psi1, psi2)
}

#[test]
fn lossless_run_conserves_norms_and_energy() {
    let c = consts();
    let (grid, trap, couplings, mut psi1, mut psi2) = lossless_2d_start(64);
    let (v1, v2) = trap.potentials(&grid, &c);
    let n0 = (psi1.norm(), psi2.norm());
    let e0 = energy(&psi1, &psi2, &v1, &v2, &couplings, &c).unwrap();
    let mut prop = Propagator::new(grid.clone(), c, &trap, couplings, 2e-6).unwrap();
    prop.run(&mut psi1, &mut psi2, 1000).unwrap();
    assert!((psi1.norm() / n0.0 - 1.0).abs() < 1e-10);
    assert!((psi2.norm() / n0.1 - 1.0).abs() < 1e-10);
    let e1 = energy(&psi1, &psi2, &v1, &v2, &couplings, &c).unwrap();
    assert!((e1 / e0 - 1.0).abs() < 1e-8, "energy drift {:e}", e1 / e0 - 1.0);
}

#[test]
fn reversed_propagation_recovers_the_start() {
    let c = consts();
    let (grid, trap, couplings, psi1, psi2) = lossless_2d_start(64);
    let (mut a, mut b) = (psi1.clone(), psi2.clone());
    let mut fwd = Propagator::new(grid, c, &trap, couplings, 5e-6).unwrap();
    fwd.run(&mut a, &mut b, 400).unwrap();
    assert!(relative_l2(&b, &psi2) > 1e-2, "the fields must actually move");
    fwd.reversed().run(&mut a, &mut b, 400).unwrap();
    assert!(relative_l2(&a, &psi1) < 1e-10);
    assert!(relative_l2(&b, &psi2) < 1e-10);
}

#[test]
fn single_steps_match_batched_run() {
    let c = consts();
    let (grid, trap, couplings, psi1, psi2) = lossless_2d_start(32);
    let (mut a1, mut a2) = (psi1.clone(), psi2.clone());
    let (mut b1, mut b2) = (psi1, psi2);
    let mut p = Propagator::new(grid.clone(), c, &trap, couplings, 5e-6).unwrap();
    let mut q = Propagator::new(grid, c, &trap, couplings, 5e-6).unwrap();
    for _ in 0..50 {
        p.step(&mut a1, &mut a2).unwrap();
    }
    q.run(&mut b1, &mut b2, 50).unwrap();
    assert!(relative_l2(&a1, &b1) < 1e-12);
    assert!(relative_l2(&a2, &b2) < 1e-12);
    assert_eq!(p.steps_taken(), q.steps_taken());
}

/// Uniform overlapping components: n₁ − n₂ = c stays fixed and
/// n₂(t) = c n₂₀ e^(−κct) / (n₁₀ − n₂₀ e^(−κct)).
#[test]
fn uniform_overlap_loss_matches_rate_equation() {
    let c = consts();
    let grid = Arc::new(make_grid(2, &[32e-6, 32e-6], &[16, 16]).unwrap());
    let free = TrapConfig::harmonic(vec![0.0, 0.0]);
    let k2d = 3e-9;
    let couplings = CouplingCoefficients {
        g11: 1e-45,
        g22: 1.2e-45,
        g12: Complex64::new(1.2e-45, -0.5 * c.hbar * k2d),
        k12: k2d,
        reduction: 1.0,
    };
    let (n1, n2) = (1e9f64, 1e5f64);
    let mut psi1 = ComplexField::from_fn(grid.clone(), |_| Complex64::new(n1.sqrt(), 0.0));
    let mut psi2 = ComplexField::from_fn(grid.clone(), |_| Complex64::new(n2.sqrt(), 0.0));
    let area = 32e-6 * 32e-6;
    let tau = 1.0 / (k2d * n1);
    let dt = 1e-4;
    let mut prop = Propagator::new(grid, c, &free, couplings, dt).unwrap();
    let steps = (5.0 * tau / dt).round() as u64;
    let chunk = steps / 10;
    let diff = n1 - n2;
    for k in 1..=10 {
        prop.run(&mut psi1, &mut psi2, chunk).unwrap();
        let t = (k * chunk) as f64 * dt;
        let decay = (-k2d * diff * t).exp();
        let exact = diff * n2 * decay / (n1 - n2 * decay) * area;
        let exponential = n2 * (-t / tau).exp() * area;
        assert!((psi2.norm() / exact - 1.0).abs() < 1e-9, "t = {t}");
        assert!((psi2.norm() / exponential - 1.0).abs() < 5e-3, "t = {t}");
        assert!(((psi1.norm() - psi2.norm()) / (diff * area) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn harmonic_ground_state_energy_is_zero_point() {
    let c = consts();
    let omega = 2.0 * PI * 100.0;
    let grid = Arc::new(make_grid(1, &[40e-6], &[256]).unwrap());
    let trap = TrapConfig::harmonic(vec![omega]);
    let seed = gaussian(&grid, 3e-6, &[2e-6], 1.0);
    let options = GroundStateOptions { dt: 20e-6, tolerance: 1e-12, seed: Some(seed), ..Default::default() };
    let gs = ground_state(grid, &trap, &CouplingCoefficients::single(0.0), &c, 1.0, &options).unwrap();
    let zero_point = 0.5 * c.hbar * omega;
    assert!((gs.energy / zero_point - 1.0).abs() < 1e-3, "{}", gs.energy / zero_point);
}

#[test]
fn thomas_fermi_chemical_potential_in_one_dimension() {
    let c = consts();
    let omega = 2.0 * PI * 100.0;
    let atoms = 1e4;
    // Coupling chosen so that µ_TF is about 100 ħω.
    let mu_target = 100.0 * c.hbar * omega;
    let r = (2.0 * mu_target / (c.atom_mass * omega * omega)).sqrt();
    let g = 4.0 * mu_target * r / (3.0 * atoms);
    let mu_tf = (0.75 * atoms * g * omega * (c.atom_mass / 2.0).sqrt()).powf(2.0 / 3.0);
    let grid = Arc::new(make_grid(1, &[100e-6], &[512]).unwrap());
    let trap = TrapConfig::harmonic(vec![omega]);
    let options = GroundStateOptions { dt: 5e-6, tolerance: 1e-11, ..Default::default() };
    let gs = ground_state(grid.clone(), &trap, &CouplingCoefficients::single(g), &c, atoms, &options).unwrap();
    let (v, _) = trap.potentials(&grid, &c);
    let mu = chemical_potential(&gs.psi, &v, g, &c).unwrap();
    assert!((mu / mu_tf - 1.0).abs() < 0.02, "µ/µ_TF = {}", mu / mu_tf);
}
