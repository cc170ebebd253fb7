//! Rectangular simulation grids, complex fields living on them, and the
//! FFT plumbing used by every propagator.
//!
//! Axis conventions: a 1D grid is the z axis. A 2D grid is the x–z plane,
//! stored row-major with x as the slow index and z contiguous.
//!
//! DFT convention: the forward transform is unnormalized and the inverse
//! carries 1/N. With that choice
//! `Σ|ψ|² dV = (dV / N) Σ|ψ̃|²`, which is what [`spectral_norm`] evaluates.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    extents: Vec<f64>,
    points: Vec<usize>,
    spacing: Vec<f64>,
}

impl Grid {
    pub fn new(extents: &[f64], points: &[usize]) -> Result<Self> {
        make_grid(extents.len(), extents, points)
    }

    pub fn dims(&self) -> usize {
        self.points.len()
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Index of the z axis (the last one).
    pub fn z_axis(&self) -> usize {
        self.dims() - 1
    }

    /// Cell-centre coordinates along `axis`, running from −L/2 to L/2 − dx.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let (l, n, dx) = (self.extents[axis], self.points[axis], self.spacing[axis]);
        (0..n).map(|i| -0.5 * l + i as f64 * dx).collect()
    }

    /// Angular wavenumbers along `axis` in standard DFT ordering.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis];
        let dk = 2.0 * PI / self.extents[axis];
        (0..n)
            .map(|i| {
                let j = if i < n.div_ceil(2) { i as isize } else { i as isize - n as isize };
                j as f64 * dk
            })
            .collect()
    }

    pub fn k_max(&self, axis: usize) -> f64 {
        PI / self.spacing[axis]
    }

    /// |k|² at every grid point, flattened in storage order.
    pub fn k_squared(&self) -> Vec<f64> {
        let k_axes: Vec<Vec<f64>> = (0..self.dims()).map(|a| self.wavenumbers(a)).collect();
        self.map_axes(&k_axes, |ks| ks.iter().map(|k| k * k).sum())
    }

    /// Evaluates `f` on the per-axis values `axes[a][i_a]` at every point.
    pub fn map_axes<T>(&self, axes: &[Vec<f64>], f: impl Fn(&[f64]) -> T) -> Vec<T> {
        match self.dims() {
            1 => axes[0].iter().map(|&z| f(&[z])).collect(),
            _ => {
                let mut out = Vec::with_capacity(self.len());
                for &x in &axes[0] {
                    for &z in &axes[1] {
                        out.push(f(&[x, z]));
                    }
                }
                out
            }
        }
    }

    /// Position of every grid point in storage order.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dims()).map(|a| self.coords(a)).collect();
        self.map_axes(&axes, |p| p.to_vec())
    }

    /// Coordinate along `axis` for every flattened index.
    pub fn axis_values(&self, axis: usize) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..self.dims()).map(|a| self.coords(a)).collect();
        self.map_axes(&axes, |p| p[axis])
    }

    pub fn contains(&self, axis: usize, coord: f64) -> bool {
        let half = 0.5 * self.extents[axis];
        coord >= -half && coord <= half - self.spacing[axis]
    }
}

/// Builds a 1D or 2D grid after validating extents and point counts.
pub fn make_grid(dims: usize, extents: &[f64], points: &[usize]) -> Result<Grid> {
    if !(1..=2).contains(&dims) {
        return Err(Error::Grid(format!("{dims} dimensions requested; only 1 or 2 supported")));
    }
    if extents.len() != dims || points.len() != dims {
        return Err(Error::Grid(format!(
            "expected {dims} extents and point counts, got {} and {}",
            extents.len(),
            points.len()
        )));
    }
    for (&l, &n) in extents.iter().zip(points) {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Grid(format!("extent {l} must be positive")));
        }
        if n < MIN_POINTS {
            return Err(Error::Grid(format!("{n} points per axis; at least {MIN_POINTS} required")));
        }
        if !n.is_power_of_two() {
            log::warn!("{n} points per axis is not a power of two; FFTs will be slower");
        }
    }
    let spacing = extents.iter().zip(points).map(|(&l, &n)| l / n as f64).collect();
    Ok(Grid { extents: extents.to_vec(), points: points.to_vec(), spacing })
}

/// A complex matter field ψ with Σ|ψ|² dV equal to its atom number.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Arc<Grid>,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(position)` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let axes: Vec<Vec<f64>> = (0..grid.dims()).map(|a| grid.coords(a)).collect();
        let values = grid.map_axes(&axes, f);
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Atom number Σ|ψ|² dV.
    pub fn norm(&self) -> f64 {
        norm(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Rescales so the atom number equals `atoms`. No-op on a zero field.
    pub fn normalize_to(&mut self, atoms: f64) {
        let n = self.norm();
        if n > 0.0 {
            self.scale((atoms / n).sqrt());
        }
    }

    pub fn same_grid(&self, other: &ComplexField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }
}

pub fn norm(field: &ComplexField) -> f64 {
    field.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * field.grid.cell_volume()
}

/// Reusable FFT plans for one grid.
pub struct Spectral {
    grid: Arc<Grid>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scratch_len: usize,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Arc<Grid>) -> Self {
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = grid.points().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse: Vec<_> = grid.points().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self { grid, forward, inverse, scratch_len }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Scratch buffer large enough for both transforms.
    pub fn make_scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.scratch_len + self.grid.len()]
    }

    fn check(&self, data: &[Complex64]) -> Result<()> {
        if data.len() != self.grid.len() {
            return Err(Error::Shape { expected: self.grid.len(), found: data.len() });
        }
        Ok(())
    }

    /// Unnormalized forward DFT over all axes, in place.
    pub fn forward_in_place(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) -> Result<()> {
        self.check(data)?;
        self.transform(data, scratch, &self.forward);
        Ok(())
    }

    /// Inverse DFT including the 1/N factor, in place.
    pub fn inverse_in_place(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) -> Result<()> {
        self.check(data)?;
        self.transform(data, scratch, &self.inverse);
        let inv_n = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= inv_n;
        }
        Ok(())
    }

    fn transform(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>, plans: &[Arc<dyn Fft<f64>>]) {
        let need = self.scratch_len + self.grid.len();
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        let (fft_scratch, columns) = scratch.split_at_mut(self.scratch_len);
        match self.grid.dims() {
            1 => plans[0].process_with_scratch(data, fft_scratch),
            _ => {
                let (nx, nz) = (self.grid.points()[0], self.grid.points()[1]);
                let columns = &mut columns[..nx * nz];
                // Rows are contiguous along z; columns go through a transpose.
                plans[1].process_with_scratch(data, fft_scratch);
                transpose(data, columns, nx, nz);
                plans[0].process_with_scratch(columns, fft_scratch);
                transpose(columns, data, nz, nx);
            }
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Spectral coefficients of a field, in DFT ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Arc<Grid>,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
}

pub fn forward_spectral(field: &ComplexField) -> Result<SpectralField> {
    let plan = Spectral::new(field.grid.clone());
    let mut coeffs = field.values.clone();
    let mut scratch = plan.make_scratch();
    plan.forward_in_place(&mut coeffs, &mut scratch)?;
    Ok(SpectralField { grid: field.grid.clone(), coeffs })
}

pub fn inverse_spectral(spectral: &SpectralField) -> Result<ComplexField> {
    let plan = Spectral::new(spectral.grid.clone());
    let mut values = spectral.coeffs.clone();
    let mut scratch = plan.make_scratch();
    plan.inverse_in_place(&mut values, &mut scratch)?;
    ComplexField::from_values(spectral.grid.clone(), values)
}

/// Atom number evaluated from spectral coefficients, `(dV/N) Σ|ψ̃|²`.
pub fn spectral_norm(spectral: &SpectralField) -> f64 {
    let g = &spectral.grid;
    spectral.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.cell_volume() / g.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_arithmetic() {
        let g = make_grid(1, &[100e-6], &[256]).unwrap();
        assert!((g.spacing()[0] - 0.390625e-6).abs() < 1e-18);
        let g2 = make_grid(2, &[100e-6, 100e-6], &[128, 128]).unwrap();
        assert_eq!(g2.len(), 16384);
        for a in 0..2 {
            assert_eq!(g2.spacing()[a] * g2.points()[a] as f64, g2.extents()[a]);
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_grid(1, &[100e-6], &[4]).is_err());
        assert!(make_grid(1, &[0.0], &[64]).is_err());
        assert!(make_grid(1, &[-1.0], &[64]).is_err());
        assert!(make_grid(3, &[1.0; 3], &[8; 3]).is_err());
        assert!(make_grid(2, &[1.0], &[8]).is_err());
    }

    #[test]
    fn wavenumbers_follow_dft_order() {
        let g = make_grid(1, &[2.0 * PI], &[8]).unwrap();
        assert_eq!(g.wavenumbers(0), vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert!((g.k_max(0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn norm_cases() {
        let g = Arc::new(make_grid(2, &[10e-6, 20e-6], &[16, 32]).unwrap());
        let dv = g.cell_volume();
        assert_eq!(norm(&ComplexField::zeros(g.clone())), 0.0);

        let mut one = ComplexField::zeros(g.clone());
        one.values[37] = c((1.0 / dv).sqrt(), 0.0);
        assert!((one.norm() - 1.0).abs() < 1e-12);

        let amp = (3e6 / (g.len() as f64 * dv)).sqrt();
        let uniform = ComplexField::from_fn(g, |_| c(amp, 0.0));
        assert!((uniform.norm() / 3e6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        let g = Arc::new(make_grid(2, &[1.0, 2.0], &[16, 32]).unwrap());
        let (kx, kz) = (g.wavenumbers(0)[3], g.wavenumbers(1)[29]);
        let f = ComplexField::from_fn(g.clone(), |p| Complex64::from_polar(1.0, kx * p[0] + kz * p[1]));
        let s = forward_spectral(&f).unwrap();
        let peak = 3 * 32 + 29;
        for (i, v) in s.coeffs.iter().enumerate() {
            if i == peak {
                assert!((v.norm() - g.len() as f64).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9, "leak at {i}: {v}");
            }
        }
    }

    #[test]
    fn gaussian_maps_to_gaussian() {
        // Closed form: ∫ exp(-x²/2σ²) e^{-ikx} dx = √(2π) σ exp(-k²σ²/2).
        let sigma = 3e-6;
        let g = Arc::new(make_grid(1, &[80e-6], &[256]).unwrap());
        let f = ComplexField::from_fn(g.clone(), |p| c((-p[0] * p[0] / (2.0 * sigma * sigma)).exp(), 0.0));
        let s = forward_spectral(&f).unwrap();
        let dx = g.spacing()[0];
        let peak = (2.0 * PI).sqrt() * sigma;
        for (k, v) in g.wavenumbers(0).iter().zip(&s.coeffs) {
            let exact = peak * (-k * k * sigma * sigma / 2.0).exp();
            assert!(((v.norm() * dx) - exact).abs() / peak < 1e-6);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = Arc::new(make_grid(1, &[1.0], &[16]).unwrap());
        let plan = Spectral::new(g);
        let mut data = vec![c(0.0, 0.0); 8];
        let mut scratch = plan.make_scratch();
        assert!(matches!(plan.forward_in_place(&mut data, &mut scratch), Err(Error::Shape { .. })));
    }
}
