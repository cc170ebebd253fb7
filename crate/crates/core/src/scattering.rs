//! Field-dependent complex scattering lengths and the mean-field couplings
//! derived from them.
//!
//! The inelastic part of the inter-species length is a quadratic in
//! δ = B − B₀ that vanishes at the configured zero crossing:
//!
//! ```text
//! Im a₁₂(B) = −| s·δ + c·δ² |
//! ```
//!
//! The absolute value keeps the absorptive sign convention (Im a₁₂ ≤ 0) on
//! both sides of B₀. Two-body loss uses K₁₂ = (8πħ/m)|Im a₁₂|, so that
//! dN₂/dt = −K₁₂ ∫ n₁ n₂ dV.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::PhysicalConstants;

/// Parameters of the Im a₁₂(B) curve and the (field-independent by default)
/// elastic lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringModel {
    /// Zero crossing of Im a₁₂, gauss.
    pub zero_crossing: f64,
    /// Linear coefficient of the loss curve, m/G.
    pub slope: f64,
    /// Quadratic coefficient, m/G².
    pub curvature: f64,
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    /// Optional linear field dependence of the real parts, m/G, about B₀.
    pub a11_per_gauss: f64,
    pub a22_per_gauss: f64,
    pub a12_per_gauss: f64,
    /// Validity window, gauss.
    pub window: (f64, f64),
}

/// Loss slope calibrated against the 540 ms overlap decay at 132.4 G
/// (see `protocol::calibrate_loss_slope`).
pub const DEFAULT_LOSS_SLOPE: f64 = 5.18e-11;

impl Default for ScatteringModel {
    fn default() -> Self {
        Self {
            zero_crossing: 132.36,
            slope: DEFAULT_LOSS_SLOPE,
            curvature: 0.0,
            a11: 2.8e-9,
            a22: 3.4e-9,
            a12: 3.4e-9,
            a11_per_gauss: 0.0,
            a22_per_gauss: 0.0,
            a12_per_gauss: 0.0,
            window: (130.0, 135.0),
        }
    }
}

impl ScatteringModel {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if !(lo < hi) {
            return Err(Error::Scattering(format!("empty window [{lo}, {hi}]")));
        }
        if !(lo..=hi).contains(&self.zero_crossing) {
            return Err(Error::Scattering(format!(
                "zero crossing {} G outside window [{lo}, {hi}]",
                self.zero_crossing
            )));
        }
        if !(self.a11 > 0.0 && self.a22 > 0.0 && self.a12 > 0.0) {
            return Err(Error::Scattering("real scattering lengths must be positive".into()));
        }
        if self.curvature != 0.0 {
            let other = self.zero_crossing - self.slope / self.curvature;
            if other > lo && other < hi && other != self.zero_crossing {
                return Err(Error::Scattering(format!(
                    "loss curve has a second zero at {other} G inside the window"
                )));
            }
        }
        Ok(())
    }

    /// Signed loss polynomial s·δ + c·δ²; Im a₁₂ is minus its modulus.
    pub fn loss_polynomial(&self, field: f64) -> f64 {
        let d = field - self.zero_crossing;
        self.slope * d + self.curvature * d * d
    }
}

/// Scattering lengths at one bias field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringParams {
    pub bias_field: f64,
    pub a11_re: f64,
    pub a22_re: f64,
    pub a12_re: f64,
    pub a12_im: f64,
}

impl ScatteringParams {
    /// Lossless parameters with the given real lengths, for tests and
    /// miscibility studies.
    pub fn elastic(a11: f64, a22: f64, a12: f64) -> Self {
        Self { bias_field: f64::NAN, a11_re: a11, a22_re: a22, a12_re: a12, a12_im: 0.0 }
    }
}

pub fn scattering_at_field(model: &ScatteringModel, field: f64) -> Result<ScatteringParams> {
    let (lo, hi) = model.window;
    if !(field >= lo && field <= hi) {
        return Err(Error::FieldOutOfWindow { field, lo, hi });
    }
    let d = field - model.zero_crossing;
    Ok(ScatteringParams {
        bias_field: field,
        a11_re: model.a11 + model.a11_per_gauss * d,
        a22_re: model.a22 + model.a22_per_gauss * d,
        a12_re: model.a12 + model.a12_per_gauss * d,
        a12_im: -model.loss_polynomial(field).abs(),
    })
}

/// True when a₁₁·a₂₂ < a₁₂² (immiscible mixture).
pub fn phase_separates(p: &ScatteringParams) -> bool {
    p.a11_re * p.a22_re < p.a12_re * p.a12_re
}

/// Two-body loss coefficient K₁₂ = (8πħ/m)|Im a₁₂|, m³/s.
pub fn loss_rate(p: &ScatteringParams, consts: &PhysicalConstants) -> f64 {
    8.0 * PI * consts.hbar / consts.atom_mass * p.a12_im.abs()
}

/// Mean-field couplings in d dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCoefficients {
    pub g11: f64,
    pub g22: f64,
    pub g12: Complex64,
    /// Three-dimensional two-body loss coefficient, m³/s.
    pub k12: f64,
    /// Dimensional-reduction factor (m^(d−3)) already folded into the g's.
    pub reduction: f64,
}

impl CouplingCoefficients {
    pub fn from_params(p: &ScatteringParams, consts: &PhysicalConstants, reduction: f64) -> Self {
        let unit = 4.0 * PI * consts.hbar * consts.hbar / consts.atom_mass * reduction;
        Self {
            g11: unit * p.a11_re,
            g22: unit * p.a22_re,
            g12: Complex64::new(unit * p.a12_re, unit * p.a12_im),
            k12: loss_rate(p, consts),
            reduction,
        }
    }

    /// Single-component coupling, no second species.
    pub fn single(g11: f64) -> Self {
        Self { g11, g22: 0.0, g12: Complex64::new(0.0, 0.0), k12: 0.0, reduction: 1.0 }
    }

    pub fn lossless(&self) -> Self {
        Self { g12: Complex64::new(self.g12.re, 0.0), k12: 0.0, ..*self }
    }

    /// Loss coefficient acting on reduced-dimension densities, m^d/s.
    pub fn reduced_loss_rate(&self) -> f64 {
        self.k12 * self.reduction
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NM: f64 = 1e-9;

    #[test]
    fn zero_crossing_and_default_lengths() {
        let m = ScatteringModel::default();
        let p = scattering_at_field(&m, 132.36).unwrap();
        assert_eq!(p.a12_im, 0.0);
        assert_eq!((p.a11_re, p.a22_re, p.a12_re), (2.8e-9, 3.4e-9, 3.4e-9));
    }

    #[test]
    fn local_slope_matches_polynomial() {
        let m = ScatteringModel { slope: 2e-12, curvature: 1e-12, ..Default::default() };
        let delta = 0.01;
        let p = scattering_at_field(&m, m.zero_crossing + delta).unwrap();
        let expected = -(2e-12 * delta + 1e-12 * delta * delta);
        assert!((p.a12_im - expected).abs() < 1e-24);
        // Leading order is −slope·δ.
        assert!((p.a12_im + 2e-12 * delta).abs() <= 1e-12 * delta * delta * 1.0001);
    }

    #[test]
    fn window_is_enforced() {
        let m = ScatteringModel::default();
        assert!(matches!(scattering_at_field(&m, 129.0), Err(Error::FieldOutOfWindow { .. })));
        assert!(scattering_at_field(&m, 135.5).is_err());
        assert!(scattering_at_field(&m, f64::NAN).is_err());
    }

    #[test]
    fn second_zero_inside_window_is_rejected() {
        let m = ScatteringModel { slope: 1e-12, curvature: -1e-12, ..Default::default() };
        assert!(m.validate().is_err());
        assert!(ScatteringModel::default().validate().is_ok());
    }

    #[test]
    fn separation_predicate_examples() {
        assert!(phase_separates(&ScatteringParams::elastic(2.8 * NM, 3.4 * NM, 3.4 * NM)));
        assert!(!phase_separates(&ScatteringParams::elastic(3.4 * NM, 3.4 * NM, 3.4 * NM)));
        assert!(!phase_separates(&ScatteringParams::elastic(2.8 * NM, 3.4 * NM, 3.0 * NM)));
    }

    #[test]
    fn loss_rate_examples() {
        let c = PhysicalConstants::sodium();
        let mut p = ScatteringParams::elastic(2.8 * NM, 3.4 * NM, 3.4 * NM);
        assert_eq!(loss_rate(&p, &c), 0.0);
        p.a12_im = -1e-12;
        let k1 = loss_rate(&p, &c);
        p.a12_im = -2e-12;
        assert!((loss_rate(&p, &c) / k1 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn couplings_follow_reduction_and_sign() {
        let c = PhysicalConstants::sodium();
        let mut p = ScatteringParams::elastic(2.8 * NM, 3.4 * NM, 3.4 * NM);
        p.a12_im = -1e-12;
        let g3 = CouplingCoefficients::from_params(&p, &c, 1.0);
        let g2 = CouplingCoefficients::from_params(&p, &c, 1e5);
        let expected = 4.0 * PI * c.hbar * c.hbar * 2.8 * NM / c.atom_mass;
        assert!((g3.g11 / expected - 1.0).abs() < 1e-14);
        assert!((g2.g11 / g3.g11 - 1e5).abs() < 1e-8);
        assert!(g3.g12.im < 0.0);
        // 2 Im g12 / ħ = −K12 ties the loss term to the rate convention.
        assert!((2.0 * g3.g12.im / c.hbar + g3.k12).abs() / g3.k12 < 1e-12);
    }

    proptest! {
        #[test]
        fn separation_symmetric_and_scale_invariant(
            a11 in 0.1f64..10.0, a22 in 0.1f64..10.0, a12 in 0.1f64..10.0, lambda in 0.01f64..100.0
        ) {
            let p = ScatteringParams::elastic(a11, a22, a12);
            let swapped = ScatteringParams::elastic(a22, a11, a12);
            prop_assert_eq!(phase_separates(&p), phase_separates(&swapped));
            // Scaling can flip the predicate only through rounding at equality.
            let q = ScatteringParams::elastic(a11 * lambda, a22 * lambda, a12 * lambda);
            let margin = (a11 * a22 - a12 * a12).abs() / (a12 * a12);
            if margin > 1e-12 {
                prop_assert_eq!(phase_separates(&p), phase_separates(&q));
            }
        }

        #[test]
        fn loss_is_absorptive_and_vanishes_only_at_crossing(
            b in 130.0f64..135.0, slope in 1e-14f64..1e-10, curv in -1e-12f64..1e-12
        ) {
            let m = ScatteringModel { slope, curvature: curv, ..Default::default() };
            prop_assume!(m.validate().is_ok());
            let p = scattering_at_field(&m, b).unwrap();
            let c = PhysicalConstants::sodium();
            prop_assert!(p.a12_im <= 0.0);
            prop_assert!(loss_rate(&p, &c) >= 0.0);
            prop_assert_eq!(loss_rate(&p, &c) == 0.0, p.a12_im == 0.0);
            if (b - m.zero_crossing).abs() > 1e-9 {
                prop_assert!(p.a12_im < 0.0);
            }
        }
    }
}
