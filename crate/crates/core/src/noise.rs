//! Phase-noise budget, sensitivity and metrological gain.
//!
//! The interferometric phase uncertainty combines atom shot noise, which
//! grows as the visibility drops, with a visibility-independent technical
//! floor: `ΔΦ_T² = (v√(NA))⁻² + ΔΦ_tech²`. The resolvable rotation is
//! `Δφ = ΔΦ_T / |∂Φ_T/∂φ|`, so a steep phase response suppresses the technical
//! floor. Gains are quoted in decibels of the `Δ²φ` ratio.

use alloc::vec::Vec;

use libm::{log10, sqrt};

use crate::clock_state::{phase_slope, theta_from_population, total_phase, visibility, PhaseMapping};
use crate::phase::nearest_branch;
use crate::{Error, Result};

/// Cycles averaged per data point unless configured otherwise.
pub const DEFAULT_CYCLES: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseBudget {
    /// Atoms per cycle.
    pub atoms: f64,
    /// Cycles averaged.
    pub cycles: f64,
    /// Technical phase noise in radians.
    pub technical: f64,
    pub visibility: f64,
}

impl NoiseBudget {
    pub fn new(atoms: f64, cycles: f64, technical: f64, visibility: f64) -> Result<Self> {
        if !(atoms >= 1.0) {
            return Err(Error::OutOfRange { name: "atoms", value: atoms });
        }
        if !(cycles >= 1.0) {
            return Err(Error::OutOfRange { name: "cycles", value: cycles });
        }
        if !(technical >= 0.0) || !technical.is_finite() {
            return Err(Error::OutOfRange { name: "technical", value: technical });
        }
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::OutOfRange { name: "visibility", value: visibility });
        }
        Ok(Self { atoms, cycles, technical, visibility })
    }

    /// Shot-noise term `(v√(NA))⁻¹`; infinite at zero visibility.
    pub fn quantum(&self) -> f64 {
        if self.visibility == 0.0 {
            return f64::INFINITY;
        }
        1.0 / (self.visibility * sqrt(self.atoms * self.cycles))
    }
}

/// `ΔΦ_T = √[(v√(NA))⁻² + ΔΦ_tech²]`, infinite when `v = 0`.
pub fn phase_noise(budget: &NoiseBudget) -> f64 {
    let q = budget.quantum();
    if q.is_infinite() {
        return f64::INFINITY;
    }
    libm::hypot(q, budget.technical)
}

/// `Δφ = ΔΦ_T / |slope|`.
pub fn sensitivity(d_total_phase: f64, slope: f64) -> Result<f64> {
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::ZeroSlope);
    }
    Ok(d_total_phase / slope.abs())
}

/// A measured phase with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseReading {
    pub phase: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoPointSensitivity {
    /// Chord slope `(Φ_b − Φ_a)/(φ_b − φ_a)`, signed.
    pub slope: f64,
    /// `Δ²φ = (ΔΦ_a² + ΔΦ_b²)/slope²`.
    pub delta2_phi: f64,
}

/// Chord-slope sensitivity from two readings taken at rotations `phi_a` and `phi_b`.
pub fn two_point_sensitivity(
    a: PhaseReading,
    b: PhaseReading,
    phi_a: f64,
    phi_b: f64,
) -> Result<TwoPointSensitivity> {
    if phi_a == phi_b {
        return Err(Error::CoincidentAbscissae);
    }
    let slope = (b.phase - a.phase) / (phi_b - phi_a);
    if slope == 0.0 {
        return Err(Error::ZeroSlope);
    }
    let delta2_phi = (a.error * a.error + b.error * b.error) / (slope * slope);
    Ok(TwoPointSensitivity { slope, delta2_phi })
}

/// `10 log₁₀(Δ²φ_ref / Δ²φ_test)`.
pub fn gain_db(delta2_test: f64, delta2_ref: f64) -> Result<f64> {
    if !(delta2_test > 0.0) {
        return Err(Error::NonPositive { name: "delta2_test", value: delta2_test });
    }
    if !(delta2_ref > 0.0) {
        return Err(Error::NonPositive { name: "delta2_ref", value: delta2_ref });
    }
    Ok(10.0 * log10(delta2_ref / delta2_test))
}

/// Single-level interferometer used as the gain reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Reference {
    /// All population in `|2⟩` (`P₂ = 1`), slope 2 under `φ₂ = 2φ₁`.
    Upper,
    /// All population in `|1⟩` (`P₂ = 0`), slope 1.
    Lower,
}

impl Reference {
    pub fn population(self) -> f64 {
        match self {
            Reference::Upper => 1.0,
            Reference::Lower => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GainConfig {
    pub p2: f64,
    pub atoms: f64,
    pub cycles: f64,
    pub technical: f64,
    pub reference: Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityPoint {
    pub phi: f64,
    /// Unwrapped along the sweep.
    pub total_phase: f64,
    pub slope: f64,
    /// `ΔΦ_T`.
    pub d_total_phase: f64,
    /// `Δφ`.
    pub d_phi: f64,
    /// Gain against the reference evaluated at the same `φ`.
    pub gain_db: f64,
}

/// Sensitivity of a single configuration at one rotation, under `φ₂ = 2φ₁`.
pub fn sensitivity_at(p2: f64, atoms: f64, cycles: f64, technical: f64, phi: f64) -> Result<(f64, f64, f64, f64)> {
    let mapping = PhaseMapping::MAGNETIC_PROJECTION;
    let theta = theta_from_population(p2)?;
    let state = mapping.state(theta, phi)?;
    let phase = total_phase(&state)?;
    let slope = phase_slope(&state, &mapping)?;
    let v = visibility(theta, state.relative_phase());
    let d_total = phase_noise(&NoiseBudget::new(atoms, cycles, technical, v)?);
    Ok((phase, slope, d_total, sensitivity(d_total, slope)?))
}

/// Sensitivity and gain over a grid of rotations.
///
/// The reference interferometer uses the same atom number, cycle count and
/// technical noise and is evaluated at the same `φ`.
pub fn gain_curve(config: &GainConfig, phi_grid: &[f64]) -> Result<Vec<SensitivityPoint>> {
    if config.p2 == 0.5 {
        return Err(Error::OutOfRange { name: "p2", value: config.p2 });
    }
    let mut out: Vec<SensitivityPoint> = Vec::with_capacity(phi_grid.len());
    for &phi in phi_grid {
        let (phase, slope, d_total_phase, d_phi) =
            sensitivity_at(config.p2, config.atoms, config.cycles, config.technical, phi)?;
        let (_, _, _, d_phi_ref) =
            sensitivity_at(config.reference.population(), config.atoms, config.cycles, config.technical, phi)?;
        let total_phase = match out.last() {
            Some(prev) => nearest_branch(phase, prev.total_phase),
            None => phase,
        };
        out.push(SensitivityPoint {
            phi,
            total_phase,
            slope,
            d_total_phase,
            d_phi,
            gain_db: gain_db(d_phi * d_phi, d_phi_ref * d_phi_ref)?,
        });
    }
    Ok(out)
}

/// Extra phase from population fluctuations, `2G₀²(n₂ − n₁)Δφ_sig`.
pub fn population_noise_amplification(g0: f64, n1: f64, n2: f64, d_phi_signal: f64) -> f64 {
    2.0 * g0 * g0 * (n2 - n1) * d_phi_signal
}

/// Total-phase error from arm phase noise, `G(Δφ_B − Δφ_A) + Δφ_A`.
pub fn correlated_phase_noise(g: f64, d_phi_a: f64, d_phi_b: f64) -> f64 {
    g * (d_phi_b - d_phi_a) + d_phi_a
}

/// Relative uncertainty of the applied rotation: current and timing enter
/// linearly, the wave-packet distance twice (inverse-square gradient).
pub fn signal_uncertainty_budget(d_current: f64, d_time: f64, d_distance: f64) -> Result<f64> {
    for (name, value) in [("d_current", d_current), ("d_time", d_time), ("d_distance", d_distance)] {
        if !(value >= 0.0) {
            return Err(Error::OutOfRange { name, value });
        }
    }
    Ok(d_current + d_time + 2.0 * d_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn budget(v: f64, n: f64, a: f64, t: f64) -> NoiseBudget {
        NoiseBudget::new(n, a, t, v).unwrap()
    }

    #[test]
    fn phase_noise_examples() {
        assert!((phase_noise(&budget(0.025, 5e3, 8.0, 0.0)) - 0.2).abs() < 1e-12);
        assert!((phase_noise(&budget(1.0, 1e30, 1.0, 0.1)) - 0.1).abs() < 1e-12);
        let expected = libm::sqrt(0.005 * 0.005 + 0.01);
        assert!((phase_noise(&budget(1.0, 5e3, 8.0, 0.1)) - expected).abs() < 1e-15);
        assert!((expected - 0.1001).abs() < 1e-4);
        assert!(phase_noise(&budget(0.0, 5e3, 8.0, 0.1)).is_infinite());
    }

    #[test]
    fn budget_validation() {
        assert!(NoiseBudget::new(0.5, 8.0, 0.1, 0.5).is_err());
        assert!(NoiseBudget::new(10.0, 0.0, 0.1, 0.5).is_err());
        assert!(NoiseBudget::new(10.0, 1.0, -0.1, 0.5).is_err());
        assert!(NoiseBudget::new(10.0, 1.0, 0.1, 1.5).is_err());
    }

    #[test]
    fn quadrature_identity() {
        let b = budget(0.3, 1234.0, 3.0, 0.07);
        let d = phase_noise(&b);
        let q = 1.0 / (0.3 * libm::sqrt(1234.0 * 3.0));
        assert!((d * d - 0.07 * 0.07 - q * q).abs() < 1e-15);
    }

    #[test]
    fn sensitivity_examples() {
        assert_eq!(sensitivity(0.2, 2.0).unwrap(), 0.1);
        assert!((sensitivity(0.204, 19.4).unwrap() - 0.0105).abs() < 1e-4);
        assert_eq!(sensitivity(0.1, -1.0).unwrap(), 0.1);
        assert_eq!(sensitivity(0.1, 0.0), Err(Error::ZeroSlope));
    }

    #[test]
    fn two_point_examples() {
        let span = (0.94 * PI, 1.04 * PI);
        let test = two_point_sensitivity(
            PhaseReading { phase: -1.36, error: 0.186 },
            PhaseReading { phase: -5.71, error: 0.192 },
            span.0,
            span.1,
        )
        .unwrap();
        assert!((test.slope.abs() - 13.85).abs() < 0.01);
        assert!((test.delta2_phi - 3.73e-4).abs() < 1e-6);

        let t = two_point_sensitivity(
            PhaseReading { phase: 0.0, error: 0.0 },
            PhaseReading { phase: -1.0, error: 0.0 },
            0.0,
            1.0,
        )
        .unwrap();
        assert_eq!(t.slope, -1.0);
        assert_eq!(t.delta2_phi, 0.0);

        let r = PhaseReading { phase: 0.0, error: 0.1 };
        assert_eq!(two_point_sensitivity(r, r, 1.0, 1.0), Err(Error::CoincidentAbscissae));
    }

    #[test]
    fn gain_db_examples() {
        assert!((gain_db(3.73e-4, 2.80e-3).unwrap() - 8.754).abs() < 1e-3);
        assert_eq!(gain_db(1e-3, 1e-3).unwrap(), 0.0);
        assert!((gain_db(0.25, 1.0).unwrap() - 6.0206).abs() < 1e-4);
        assert!(gain_db(0.0, 1.0).is_err());
        assert!(gain_db(1.0, -1.0).is_err());
    }

    #[test]
    fn upper_vs_lower_reference_offset() {
        let grid = [0.1, 1.0, 2.0, 3.0, 4.0, 6.0];
        let lower = GainConfig { p2: 0.0, atoms: 5e3, cycles: 8.0, technical: 0.1, reference: Reference::Upper };
        for p in gain_curve(&lower, &grid).unwrap() {
            assert!((p.gain_db + 6.0206).abs() < 1e-3);
        }
    }

    #[test]
    fn balanced_population_rejected() {
        let c = GainConfig { p2: 0.5, atoms: 5e3, cycles: 8.0, technical: 0.1, reference: Reference::Upper };
        assert!(gain_curve(&c, &[1.0]).is_err());
    }

    #[test]
    fn noise_propagation_examples() {
        assert_eq!(population_noise_amplification(10.0, 0.01, 0.01, 0.5), 0.0);
        assert!((population_noise_amplification(10.0, 0.0, 1e-3, 0.01) - 2e-3).abs() < 1e-15);
        assert_eq!(population_noise_amplification(10.0, 0.0, 1e-3, 0.0), 0.0);

        for g in [0.0, 3.0, 250.0] {
            assert!((correlated_phase_noise(g, 0.02, 0.02) - 0.02).abs() < 1e-15);
        }
        assert!((correlated_phase_noise(100.0, 0.0, 1e-3) - 0.1).abs() < 1e-15);
        assert_eq!(correlated_phase_noise(0.0, 0.3, 0.7), 0.3);

        assert!((signal_uncertainty_budget(1e-3, 1e-3, 1e-2).unwrap() - 0.022).abs() < 1e-15);
        assert_eq!(signal_uncertainty_budget(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!((signal_uncertainty_budget(0.0, 0.0, 5e-3).unwrap() - 0.01).abs() < 1e-15);
        assert!(signal_uncertainty_budget(-1.0, 0.0, 0.0).is_err());
    }
}
