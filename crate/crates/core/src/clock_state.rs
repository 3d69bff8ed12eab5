//! Interference phase of two wave packets carrying the same internal
//! superposition.
//!
//! Packet **A** is `cos(θ/2)|2⟩ + sin(θ/2)|1⟩`; packet **B** carries the
//! additional phases `φ₂` on `|2⟩` and `φ₁` on `|1⟩`. The interference phase is
//! `Φ_T = arg⟨a|b⟩ = arg[P₂ e^{iφ₂} + P₁ e^{iφ₁}]` with `P₂ = cos²(θ/2)` and
//! `P₁ = sin²(θ/2)`. The relative rotation is `φ = φ₂ − φ₁`.

use core::f64::consts::PI;

use libm::{atan2, cos, hypot, sin};

use crate::{Error, Result};

/// Below this overlap modulus the interference phase is treated as undefined.
pub const SINGULAR_VISIBILITY: f64 = 1e-12;

const THETA_SLACK: f64 = 1e-12;

/// Internal superposition angle and the phases accumulated on each level.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClockState {
    /// Polar angle in radians, `0` = all population in `|2⟩`.
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl ClockState {
    pub fn new(theta: f64, phi1: f64, phi2: f64) -> Result<Self> {
        if !theta.is_finite() || !(-THETA_SLACK..=PI + THETA_SLACK).contains(&theta) {
            return Err(Error::OutOfRange { name: "theta", value: theta });
        }
        if !phi1.is_finite() {
            return Err(Error::OutOfRange { name: "phi1", value: phi1 });
        }
        if !phi2.is_finite() {
            return Err(Error::OutOfRange { name: "phi2", value: phi2 });
        }
        Ok(Self { theta: theta.clamp(0.0, PI), phi1, phi2 })
    }

    /// Builds the state from the `|2⟩` population `P₂ = cos²(θ/2)`.
    pub fn from_population(p2: f64, phi1: f64, phi2: f64) -> Result<Self> {
        Self::new(theta_from_population(p2)?, phi1, phi2)
    }

    /// `P₂ = cos²(θ/2)`.
    pub fn p2(&self) -> f64 {
        0.5 * (1.0 + cos(self.theta))
    }

    /// `P₁ = sin²(θ/2)`.
    pub fn p1(&self) -> f64 {
        0.5 * (1.0 - cos(self.theta))
    }

    /// Relative rotation `φ = φ₂ − φ₁`.
    pub fn relative_phase(&self) -> f64 {
        self.phi2 - self.phi1
    }

    /// Population ratio `R = P₂ / P₁` (infinite when `P₁ = 0`).
    pub fn population_ratio(&self) -> f64 {
        self.p2() / self.p1()
    }
}

/// `θ = 2 arccos √P₂`.
pub fn theta_from_population(p2: f64) -> Result<f64> {
    if !p2.is_finite() || !(0.0..=1.0).contains(&p2) {
        return Err(Error::OutOfRange { name: "p2", value: p2 });
    }
    Ok(2.0 * libm::acos(libm::sqrt(p2)))
}

/// Total interference phase `Φ_T`.
///
/// The arctangent is taken relative to the more populated level, so the
/// result is continuous in `φ₁`, `φ₂` for a fixed `θ`; it agrees with
/// `arg[P₂e^{iφ₂} + P₁e^{iφ₁}]` modulo `2π`. For `P₂ ≥ P₁` this is the printed
/// form `φ₂ + atan[P₁ sin(φ₁−φ₂) / (P₂ + P₁ cos(φ₁−φ₂))]`.
pub fn total_phase(state: &ClockState) -> Result<f64> {
    let (p2, p1) = (state.p2(), state.p1());
    let delta = state.phi1 - state.phi2;
    let (base, y, x) = if p2 >= p1 {
        (state.phi2, p1 * sin(delta), p2 + p1 * cos(delta))
    } else {
        (state.phi1, -p2 * sin(delta), p1 + p2 * cos(delta))
    };
    if hypot(x, y) <= SINGULAR_VISIBILITY {
        return Err(Error::UndefinedPhase { theta: state.theta, phi: state.relative_phase() });
    }
    Ok(base + atan2(y, x))
}

/// Fringe visibility `v = √(1 − 4 sin²(θ/2) cos²(θ/2) sin²(φ/2))`.
///
/// Evaluated as `hypot(cos θ, sin θ cos(φ/2))`, the same quantity without the
/// cancellation near `v = 0`.
pub fn visibility(theta: f64, phi: f64) -> f64 {
    hypot(cos(theta), sin(theta) * cos(0.5 * phi))
}

/// Linearised amplification factor `G = (1 − R)⁻¹`, `R = P₂/P₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeG {
    Finite(f64),
    /// Balanced populations, `R = 1`.
    Infinite,
}

impl SlopeG {
    pub fn magnitude(self) -> f64 {
        match self {
            SlopeG::Finite(g) => g.abs(),
            SlopeG::Infinite => f64::INFINITY,
        }
    }
}

pub fn slope_g(p2: f64) -> Result<SlopeG> {
    if !p2.is_finite() || !(0.0..=1.0).contains(&p2) {
        return Err(Error::OutOfRange { name: "p2", value: p2 });
    }
    let p1 = 1.0 - p2;
    let denom = p1 - p2;
    if denom == 0.0 {
        return Ok(SlopeG::Infinite);
    }
    // (1 - P2/P1)^-1 rewritten so that P1 = 0 gives G = 0 instead of 1/(1 - inf).
    Ok(SlopeG::Finite(p1 / denom))
}

/// Affine dependence of the two level phases on a scanned rotation `φ`:
/// `φ₁ = a₁φ + b₁`, `φ₂ = a₂φ + b₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseMapping {
    pub phi1_rate: f64,
    pub phi1_offset: f64,
    pub phi2_rate: f64,
    pub phi2_offset: f64,
}

impl PhaseMapping {
    /// Gradient pulse on `|F=2, m_F=1⟩` and `|F=2, m_F=2⟩`: `φ₂ = 2φ₁`, `φ = φ₁`.
    pub const MAGNETIC_PROJECTION: PhaseMapping =
        PhaseMapping { phi1_rate: 1.0, phi1_offset: 0.0, phi2_rate: 2.0, phi2_offset: 0.0 };

    /// Only `|2⟩` picks up phase: `φ₁ = 0`, `φ₂ = φ`.
    pub const UPPER_ONLY: PhaseMapping =
        PhaseMapping { phi1_rate: 0.0, phi1_offset: 0.0, phi2_rate: 1.0, phi2_offset: 0.0 };

    pub fn phases(&self, phi: f64) -> (f64, f64) {
        (self.phi1_rate * phi + self.phi1_offset, self.phi2_rate * phi + self.phi2_offset)
    }

    pub fn state(&self, theta: f64, phi: f64) -> Result<ClockState> {
        let (phi1, phi2) = self.phases(phi);
        ClockState::new(theta, phi1, phi2)
    }
}

/// `dΦ_T/dφ` at `state` when the phases move according to `mapping`.
///
/// `dΦ_T/dφ = [a₂P₂² + a₁P₁² + (a₁+a₂)P₁P₂ cos(φ₂−φ₁)] / v²`.
pub fn phase_slope(state: &ClockState, mapping: &PhaseMapping) -> Result<f64> {
    let (p2, p1) = (state.p2(), state.p1());
    let rel = state.relative_phase();
    let v = visibility(state.theta, rel);
    if v <= SINGULAR_VISIBILITY {
        return Err(Error::UndefinedPhase { theta: state.theta, phi: rel });
    }
    let (a1, a2) = (mapping.phi1_rate, mapping.phi2_rate);
    let num = a2 * p2 * p2 + a1 * p1 * p1 + (a1 + a2) * p1 * p2 * cos(rel);
    Ok(num / (v * v))
}

/// `Φ_T = Φ_D + Φ_G`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseDecomposition {
    pub total: f64,
    pub dynamical: f64,
    pub geometric: f64,
}

/// Splits the total phase into dynamical and geometric parts.
///
/// The dynamical phase is the population-weighted phase
/// `P₂φ₂ + P₁φ₁ = φ₂ − φ(1 − cos θ)/2`: the `φ(1 − cos θ)/2` term measured from
/// the `|2⟩` reference, with `φ = φ₂ − φ₁`. The geometric remainder depends on
/// `(θ, φ)` only. At `θ = π/2` it is `0` for `φ ∈ [0, π)` and `π` for
/// `φ ∈ (π, 2π]`.
pub fn decompose_phase(state: &ClockState) -> Result<PhaseDecomposition> {
    let total = total_phase(state)?;
    let dynamical = state.phi2 - state.relative_phase() * (1.0 - cos(state.theta)) / 2.0;
    Ok(PhaseDecomposition { total, dynamical, geometric: total - dynamical })
}

/// Geometric phase of the state `(θ, φ₁ = 0, φ₂ = φ)`.
pub fn geometric_phase(theta: f64, phi: f64) -> Result<f64> {
    Ok(decompose_phase(&ClockState::new(theta, 0.0, phi)?)?.geometric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn oracle_phase(s: &ClockState) -> f64 {
        let (p2, p1) = (s.p2(), s.p1());
        atan2(p2 * sin(s.phi2) + p1 * sin(s.phi1), p2 * cos(s.phi2) + p1 * cos(s.phi1))
    }

    #[test]
    fn single_level_limits() {
        let s = ClockState::new(0.0, 0.3, 1.1).unwrap();
        assert!((total_phase(&s).unwrap() - 1.1).abs() < 1e-15);
        let s = ClockState::new(PI, 0.3, 1.1).unwrap();
        assert!((total_phase(&s).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn balanced_quarter_turn() {
        let s = ClockState::new(FRAC_PI_2, 0.0, FRAC_PI_2).unwrap();
        let t = total_phase(&s).unwrap();
        assert!((t - FRAC_PI_4).abs() < 1e-15);
        assert!((t - oracle_phase(&s)).abs() < 1e-15);
    }

    #[test]
    fn singular_point_is_an_error() {
        let s = ClockState::new(FRAC_PI_2, 0.0, PI).unwrap();
        assert!(matches!(total_phase(&s), Err(Error::UndefinedPhase { .. })));
        assert!(matches!(
            phase_slope(&s, &PhaseMapping::MAGNETIC_PROJECTION),
            Err(Error::UndefinedPhase { .. })
        ));
        assert!(decompose_phase(&s).is_err());
    }

    #[test]
    fn rejects_out_of_range_theta() {
        assert!(ClockState::new(-0.1, 0.0, 0.0).is_err());
        assert!(ClockState::new(3.2, 0.0, 0.0).is_err());
        assert!(ClockState::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(ClockState::from_population(1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn populations_sum_to_one() {
        for k in 0..=100 {
            let s = ClockState::new(PI * k as f64 / 100.0, 0.0, 0.0).unwrap();
            assert!((s.p1() + s.p2() - 1.0).abs() < 1e-12);
        }
        let s = ClockState::from_population(0.514, 0.0, 0.0).unwrap();
        assert!((s.p2() - 0.514).abs() < 1e-12);
    }

    #[test]
    fn visibility_examples() {
        assert!(visibility(FRAC_PI_2, PI).abs() < 1e-15);
        for phi in [0.0, 1.0, PI, 5.0] {
            assert!((visibility(0.0, phi) - 1.0).abs() < 1e-15);
        }
        let theta = theta_from_population(0.514).unwrap();
        assert!((visibility(theta, PI) - 0.028).abs() < 1e-12);
    }

    #[test]
    fn slope_g_examples() {
        assert_eq!(slope_g(0.0).unwrap(), SlopeG::Finite(1.0));
        assert_eq!(slope_g(0.5).unwrap(), SlopeG::Infinite);
        assert_eq!(slope_g(1.0).unwrap().magnitude(), 0.0);
        // R = 0.514/0.486, G = 1/(1-R) = -0.486/0.028
        let g = slope_g(0.514).unwrap();
        assert!((g.magnitude() - 17.357_142_857_142_86).abs() < 1e-9);
        assert!(matches!(g, SlopeG::Finite(x) if x < 0.0));
        assert!((slope_g(0.501).unwrap().magnitude() - 249.5).abs() < 1e-7);
        assert!(slope_g(-0.1).is_err());
    }

    #[test]
    fn mapped_slope_single_levels() {
        let m = PhaseMapping::MAGNETIC_PROJECTION;
        for phi in [0.0, 1.0, PI, 4.0] {
            let upper = m.state(0.0, phi).unwrap();
            assert!((phase_slope(&upper, &m).unwrap() - 2.0).abs() < 1e-14);
            let lower = m.state(PI, phi).unwrap();
            assert!((phase_slope(&lower, &m).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn mapped_slope_at_working_point() {
        let m = PhaseMapping::MAGNETIC_PROJECTION;
        let theta = theta_from_population(0.514).unwrap();
        let s = m.state(theta, PI).unwrap();
        let g = phase_slope(&s, &m).unwrap();
        let h = 1e-6;
        let fd = (total_phase(&m.state(theta, PI + h).unwrap()).unwrap()
            - total_phase(&m.state(theta, PI - h).unwrap()).unwrap())
            / (2.0 * h);
        assert!(((g - fd) / g).abs() < 1e-6);
        assert!((15.0..=20.0).contains(&g.abs()));
        // 2 - G with G = -17.357
        assert!((g - 19.357_142_857_142_86).abs() < 1e-8);
    }

    #[test]
    fn decomposition_adds_up() {
        let s = ClockState::new(1.1, 0.4, 2.9).unwrap();
        let d = decompose_phase(&s).unwrap();
        assert_eq!(d.total, d.dynamical + d.geometric);
    }

    #[test]
    fn geometric_phase_flat_then_pi() {
        for k in 0..=90 {
            let phi = 0.9 * PI * k as f64 / 90.0;
            assert!(geometric_phase(FRAC_PI_2, phi).unwrap().abs() < 1e-12, "phi={phi}");
        }
        for k in 0..=90 {
            let phi = 1.1 * PI + 0.9 * PI * k as f64 / 90.0;
            assert!((geometric_phase(FRAC_PI_2, phi).unwrap().abs() - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_phase_vanishes_for_single_level() {
        for phi in [0.0, 1.0, 3.0, 6.0] {
            assert!(geometric_phase(0.0, phi).unwrap().abs() < 1e-15);
            let g = geometric_phase(PI, phi).unwrap();
            assert!(crate::phase::wrap(g).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_phase_independent_of_gauge() {
        let a = decompose_phase(&ClockState::new(1.2, 0.0, 2.5).unwrap()).unwrap();
        let b = decompose_phase(&ClockState::new(1.2, 2.5, 5.0).unwrap()).unwrap();
        assert!((a.geometric - b.geometric).abs() < 1e-12);
    }
}
