use std::f64::consts::{PI, TAU};

use clockphase_core::clock_state::{
    phase_slope, slope_g, theta_from_population, total_phase, visibility, ClockState, PhaseMapping, SlopeG,
};
use clockphase_core::geodesic::{geometric_phase_area, latitude_arc};
use clockphase_core::noise::{gain_curve, phase_noise, sensitivity_at, GainConfig, NoiseBudget, Reference};
use clockphase_core::phase::{nearest_branch, wrap};
use clockphase_core::seed;
use proptest::prelude::*;
use rand::Rng;

fn overlap(theta: f64, phi1: f64, phi2: f64) -> (f64, f64) {
    let p2 = (theta / 2.0).cos().powi(2);
    let p1 = (theta / 2.0).sin().powi(2);
    (p2 * phi2.cos() + p1 * phi1.cos(), p2 * phi2.sin() + p1 * phi1.sin())
}

#[test]
fn total_phase_matches_complex_oracle() {
    let mut rng = seed::rng(2024);
    let mut checked = 0;
    while checked < 10_000 {
        let theta = rng.gen::<f64>() * PI;
        let phi1 = (rng.gen::<f64>() - 0.5) * 4.0 * PI;
        let phi2 = (rng.gen::<f64>() - 0.5) * 4.0 * PI;
        let (re, im) = overlap(theta, phi1, phi2);
        if re.hypot(im) < 1e-6 {
            continue;
        }
        let got = total_phase(&ClockState::new(theta, phi1, phi2).unwrap()).unwrap();
        assert!(wrap(got - im.atan2(re)).abs() < 1e-10, "θ={theta} φ1={phi1} φ2={phi2}");
        checked += 1;
    }
}

proptest! {
    #[test]
    fn visibility_is_overlap_modulus(theta in 0.0..PI, phi1 in -TAU..TAU, phi2 in -TAU..TAU) {
        let (re, im) = overlap(theta, phi1, phi2);
        prop_assert!((visibility(theta, phi2 - phi1) - re.hypot(im)).abs() < 1e-10);
    }

    #[test]
    fn slope_g_level_exchange(p2 in 0.0..1.0f64) {
        prop_assume!((p2 - 0.5).abs() > 1e-6);
        let (SlopeG::Finite(a), SlopeG::Finite(b)) = (slope_g(p2).unwrap(), slope_g(1.0 - p2).unwrap()) else {
            unreachable!()
        };
        // Moving the scanned phase to the other level maps G to 1 − G.
        prop_assert!((a - (1.0 - b)).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn slope_peaks_at_pi(p2 in 0.45..0.55f64) {
        prop_assume!((p2 - 0.5).abs() > 1e-3);
        let theta = theta_from_population(p2).unwrap();
        let m = PhaseMapping::MAGNETIC_PROJECTION;
        let (mut best, mut arg) = (0.0, 0.0);
        for i in 0..4000 {
            let phi = 0.5 * PI + PI * i as f64 / 4000.0;
            let s = phase_slope(&m.state(theta, phi).unwrap(), &m).unwrap().abs();
            if s > best {
                best = s;
                arg = phi;
            }
        }
        prop_assert!((arg - PI).abs() <= 0.02 * PI);
    }

    #[test]
    fn continuity_away_from_singular_point(p2 in 0.05..0.95f64, start in 0.0..TAU) {
        prop_assume!((p2 - 0.5).abs() > 0.01);
        let theta = theta_from_population(p2).unwrap();
        let h = 1e-4;
        let mut prev = total_phase(&ClockState::new(theta, 0.0, start).unwrap()).unwrap();
        for i in 1..200 {
            let cur = total_phase(&ClockState::new(theta, 0.0, start + i as f64 * h).unwrap()).unwrap();
            // Slope is bounded by 1/|P₂ − P₁| for unit phase rate.
            prop_assert!(wrap(cur - prev).abs() <= h / (2.0 * p2 - 1.0).abs() * 1.01 + 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn quadrature_identity(v in 0.001..1.0f64, n in 1.0..1e6f64, a in 1.0..20.0f64, t in 0.0..1.0f64) {
        let d = phase_noise(&NoiseBudget::new(n, a, t, v).unwrap());
        let q = 1.0 / (v * (n * a).sqrt());
        prop_assert!((d * d - t * t - q * q).abs() <= 1e-12 * (d * d));
    }

    #[test]
    fn gain_peak_near_working_point(p2 in 0.5005..0.52f64, log_n in 3.0..6.0f64, tech in 0.05..0.5f64) {
        let config = GainConfig { p2, atoms: 10f64.powf(log_n), cycles: 8.0, technical: tech, reference: Reference::Upper };
        let grid: Vec<f64> = (0..=400).map(|i| 0.8 * PI + 0.4 * PI * i as f64 / 400.0).collect();
        let curve = gain_curve(&config, &grid).unwrap();
        let best = curve.iter().max_by(|a, b| a.gain_db.total_cmp(&b.gain_db)).unwrap();
        prop_assert!((best.phi - PI).abs() <= 0.02 * PI, "peak at {}π", best.phi / PI);
    }

    #[test]
    fn latitude_arc_reversal(theta in 0.1..3.0f64, span in 0.1..6.0f64) {
        prop_assume!((theta - PI / 2.0).abs() > 0.05);
        let t = latitude_arc(theta, span, 256).unwrap();
        let a = geometric_phase_area(&t).unwrap();
        let b = geometric_phase_area(&t.reversed()).unwrap();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn hemisphere_quantisation(span in 1.05 * PI..1.95 * PI) {
        let gp = geometric_phase_area(&latitude_arc(PI / 2.0, span, 512).unwrap()).unwrap();
        prop_assert!((gp.abs() - PI).abs() < 1e-6);
    }

    #[test]
    fn sign_flip_across_equator(span in 1.05 * PI..1.95 * PI, d in 0.05..0.6f64) {
        let above = geometric_phase_area(&latitude_arc(PI / 2.0 - d, span, 512).unwrap()).unwrap();
        let below = geometric_phase_area(&latitude_arc(PI / 2.0 + d, span, 512).unwrap()).unwrap();
        prop_assert!(above * below < 0.0);
    }
}

#[test]
fn linearisation_about_working_point() {
    for p2 in [0.3, 0.45, 0.514] {
        let theta = theta_from_population(p2).unwrap();
        let SlopeG::Finite(g) = slope_g(p2).unwrap() else { unreachable!() };
        let phi0 = total_phase(&ClockState::new(theta, 0.0, PI).unwrap()).unwrap();
        let mut worst: f64 = 0.0;
        for k in 1..=50 {
            let eps = 0.001 * k as f64;
            // Relative phase π − ε, reached by advancing φ₁ with φ₂ held.
            let got = total_phase(&ClockState::new(theta, eps, PI).unwrap()).unwrap();
            let linear = phi0 + g * eps;
            worst = worst.max((nearest_branch(got, linear) - linear).abs() / (eps * eps));
        }
        // Second-order coefficient bound from the Taylor expansion of arg.
        let bound = g.abs() * (g.abs() + 1.0);
        assert!(worst <= bound, "p2={p2}: {worst} > {bound}");
    }
}

#[test]
fn singular_jump_is_pi() {
    let theta = PI / 2.0;
    let before = total_phase(&ClockState::new(theta, 0.0, PI - 1e-6).unwrap()).unwrap();
    let after = total_phase(&ClockState::new(theta, 0.0, PI + 1e-6).unwrap()).unwrap();
    assert!((wrap(after - before).abs() - PI).abs() < 1e-5);
}

#[test]
fn gain_monotone_in_atom_number_and_saturates() {
    let slope = |p2: f64| {
        let m = PhaseMapping::MAGNETIC_PROJECTION;
        phase_slope(&m.state(theta_from_population(p2).unwrap(), PI).unwrap(), &m).unwrap()
    };
    let mut prev = f64::NEG_INFINITY;
    for e in 3..=12 {
        let config = GainConfig { p2: 0.514, atoms: 10f64.powi(e), cycles: 8.0, technical: 0.1, reference: Reference::Upper };
        let g = gain_curve(&config, &[PI]).unwrap()[0].gain_db;
        assert!(g >= prev - 1e-12);
        prev = g;
        if e >= 9 {
            let limit = 20.0 * (slope(0.514).abs() / slope(1.0).abs()).log10();
            assert!((g - limit).abs() < 0.1, "N=1e{e}: {g} vs {limit}");
        }
    }
}

#[test]
fn technical_noise_suppressed_by_slope() {
    let d = 1e-5;
    let deriv = |p2: f64| {
        let lo = sensitivity_at(p2, 5e3, 8.0, 0.1 - d, PI).unwrap().3;
        let hi = sensitivity_at(p2, 5e3, 8.0, 0.1 + d, PI).unwrap().3;
        let slope = sensitivity_at(p2, 5e3, 8.0, 0.1, PI).unwrap().1;
        let dphi_t = sensitivity_at(p2, 5e3, 8.0, 0.1, PI).unwrap().2;
        ((hi - lo) / (2.0 * d), slope, dphi_t)
    };
    let (clock, s_clock, dt_clock) = deriv(0.514);
    let (single, s_single, dt_single) = deriv(1.0);
    // ∂Δφ/∂tech = (tech/ΔΦ_T)/|slope|.
    assert!((clock * s_clock.abs() * dt_clock / 0.1 - 1.0).abs() < 1e-6);
    assert!((single * s_single.abs() * dt_single / 0.1 - 1.0).abs() < 1e-6);
    assert!(clock < single);
}
