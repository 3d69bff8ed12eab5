use std::f64::consts::PI;

use clockphase_core::clock_state::{
    decompose_phase, phase_slope, theta_from_population, visibility, PhaseMapping,
};
use clockphase_core::geodesic::{geometric_phase_area, latitude_arc};
use clockphase_core::noise::{
    gain_curve, gain_db, phase_noise, two_point_sensitivity, GainConfig, NoiseBudget, PhaseReading, Reference,
    TwoPointSensitivity,
};
use clockphase_core::phase::wrap;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{in_pi_units, tracked_phase, Plot, ScenarioOutput};
use crate::config::ScenarioConfig;
use crate::error::AppResult;
use crate::formats::{Table, SWEEP_HEADER};

const MAPPING: PhaseMapping = PhaseMapping::MAGNETIC_PROJECTION;
/// Samples per geodesic-area evaluation in the figS5 cross-check column.
const GEODESIC_SAMPLES: usize = 512;

fn plot(suffix: &str, title: &str, x: &str, y: &str, series: Vec<(String, Vec<(f64, f64)>)>) -> Plot {
    Plot { suffix: suffix.into(), title: title.into(), x_label: x.into(), y_label: y.into(), series }
}

pub(super) fn fig2d(cfg: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    let grid = cfg.grid.values();
    let mut table = Table::new(&["p2", "phi_rad", "phase_rad"]);
    let mut series = Vec::new();
    let mut curves = Vec::new();
    for &p2 in &cfg.population.p2_list {
        let theta = theta_from_population(p2)?;
        let mut phases = tracked_phase(theta, &MAPPING, &grid);
        // Reference the curve to φ = 0 on the branch continuous with the sweep.
        if let (Some(&first), Some(Some(v0))) = (grid.first(), phases.first().copied()) {
            if let [Some(zero), Some(tracked)] = tracked_phase(theta, &MAPPING, &[0.0, first])[..] {
                let shift = v0 - tracked + zero;
                phases.iter_mut().flatten().for_each(|v| *v -= shift);
            }
        }
        let skipped: Vec<f64> = grid.iter().zip(&phases).filter(|(_, p)| p.is_none()).map(|(x, _)| *x).collect();
        let ys: Vec<f64> = phases.iter().map(|p| p.unwrap_or(f64::NAN)).collect();
        for (x, y) in grid.iter().zip(&phases) {
            if let Some(y) = y {
                table.push(vec![p2, *x, *y]);
            }
        }
        let at = |target: f64| {
            grid.iter()
                .zip(&phases)
                .filter_map(|(x, y)| y.map(|y| (x, y)))
                .min_by(|a, b| (a.0 - target).abs().total_cmp(&(b.0 - target).abs()))
                .map(|(_, y)| y)
        };
        let jump = match (at(0.9 * PI), at(1.1 * PI)) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        curves.push(json!({ "p2": p2, "transition_rad": jump, "skipped_phi": skipped }));
        series.push((format!("P2={p2}"), in_pi_units(&grid, &ys)));
    }
    let headline = curves
        .iter()
        .map(|c| format!("p2={} transition_rad={:.3}", c["p2"], c["transition_rad"].as_f64().unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ScenarioOutput {
        id: cfg.scenario,
        seed: cfg.seed,
        headline,
        summary: json!({ "mapping": "phi1 = phi, phi2 = 2 phi", "curves": curves }),
        tables: vec![("phase".into(), table)],
        plots: vec![plot("phase", "Total phase", "phi / pi", "Phi_T (rad)", series)],
    })
}

pub(super) fn fig_s5(cfg: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    let grid = cfg.grid.values();
    let mut table = Table::new(&["p2", "phi_rad", "total_rad", "dynamical_rad", "geometric_rad", "geodesic_rad"]);
    let mut total_series = Vec::new();
    let mut gp_series = Vec::new();
    let mut curves = Vec::new();
    for &p2 in &cfg.population.p2_list {
        let theta = theta_from_population(p2)?;
        let totals = tracked_phase(theta, &MAPPING, &grid);
        let rows: Vec<Option<(f64, f64, f64)>> = grid
            .par_iter()
            .zip(&totals)
            .map(|(&phi, total)| {
                let total = (*total)?;
                let dynamical = decompose_phase(&MAPPING.state(theta, phi).ok()?).ok()?.dynamical;
                let geodesic = latitude_arc(theta, phi, GEODESIC_SAMPLES)
                    .and_then(|t| geometric_phase_area(&t))
                    .unwrap_or(f64::NAN);
                Some((total, dynamical, geodesic))
            })
            .collect();
        // Offset so that the geometric phase starts at zero.
        let offset = rows.iter().flatten().next().map(|(t, d, _)| t - d).unwrap_or(0.0);
        let mut gp = Vec::with_capacity(grid.len());
        let mut tp = Vec::with_capacity(grid.len());
        let mut max_abs: f64 = 0.0;
        for (&phi, row) in grid.iter().zip(&rows) {
            match row {
                Some((t, d, g)) => {
                    let geometric = t - d - offset;
                    max_abs = max_abs.max(geometric.abs());
                    table.push(vec![p2, phi, *t, *d, geometric, *g]);
                    gp.push(geometric);
                    tp.push(*t);
                }
                None => {
                    gp.push(f64::NAN);
                    tp.push(f64::NAN);
                }
            }
        }
        let at_1_2 = decompose_phase(&MAPPING.state(theta, 1.2 * PI)?).map(|d| wrap(d.geometric)).ok();
        curves.push(json!({ "p2": p2, "max_abs_geometric_rad": max_abs, "geometric_at_1_2pi_rad": at_1_2 }));
        total_series.push((format!("P2={p2}"), in_pi_units(&grid, &tp)));
        gp_series.push((format!("P2={p2}"), in_pi_units(&grid, &gp)));
    }
    let headline = curves
        .iter()
        .map(|c| format!("p2={} gp_1.2pi={:.3}", c["p2"], c["geometric_at_1_2pi_rad"].as_f64().unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ScenarioOutput {
        id: cfg.scenario,
        seed: cfg.seed,
        headline,
        summary: json!({
            "dynamical_phase": "population-weighted, P2 phi2 + P1 phi1",
            "geodesic_column": "half the solid angle of the latitude arc closed by a geodesic, wrapped; NaN where undefined",
            "curves": curves,
        }),
        tables: vec![("phases".into(), table)],
        plots: vec![
            plot("total", "Total phase", "phi / pi", "Phi_T (rad)", total_series),
            plot("geometric", "Geometric phase", "phi / pi", "Phi_G (rad)", gp_series),
        ],
    })
}

pub(super) fn fig3a(cfg: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    let grid = cfg.grid.values();
    let p2 = cfg.population.p2;
    let u = cfg.population.uncertainty;
    let (lo_p, hi_p) = ((p2 - u).max(0.0), (p2 + u).min(1.0));
    let thetas = [theta_from_population(p2)?, theta_from_population(lo_p)?, theta_from_population(hi_p)?];
    let mut table = Table::new(&["phi_rad", "visibility", "visibility_p2_minus", "visibility_p2_plus"]);
    for &phi in &grid {
        table.push(vec![phi, visibility(thetas[0], phi), visibility(thetas[1], phi), visibility(thetas[2], phi)]);
    }
    let min_of = |col: usize| {
        table
            .rows
            .iter()
            .map(|r| (r[0], r[col]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty grid")
    };
    let (argmin, vmin) = min_of(1);
    let band = [min_of(2).1.min(min_of(3).1), min_of(2).1.max(min_of(3).1)];
    let series = vec![
        (format!("P2={p2}"), in_pi_units(&grid, &table.column("visibility").unwrap())),
        (format!("P2={lo_p}"), in_pi_units(&grid, &table.column("visibility_p2_minus").unwrap())),
        (format!("P2={hi_p}"), in_pi_units(&grid, &table.column("visibility_p2_plus").unwrap())),
    ];
    Ok(ScenarioOutput {
        id: cfg.scenario,
        seed: cfg.seed,
        headline: format!("min_visibility={vmin:.4} at_phi_over_pi={:.4} band=[{:.4},{:.4}]", argmin / PI, band[0], band[1]),
        summary: json!({
            "p2": p2,
            "min_visibility": vmin,
            "argmin_phi_rad": argmin,
            "min_visibility_band": band,
            "band_p2": [lo_p, hi_p],
        }),
        tables: vec![("visibility".into(), table)],
        plots: vec![plot("visibility", "Visibility", "phi / pi", "v", series)],
    })
}

pub(super) fn fig3b(cfg: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    let (atoms, cycles) = (cfg.noise.atoms, cfg.noise.cycles);
    let v_min = (2.0 * cfg.population.p2 - 1.0).abs();
    let vs: Vec<f64> = (0..200).map(|i| 10f64.powf(-2.3 + 2.3 * i as f64 / 199.0)).collect();
    let mut table = Table::new(&["technical_rad", "visibility", "dPhi_rad", "reachable"]);
    let mut series = Vec::new();
    for &tech in &cfg.noise.technical_list {
        let mut pts = Vec::new();
        for &v in &vs {
            let d = phase_noise(&NoiseBudget::new(atoms, cycles, tech, v)?);
            table.push(vec![tech, v, d, if v >= v_min { 1.0 } else { 0.0 }]);
            pts.push((v, d));
        }
        series.push((format!("technical={tech} rad"), pts));
    }
    let at = |v: f64, t: f64| NoiseBudget::new(atoms, cycles, t, v).map(|b| phase_noise(&b));
    let low = at(0.025, 0.0)?;
    let high = at(1.0, 0.1)?;
    Ok(ScenarioOutput {
        id: cfg.scenario,
        seed: cfg.seed,
        headline: format!("dPhi(v=0.025,tech=0)={low:.4} dPhi(v=1,tech=0.1)={high:.4} v_min={v_min:.4}"),
        summary: json!({
            "atoms": atoms,
            "cycles": cycles,
            "dPhi_v0.025_tech0_rad": low,
            "dPhi_v1_tech0.1_rad": high,
            "min_reachable_visibility": v_min,
        }),
        tables: vec![("noise".into(), table)],
        plots: vec![plot("noise", "Phase error vs visibility", "visibility", "dPhi (rad)", series)],
    })
}

fn sweep_table(points: &[clockphase_core::noise::SensitivityPoint]) -> Table {
    let mut t = Table::new(&SWEEP_HEADER);
    for p in points {
        t.push(vec![p.phi, p.total_phase, p.slope, p.d_total_phase, p.d_phi, p.gain_db]);
    }
    t
}

/// Gain sweep with the phase column tracked through steep regions.
pub(crate) fn gain_sweep(config: &GainConfig, grid: &[f64]) -> AppResult<Vec<clockphase_core::noise::SensitivityPoint>> {
    let mut points = gain_curve(config, grid)?;
    let tracked = tracked_phase(theta_from_population(config.p2)?, &MAPPING, grid);
    for (p, t) in points.iter_mut().zip(tracked) {
        if let Some(t) = t {
            p.total_phase = t;
        }
    }
    Ok(points)
}

/// Gain sweep as a table, with `(argmax φ, peak gain)`.
pub fn gain_table(config: &GainConfig, grid: &[f64]) -> AppResult<(Table, (f64, f64))> {
    let points = gain_sweep(config, grid)?;
    let best = points
        .iter()
        .map(|p| (p.phi, p.gain_db))
        .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok((sweep_table(&points), best))
}

pub(crate) fn reference_convention(reference: Reference) -> &'static str {
    match reference {
        Reference::Upper => "P2 = 1 single-level interferometer (slope 2 under phi2 = 2 phi1) with the same N, A and technical noise, evaluated at the same phi",
        Reference::Lower => "P2 = 0 single-level interferometer (slope 1) with the same N, A and technical noise, evaluated at the same phi",
    }
}

pub(super) fn fig4a(cfg: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    let grid = cfg.grid.values();
    let base = GainConfig {
        p2: cfg.population.p2,
        atoms: cfg.noise.atoms,
        cycles: cfg.noise.cycles,
        technical: cfg.noise.technical,
        reference: cfg.reference,
    };
    let main = gain_sweep(&base, &grid)?;
    let u = cfg.population.uncertainty;
    let lo = gain_curve(&GainConfig { p2: base.p2 - u, ..base }, &grid)?;
    let hi = gain_curve(&GainConfig { p2: base.p2 + u, ..base }, &grid)?;
    let single = gain_curve(&GainConfig { p2: 1.0 - base.reference.population(), ..base }, &grid)?;

    let mut band = Table::new(&["phi_rad", "gain_p2_minus_db", "gain_p2_plus_db"]);
    for ((l, h), phi) in lo.iter().zip(&hi).zip(&grid) {
        band.push(vec![*phi, l.gain_db, h.gain_db]);
    }
    let peak = main.iter().max_by(|a, b| a.gain_db.total_cmp(&b.gain_db)).expect("non-empty grid");
    let at_pi = gain_curve(&base, &[PI])?[0].gain_db;
    let offset = single.iter().map(|p| p.gain_db).sum::<f64>() / single.len() as f64;
    let series = vec![
        (format!("P2={}", base.p2), main.iter().map(|p| (p.phi / PI, p.gain_db)).collect()),
        (format!("P2={}", base.p2 - u), lo.iter().map(|p| (p.phi / PI, p.gain_db)).collect()),
        (format!("P2={}", base.p2 + u), hi.iter().map(|p| (p.phi / PI, p.gain_db)).collect()),
        (format!("P2={}", 1.0 - base.reference.population()), single.iter().map(|p| (p.phi / PI, p.gain_db)).collect()),
    ];
    Ok(ScenarioOutput {
        id: cfg.scenario,
        seed: cfg.seed,
        headline: format!(
            "peak_gain_db={:.2} at_phi_over_pi={:.4} gain_at_pi_db={at_pi:.2} single_level_offset_db={offset:.2}",
            peak.gain_db,
            peak.phi / PI
        ),
        summary: json!({
            "reference": reference_convention(base.reference),
            "peak_gain_db": peak.gain_db,
            "argmax_phi_rad": peak.phi,
            "gain_at_pi_db": at_pi,
            "single_level_offset_db": offset,
            "band_p2": [base.p2 - u, base.p2 + u],
        }),
        tables: vec![
            ("gain".into(), sweep_table(&main)),
            ("band".into(), band),
            ("single_level".into(), sweep_table(&single)),
        ],
        plots: vec![plot("gain", "Metrological gain", "phi / pi", "gain (dB)", series)],
    })
}

pub(super) fn fig4b(cfg: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    let atoms = cfg.atoms_sweep.values();
    let mut table = Table::new(&["p2", "technical_rad", "atoms", "gain_db"]);
    let mut series = Vec::new();
    let mut curves = Vec::new();
    for &p2 in &cfg.population.p2_list {
        for &tech in &cfg.noise.technical_list {
            let gains: Vec<f64> = atoms
                .par_iter()
                .map(|&n| {
                    let c = GainConfig { p2, atoms: n, cycles: cfg.noise.cycles, technical: tech, reference: cfg.reference };
                    gain_curve(&c, &[PI]).map(|p| p[0].gain_db)
                })
                .collect::<Result<_, _>>()?;
            for (n, g) in atoms.iter().zip(&gains) {
                table.push(vec![p2, tech, *n, *g]);
            }
            let theta = theta_from_population(p2)?;
            let slope = phase_slope(&MAPPING.state(theta, PI)?, &MAPPING)?;
            let ref_slope = MAPPING.phi2_rate * cfg.reference.population() + MAPPING.phi1_rate * (1.0 - cfg.reference.population());
            curves.push(json!({
                "p2": p2,
                "technical_rad": tech,
                "gain_at_max_atoms_db": gains[gains.len() - 1],
                "technical_limit_db": 20.0 * (slope.abs() / ref_slope.abs()).log10(),
            }));
            series.push((format!("P2={p2}, tech={tech}"), atoms.iter().map(|n| n.log10()).zip(gains).collect()));
        }
    }
    let headline = curves
        .iter()
        .map(|c| {
            format!(
                "p2={} tech={} gain_max_n_db={:.2}",
                c["p2"],
                c["technical_rad"],
                c["gain_at_max_atoms_db"].as_f64().unwrap_or(f64::NAN)
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ScenarioOutput {
        id: cfg.scenario,
        seed: cfg.seed,
        headline,
        summary: json!({ "reference": reference_convention(cfg.reference), "phi_rad": PI, "curves": curves }),
        tables: vec![("gain_vs_atoms".into(), table)],
        plots: vec![plot("gain_vs_atoms", "Gain at the working point", "log10 N", "gain (dB)", series)],
    })
}

/// Two-point readings behind the quoted 8.8 dB.
pub const SM_TEST: [(f64, f64); 2] = [(-1.36, 0.186), (-5.71, 0.192)];
pub const SM_REFERENCE: [(f64, f64); 2] = [(-2.93, 0.085), (-3.68, 0.094)];
pub const SM_PHI: [f64; 2] = [0.94 * PI, 1.04 * PI];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmReport {
    pub test: TwoPointSensitivity,
    pub reference: TwoPointSensitivity,
    pub gain_db: f64,
}

pub fn sm_sensitivity_report() -> AppResult<SmReport> {
    let pair = |pts: [(f64, f64); 2]| {
        two_point_sensitivity(
            PhaseReading { phase: pts[0].0, error: pts[0].1 },
            PhaseReading { phase: pts[1].0, error: pts[1].1 },
            SM_PHI[0],
            SM_PHI[1],
        )
    };
    let test = pair(SM_TEST)?;
    let reference = pair(SM_REFERENCE)?;
    Ok(SmReport { test, reference, gain_db: gain_db(test.delta2_phi, reference.delta2_phi)? })
}

pub(super) fn sm_sensitivity(cfg: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    let r = sm_sensitivity_report()?;
    let mut table = Table::new(&["series", "phi_rad", "phase_rad", "error_rad"]);
    for (k, pts) in [SM_TEST, SM_REFERENCE].iter().enumerate() {
        for (phi, (phase, err)) in SM_PHI.iter().zip(pts) {
            table.push(vec![k as f64, *phi, *phase, *err]);
        }
    }
    Ok(ScenarioOutput {
        id: cfg.scenario,
        seed: cfg.seed,
        headline: format!(
            "gain_db={:.2} slope_test={:.2} slope_ref={:.2} delta2_test={:.3e} delta2_ref={:.3e}",
            r.gain_db,
            r.test.slope.abs(),
            r.reference.slope.abs(),
            r.test.delta2_phi,
            r.reference.delta2_phi
        ),
        summary: json!({
            "series": { "0": "superposition P2 = 0.514", "1": "single level P2 = 1" },
            "test": r.test,
            "reference": r.reference,
            "gain_db": r.gain_db,
        }),
        tables: vec![("points".into(), table)],
        plots: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioId;

    #[test]
    fn sm_numbers() {
        let r = sm_sensitivity_report().unwrap();
        assert!((r.test.slope.abs() - 13.85).abs() < 0.01);
        assert!((r.reference.slope.abs() - 2.39).abs() < 0.01);
        assert!((r.test.delta2_phi - 3.73e-4).abs() < 1e-6);
        assert!((r.reference.delta2_phi - 2.818e-3).abs() < 1e-6);
        assert!((r.gain_db - 8.786).abs() < 1e-3);
    }

    #[test]
    fn fig2d_single_level_curves_are_linear() {
        let mut cfg = ScenarioConfig::defaults(ScenarioId::Fig2d);
        cfg.population.p2_list = vec![0.0, 1.0];
        let out = fig2d(&cfg).unwrap();
        for row in &out.table("phase").unwrap().rows {
            let slope = if row[0] == 1.0 { 2.0 } else { 1.0 };
            assert!((row[2] - slope * row[1]).abs() < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn fig2d_transition_height() {
        let mut cfg = ScenarioConfig::defaults(ScenarioId::Fig2d);
        cfg.population.p2_list = vec![0.514];
        let out = fig2d(&cfg).unwrap();
        // Steep part of ≈ π on top of the φ₁ = φ background over 0.2π.
        let jump = out.summary["curves"][0]["transition_rad"].as_f64().unwrap();
        assert!((jump - 0.2 * PI - PI).abs() < 0.2, "{jump}");
    }

    #[test]
    fn balanced_population_flags_singular_point() {
        let mut cfg = ScenarioConfig::defaults(ScenarioId::Fig2d);
        cfg.population.p2_list = vec![0.5];
        let out = fig2d(&cfg).unwrap();
        let skipped = out.summary["curves"][0]["skipped_phi"].as_array().unwrap();
        assert_eq!(skipped.len(), 1);
        assert!((skipped[0].as_f64().unwrap() - PI).abs() < 1e-9);
    }

    #[test]
    fn fig3_numbers() {
        let a = fig3a(&ScenarioConfig::defaults(ScenarioId::Fig3a)).unwrap();
        assert!((a.summary["min_visibility"].as_f64().unwrap() - 0.028).abs() < 1e-3);
        let band = a.summary["min_visibility_band"].as_array().unwrap();
        assert!(band[0].as_f64().unwrap() <= 0.025 && 0.025 <= band[1].as_f64().unwrap());
        let b = fig3b(&ScenarioConfig::defaults(ScenarioId::Fig3b)).unwrap();
        assert!((b.summary["dPhi_v0.025_tech0_rad"].as_f64().unwrap() - 0.2).abs() < 1e-4);
        assert!((b.summary["dPhi_v1_tech0.1_rad"].as_f64().unwrap() - 0.1001).abs() < 1e-4);
    }

    #[test]
    fn fig_s5_sign_flip() {
        let out = fig_s5(&ScenarioConfig::defaults(ScenarioId::FigS5)).unwrap();
        let gp = |i: usize| out.summary["curves"][i]["geometric_at_1_2pi_rad"].as_f64().unwrap();
        assert!(gp(1) * gp(2) < 0.0);
        let max = |i: usize| out.summary["curves"][i]["max_abs_geometric_rad"].as_f64().unwrap();
        assert!(max(0) < max(1));
        assert!(max(3) < max(2));
    }

    #[test]
    fn fig4_numbers() {
        let a = fig4a(&ScenarioConfig::defaults(ScenarioId::Fig4a)).unwrap();
        let peak = a.summary["peak_gain_db"].as_f64().unwrap();
        assert!((8.0..=15.0).contains(&peak));
        assert!((a.summary["argmax_phi_rad"].as_f64().unwrap() - PI).abs() <= 0.02 * PI);
        assert!((a.summary["single_level_offset_db"].as_f64().unwrap() + 6.02).abs() < 0.05);
        let b = fig4b(&ScenarioConfig::defaults(ScenarioId::Fig4b)).unwrap();
        let c = &b.summary["curves"][0];
        assert!((c["gain_at_max_atoms_db"].as_f64().unwrap() - c["technical_limit_db"].as_f64().unwrap()).abs() < 0.1);
    }
}
