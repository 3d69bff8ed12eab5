//! Synthetic experiment: images → fits → averaged phases → two-point gain.
//!
//! Each cycle draws a common-mode technical phase, samples an interferogram
//! at the model visibility and phase, fits it, and the `A` fitted phases of a
//! point are averaged. The reference run uses `P₂ = 1` with the same seed
//! schedule.

use std::f64::consts::PI;

use clockphase_core::clock_state::{theta_from_population, total_phase, visibility, PhaseMapping};
use clockphase_core::interferogram::{
    bin_to_image, fit_interferogram, sample_atoms, CameraGrid, FitOptions, InterferogramParams,
};
use clockphase_core::noise::{
    gain_db, phase_noise, two_point_sensitivity, NoiseBudget, PhaseReading, TwoPointSensitivity,
};
use clockphase_core::phase::{circular_mean, nearest_branch, wrap};
use clockphase_core::seed;
use clockphase_core::Error;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{tracked_phase, Plot, ScenarioOutput};
use crate::config::{InterferogramConfig, ScenarioConfig};
use crate::error::{AppError, AppResult};
use crate::formats::Table;

const MAPPING: PhaseMapping = PhaseMapping::MAGNETIC_PROJECTION;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSettings {
    pub atoms: usize,
    pub cycles: usize,
    /// Technical phase noise of an `A`-cycle average, rad.
    pub technical: f64,
    pub interferogram: InterferogramConfig,
}

impl PipelineSettings {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            atoms: cfg.noise.atoms.round() as usize,
            cycles: cfg.noise.cycles.round() as usize,
            technical: cfg.noise.technical,
            interferogram: cfg.interferogram.clone(),
        }
    }

    /// Per-cycle jitter: `technical·√A`, so that the averaged point carries
    /// `technical` as in the closed-form noise model.
    pub fn cycle_jitter(&self) -> f64 {
        self.technical * (self.cycles as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEstimate {
    pub phi: f64,
    /// Unwrapped along the grid.
    pub phase: f64,
    pub sem: f64,
    /// Tracked model phase.
    pub model_phase: f64,
    pub visibility: f64,
    pub fits_ok: usize,
    pub fits_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineRun {
    pub p2: f64,
    pub points: Vec<PointEstimate>,
}

fn cycle_phase(
    settings: &PipelineSettings,
    grid: &CameraGrid,
    opts: &FitOptions,
    v: f64,
    phase: f64,
    cycle_seed: u64,
) -> AppResult<Option<f64>> {
    let ic = &settings.interferogram;
    let jitter = if settings.technical > 0.0 {
        let normal = Normal::new(0.0, settings.cycle_jitter()).map_err(|e| AppError::Input(e.to_string()))?;
        normal.sample(&mut seed::rng(seed::split(cycle_seed, 0)))
    } else {
        0.0
    };
    let params = InterferogramParams {
        amplitude: settings.atoms as f64 / (ic.sigma_um * (2.0 * PI).sqrt()),
        z_com: 0.0,
        sigma_z: ic.sigma_um,
        visibility: v,
        wavelength: opts.wavelength,
        z_ref: 0.0,
        phase: wrap(phase + jitter),
        background: 0.0,
    };
    let atoms = sample_atoms(&params, settings.atoms, seed::split(cycle_seed, 1))?;
    let image = bin_to_image(&atoms, grid).to_f64();
    Ok(match fit_interferogram(&image, grid, None, opts) {
        Ok(fit) if fit.converged => Some(fit.params.phase),
        _ => None,
    })
}

/// Runs the synthetic experiment for one population over `phis`.
pub fn run_pipeline(p2: f64, phis: &[f64], settings: &PipelineSettings, master: u64) -> AppResult<PipelineRun> {
    let ic = &settings.interferogram;
    let theta = theta_from_population(p2)?;
    let grid = CameraGrid::centered(ic.pixel_um, ic.pixels, 0.0)?;
    grid.check_covers(ic.sigma_um)?;
    let mut opts = FitOptions::new(ic.wavelength()?);
    opts.weighting = ic.weighting;
    if ic.free_wavelength {
        opts = opts.with_free_wavelength();
    }
    let model = tracked_phase(theta, &MAPPING, phis);

    let jobs: Vec<(usize, usize)> = (0..phis.len()).flat_map(|k| (0..settings.cycles).map(move |c| (k, c))).collect();
    let fitted: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|&(k, c)| {
            let state = MAPPING.state(theta, phis[k])?;
            let phase = total_phase(&state)?;
            let v = visibility(theta, state.relative_phase());
            cycle_phase(settings, &grid, &opts, v, phase, seed::split_path(master, &[k as u64, c as u64]))
        })
        .collect::<AppResult<_>>()?;

    let total = fitted.len();
    let failed = fitted.iter().filter(|f| f.is_none()).count();
    if 2 * failed > total {
        return Err(Error::AllTrialsFailed.into());
    }

    let mut points: Vec<PointEstimate> = Vec::with_capacity(phis.len());
    for (k, &phi) in phis.iter().enumerate() {
        let ok: Vec<f64> = fitted[k * settings.cycles..(k + 1) * settings.cycles].iter().flatten().copied().collect();
        let model_phase = model[k].ok_or(Error::UndefinedPhase { theta, phi })?;
        if ok.len() < 2 {
            return Err(Error::AllTrialsFailed.into());
        }
        let mean = circular_mean(&ok);
        let n = ok.len() as f64;
        let var = ok.iter().map(|x| wrap(x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Follow the model increment so steep steps land on the right branch.
        let guide = match points.last() {
            Some(prev) => prev.phase + (model_phase - prev.model_phase),
            None => model_phase,
        };
        let state = MAPPING.state(theta, phi)?;
        points.push(PointEstimate {
            phi,
            phase: nearest_branch(mean, guide),
            sem: (var / n).sqrt(),
            model_phase,
            visibility: visibility(theta, state.relative_phase()),
            fits_ok: ok.len(),
            fits_failed: settings.cycles - ok.len(),
        });
    }
    Ok(PipelineRun { p2, points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub seed: u64,
    pub test: PipelineRun,
    pub reference: PipelineRun,
    pub test_sensitivity: TwoPointSensitivity,
    pub reference_sensitivity: TwoPointSensitivity,
    pub gain_db: f64,
}

fn bracket(phis: &[f64]) -> AppResult<(usize, usize)> {
    let below = phis.iter().rposition(|&x| x < PI);
    let above = phis.iter().position(|&x| x > PI);
    match (below, above) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(AppError::Input("grid must contain points on both sides of pi".into())),
    }
}

fn chord(run: &PipelineRun, (a, b): (usize, usize)) -> AppResult<TwoPointSensitivity> {
    let (pa, pb) = (&run.points[a], &run.points[b]);
    Ok(two_point_sensitivity(
        PhaseReading { phase: pa.phase, error: pa.sem },
        PhaseReading { phase: pb.phase, error: pb.sem },
        pa.phi,
        pb.phi,
    )?)
}

/// One full replication: superposition and `P₂ = 1` runs and their gain.
pub fn end_to_end_replication(p2: f64, phis: &[f64], settings: &PipelineSettings, seed: u64) -> AppResult<Replication> {
    let idx = bracket(phis)?;
    let test = run_pipeline(p2, phis, settings, seed)?;
    let reference = run_pipeline(1.0, phis, settings, seed)?;
    let test_sensitivity = chord(&test, idx)?;
    let reference_sensitivity = chord(&reference, idx)?;
    let gain_db = gain_db(test_sensitivity.delta2_phi, reference_sensitivity.delta2_phi)?;
    Ok(Replication { seed, test, reference, test_sensitivity, reference_sensitivity, gain_db })
}

/// Gain predicted by the closed-form noise model for the same two points.
fn model_gain(p2: f64, phis: &[f64], settings: &PipelineSettings) -> AppResult<f64> {
    let idx = bracket(phis)?;
    let delta2 = |p2: f64| -> AppResult<f64> {
        let theta = theta_from_population(p2)?;
        let model = tracked_phase(theta, &MAPPING, phis);
        let reading = |k: usize| -> AppResult<PhaseReading> {
            let state = MAPPING.state(theta, phis[k])?;
            let v = visibility(theta, state.relative_phase());
            let budget = NoiseBudget::new(settings.atoms as f64, settings.cycles as f64, settings.technical, v)?;
            Ok(PhaseReading {
                phase: model[k].ok_or(Error::UndefinedPhase { theta, phi: phis[k] })?,
                error: phase_noise(&budget),
            })
        };
        Ok(two_point_sensitivity(reading(idx.0)?, reading(idx.1)?, phis[idx.0], phis[idx.1])?.delta2_phi)
    };
    Ok(gain_db(delta2(p2)?, delta2(1.0)?)?)
}

pub(super) fn scenario(cfg: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    let phis = cfg.grid.values();
    let settings = PipelineSettings::from_config(cfg);
    let p2 = cfg.population.p2;
    let reps: Vec<Replication> = (0..cfg.experiment.replications as u64)
        .into_par_iter()
        .map(|r| end_to_end_replication(p2, &phis, &settings, seed::split(cfg.seed, r)))
        .collect::<AppResult<_>>()?;

    let mut table = Table::new(&[
        "replication",
        "pipeline_p2",
        "phi_rad",
        "phase_rad",
        "sem_rad",
        "model_phase_rad",
        "visibility",
        "fits_ok",
        "fits_failed",
    ]);
    for (r, rep) in reps.iter().enumerate() {
        for run in [&rep.test, &rep.reference] {
            for p in &run.points {
                table.push(vec![
                    r as f64,
                    run.p2,
                    p.phi,
                    p.phase,
                    p.sem,
                    p.model_phase,
                    p.visibility,
                    p.fits_ok as f64,
                    p.fits_failed as f64,
                ]);
            }
        }
    }
    let gains: Vec<f64> = reps.iter().map(|r| r.gain_db).collect();
    let mean_gain = gains.iter().sum::<f64>() / gains.len() as f64;
    let predicted = model_gain(p2, &phis, &settings)?;
    let first = &reps[0];
    let series = vec![
        (format!("P2={p2}"), first.test.points.iter().map(|p| (p.phi / PI, p.phase)).collect()),
        ("P2=1".to_string(), first.reference.points.iter().map(|p| (p.phi / PI, p.phase)).collect()),
    ];
    Ok(ScenarioOutput {
        id: cfg.scenario,
        seed: cfg.seed,
        headline: format!(
            "mean_gain_db={mean_gain:.2} model_gain_db={predicted:.2} replications={} slope_test={:.2} slope_ref={:.2}",
            reps.len(),
            first.test_sensitivity.slope.abs(),
            first.reference_sensitivity.slope.abs()
        ),
        summary: json!({
            "p2": p2,
            "settings": settings,
            "per_cycle_jitter_rad": settings.cycle_jitter(),
            "replication_seeds": reps.iter().map(|r| r.seed).collect::<Vec<_>>(),
            "gains_db": gains,
            "mean_gain_db": mean_gain,
            "model_gain_db": predicted,
            "replications": reps.iter().map(|r| json!({
                "test": r.test_sensitivity,
                "reference": r.reference_sensitivity,
                "gain_db": r.gain_db,
            })).collect::<Vec<_>>(),
        }),
        tables: vec![("points".into(), table)],
        plots: vec![Plot {
            suffix: "phase".into(),
            title: "Measured phase".into(),
            x_label: "phi / pi".into(),
            y_label: "phase (rad)".into(),
            series,
        }],
    })
}
