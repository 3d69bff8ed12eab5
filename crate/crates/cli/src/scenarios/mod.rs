//! Figure sweeps and the synthetic end-to-end experiment.
//!
//! Every scenario is a pure function of its [`ScenarioConfig`] (seed
//! included) and returns tables, a JSON summary and quick-look plots.
//! Artifact names embed the scenario id and seed.

mod end_to_end;
mod figures;
mod mc;

pub use end_to_end::{
    end_to_end_replication, run_pipeline, PipelineRun, PipelineSettings, PointEstimate, Replication,
};
pub use figures::{gain_table, sm_sensitivity_report, SmReport};
pub use mc::mc_fit_error;

use std::f64::consts::PI;

use clockphase_core::clock_state::{total_phase, PhaseMapping};
use clockphase_core::phase::nearest_branch;
use serde_json::{json, Value};

use crate::config::{ScenarioConfig, ScenarioId};
use crate::error::AppResult;
use crate::formats::{to_json, Artifact, Table};
use crate::svg;

/// Which artifact kinds to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { csv: true, json: true, svg: false }
    }
}

pub struct Plot {
    pub suffix: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

pub struct ScenarioOutput {
    pub id: ScenarioId,
    pub seed: u64,
    /// One line of key numbers for standard output.
    pub headline: String,
    pub summary: Value,
    pub tables: Vec<(String, Table)>,
    pub plots: Vec<Plot>,
}

impl ScenarioOutput {
    pub fn stem(&self) -> String {
        format!("{}_seed{}", self.id, self.seed)
    }

    pub fn table(&self, suffix: &str) -> Option<&Table> {
        self.tables.iter().find(|(s, _)| s == suffix).map(|(_, t)| t)
    }

    pub fn artifacts(&self, config: &ScenarioConfig, formats: Formats) -> Vec<Artifact> {
        let stem = self.stem();
        let mut out = Vec::new();
        if formats.csv {
            for (suffix, table) in &self.tables {
                out.push(Artifact { name: format!("{stem}_{suffix}.csv"), contents: table.to_csv() });
            }
        }
        if formats.json {
            let doc = json!({
                "scenario": self.id,
                "seed": self.seed,
                "config": config,
                "results": self.summary,
            });
            out.push(Artifact { name: format!("{stem}.json"), contents: to_json(&doc) });
        }
        if formats.svg {
            for p in &self.plots {
                let series: Vec<svg::Series<'_>> =
                    p.series.iter().map(|(l, pts)| svg::Series { label: l.clone(), points: pts }).collect();
                out.push(Artifact {
                    name: format!("{stem}_{}.svg", p.suffix),
                    contents: svg::line_plot(&p.title, &p.x_label, &p.y_label, &series),
                });
            }
        }
        out
    }
}

pub fn run(config: &ScenarioConfig) -> AppResult<ScenarioOutput> {
    match config.scenario {
        ScenarioId::Fig2d => figures::fig2d(config),
        ScenarioId::FigS5 => figures::fig_s5(config),
        ScenarioId::Fig3a => figures::fig3a(config),
        ScenarioId::Fig3b => figures::fig3b(config),
        ScenarioId::Fig4a => figures::fig4a(config),
        ScenarioId::Fig4b => figures::fig4b(config),
        ScenarioId::SmSensitivity => figures::sm_sensitivity(config),
        ScenarioId::EndToEnd => end_to_end::scenario(config),
    }
}

/// Largest allowed phase change per tracking substep.
const TRACK_STEP: f64 = 0.5;

/// Total phase along `grid`, unwrapped by following the curve through
/// substeps fine enough for the steepest slope. Singular points give `None`
/// and tracking resumes on the nearest branch after them.
pub fn tracked_phase(theta: f64, mapping: &PhaseMapping, grid: &[f64]) -> Vec<Option<f64>> {
    let p2 = (theta / 2.0).cos().powi(2);
    let imbalance = (2.0 * p2 - 1.0).abs().max(1e-6);
    let max_rate = mapping.phi1_rate.abs().max(mapping.phi2_rate.abs());
    let mut out = Vec::with_capacity(grid.len());
    let mut last: Option<(f64, f64)> = None;
    for &phi in grid {
        let here = mapping.state(theta, phi).ok().and_then(|s| total_phase(&s).ok());
        let value = match (here, last) {
            (None, _) => None,
            (Some(v), None) => Some(v),
            (Some(v), Some((phi0, mut track))) => {
                let span = phi - phi0;
                let subs = ((span.abs() * max_rate / imbalance / TRACK_STEP).ceil() as usize).clamp(1, 1_000_000);
                for j in 1..subs {
                    let x = phi0 + span * j as f64 / subs as f64;
                    if let Some(w) = mapping.state(theta, x).ok().and_then(|s| total_phase(&s).ok()) {
                        track = nearest_branch(w, track);
                    }
                }
                Some(nearest_branch(v, track))
            }
        };
        if let Some(v) = value {
            last = Some((phi, v));
        }
        out.push(value);
    }
    out
}

/// Points `(φ/π, y)` for plotting, with `NaN` gaps.
fn in_pi_units(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    xs.iter().zip(ys).map(|(x, y)| (x / PI, *y)).collect()
}
