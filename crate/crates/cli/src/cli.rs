//! Argument parsing and command dispatch.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use clockphase_core::clock_state::{slope_g, theta_from_population, total_phase, visibility, ClockState};
use clockphase_core::interferogram::{
    bin_to_image, fit_interferogram, phase_error_bound, sample_atoms, CameraGrid, FitOptions, InterferogramParams,
};
use clockphase_core::noise::{phase_noise, sensitivity_at, GainConfig, NoiseBudget, Reference};
use serde_json::{json, Value};

use crate::config::{resolve, validate, InterferogramConfig, ScenarioConfig, ScenarioId};
use crate::error::{AppError, AppResult};
use crate::formats::{image_from_csv, image_to_csv, to_json, write_artifacts, Artifact};
use crate::scenarios::{self, mc_fit_error, Formats};

/// Default output directory when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT: &str = "out";
pub const OUT_ENV: &str = "CLOCKPHASE_OUT";

#[derive(Debug, Parser)]
#[command(name = "clockphase", version, about = "Two-level clock interferometer phase, noise and gain calculations")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON run configuration (see schema/config.json)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts
    #[arg(long, global = true, value_name = "DIR", env = OUT_ENV, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// Master seed; overrides the config. Default 20240514
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Artifact formats to write
    #[arg(long, global = true, value_enum, value_delimiter = ',', default_values_t = [Format::Csv, Format::Json])]
    pub format: Vec<Format>,
    /// Read and print angles in degrees instead of radians
    #[arg(long, global = true)]
    pub deg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefLevel {
    Upper,
    Lower,
}

impl From<RefLevel> for Reference {
    fn from(r: RefLevel) -> Self {
        match r {
            RefLevel::Upper => Reference::Upper,
            RefLevel::Lower => Reference::Lower,
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Mixing {
    /// Mixing angle theta
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Upper-level population P2, instead of theta
    #[arg(long)]
    pub p2: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Total interference phase of a clock superposition
    Phase {
        #[command(flatten)]
        mixing: Mixing,
        /// Phase of the lower level
        #[arg(long, allow_hyphen_values = true)]
        phi1: f64,
        /// Phase of the upper level
        #[arg(long, allow_hyphen_values = true)]
        phi2: f64,
    },
    /// Interference visibility at a relative phase
    Visibility {
        #[command(flatten)]
        mixing: Mixing,
        /// Relative phase phi2 - phi1
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
    },
    /// Sample atoms into a synthetic interferogram image (CSV)
    Synth {
        #[arg(long, default_value_t = 5000)]
        atoms: usize,
        #[arg(long, default_value_t = 1.0)]
        visibility: f64,
        /// Fringe phase
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phase: f64,
    },
    /// Fit an interferogram image CSV
    Fit {
        /// Image CSV with header pixel_index,position_um,counts
        #[arg(long, value_name = "FILE")]
        image: PathBuf,
    },
    /// Monte Carlo error of the fitted phase
    Mc {
        #[arg(long)]
        visibility: Option<f64>,
        #[arg(long)]
        atoms: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Sensitivity gain over a phi sweep against a single-level reference
    Gain {
        #[arg(long)]
        p2: Option<f64>,
        /// Atoms per cycle
        #[arg(long)]
        n: Option<f64>,
        /// Cycles averaged per point
        #[arg(long)]
        a: Option<f64>,
        /// Technical phase noise of an averaged point, rad
        #[arg(long)]
        technical: Option<f64>,
        #[arg(long, value_enum)]
        reference: Option<RefLevel>,
    },
    /// Run a named scenario and write its artifacts
    Reproduce {
        /// Scenario id, or `all`
        #[arg(value_name = "SCENARIO")]
        scenario: Option<String>,
    },
    /// Phase and rotation uncertainty for one operating point
    Budget {
        #[arg(long)]
        p2: Option<f64>,
        /// Relative phase
        #[arg(long, default_value_t = PI, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long)]
        n: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        technical: Option<f64>,
    },
    /// Check a config file against the schema
    Validate {
        #[arg(value_name = "FILE")]
        path: PathBuf,
    },
}

/// A failed command: the error, plus anything still meant for standard output.
#[derive(Debug)]
pub struct Failure {
    pub error: AppError,
    pub stdout: Option<String>,
}

impl From<AppError> for Failure {
    fn from(error: AppError) -> Self {
        Failure { error, stdout: None }
    }
}

impl From<clockphase_core::Error> for Failure {
    fn from(e: clockphase_core::Error) -> Self {
        AppError::from(e).into()
    }
}

impl Global {
    fn formats(&self) -> Formats {
        Formats {
            csv: self.format.contains(&Format::Csv),
            json: self.format.contains(&Format::Json),
            svg: self.format.contains(&Format::Svg),
        }
    }

    fn angle_in(&self, x: f64) -> f64 {
        if self.deg { x.to_radians() } else { x }
    }

    fn angle_out(&self, x: f64) -> f64 {
        if self.deg { x.to_degrees() } else { x }
    }

    fn theta(&self, m: &Mixing) -> AppResult<f64> {
        match (m.theta, m.p2) {
            (Some(t), None) => Ok(self.angle_in(t)),
            (None, Some(p)) => Ok(theta_from_population(p)?),
            _ => Err(AppError::Input("give exactly one of --theta and --p2".into())),
        }
    }

    /// Resolved config for `id`: the `--config` file if any, else defaults,
    /// with `--seed` applied.
    fn scenario_config(&self, id: ScenarioId) -> AppResult<ScenarioConfig> {
        let doc = match &self.config {
            Some(path) => read_json(path)?,
            None => json!({}),
        };
        let declared = doc.get("scenario").is_some();
        let (mut cfg, _) = resolve(&doc, if declared { None } else { Some(id) })
            .map_err(|report| AppError::Schema(report.violations))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn write(&self, artifacts: &[Artifact]) -> AppResult<()> {
        write_artifacts(&self.out, artifacts).map(|_| ())
    }
}

fn read_json(path: &Path) -> AppResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::Input(format!("{}: {e}", path.display())))
}

fn fit_options(ic: &InterferogramConfig) -> AppResult<FitOptions> {
    let mut opts = FitOptions::new(ic.wavelength()?);
    opts.weighting = ic.weighting;
    if ic.free_wavelength {
        opts = opts.with_free_wavelength();
    }
    Ok(opts)
}

/// Runs one invocation and returns its standard-output summary line.
pub fn run(cli: &Cli) -> Result<String, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Phase { mixing, phi1, phi2 } => {
            let state = ClockState::new(g.theta(mixing)?, g.angle_in(*phi1), g.angle_in(*phi2))?;
            Ok(format!("{}", g.angle_out(total_phase(&state)?)))
        }
        Command::Visibility { mixing, phi } => Ok(format!("{}", visibility(g.theta(mixing)?, g.angle_in(*phi)))),
        Command::Synth { atoms, visibility, phase } => synth(g, *atoms, *visibility, g.angle_in(*phase)),
        Command::Fit { image } => fit(g, image),
        Command::Mc { visibility, atoms, trials } => mc(g, *visibility, *atoms, *trials),
        Command::Gain { p2, n, a, technical, reference } => {
            let mut cfg = g.scenario_config(ScenarioId::Fig4a)?;
            cfg.population.p2 = p2.unwrap_or(cfg.population.p2);
            cfg.noise.atoms = n.unwrap_or(cfg.noise.atoms);
            cfg.noise.cycles = a.unwrap_or(cfg.noise.cycles);
            cfg.noise.technical = technical.unwrap_or(cfg.noise.technical);
            cfg.reference = reference.map(Reference::from).unwrap_or(cfg.reference);
            gain(g, &cfg)
        }
        Command::Reproduce { scenario } => reproduce(g, scenario.as_deref()),
        Command::Budget { p2, phi, n, a, technical } => {
            let cfg = g.scenario_config(ScenarioId::Fig3a)?;
            let p2 = p2.unwrap_or(cfg.population.p2);
            let atoms = n.unwrap_or(cfg.noise.atoms);
            let cycles = a.unwrap_or(cfg.noise.cycles);
            let technical = technical.unwrap_or(cfg.noise.technical);
            budget(g, p2, g.angle_in(*phi), atoms, cycles, technical)
        }
        Command::Validate { path } => validate_file(path),
    }
}

fn synth(g: &Global, atoms: usize, v: f64, phase: f64) -> Result<String, Failure> {
    let cfg = g.scenario_config(ScenarioId::EndToEnd)?;
    let ic = &cfg.interferogram;
    let grid = CameraGrid::centered(ic.pixel_um, ic.pixels, 0.0)?;
    let mut params = InterferogramParams::with_defaults(atoms as f64, v, phase);
    params.sigma_z = ic.sigma_um;
    params.amplitude = atoms as f64 / (ic.sigma_um * (2.0 * PI).sqrt());
    params.wavelength = ic.wavelength()?;
    params.validate()?;
    let positions = sample_atoms(&params, atoms, cfg.seed)?;
    let image = bin_to_image(&positions, &grid);
    let name = format!("synth_seed{}.csv", cfg.seed);
    g.write(&[Artifact { name: name.clone(), contents: image_to_csv(&grid, &image.to_f64()) }])?;
    Ok(format!(
        "image={} atoms={} out_of_range={} pixels={}",
        g.out.join(name).display(),
        image.total(),
        image.out_of_range,
        grid.n_pixels
    ))
}

fn fit(g: &Global, path: &Path) -> Result<String, Failure> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let (grid, counts) = image_from_csv(&text)?;
    let cfg = g.scenario_config(ScenarioId::EndToEnd)?;
    let result = fit_interferogram(&counts, &grid, None, &fit_options(&cfg.interferogram)?)?;
    if !result.converged {
        return Err(AppError::Numerical(clockphase_core::Error::DegenerateImage).into());
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    g.write(&[Artifact { name: format!("fit_{stem}.json"), contents: to_json(&result) }])?;
    Ok(format!(
        "phase_rad={:.6} phase_error_rad={} visibility={:.4} chi2={:.3}",
        g.angle_out(result.params.phase),
        result.phase_error().map_or("nan".into(), |e| format!("{:.6}", g.angle_out(e))),
        result.params.visibility,
        result.chi2
    ))
}

fn mc(g: &Global, v: Option<f64>, atoms: Option<usize>, trials: Option<usize>) -> Result<String, Failure> {
    let cfg = g.scenario_config(ScenarioId::EndToEnd)?;
    let v = v.unwrap_or(cfg.mc.visibility);
    let atoms = atoms.unwrap_or(cfg.noise.atoms.round() as usize);
    let trials = trials.unwrap_or(cfg.mc.trials);
    let ic = &cfg.interferogram;
    let grid = CameraGrid::centered(ic.pixel_um, ic.pixels, 0.0)?;
    let opts = fit_options(ic)?;
    let mut params = InterferogramParams::with_defaults(atoms as f64, v, 0.0);
    params.sigma_z = ic.sigma_um;
    params.amplitude = atoms as f64 / (ic.sigma_um * (2.0 * PI).sqrt());
    params.wavelength = opts.wavelength;
    let summary = mc_fit_error(&params, atoms, trials, &grid, &opts, cfg.seed)?;
    let doc = json!({
        "seed": cfg.seed,
        "visibility": v,
        "atoms": atoms,
        "trials": trials,
        "summary": summary,
        "fisher_bound_rad": phase_error_bound(v, atoms as f64),
    });
    g.write(&[Artifact { name: format!("mc_seed{}.json", cfg.seed), contents: to_json(&doc) }])?;
    Ok(format!(
        "mean_abs_error_rad={:.4} mean_reported_error_rad={:.4} failed={} trials={}",
        summary.mean_abs_error, summary.mean_reported_error, summary.failed, summary.trials
    ))
}

fn gain(g: &Global, cfg: &ScenarioConfig) -> Result<String, Failure> {
    let phis = cfg.grid.values();
    let gc = GainConfig {
        p2: cfg.population.p2,
        atoms: cfg.noise.atoms,
        cycles: cfg.noise.cycles,
        technical: cfg.noise.technical,
        reference: cfg.reference,
    };
    let (table, best) = scenarios::gain_table(&gc, &phis)?;
    let stem = format!("gain_seed{}", cfg.seed);
    let f = g.formats();
    let mut artifacts = Vec::new();
    if f.csv {
        artifacts.push(Artifact { name: format!("{stem}.csv"), contents: table.to_csv() });
    }
    if f.json {
        let doc = json!({ "config": gc, "peak_gain_db": best.1, "argmax_phi_rad": best.0 });
        artifacts.push(Artifact { name: format!("{stem}.json"), contents: to_json(&doc) });
    }
    g.write(&artifacts)?;
    Ok(format!("peak_gain_db={:.2} argmax_phi={:.4}", best.1, g.angle_out(best.0)))
}

fn reproduce(g: &Global, scenario: Option<&str>) -> Result<String, Failure> {
    let ids: Vec<Option<ScenarioId>> = match scenario {
        Some("all") => ScenarioId::ALL.iter().copied().map(Some).collect(),
        Some(s) => vec![Some(s.parse::<ScenarioId>().map_err(AppError::Input)?)],
        None => vec![None],
    };
    let mut lines = Vec::new();
    for id in ids {
        let doc = match &g.config {
            Some(path) => read_json(path)?,
            None => json!({}),
        };
        let (mut cfg, _) = resolve(&doc, id).map_err(|report| AppError::Schema(report.violations))?;
        if let Some(seed) = g.seed {
            cfg.seed = seed;
        }
        let output = scenarios::run(&cfg)?;
        g.write(&output.artifacts(&cfg, g.formats()))?;
        lines.push(if scenario == Some("all") {
            format!("{}: {}", cfg.scenario, output.headline)
        } else {
            output.headline
        });
    }
    Ok(lines.join("\n"))
}

fn budget(g: &Global, p2: f64, phi: f64, atoms: f64, cycles: f64, technical: f64) -> Result<String, Failure> {
    let theta = theta_from_population(p2)?;
    let v = visibility(theta, phi);
    let nb = NoiseBudget::new(atoms, cycles, technical, v)?;
    let (phase, slope, d_total, d_phi) = sensitivity_at(p2, atoms, cycles, technical, phi)?;
    let doc = json!({
        "p2": p2,
        "phi_rad": phi,
        "atoms": atoms,
        "cycles": cycles,
        "technical_rad": technical,
        "visibility": v,
        "quantum_rad": nb.quantum(),
        "phase_noise_rad": phase_noise(&nb),
        "total_phase_rad": phase,
        "slope": slope,
        "slope_at_pi": slope_g(p2).map(|s| s.magnitude()).ok(),
        "delta_phi_rad": d_phi,
        "delta2_phi": d_phi * d_phi,
        "d_total_phase_rad": d_total,
    });
    g.write(&[Artifact { name: format!("budget_p2_{p2}.json"), contents: to_json(&doc) }])?;
    Ok(format!(
        "visibility={v:.4} phase_noise_rad={:.4} slope={slope:.3} delta_phi_rad={}",
        phase_noise(&nb),
        g.angle_out(d_phi)
    ))
}

fn validate_file(path: &Path) -> Result<String, Failure> {
    let doc = read_json(path)?;
    let report = validate(&doc);
    let line = serde_json::to_string(&report).expect("report serialises");
    if report.is_valid() {
        Ok(line)
    } else {
        Err(Failure { error: AppError::Schema(report.violations), stdout: Some(line) })
    }
}
