//! Run configuration: defaults per scenario, validation and merging.
//!
//! Configs are JSON objects whose fields are all optional; anything missing is
//! taken from [`ScenarioConfig::defaults`] for the chosen scenario. The layout
//! is described by `schema/config.json` and checked by [`validate`], which
//! reports violations by JSON pointer.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use clockphase_core::interferogram::{fringe_wavelength, Weighting, RB87_MASS};
use clockphase_core::noise::Reference;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Seed used when neither the config nor the command line gives one.
pub const DEFAULT_SEED: u64 = 20_240_514;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Fig2d,
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    #[serde(rename = "figS5")]
    FigS5,
    EndToEnd,
    SmSensitivity,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 8] = [
        ScenarioId::Fig2d,
        ScenarioId::Fig3a,
        ScenarioId::Fig3b,
        ScenarioId::Fig4a,
        ScenarioId::Fig4b,
        ScenarioId::FigS5,
        ScenarioId::EndToEnd,
        ScenarioId::SmSensitivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::Fig2d => "fig2d",
            ScenarioId::Fig3a => "fig3a",
            ScenarioId::Fig3b => "fig3b",
            ScenarioId::Fig4a => "fig4a",
            ScenarioId::Fig4b => "fig4b",
            ScenarioId::FigS5 => "figS5",
            ScenarioId::EndToEnd => "end_to_end",
            ScenarioId::SmSensitivity => "sm_sensitivity",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Population {
    pub p2: f64,
    pub p2_list: Vec<f64>,
    /// Half-width of the population band.
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refine {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Rotation grid in radians: explicit `values`, or `points` evenly over
/// `[start, stop]` merged with an optional finer window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub refine: Option<Refine>,
    pub values: Option<Vec<f64>>,
}

impl Grid {
    pub fn uniform_refined() -> Self {
        Grid {
            start: 0.0,
            stop: 2.0 * PI,
            points: 241,
            refine: Some(Refine { start: 0.9 * PI, stop: 1.1 * PI, step: 0.005 * PI }),
            values: None,
        }
    }

    pub fn explicit(values: Vec<f64>) -> Self {
        Grid { values: Some(values), ..Grid::uniform_refined() }
    }

    /// Sorted, de-duplicated grid.
    pub fn values(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let n = self.points.max(2);
        let mut out: Vec<f64> = (0..n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
            .collect();
        if let Some(r) = &self.refine {
            let steps = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
            out.extend((0..=steps).map(|i| r.start + i as f64 * r.step));
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub atoms: f64,
    pub cycles: f64,
    /// rad
    pub technical: f64,
    pub technical_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferogramConfig {
    pub separation_um: f64,
    pub tof_s: f64,
    pub mass_kg: f64,
    pub sigma_um: f64,
    pub pixel_um: f64,
    pub pixels: usize,
    pub weighting: Weighting,
    pub free_wavelength: bool,
}

impl InterferogramConfig {
    pub fn wavelength(&self) -> clockphase_core::Result<f64> {
        fringe_wavelength(self.tof_s, self.separation_um, self.mass_kg)
    }
}

impl Default for InterferogramConfig {
    fn default() -> Self {
        Self {
            separation_um: 7.26,
            tof_s: 10e-3,
            mass_kg: RB87_MASS,
            sigma_um: 12.0,
            pixel_um: 1.0,
            pixels: 128,
            weighting: Weighting::Uniform,
            free_wavelength: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mc {
    pub trials: usize,
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsSweep {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AtomsSweep {
    /// Log-spaced atom numbers.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let (a, b) = (self.min.log10(), self.max.log10());
        (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    /// Independent repetitions of the whole pipeline, seeded from the master seed.
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub seed: u64,
    pub population: Population,
    pub grid: Grid,
    pub noise: Noise,
    pub interferogram: InterferogramConfig,
    pub mc: Mc,
    pub atoms_sweep: AtomsSweep,
    pub experiment: Experiment,
    pub reference: Reference,
}

impl ScenarioConfig {
    pub fn defaults(id: ScenarioId) -> Self {
        let p2_list = match id {
            ScenarioId::Fig2d => vec![0.0, 0.35, 0.514, 0.65, 1.0],
            ScenarioId::FigS5 => vec![0.09, 0.35, 0.61, 0.78],
            ScenarioId::Fig4b => vec![0.501, 0.514],
            _ => vec![0.514],
        };
        let technical_list = match id {
            ScenarioId::Fig3b => vec![0.0, 0.1],
            _ => vec![0.1, 0.01],
        };
        let grid = match id {
            ScenarioId::EndToEnd => Grid::explicit(vec![0.94 * PI, 1.04 * PI]),
            _ => Grid::uniform_refined(),
        };
        Self {
            scenario: id,
            seed: DEFAULT_SEED,
            population: Population { p2: 0.514, p2_list, uncertainty: 0.004 },
            grid,
            noise: Noise { atoms: 5000.0, cycles: 8.0, technical: 0.1, technical_list },
            interferogram: InterferogramConfig::default(),
            mc: Mc { trials: 100, visibility: 0.028 },
            atoms_sweep: AtomsSweep { min: 1e3, max: 1e9, points: 61 },
            experiment: Experiment { replications: 1 },
            reference: Reference::Upper,
        }
    }
}

/// A schema violation at a JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pointer, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Checker {
    report: ValidationReport,
}

impl Checker {
    fn fail(&mut self, pointer: String, message: impl Into<String>) {
        self.report.violations.push(Violation { pointer, message: message.into() });
    }

    fn object<'a>(&mut self, v: &'a Value, ptr: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(map) = v.as_object() else {
            self.fail(ptr.to_owned(), "expected an object");
            return None;
        };
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                self.fail(format!("{ptr}/{key}"), "unknown property");
            }
        }
        Some(map)
    }

    fn number(&mut self, map: &Map<String, Value>, ptr: &str, key: &str, ok: impl Fn(f64) -> bool, rule: &str) {
        if let Some(v) = map.get(key) {
            self.number_value(v, &format!("{ptr}/{key}"), ok, rule);
        }
    }

    fn number_value(&mut self, v: &Value, ptr: &str, ok: impl Fn(f64) -> bool, rule: &str) {
        match v.as_f64() {
            Some(x) if ok(x) => {}
            Some(x) => self.fail(ptr.to_owned(), format!("{x} violates {rule}")),
            None => self.fail(ptr.to_owned(), "expected a number"),
        }
    }

    fn integer(&mut self, map: &Map<String, Value>, ptr: &str, key: &str, min: u64) {
        if let Some(v) = map.get(key) {
            match v.as_u64() {
                Some(x) if x >= min => {}
                Some(x) => self.fail(format!("{ptr}/{key}"), format!("{x} violates >= {min}")),
                None => self.fail(format!("{ptr}/{key}"), "expected a non-negative integer"),
            }
        }
    }

    fn number_array(&mut self, map: &Map<String, Value>, ptr: &str, key: &str, ok: impl Fn(f64) -> bool + Copy, rule: &str) {
        let Some(v) = map.get(key) else { return };
        let Some(items) = v.as_array() else {
            self.fail(format!("{ptr}/{key}"), "expected an array");
            return;
        };
        for (i, item) in items.iter().enumerate() {
            self.number_value(item, &format!("{ptr}/{key}/{i}"), ok, rule);
        }
    }

    fn one_of(&mut self, map: &Map<String, Value>, ptr: &str, key: &str, options: &[&str]) {
        if let Some(v) = map.get(key) {
            if !v.as_str().is_some_and(|s| options.contains(&s)) {
                self.fail(format!("{ptr}/{key}"), format!("expected one of {}", options.join(", ")));
            }
        }
    }

    fn boolean(&mut self, map: &Map<String, Value>, ptr: &str, key: &str) {
        if map.get(key).is_some_and(|v| !v.is_boolean()) {
            self.fail(format!("{ptr}/{key}"), "expected a boolean");
        }
    }
}

const TOP_LEVEL: [&str; 10] = [
    "scenario",
    "seed",
    "population",
    "grid",
    "noise",
    "interferogram",
    "mc",
    "atoms_sweep",
    "experiment",
    "reference",
];

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Checks a raw config document against the schema.
pub fn validate(doc: &Value) -> ValidationReport {
    let mut c = Checker { report: ValidationReport::default() };
    let Some(root) = c.object(doc, "", &TOP_LEVEL) else {
        return c.report;
    };
    let ids: Vec<&str> = ScenarioId::ALL.iter().map(|s| s.as_str()).collect();
    c.one_of(root, "", "scenario", &ids);
    if root.contains_key("seed") {
        c.integer(root, "", "seed", 0);
    } else {
        c.report.warnings.push(format!("seed missing; using default {DEFAULT_SEED}"));
    }
    c.one_of(root, "", "reference", &["upper", "lower"]);

    if let Some(v) = root.get("population") {
        if let Some(m) = c.object(v, "/population", &["p2", "p2_list", "uncertainty"]) {
            c.number(m, "/population", "p2", unit, "0 <= p2 <= 1");
            c.number_array(m, "/population", "p2_list", unit, "0 <= p2 <= 1");
            c.number(m, "/population", "uncertainty", |x| (0.0..=0.5).contains(&x), "0 <= uncertainty <= 0.5");
        }
    }
    if let Some(v) = root.get("grid") {
        if let Some(m) = c.object(v, "/grid", &["start", "stop", "points", "refine", "values"]) {
            c.number(m, "/grid", "start", f64::is_finite, "finite");
            c.number(m, "/grid", "stop", f64::is_finite, "finite");
            if let (Some(a), Some(b)) = (m.get("start").and_then(Value::as_f64), m.get("stop").and_then(Value::as_f64)) {
                if b <= a {
                    c.fail("/grid/stop".into(), "stop must exceed start");
                }
            }
            c.integer(m, "/grid", "points", 2);
            if let Some(r) = m.get("refine").filter(|r| !r.is_null()) {
                if let Some(rm) = c.object(r, "/grid/refine", &["start", "stop", "step"]) {
                    c.number(rm, "/grid/refine", "start", f64::is_finite, "finite");
                    c.number(rm, "/grid/refine", "stop", f64::is_finite, "finite");
                    c.number(rm, "/grid/refine", "step", positive, "step > 0");
                }
            }
            if let Some(vals) = m.get("values").filter(|v| !v.is_null()) {
                c.number_array(m, "/grid", "values", f64::is_finite, "finite");
                if let Some(arr) = vals.as_array() {
                    let xs: Vec<f64> = arr.iter().filter_map(Value::as_f64).collect();
                    if xs.is_empty() {
                        c.fail("/grid/values".into(), "expected at least one value");
                    }
                    if xs.windows(2).any(|w| w[1] <= w[0]) {
                        c.fail("/grid/values".into(), "grid must be strictly increasing");
                    }
                }
            }
        }
    }
    if let Some(v) = root.get("noise") {
        if let Some(m) = c.object(v, "/noise", &["atoms", "cycles", "technical", "technical_list"]) {
            c.number(m, "/noise", "atoms", |x| x >= 1.0 && x.is_finite(), "atoms >= 1");
            c.number(m, "/noise", "cycles", |x| x >= 1.0 && x.fract() == 0.0, "integer cycles >= 1");
            c.number(m, "/noise", "technical", |x| x >= 0.0 && x.is_finite(), "technical >= 0");
            c.number_array(m, "/noise", "technical_list", |x| x >= 0.0 && x.is_finite(), "technical >= 0");
        }
    }
    if let Some(v) = root.get("interferogram") {
        let keys = ["separation_um", "tof_s", "mass_kg", "sigma_um", "pixel_um", "pixels", "weighting", "free_wavelength"];
        if let Some(m) = c.object(v, "/interferogram", &keys) {
            for key in ["separation_um", "tof_s", "mass_kg", "sigma_um", "pixel_um"] {
                c.number(m, "/interferogram", key, positive, "> 0");
            }
            c.integer(m, "/interferogram", "pixels", 16);
            c.one_of(m, "/interferogram", "weighting", &["uniform", "poisson"]);
            c.boolean(m, "/interferogram", "free_wavelength");
        }
    }
    if let Some(v) = root.get("mc") {
        if let Some(m) = c.object(v, "/mc", &["trials", "visibility"]) {
            c.integer(m, "/mc", "trials", 30);
            c.number(m, "/mc", "visibility", |x| x > 0.0 && x <= 1.0, "0 < visibility <= 1");
        }
    }
    if let Some(v) = root.get("atoms_sweep") {
        if let Some(m) = c.object(v, "/atoms_sweep", &["min", "max", "points"]) {
            c.number(m, "/atoms_sweep", "min", |x| x >= 1.0 && x.is_finite(), "min >= 1");
            c.number(m, "/atoms_sweep", "max", |x| x >= 1.0 && x.is_finite(), "max >= 1");
            if let (Some(a), Some(b)) = (m.get("min").and_then(Value::as_f64), m.get("max").and_then(Value::as_f64)) {
                if b <= a {
                    c.fail("/atoms_sweep/max".into(), "max must exceed min");
                }
            }
            c.integer(m, "/atoms_sweep", "points", 2);
        }
    }
    if let Some(v) = root.get("experiment") {
        if let Some(m) = c.object(v, "/experiment", &["replications"]) {
            c.integer(m, "/experiment", "replications", 1);
        }
    }
    c.report
}

fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Validates `doc` and fills every missing field from the scenario defaults.
///
/// `scenario` overrides (and must agree with) the document's own `scenario`
/// field; one of the two has to be present.
pub fn resolve(doc: &Value, scenario: Option<ScenarioId>) -> Result<(ScenarioConfig, ValidationReport), ValidationReport> {
    let mut report = validate(doc);
    let declared = doc.get("scenario").and_then(Value::as_str).and_then(|s| s.parse::<ScenarioId>().ok());
    let id = match (scenario, declared) {
        (Some(a), Some(b)) if a != b => {
            report.violations.push(Violation {
                pointer: "/scenario".into(),
                message: format!("config is for `{b}` but `{a}` was requested"),
            });
            None
        }
        (Some(a), _) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => {
            if doc.get("scenario").is_none() {
                report.violations.push(Violation { pointer: "/scenario".into(), message: "missing scenario".into() });
            }
            None
        }
    };
    if !report.is_valid() {
        return Err(report);
    }
    let id = id.expect("scenario resolved when valid");
    let mut merged = serde_json::to_value(ScenarioConfig::defaults(id)).expect("defaults serialise");
    merge(&mut merged, doc);
    merged["scenario"] = Value::String(id.as_str().into());
    match serde_json::from_value::<ScenarioConfig>(merged) {
        Ok(cfg) => Ok((cfg, report)),
        Err(e) => {
            report.violations.push(Violation { pointer: String::new(), message: e.to_string() });
            Err(report)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn default_grid_shape() {
        let g = Grid::uniform_refined().values();
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[0], 0.0);
        assert!((g[g.len() - 1] - 2.0 * PI).abs() < 1e-12);
        let fine = g.iter().filter(|&&x| (0.9 * PI - 1e-9..=1.1 * PI + 1e-9).contains(&x)).count();
        assert!(fine >= 41);
    }

    #[test]
    fn population_out_of_range_reported_by_pointer() {
        let r = validate(&json!({"scenario": "fig4a", "seed": 1, "population": {"p2": 1.5}}));
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].pointer, "/population/p2");
    }

    #[test]
    fn missing_seed_warns_and_defaults() {
        let (cfg, report) = resolve(&json!({"scenario": "fig3a"}), None).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn unknown_keys_and_bad_grids() {
        let r = validate(&json!({"scenario": "fig2d", "seed": 3, "extra": 1, "grid": {"values": [1.0, 0.5]}}));
        let ptrs: Vec<_> = r.violations.iter().map(|v| v.pointer.as_str()).collect();
        assert_eq!(ptrs, ["/extra", "/grid/values"]);
    }

    #[test]
    fn scenario_mismatch_rejected() {
        let err = resolve(&json!({"scenario": "fig2d", "seed": 1}), Some(ScenarioId::Fig3a)).unwrap_err();
        assert_eq!(err.violations[0].pointer, "/scenario");
    }

    #[test]
    fn overrides_merge_into_defaults() {
        let (cfg, _) = resolve(&json!({"seed": 9, "noise": {"technical": 0.05}}), Some(ScenarioId::Fig4a)).unwrap();
        assert_eq!(cfg.noise.technical, 0.05);
        assert_eq!(cfg.noise.atoms, 5000.0);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn scenario_names_roundtrip() {
        for id in ScenarioId::ALL {
            assert_eq!(id.as_str().parse::<ScenarioId>().unwrap(), id);
            assert_eq!(serde_json::to_value(id).unwrap(), json!(id.as_str()));
        }
    }

    #[test]
    fn default_wavelength() {
        assert!((InterferogramConfig::default().wavelength().unwrap() - 6.3242).abs() < 1e-3);
    }
}
