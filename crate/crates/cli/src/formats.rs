//! Stable on-disk formats.
//!
//! - Images: CSV with header `pixel_index,position_um,counts`, one row per
//!   pixel, positions at pixel centres.
//! - Tables: CSV with a header row; numbers use Rust's shortest round-trip
//!   formatting so that re-runs are byte-identical.
//! - Records: pretty-printed JSON with a trailing newline.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clockphase_core::interferogram::CameraGrid;
use serde::Serialize;

use crate::error::{AppError, AppResult};

pub const IMAGE_HEADER: &str = "pixel_index,position_um,counts";
pub const SWEEP_HEADER: [&str; 6] = ["phi_rad", "phase_rad", "slope", "dPhi_rad", "dphi_rad", "gain_db"];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{x}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

pub fn image_to_csv(grid: &CameraGrid, counts: &[f64]) -> String {
    let mut s = String::from(IMAGE_HEADER);
    s.push('\n');
    for (i, c) in counts.iter().enumerate() {
        writeln!(s, "{i},{},{c}", grid.pixel_center(i)).unwrap();
    }
    s
}

/// Parses an image CSV; the grid is recovered from the pixel positions.
pub fn image_from_csv(text: &str) -> AppResult<(CameraGrid, Vec<f64>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == IMAGE_HEADER => {}
        _ => return Err(AppError::Input(format!("image CSV must start with `{IMAGE_HEADER}`"))),
    }
    let mut positions = Vec::new();
    let mut counts = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| s.parse::<f64>().map_err(|_| AppError::Input(format!("row {}: bad number `{s}`", n + 1)));
        if fields.len() != 3 {
            return Err(AppError::Input(format!("row {}: expected 3 fields", n + 1)));
        }
        if fields[0].parse::<usize>().ok() != Some(n) {
            return Err(AppError::Input(format!("row {}: pixel_index out of sequence", n + 1)));
        }
        positions.push(parse(fields[1])?);
        counts.push(parse(fields[2])?);
    }
    if positions.len() < CameraGrid::MIN_PIXELS {
        return Err(AppError::Input(format!("image has {} pixels, need >= {}", positions.len(), CameraGrid::MIN_PIXELS)));
    }
    let pixel = (positions[positions.len() - 1] - positions[0]) / (positions.len() - 1) as f64;
    let uniform = positions.windows(2).all(|w| ((w[1] - w[0]) - pixel).abs() <= 1e-6 * pixel.abs().max(1e-12));
    if !(pixel > 0.0) || !uniform {
        return Err(AppError::Input("pixel positions must be uniformly increasing".into()));
    }
    let grid = CameraGrid::new(pixel, positions.len(), positions[0] - 0.5 * pixel)?;
    Ok((grid, counts))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable record");
    s.push('\n');
    s
}

/// A named file produced by a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> AppResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            fs::write(&path, &a.contents).map_err(|e| AppError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
