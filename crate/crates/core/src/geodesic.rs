//! Geometric phase from the enclosed area on the Bloch sphere.
//!
//! A trajectory of Bloch vectors, closed by the geodesic joining its end
//! points, bounds a region whose signed solid angle `Ω` determines the
//! Pancharatnam phase: `Φ_G = ½Ω` when the azimuth of the Bloch vector is the
//! relative rotation `φ = φ₂ − φ₁` and the north pole is `|2⟩`. This module
//! computes `Ω` independently of the closed-form phase algebra in
//! [`crate::clock_state`].
//!
//! Orientation: a loop traversed counterclockwise when seen from outside the
//! sphere above the enclosed region has positive area. Because `Ω` is only
//! defined modulo `4π`, results are reported in `(−2π, 2π]`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use libm::{atan2, cos, sin, sqrt};

use crate::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-9;
/// End points closer than this to antipodal (in radians) have no unique geodesic.
pub const ANTIPODAL_TOLERANCE: f64 = 1e-6;
/// Consecutive samples must be closer than this angle.
pub const MAX_STEP: f64 = PI / 2.0;

/// Sign linking the solid angle to the clock-state geometric phase, fixed by
/// the calibration case `θ = π/3`, `φ = 1.2π` (see the tests).
const PHASE_PER_AREA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Point at polar angle `theta` from `+z` and azimuth `azimuth`.
    pub fn from_angles(theta: f64, azimuth: f64) -> Self {
        let s = sin(theta);
        Self { x: s * cos(azimuth), y: s * sin(azimuth), z: cos(theta) }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    fn scale(self, k: f64) -> Self {
        Self { x: self.x * k, y: self.y * k, z: self.z * k }
    }

    fn sub(self, o: Self) -> Self {
        Self { x: self.x - o.x, y: self.y - o.y, z: self.z - o.z }
    }

    fn add(self, o: Self) -> Self {
        Self { x: self.x + o.x, y: self.y + o.y, z: self.z + o.z }
    }

    fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 1e-300).then(|| self.scale(1.0 / n))
    }

    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// Angle between two unit vectors, accurate for nearly parallel and nearly antiparallel pairs.
pub fn angle_between(a: BlochVector, b: BlochVector) -> f64 {
    atan2(a.cross(b).norm(), a.dot(b))
}

/// How consecutive samples are joined when computing the area.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeModel {
    /// Great-circle edges: the area of the sampled polygon.
    Geodesic,
    /// Each edge follows the circle through it and its neighbours. Exact for
    /// samples taken on a single circle (latitude arcs), fourth order for
    /// smooth curves.
    Osculating,
}

/// Ordered Bloch vectors, optionally closed by the geodesic from the last sample back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochTrajectory {
    samples: Vec<BlochVector>,
    closure: bool,
    edges: EdgeModel,
}

impl BlochTrajectory {
    /// Validates the samples. Without `closure` the trajectory must already end where it starts.
    pub fn new(samples: Vec<BlochVector>, closure: bool, edges: EdgeModel) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidTrajectory("fewer than two samples"));
        }
        if samples.iter().any(|v| (v.norm() - 1.0).abs() > UNIT_TOLERANCE) {
            return Err(Error::InvalidTrajectory("sample is not a unit vector"));
        }
        if samples.windows(2).any(|w| angle_between(w[0], w[1]) >= MAX_STEP) {
            return Err(Error::InvalidTrajectory("consecutive samples too far apart"));
        }
        let (first, last) = (samples[0], samples[samples.len() - 1]);
        if closure {
            if angle_between(first, last) > PI - ANTIPODAL_TOLERANCE {
                return Err(Error::AntipodalEndpoints);
            }
        } else if angle_between(first, last) > UNIT_TOLERANCE {
            return Err(Error::InvalidTrajectory("open trajectory without geodesic closure"));
        }
        Ok(Self { samples, closure, edges })
    }

    pub fn samples(&self) -> &[BlochVector] {
        &self.samples
    }

    pub fn closure(&self) -> bool {
        self.closure
    }

    pub fn edge_model(&self) -> EdgeModel {
        self.edges
    }

    /// Same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self { samples, ..self.clone() }
    }
}

/// `n` samples at polar angle `theta`, azimuth `0 → phi_span`, closed by a geodesic.
pub fn latitude_arc(theta: f64, phi_span: f64, n: usize) -> Result<BlochTrajectory> {
    if n < 2 {
        return Err(Error::InvalidTrajectory("fewer than two samples"));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::DegeneratePole { theta });
    }
    let step = phi_span / (n - 1) as f64;
    let samples = (0..n).map(|k| BlochVector::from_angles(theta, step * k as f64)).collect();
    BlochTrajectory::new(samples, true, EdgeModel::Osculating)
}

/// Signed triangle area (Van Oosterom–Strackee), in `(−2π, 2π]`.
fn triangle_area(a: BlochVector, b: BlochVector, c: BlochVector) -> f64 {
    let num = a.dot(b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * atan2(num, den)
}

/// Minimum angular distance from `p` to the great-circle segment `a → b`.
fn distance_to_edge(p: BlochVector, a: BlochVector, b: BlochVector) -> f64 {
    let endpoints = angle_between(p, a).min(angle_between(p, b));
    let Some(normal) = a.cross(b).normalized() else {
        return endpoints;
    };
    let off_plane = p.dot(normal);
    let Some(foot) = p.sub(normal.scale(off_plane)).normalized() else {
        return endpoints;
    };
    // Foot lies on the segment when it splits the a-b angle.
    let ab = angle_between(a, b);
    if (angle_between(a, foot) + angle_between(foot, b) - ab).abs() < 1e-12 {
        libm::asin(off_plane.abs().min(1.0))
    } else {
        endpoints
    }
}

/// Fan apex that stays clear of every edge and of every vertex antipode.
fn fan_apex(vertices: &[BlochVector]) -> BlochVector {
    let n = vertices.len();
    let centroid = vertices.iter().fold(BlochVector::new(0.0, 0.0, 0.0), |acc, &v| acc.add(v));
    let mut candidates: Vec<BlochVector> = Vec::with_capacity(8);
    if let Some(c) = centroid.normalized() {
        candidates.push(c);
        candidates.push(c.neg());
    }
    for axis in [BlochVector::new(0.0, 0.0, 1.0), BlochVector::new(1.0, 0.0, 0.0), BlochVector::new(0.0, 1.0, 0.0)] {
        candidates.push(axis);
        candidates.push(axis.neg());
    }
    let clearance = |r: BlochVector| {
        let mut worst = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            worst = worst.min(distance_to_edge(r, a, b)).min(angle_between(r.neg(), a));
        }
        worst
    };
    let mut best = candidates[0];
    let mut best_clearance = clearance(best);
    for &c in &candidates[1..] {
        let d = clearance(c);
        if d > best_clearance {
            best = c;
            best_clearance = d;
        }
    }
    best
}

/// Area between the circular edge `a → b` (circle with pole `pole`) and the chord `b → a`.
fn lens_area(pole: BlochVector, a: BlochVector, b: BlochVector) -> f64 {
    let cos_rho = pole.dot(a);
    let turn = atan2(pole.dot(a.cross(b)), a.dot(b) - cos_rho * pole.dot(b));
    turn * (1.0 - cos_rho) - triangle_area(pole, a, b)
}

fn circle_pole(a: BlochVector, b: BlochVector, c: BlochVector) -> Option<BlochVector> {
    b.sub(a).cross(c.sub(b)).normalized()
}

fn osculating_correction(samples: &[BlochVector]) -> f64 {
    let n = samples.len();
    if n < 3 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n - 1 {
        let (a, b) = (samples[i], samples[i + 1]);
        let mut sum = 0.0;
        let mut count = 0;
        if i > 0 {
            if let Some(p) = circle_pole(samples[i - 1], a, b) {
                sum += lens_area(p, a, b);
                count += 1;
            }
        }
        if i + 2 < n {
            if let Some(p) = circle_pole(a, b, samples[i + 2]) {
                sum += lens_area(p, a, b);
                count += 1;
            }
        }
        if count > 0 {
            total += sum / count as f64;
        }
    }
    total
}

fn wrap_solid_angle(omega: f64) -> f64 {
    let w = omega - 2.0 * TAU * libm::floor((omega + TAU) / (2.0 * TAU));
    if w <= -TAU {
        w + 2.0 * TAU
    } else {
        w
    }
}

/// Signed solid angle enclosed by the trajectory and its geodesic closure, in `(−2π, 2π]`.
pub fn enclosed_solid_angle(traj: &BlochTrajectory) -> Result<f64> {
    // Evaluate on a canonical orientation so that reversal negates exactly.
    let samples = traj.samples();
    let key = |v: &BlochVector| [v.x, v.y, v.z];
    let forward = samples.iter().map(key);
    let backward = samples.iter().rev().map(key);
    let flip = backward
        .zip(forward)
        .map(|(b, f)| b.iter().zip(&f).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()))
        .find_map(|o| o)
        .is_some_and(|o| o.is_lt());
    if flip {
        let mut rev = samples.to_vec();
        rev.reverse();
        Ok(-oriented_solid_angle(&rev, traj.edge_model()))
    } else {
        Ok(oriented_solid_angle(samples, traj.edge_model()))
    }
}

fn oriented_solid_angle(samples: &[BlochVector], edges: EdgeModel) -> f64 {
    let mut vertices: Vec<BlochVector> = Vec::with_capacity(samples.len());
    for &v in samples {
        if vertices.last().is_none_or(|&u| angle_between(u, v) > 1e-15) {
            vertices.push(v);
        }
    }
    if vertices.len() > 1 && angle_between(vertices[0], vertices[vertices.len() - 1]) <= 1e-15 {
        vertices.pop();
    }
    if vertices.len() < 3 {
        return 0.0;
    }
    let apex = fan_apex(&vertices);
    let n = vertices.len();
    let polygon: f64 = (0..n).map(|i| triangle_area(apex, vertices[i], vertices[(i + 1) % n])).sum();
    let correction = match edges {
        EdgeModel::Geodesic => 0.0,
        EdgeModel::Osculating => osculating_correction(samples),
    };
    wrap_solid_angle(polygon + correction)
}

/// Geometric phase `½Ω` of the closed trajectory, in `(−π, π]`.
///
/// Matches [`crate::clock_state::decompose_phase`] (modulo `2π`) on
/// [`latitude_arc`]`(θ, φ)`.
pub fn geometric_phase_area(traj: &BlochTrajectory) -> Result<f64> {
    Ok(PHASE_PER_AREA * enclosed_solid_angle(traj)?)
}

/// Solid angle of the spherical cap of angular radius `rho`.
pub fn cap_area(rho: f64) -> f64 {
    TAU * (1.0 - cos(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock_state::geometric_phase;
    use crate::phase::wrap;
    use core::f64::consts::FRAC_PI_2;

    fn wrap4pi(x: f64) -> f64 {
        wrap_solid_angle(x)
    }

    #[test]
    fn latitude_arc_construction() {
        let t = latitude_arc(FRAC_PI_2, FRAC_PI_2, 64).unwrap();
        assert_eq!(t.samples().len(), 64);
        assert!(t.samples().iter().all(|v| v.z.abs() < 1e-15 && (v.norm() - 1.0).abs() < 1e-15));

        let t = latitude_arc(FRAC_PI_2, 0.0, 2).unwrap();
        assert_eq!(t.samples()[0], t.samples()[1]);

        let t = latitude_arc(PI / 3.0, PI, 128).unwrap();
        assert!(t.samples().iter().all(|v| (v.z - 0.5).abs() < 1e-15));
    }

    #[test]
    fn pole_and_sample_count_errors() {
        assert!(matches!(latitude_arc(0.0, 1.0, 8), Err(Error::DegeneratePole { .. })));
        assert!(matches!(latitude_arc(PI, 1.0, 8), Err(Error::DegeneratePole { .. })));
        assert!(latitude_arc(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn antipodal_endpoints_rejected() {
        assert!(matches!(latitude_arc(FRAC_PI_2, PI, 64), Err(Error::AntipodalEndpoints)));
        assert!(latitude_arc(FRAC_PI_2, PI - 1e-3, 64).is_ok());
    }

    #[test]
    fn trajectory_validation() {
        let a = BlochVector::from_angles(1.0, 0.0);
        let far = BlochVector::from_angles(1.0, 2.5);
        assert!(BlochTrajectory::new(alloc::vec![a], true, EdgeModel::Geodesic).is_err());
        assert!(BlochTrajectory::new(alloc::vec![a, far], true, EdgeModel::Geodesic).is_err());
        let b = BlochVector::new(2.0, 0.0, 0.0);
        assert!(BlochTrajectory::new(alloc::vec![a, b], true, EdgeModel::Geodesic).is_err());
        let c = BlochVector::from_angles(1.0, 0.3);
        assert!(BlochTrajectory::new(alloc::vec![a, c], false, EdgeModel::Geodesic).is_err());
    }

    #[test]
    fn equator_below_and_above_half_turn() {
        let below = latitude_arc(FRAC_PI_2, 0.9 * PI, 512).unwrap();
        assert!(enclosed_solid_angle(&below).unwrap().abs() < 1e-9);
        assert!(geometric_phase_area(&below).unwrap().abs() < 1e-6);

        let above = latitude_arc(FRAC_PI_2, 1.1 * PI, 512).unwrap();
        assert!((enclosed_solid_angle(&above).unwrap().abs() - TAU).abs() < 1e-9);
        assert!((geometric_phase_area(&above).unwrap().abs() - PI).abs() < 1e-6);
    }

    #[test]
    fn full_equator_is_a_hemisphere() {
        let samples: Vec<_> = (0..=256).map(|k| BlochVector::from_angles(FRAC_PI_2, TAU * k as f64 / 256.0)).collect();
        let t = BlochTrajectory::new(samples, false, EdgeModel::Geodesic).unwrap();
        assert!((enclosed_solid_angle(&t).unwrap().abs() - TAU).abs() < 1e-9);
    }

    #[test]
    fn closed_latitude_circle_is_a_cap() {
        let theta = 0.7;
        let samples: Vec<_> = (0..=400).map(|k| BlochVector::from_angles(theta, TAU * k as f64 / 400.0)).collect();
        let t = BlochTrajectory::new(samples, false, EdgeModel::Osculating).unwrap();
        assert!((enclosed_solid_angle(&t).unwrap() - cap_area(theta)).abs() < 1e-12);
    }

    #[test]
    fn geodesic_triangle_octant() {
        let x = BlochVector::new(1.0, 0.0, 0.0);
        let y = BlochVector::new(0.0, 1.0, 0.0);
        let z = BlochVector::new(0.0, 0.0, 1.0);
        let mid = |a: BlochVector, b: BlochVector| a.add(b).normalized().unwrap();
        let path = alloc::vec![x, mid(x, y), y, mid(y, z), z, mid(z, x)];
        let t = BlochTrajectory::new(path, true, EdgeModel::Geodesic).unwrap();
        assert!((enclosed_solid_angle(&t).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert!((enclosed_solid_angle(&t.reversed()).unwrap() + FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn calibration_case_matches_clock_state() {
        let (theta, span) = (PI / 3.0, 1.2 * PI);
        let area = geometric_phase_area(&latitude_arc(theta, span, 4096).unwrap()).unwrap();
        let algebra = geometric_phase(theta, span).unwrap();
        assert!(wrap(area - algebra).abs() < 1e-9, "area {area} algebra {algebra}");
        // the opposite sign convention would disagree here
        assert!(wrap(-area - algebra).abs() > 0.1);
    }

    #[test]
    fn cross_module_reference_case() {
        let area = geometric_phase_area(&latitude_arc(1.2, 2.5, 4096).unwrap()).unwrap();
        let algebra = geometric_phase(1.2, 2.5).unwrap();
        assert!(wrap(area - algebra).abs() < 1e-5);
    }

    #[test]
    fn reversal_negates() {
        for &(theta, span) in &[(0.4, 2.0), (1.2, 2.5), (2.5, 5.0), (FRAC_PI_2, 1.5 * PI)] {
            let t = latitude_arc(theta, span, 1000).unwrap();
            let fwd = enclosed_solid_angle(&t).unwrap();
            let back = enclosed_solid_angle(&t.reversed()).unwrap();
            assert!(wrap4pi(fwd + back).abs() < 1e-10, "{theta} {span}: {fwd} {back}");
        }
    }

    #[test]
    fn refinement_converges() {
        for &(theta, span) in &[(PI / 3.0, 1.2 * PI), (1.2, 2.5), (0.3, 5.5), (2.7, 4.0)] {
            let a = enclosed_solid_angle(&latitude_arc(theta, span, 4096).unwrap()).unwrap();
            let b = enclosed_solid_angle(&latitude_arc(theta, span, 8192).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-8, "{theta} {span}: {}", a - b);
        }
    }

    #[test]
    fn hemisphere_quantisation_on_equator() {
        for k in 1..20 {
            let span = PI + PI * k as f64 / 20.0;
            let gp = geometric_phase_area(&latitude_arc(FRAC_PI_2, span, 2048).unwrap()).unwrap();
            assert!((gp.abs() - PI).abs() < 1e-6);
        }
    }

    #[test]
    fn sign_flips_across_equator() {
        for span in [1.2 * PI, 1.5 * PI, 1.8 * PI] {
            let north = geometric_phase_area(&latitude_arc(FRAC_PI_2 - 0.2, span, 2048).unwrap()).unwrap();
            let south = geometric_phase_area(&latitude_arc(FRAC_PI_2 + 0.2, span, 2048).unwrap()).unwrap();
            assert!(north * south < 0.0, "{span}: {north} {south}");
        }
    }

    #[test]
    fn apex_avoids_boundary_pole() {
        // chord between azimuth 0 and π at θ = 0.5 runs over the north pole
        let t = latitude_arc(0.5, PI, 1024).unwrap();
        let omega = enclosed_solid_angle(&t).unwrap();
        let algebra = geometric_phase(0.5, PI).unwrap();
        assert!(wrap(0.5 * omega - algebra).abs() < 1e-9);
    }
}
