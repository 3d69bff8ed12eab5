//! One-dimensional interference profiles of a split wave packet.
//!
//! The density is a Gaussian envelope modulated by fringes,
//! `n(z) = A·exp[−(z−z_com)²/(2σ²)]·{1 + v·sin[2π(z−z_ref)/λ + Φ]} + c`,
//! with positions in micrometres. Images are per-pixel atom counts; the fit
//! model integrates `n(z)` over each pixel.

mod fit;
mod mc;
mod sample;

pub use fit::{fit_interferogram, FitOptions, FitResult, ParamErrors, Weighting};
pub use mc::{mc_summary, mc_trial, McSummary, TrialOutcome};
pub use sample::{bin_to_image, sample_atoms, BinnedImage};

use core::f64::consts::PI;

use libm::{exp, sin, sqrt};

use crate::{Error, Result};

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Default wave-packet separation in µm.
pub const DEFAULT_SEPARATION_UM: f64 = 7.26;
/// Default time of flight in s.
pub const DEFAULT_TOF_S: f64 = 10e-3;
/// Default envelope width in µm.
pub const DEFAULT_SIGMA_UM: f64 = 12.0;
pub const DEFAULT_PIXEL_UM: f64 = 1.0;
pub const DEFAULT_PIXELS: usize = 128;
pub const DEFAULT_ATOMS: usize = 5000;
/// Mass of ⁸⁷Rb in kg.
pub const RB87_MASS: f64 = 1.443_160_6e-25;

/// Fringe period `λ = h t/(m d)` in µm, for `t` in s, `d` in µm and `mass` in kg.
pub fn fringe_wavelength(t: f64, d: f64, mass: f64) -> Result<f64> {
    for (name, value) in [("t", t), ("d", d), ("mass", mass)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositive { name, value });
        }
    }
    // d in µm → m, result m → µm: the two factors of 1e6 combine to 1e12.
    Ok(PLANCK * t / (mass * d) * 1e12)
}

/// Index of each profile parameter in packed vectors and masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Amplitude = 0,
    ZCom = 1,
    SigmaZ = 2,
    Visibility = 3,
    Wavelength = 4,
    ZRef = 5,
    Phase = 6,
    Background = 7,
}

impl Param {
    pub const ALL: [Param; 8] = [
        Param::Amplitude,
        Param::ZCom,
        Param::SigmaZ,
        Param::Visibility,
        Param::Wavelength,
        Param::ZRef,
        Param::Phase,
        Param::Background,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Amplitude => "amplitude",
            Param::ZCom => "z_com",
            Param::SigmaZ => "sigma_z",
            Param::Visibility => "visibility",
            Param::Wavelength => "wavelength",
            Param::ZRef => "z_ref",
            Param::Phase => "phase",
            Param::Background => "background",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InterferogramParams {
    /// Density scale (per µm).
    pub amplitude: f64,
    /// µm
    pub z_com: f64,
    /// µm
    pub sigma_z: f64,
    pub visibility: f64,
    /// Fringe period, µm.
    pub wavelength: f64,
    /// µm
    pub z_ref: f64,
    /// Interference phase, rad.
    pub phase: f64,
    /// Background density (per µm).
    pub background: f64,
}

impl InterferogramParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_z > 0.0) {
            return Err(Error::NonPositive { name: "sigma_z", value: self.sigma_z });
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::NonPositive { name: "wavelength", value: self.wavelength });
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::OutOfRange { name: "visibility", value: self.visibility });
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::OutOfRange { name: "amplitude", value: self.amplitude });
        }
        for (p, v) in Param::ALL.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(Error::OutOfRange { name: p.name(), value: v });
            }
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.amplitude,
            self.z_com,
            self.sigma_z,
            self.visibility,
            self.wavelength,
            self.z_ref,
            self.phase,
            self.background,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            amplitude: a[0],
            z_com: a[1],
            sigma_z: a[2],
            visibility: a[3],
            wavelength: a[4],
            z_ref: a[5],
            phase: a[6],
            background: a[7],
        }
    }

    /// Default geometry with the amplitude normalised to `atoms` in total.
    pub fn with_defaults(atoms: f64, visibility: f64, phase: f64) -> Self {
        let sigma_z = DEFAULT_SIGMA_UM;
        let wavelength = fringe_wavelength(DEFAULT_TOF_S, DEFAULT_SEPARATION_UM, RB87_MASS)
            .expect("default geometry is positive");
        Self {
            amplitude: atoms / (sigma_z * sqrt(2.0 * PI)),
            z_com: 0.0,
            sigma_z,
            visibility,
            wavelength,
            z_ref: 0.0,
            phase,
            background: 0.0,
        }
    }
}

/// Evaluates the profile at `z`.
pub fn density_profile(p: &InterferogramParams, z: f64) -> f64 {
    let u = (z - p.z_com) / p.sigma_z;
    let envelope = p.amplitude * exp(-0.5 * u * u);
    envelope * (1.0 + p.visibility * sin(2.0 * PI * (z - p.z_ref) / p.wavelength + p.phase)) + p.background
}

/// Uniform pixel row.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraGrid {
    /// µm
    pub pixel_size: f64,
    pub n_pixels: usize,
    /// Left edge of pixel 0, µm.
    pub origin: f64,
}

impl CameraGrid {
    pub const MIN_PIXELS: usize = 16;

    pub fn new(pixel_size: f64, n_pixels: usize, origin: f64) -> Result<Self> {
        if !(pixel_size > 0.0) || !pixel_size.is_finite() {
            return Err(Error::NonPositive { name: "pixel_size", value: pixel_size });
        }
        if n_pixels < Self::MIN_PIXELS {
            return Err(Error::OutOfRange { name: "n_pixels", value: n_pixels as f64 });
        }
        if !origin.is_finite() {
            return Err(Error::OutOfRange { name: "origin", value: origin });
        }
        Ok(Self { pixel_size, n_pixels, origin })
    }

    /// Grid of `n_pixels` centred on `center`.
    pub fn centered(pixel_size: f64, n_pixels: usize, center: f64) -> Result<Self> {
        Self::new(pixel_size, n_pixels, center - 0.5 * pixel_size * n_pixels as f64)
    }

    pub fn span(&self) -> f64 {
        self.pixel_size * self.n_pixels as f64
    }

    pub fn pixel_center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.pixel_size
    }

    pub fn pixel_edges(&self, i: usize) -> (f64, f64) {
        let a = self.origin + i as f64 * self.pixel_size;
        (a, a + self.pixel_size)
    }

    /// Pixel containing `z`, if any.
    pub fn pixel_of(&self, z: f64) -> Option<usize> {
        let x = (z - self.origin) / self.pixel_size;
        if x >= 0.0 && x < self.n_pixels as f64 {
            Some(x as usize)
        } else {
            None
        }
    }

    /// Checks the grid spans at least four envelope widths.
    pub fn check_covers(&self, sigma_z: f64) -> Result<()> {
        if self.span() < 4.0 * sigma_z {
            return Err(Error::OutOfRange { name: "grid_span", value: self.span() });
        }
        Ok(())
    }
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Profile integrated over `[a, b]`, with the gradient in parameter order if requested.
pub(crate) fn integrate_pixel(p: &[f64; 8], a: f64, b: f64, grad: Option<&mut [f64; 8]>) -> f64 {
    let [amp, zc, sig, v, lam, zr, phi, c] = *p;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let k = 2.0 * PI / lam;
    let mut total = 0.0;
    match grad {
        None => {
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let z = mid + half * x;
                let u = (z - zc) / sig;
                let g = exp(-0.5 * u * u);
                total += w * (amp * g * (1.0 + v * sin(k * (z - zr) + phi)) + c);
            }
        }
        Some(d) => {
            *d = [0.0; 8];
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let z = mid + half * x;
                let u = (z - zc) / sig;
                let g = exp(-0.5 * u * u);
                let (s, co) = libm::sincos(k * (z - zr) + phi);
                let m = 1.0 + v * s;
                let ag = amp * g;
                total += w * (ag * m + c);
                d[0] += w * g * m;
                d[1] += w * ag * m * u / sig;
                d[2] += w * ag * m * u * u / sig;
                d[3] += w * ag * s;
                let fringe = ag * v * co;
                d[4] += w * fringe * (-k * (z - zr) / lam);
                d[5] += w * fringe * (-k);
                d[6] += w * fringe;
                d[7] += w;
            }
            d.iter_mut().for_each(|x| *x *= half);
        }
    }
    total * half
}

/// Expected counts in every pixel.
pub fn model_image(p: &InterferogramParams, grid: &CameraGrid) -> alloc::vec::Vec<f64> {
    let arr = p.to_array();
    (0..grid.n_pixels)
        .map(|i| {
            let (a, b) = grid.pixel_edges(i);
            integrate_pixel(&arr, a, b, None)
        })
        .collect()
}

/// Lower bound on the phase error from `atoms` position samples of a fringe
/// of visibility `v`, ignoring the envelope: `[N(1 − √(1 − v²))]^{-1/2}`.
pub fn phase_error_bound(visibility: f64, atoms: f64) -> f64 {
    let v2 = visibility * visibility;
    // 1 − √(1 − v²) without cancellation.
    let info = v2 / (1.0 + sqrt(1.0 - v2));
    if info <= 0.0 {
        return f64::INFINITY;
    }
    1.0 / sqrt(atoms * info)
}
