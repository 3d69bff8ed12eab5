use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use libm::{atan2, sqrt};

use super::{integrate_pixel, CameraGrid, InterferogramParams, Param};
use crate::linalg::{cholesky, cholesky_solve, spd_inverse, Matrix};
use crate::phase::wrap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Weighting {
    #[default]
    Uniform,
    /// Residuals weighted by `1/max(counts, 1)`.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitOptions {
    /// Fringe period used when no initial guess is given, µm.
    pub wavelength: f64,
    /// µm
    pub z_ref: f64,
    /// Parameters held at their initial value, indexed by [`Param`].
    pub fixed: [bool; 8],
    pub weighting: Weighting,
    pub max_iterations: usize,
}

impl FitOptions {
    pub fn new(wavelength: f64) -> Self {
        let mut fixed = [false; 8];
        fixed[Param::Wavelength as usize] = true;
        fixed[Param::ZRef as usize] = true;
        Self { wavelength, z_ref: 0.0, fixed, weighting: Weighting::Uniform, max_iterations: 200 }
    }

    pub fn with_free_wavelength(mut self) -> Self {
        self.fixed[Param::Wavelength as usize] = false;
        self
    }
}

/// One-sigma uncertainties; zero for fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamErrors(pub InterferogramParams);

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub params: InterferogramParams,
    /// Present only for converged fits.
    pub param_errors: Option<ParamErrors>,
    /// `Σ r²/max(model, 1)` over the degrees of freedom.
    pub chi2: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn phase_error(&self) -> Option<f64> {
        self.param_errors.map(|e| e.0.phase)
    }
}

struct Problem<'a> {
    y: &'a [f64],
    w: Vec<f64>,
    grid: &'a CameraGrid,
    free: Vec<usize>,
}

struct Outcome {
    p: [f64; 8],
    cost: f64,
    converged: bool,
    iterations: usize,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64; 8], r: &mut [f64], jac: Option<&mut Vec<f64>>) {
        let m = self.free.len();
        match jac {
            None => {
                for (i, ri) in r.iter_mut().enumerate() {
                    let (a, b) = self.grid.pixel_edges(i);
                    *ri = self.y[i] - integrate_pixel(p, a, b, None);
                }
            }
            Some(j) => {
                let mut g = [0.0; 8];
                for (i, ri) in r.iter_mut().enumerate() {
                    let (a, b) = self.grid.pixel_edges(i);
                    *ri = self.y[i] - integrate_pixel(p, a, b, Some(&mut g));
                    for (c, &k) in self.free.iter().enumerate() {
                        j[i * m + c] = g[k];
                    }
                }
            }
        }
    }

    fn cost(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.w).map(|(r, w)| w * r * r).sum()
    }

    /// Normal matrix `JᵀWJ` and gradient `JᵀWr`.
    fn normal(&self, r: &[f64], j: &[f64]) -> (Matrix, Vec<f64>) {
        let m = self.free.len();
        let mut a = Matrix::zeros(m);
        let mut g = vec![0.0; m];
        for (i, (&ri, &wi)) in r.iter().zip(&self.w).enumerate() {
            let row = &j[i * m..(i + 1) * m];
            for c in 0..m {
                g[c] += wi * row[c] * ri;
                for d in 0..=c {
                    a.add(c, d, wi * row[c] * row[d]);
                }
            }
        }
        for c in 0..m {
            for d in 0..c {
                a.set(d, c, a.get(c, d));
            }
        }
        (a, g)
    }

    fn admissible(p: &[f64; 8]) -> bool {
        p.iter().all(|v| v.is_finite()) && p[Param::SigmaZ as usize] > 0.0 && p[Param::Wavelength as usize] > 0.0
    }

    fn levenberg_marquardt(&self, start: [f64; 8], max_iterations: usize) -> Outcome {
        let n = self.y.len();
        let m = self.free.len();
        let scale: f64 = self.y.iter().zip(&self.w).map(|(y, w)| w * y * y).sum::<f64>().max(f64::MIN_POSITIVE);
        let mut p = start;
        let mut r = vec![0.0; n];
        let mut j = vec![0.0; n * m];
        let mut trial_r = vec![0.0; n];
        self.residuals(&p, &mut r, Some(&mut j));
        let mut cost = self.cost(&r);
        let mut mu = 1e-3;
        let mut iterations = 0;
        let mut converged = false;

        while iterations < max_iterations {
            iterations += 1;
            if cost <= 1e-28 * scale {
                converged = true;
                break;
            }
            let (a, g) = self.normal(&r, &j);
            let mut accepted = false;
            while mu < 1e16 {
                let mut damped = a.clone();
                for c in 0..m {
                    damped.add(c, c, mu * a.get(c, c).max(1e-300));
                }
                let Some(l) = cholesky(&damped) else {
                    mu *= 4.0;
                    continue;
                };
                let step = cholesky_solve(&l, &g);
                let mut trial = p;
                for (c, &k) in self.free.iter().enumerate() {
                    trial[k] += step[c];
                }
                if !Self::admissible(&trial) {
                    mu *= 4.0;
                    continue;
                }
                self.residuals(&trial, &mut trial_r, None);
                let trial_cost = self.cost(&trial_r);
                if trial_cost < cost {
                    let small_step = self
                        .free
                        .iter()
                        .enumerate()
                        .all(|(c, &k)| step[c].abs() <= 1e-10 * (p[k].abs() + 1e-6));
                    let small_gain = cost - trial_cost <= 1e-12 * cost;
                    p = trial;
                    cost = trial_cost;
                    mu = (mu / 3.0).max(1e-12);
                    accepted = true;
                    if small_step || small_gain {
                        converged = true;
                    }
                    break;
                }
                mu *= 4.0;
            }
            if !accepted {
                // No descent direction left: at a numerical minimum.
                converged = true;
            }
            if converged {
                break;
            }
            self.residuals(&p, &mut r, Some(&mut j));
        }
        Outcome { p, cost, converged, iterations }
    }
}

/// Moment estimates of envelope and background plus a demodulated fringe.
fn initial_guess(y: &[f64], grid: &CameraGrid, wavelength: f64, z_ref: f64) -> Result<([f64; 8], f64)> {
    let n = y.len();
    let edge = (n / 16).max(2);
    let background = (y[..edge].iter().sum::<f64>() + y[n - edge..].iter().sum::<f64>()) / (2 * edge) as f64;
    let signal: Vec<f64> = y.iter().map(|&c| (c - background).max(0.0)).collect();
    let total: f64 = signal.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateImage);
    }
    let zc = (0..n).map(|i| grid.pixel_center(i) * signal[i]).sum::<f64>() / total;
    let var = (0..n).map(|i| { let d = grid.pixel_center(i) - zc; d * d * signal[i] }).sum::<f64>() / total;
    let sigma = sqrt(var).max(grid.pixel_size);
    let k = 2.0 * PI / wavelength;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, &s) in signal.iter().enumerate() {
        let (sn, cs) = libm::sincos(k * (grid.pixel_center(i) - z_ref));
        re += s * cs;
        im += s * sn;
    }
    // Σ s·e^{ikx} ≈ total·v·(i/2)·e^{−iΦ}, reduced by pixel averaging.
    let x = PI * grid.pixel_size / wavelength;
    let pixel_gain = if x > 0.0 { libm::sin(x) / x } else { 1.0 };
    let v = (2.0 * libm::hypot(re, im) / (total * pixel_gain)).clamp(0.02, 1.0);
    let phase = atan2(re, im);
    let amplitude = total / (sigma * sqrt(2.0 * PI));
    Ok((
        [amplitude, zc, sigma, v, wavelength, z_ref, phase, background / grid.pixel_size],
        phase,
    ))
}

/// Fits the pixel-integrated profile to an image by damped least squares.
///
/// With no initial guess the fit restarts from four fringe phases and the
/// demodulated estimate and keeps the lowest cost. The returned visibility is
/// non-negative and the phase wrapped to `(−π, π]`.
pub fn fit_interferogram(
    image: &[f64],
    grid: &CameraGrid,
    init: Option<&InterferogramParams>,
    options: &FitOptions,
) -> Result<FitResult> {
    if image.len() != grid.n_pixels {
        return Err(Error::ImageShape { expected: grid.n_pixels, got: image.len() });
    }
    if image.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateImage);
    }
    let (lo, hi) = image.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateImage);
    }
    let free: Vec<usize> = (0..8).filter(|&k| !options.fixed[k]).collect();
    if free.is_empty() || image.len() <= free.len() {
        return Err(Error::DegenerateImage);
    }
    let w = match options.weighting {
        Weighting::Uniform => vec![1.0; image.len()],
        Weighting::Poisson => image.iter().map(|&c| 1.0 / c.max(1.0)).collect(),
    };
    let problem = Problem { y: image, w, grid, free };

    let starts: Vec<[f64; 8]> = match init {
        Some(p) => vec![p.to_array()],
        None => {
            let (base, demod) = initial_guess(image, grid, options.wavelength, options.z_ref)?;
            let mut s = vec![base];
            for q in 0..4 {
                let mut b = base;
                b[Param::Phase as usize] = q as f64 * FRAC_PI_2;
                if wrap(b[Param::Phase as usize] - demod).abs() > 1e-9 {
                    s.push(b);
                }
            }
            s
        }
    };

    let mut best: Option<Outcome> = None;
    for start in starts {
        let out = problem.levenberg_marquardt(start, options.max_iterations);
        let better = match &best {
            None => true,
            Some(b) => (out.converged && !b.converged) || (out.converged == b.converged && out.cost < b.cost),
        };
        if better {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let mut p = best.p;

    let n = image.len();
    let m = problem.free.len();
    let dof = (n - m) as f64;
    let mut r = vec![0.0; n];
    let mut j = vec![0.0; n * m];
    problem.residuals(&p, &mut r, Some(&mut j));
    let chi2 = (0..n)
        .map(|i| {
            let model = image[i] - r[i];
            r[i] * r[i] / model.max(1.0)
        })
        .sum::<f64>()
        / dof;

    let param_errors = if best.converged {
        let (a, _) = problem.normal(&r, &j);
        spd_inverse(&a).map(|inv| {
            // Sandwich covariance A⁻¹ (Σ wᵢ² rᵢ² JᵢJᵢᵀ) A⁻¹: per-pixel residual
            // variance, since counting noise is not uniform across the image.
            let mut meat = Matrix::zeros(m);
            for i in 0..n {
                let wr2 = { let t = problem.w[i] * r[i]; t * t };
                let row = &j[i * m..(i + 1) * m];
                for c in 0..m {
                    for d in 0..m {
                        meat.add(c, d, wr2 * row[c] * row[d]);
                    }
                }
            }
            let small_sample = n as f64 / dof;
            let mut e = [0.0; 8];
            for (c, &k) in problem.free.iter().enumerate() {
                let mut var = 0.0;
                for a1 in 0..m {
                    for b1 in 0..m {
                        var += inv.get(c, a1) * meat.get(a1, b1) * inv.get(b1, c);
                    }
                }
                e[k] = sqrt((var * small_sample).max(0.0));
            }
            ParamErrors(InterferogramParams::from_array(e))
        })
    } else {
        None
    };

    if p[Param::Visibility as usize] < 0.0 {
        p[Param::Visibility as usize] = -p[Param::Visibility as usize];
        p[Param::Phase as usize] += PI;
    }
    p[Param::Phase as usize] = wrap(p[Param::Phase as usize]);

    Ok(FitResult {
        params: InterferogramParams::from_array(p),
        param_errors,
        chi2,
        converged: best.converged && param_errors.is_some(),
        iterations: best.iterations,
    })
}
