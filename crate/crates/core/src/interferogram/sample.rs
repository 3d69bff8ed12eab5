use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{density_profile, CameraGrid, InterferogramParams};
use crate::seed;
use crate::{Error, Result};

/// Half-width of the sampling window in envelope widths.
const WINDOW_SIGMAS: f64 = 8.0;
/// Grid points per fringe period (or envelope width, if smaller).
const STEPS_PER_SCALE: f64 = 50.0;

/// Draws `n` independent atom positions from the profile without its background.
///
/// Inverse-CDF sampling on a fine grid; identical seeds give identical output.
pub fn sample_atoms(p: &InterferogramParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let clean = InterferogramParams { background: 0.0, ..*p };
    let scale = p.wavelength.min(p.sigma_z);
    let lo = p.z_com - WINDOW_SIGMAS * p.sigma_z;
    let span = 2.0 * WINDOW_SIGMAS * p.sigma_z;
    let steps = libm::ceil(span / (scale / STEPS_PER_SCALE)).max(1.0) as usize;
    let h = span / steps as f64;

    let mut cdf = vec![0.0; steps + 1];
    let mut prev = density_profile(&clean, lo);
    for i in 1..=steps {
        let cur = density_profile(&clean, lo + i as f64 * h);
        cdf[i] = cdf[i - 1] + 0.5 * (prev + cur) * h;
        prev = cur;
    }
    let total = cdf[steps];
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NonNormalizable);
    }

    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.gen::<f64>() * total;
        // First index with cdf >= target.
        let j = cdf.partition_point(|&c| c < target).clamp(1, steps);
        let (c0, c1) = (cdf[j - 1], cdf[j]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        out.push(lo + (j as f64 - 1.0 + frac) * h);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinnedImage {
    pub counts: Vec<u64>,
    /// Atoms that fell outside the grid.
    pub out_of_range: usize,
}

impl BinnedImage {
    pub fn to_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Histograms positions onto the camera grid.
pub fn bin_to_image(positions: &[f64], grid: &CameraGrid) -> BinnedImage {
    let mut counts = vec![0u64; grid.n_pixels];
    let mut out_of_range = 0;
    for &z in positions {
        match grid.pixel_of(z) {
            Some(i) => counts[i] += 1,
            None => out_of_range += 1,
        }
    }
    BinnedImage { counts, out_of_range }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::sqrt;

    #[test]
    fn gaussian_mean() {
        let p = InterferogramParams { z_com: 3.0, ..InterferogramParams::with_defaults(5000.0, 0.0, 0.0) };
        let z = sample_atoms(&p, 5000, 11).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        assert!((mean - 3.0).abs() < 3.0 * p.sigma_z / sqrt(5000.0));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let p = InterferogramParams::with_defaults(5000.0, 0.5, 1.0);
        assert_eq!(sample_atoms(&p, 100, 5).unwrap(), sample_atoms(&p, 100, 5).unwrap());
        assert_ne!(sample_atoms(&p, 100, 5).unwrap(), sample_atoms(&p, 100, 6).unwrap());
    }

    #[test]
    fn background_is_ignored() {
        let p = InterferogramParams::with_defaults(5000.0, 0.5, 1.0);
        let q = InterferogramParams { background: 3.0, ..p };
        assert_eq!(sample_atoms(&p, 50, 1).unwrap(), sample_atoms(&q, 50, 1).unwrap());
    }

    #[test]
    fn zero_amplitude_rejected() {
        let p = InterferogramParams { amplitude: 0.0, ..InterferogramParams::with_defaults(1.0, 0.5, 0.0) };
        assert_eq!(sample_atoms(&p, 10, 1), Err(Error::NonNormalizable));
    }

    #[test]
    fn binning_examples() {
        let g = CameraGrid::centered(1.0, 32, 0.0).unwrap();
        let empty = bin_to_image(&[], &g);
        assert!(empty.counts.iter().all(|&c| c == 0));
        let one = bin_to_image(&[0.0], &g);
        assert_eq!(one.counts[16], 1);
        assert_eq!(one.total(), 1);
        let out = bin_to_image(&[100.0, -0.2], &g);
        assert_eq!(out.out_of_range, 1);
        assert_eq!(out.total(), 1);
    }

    #[test]
    fn histogram_follows_profile() {
        let p = InterferogramParams::with_defaults(20000.0, 0.8, 0.5);
        let g = CameraGrid::centered(1.0, 128, 0.0).unwrap();
        let img = bin_to_image(&sample_atoms(&p, 20000, 3).unwrap(), &g);
        let model = super::super::model_image(&p, &g);
        let chi2: f64 = img
            .counts
            .iter()
            .zip(&model)
            .filter(|(_, &m)| m > 5.0)
            .map(|(&c, &m)| (c as f64 - m).powi(2) / m)
            .sum();
        let dof = model.iter().filter(|&&m| m > 5.0).count() as f64;
        assert!(chi2 / dof < 1.5, "reduced chi2 {}", chi2 / dof);
    }
}
