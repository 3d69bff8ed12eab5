use alloc::vec::Vec;

use libm::sqrt;

use super::{bin_to_image, fit_interferogram, sample_atoms, CameraGrid, FitOptions, InterferogramParams};
use crate::phase::wrap;
use crate::seed;
use crate::{Error, Result};

/// Minimum trial count for a summary.
pub const MIN_TRIALS: usize = 30;

/// Signed phase error and reported uncertainty of one converged trial.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialOutcome {
    pub phase_error: f64,
    pub reported_error: f64,
    pub visibility: f64,
}

/// Samples, bins and fits one image; trial `index` draws from its own stream.
///
/// Returns `Ok(None)` when the fit fails or does not converge.
pub fn mc_trial(
    p: &InterferogramParams,
    atoms: usize,
    grid: &CameraGrid,
    options: &FitOptions,
    master_seed: u64,
    index: u64,
) -> Result<Option<TrialOutcome>> {
    let positions = sample_atoms(p, atoms, seed::split(master_seed, index))?;
    let image = bin_to_image(&positions, grid).to_f64();
    let opts = FitOptions { wavelength: p.wavelength, z_ref: p.z_ref, ..*options };
    Ok(match fit_interferogram(&image, grid, None, &opts) {
        Ok(fit) if fit.converged => fit.phase_error().map(|reported_error| TrialOutcome {
            phase_error: wrap(fit.params.phase - p.phase),
            reported_error,
            visibility: fit.params.visibility,
        }),
        _ => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McSummary {
    pub trials: usize,
    /// Trials excluded because the fit failed.
    pub failed: usize,
    /// Mean of `|Φ_fit − Φ|`.
    pub mean_abs_error: f64,
    /// Standard deviation of the signed error.
    pub std_error: f64,
    /// Mean of the covariance-based phase error.
    pub mean_reported_error: f64,
    pub mean_visibility: f64,
}

/// Aggregates trial outcomes in order.
pub fn mc_summary(outcomes: &[Option<TrialOutcome>]) -> Result<McSummary> {
    if outcomes.len() < MIN_TRIALS {
        return Err(Error::OutOfRange { name: "trials", value: outcomes.len() as f64 });
    }
    let ok: Vec<&TrialOutcome> = outcomes.iter().flatten().collect();
    if ok.len() < 2 {
        return Err(Error::AllTrialsFailed);
    }
    let n = ok.len() as f64;
    let mean = ok.iter().map(|t| t.phase_error).sum::<f64>() / n;
    let var = ok.iter().map(|t| { let d = t.phase_error - mean; d * d }).sum::<f64>() / (n - 1.0);
    Ok(McSummary {
        trials: outcomes.len(),
        failed: outcomes.len() - ok.len(),
        mean_abs_error: ok.iter().map(|t| t.phase_error.abs()).sum::<f64>() / n,
        std_error: sqrt(var),
        mean_reported_error: ok.iter().map(|t| t.reported_error).sum::<f64>() / n,
        mean_visibility: ok.iter().map(|t| t.visibility).sum::<f64>() / n,
    })
}
