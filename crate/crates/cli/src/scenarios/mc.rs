use clockphase_core::interferogram::{mc_summary, mc_trial, CameraGrid, FitOptions, InterferogramParams, McSummary};
use rayon::prelude::*;

use crate::error::AppResult;

/// Parallel Monte Carlo estimate of the fitted-phase error; trial `i` uses
/// the `i`-th split of `seed`, so results do not depend on thread count.
pub fn mc_fit_error(
    params: &InterferogramParams,
    atoms: usize,
    trials: usize,
    grid: &CameraGrid,
    options: &FitOptions,
    seed: u64,
) -> AppResult<McSummary> {
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| mc_trial(params, atoms, grid, options, seed, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mc_summary(&outcomes)?)
}
