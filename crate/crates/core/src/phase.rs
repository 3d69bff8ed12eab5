//! Branch handling for angles.

use core::f64::consts::{PI, TAU};

/// Wraps an angle into `(-π, π]`.
pub fn wrap(angle: f64) -> f64 {
    let w = angle - TAU * libm::floor((angle + PI) / TAU);
    // floor maps the upper edge to -π; move it to the closed side.
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Returns the member of `angle + 2πk` closest to `reference`.
pub fn nearest_branch(angle: f64, reference: f64) -> f64 {
    reference + wrap(angle - reference)
}

/// Unwraps a sequence in place by nearest-branch continuation from the first sample.
pub fn unwrap_in_place(values: &mut [f64]) {
    for i in 1..values.len() {
        values[i] = nearest_branch(values[i], values[i - 1]);
    }
}

/// Circular mean of a set of angles, in `(-π, π]`. Zero for an empty slice.
pub fn circular_mean(angles: &[f64]) -> f64 {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), &a| (s + libm::sin(a), c + libm::cos(a)));
    libm::atan2(s, c)
}
