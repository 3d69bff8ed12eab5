/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Visibility vanishes (`θ = π/2`, `φ ≡ π`): the interference phase has no value.
    #[error("interference phase undefined: visibility vanishes at theta={theta}, phi={phi}")]
    UndefinedPhase { theta: f64, phi: f64 },
    #[error("parameter `{name}` out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("latitude arc at a pole (theta={theta}) has no extent")]
    DegeneratePole { theta: f64 },
    #[error("geodesic closure undefined: endpoints are antipodal")]
    AntipodalEndpoints,
    #[error("invalid Bloch trajectory: {0}")]
    InvalidTrajectory(&'static str),
    #[error("density profile cannot be normalised")]
    NonNormalizable,
    #[error("image is empty or flat; nothing to fit")]
    DegenerateImage,
    #[error("image has {got} pixels, grid expects {expected}")]
    ImageShape { expected: usize, got: usize },
    #[error("phase slope is zero; sensitivity undefined")]
    ZeroSlope,
    #[error("two-point sensitivity needs distinct abscissae")]
    CoincidentAbscissae,
    #[error("every Monte Carlo trial failed to converge")]
    AllTrialsFailed,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
