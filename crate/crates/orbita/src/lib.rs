//! Quantum mechanics on the circle.
//!
//! The crate models a planar rotator through the unitary exponential-of-angle
//! operator `E` rather than a bare angle operator. It provides:
//!
//! * [`circle`] — momentum/angle wavefunctions, the discrete Fourier pair,
//!   circular moments and uncertainty reports, covariant POVM smoothing,
//!   and phase-space shifts;
//! * [`mathieu`] — the constrained minimum-uncertainty eigenproblem, whose
//!   solutions are even angular Mathieu functions, with small- and large-`q`
//!   asymptotics;
//! * [`states`] — closed-form state families (wedge, cosine, von Mises,
//!   truncated and wrapped Gaussians, coherent states) and eigenrelation
//!   verifiers;
//! * [`optics`] — a Fourier-optics simulation of an orbital-angular-momentum
//!   spectrum measurement: mask decomposition, Fresnel propagation, spiral
//!   phase analyzer, apertured detection, response matrices;
//! * [`analysis`] — crosstalk deconvolution, parametric spectrum fits and
//!   bootstrap error bars, and the end-to-end synthetic pipeline.

pub mod analysis;
pub mod circle;
pub mod mathieu;
pub mod optics;
pub mod special;
pub mod states;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid of {got} points cannot resolve truncation M = {truncation} (need at least {need})")]
    GridTooSmall {
        got: usize,
        truncation: i32,
        need: usize,
    },
    #[error("state is not normalized (defect {defect:.3e})")]
    NotNormalized { defect: f64 },
    #[error("momentum shift by {shift} would move support outside [-{truncation}, {truncation}]")]
    SupportOverflow { shift: i32, truncation: i32 },
    #[error("invalid POVM kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("momentum-space and angle-space routes disagree on {what} (defect {defect:.3e})")]
    CrossCheck { what: &'static str, defect: f64 },
    #[error("solver did not converge: {0}")]
    NonConverged(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("deconvolution failed: {0}")]
    Deconvolution(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
