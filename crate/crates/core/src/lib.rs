//! Forward and inverse spectral solver for 2×2 Dirac systems on `(0, π)` with
//! interior regular singularities.

pub mod asymptotics;
pub mod contour;
pub mod error;
pub mod forward;
pub mod frobenius;
pub mod inverse;
pub mod io;
pub mod linalg;
pub mod mat2;
pub mod ode;
pub mod potential;
pub mod scalar;
pub mod types;

pub use error::{Error, Result};

/// `f64` instantiations of the generic solver types.
pub type ProblemSpec = types::ProblemSpec<f64>;
pub type Singularity = types::Singularity<f64>;
pub type Potential = potential::Potential<f64>;
pub type SpectralData = types::SpectralData<f64>;
pub type SpectralDatum = types::SpectralDatum<f64>;
pub type ForwardSolver = forward::ForwardSolver<f64>;
pub type ForwardOptions = forward::ForwardOptions<f64>;
pub type EigenSearch = forward::EigenSearch<f64>;
pub type Eigenvalue = forward::Eigenvalue<f64>;
pub type PairedData = inverse::PairedData<f64>;
pub type ReconstructionOptions = inverse::ReconstructionOptions<f64>;
pub type ReconstructionResult = inverse::ReconstructionResult<f64>;
pub type Mat2 = mat2::Mat2<f64>;
pub type Vec2 = mat2::Vec2<f64>;
pub type Complex64 = num_complex::Complex<f64>;
