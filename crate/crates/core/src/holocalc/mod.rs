//! Holomorphic functional calculus on characteristic operators.

pub mod bank;
pub mod contour;
pub mod functions;
pub mod spectral;

pub use bank::{bank_matches_contour, resolvent, BankAtom, FilterBankSpec, PrecomputedBank, DEFAULT_GAMMA, DEFAULT_POLE};
pub use contour::{contour_apply, contour_apply_real, spectral_radius_bound, Contour, DEFAULT_NODES};
pub use functions::{Exp, Polynomial, ResolventPower, ScalarFunction};
pub use spectral::{spectral_mapping_check, spectral_response, SpectralResponseOracle};

use crate::cmat::C64;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HoloError {
    #[error("resolvent is singular at quadrature node z = {z}; the contour passes through the spectrum")]
    SingularResolvent { z: C64 },
    #[error("pole y = {pole} lies on the spectrum; T - y*Id cannot be factorized")]
    PoleOnSpectrum { pole: C64 },
    #[error("pole y = {pole} lies inside the contour")]
    PoleInsideContour { pole: C64 },
    #[error("contour of radius {radius} does not enclose the spectrum (extent {spectral_extent})")]
    ContourDoesNotEnclose { spectral_extent: f64, radius: f64 },
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("ill-conditioned spectrum: {0}")]
    IllConditionedSpectrum(String),
    #[error("spectral oracle is limited to N <= {limit}, got N = {n}")]
    OracleTooLarge { n: usize, limit: usize },
    #[error("invalid filter bank: {0}")]
    InvalidBankSpec(String),
    #[error("operator must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Eigenvalues of a dense complex matrix.
///
/// Triangular input returns its diagonal verbatim, so exact spectra such as
/// that of a directed path survive without roundoff; everything else goes
/// through a complex Schur decomposition.
pub fn eigenvalues(t: &DMatrix<C64>) -> Vec<C64> {
    let n = t.nrows();
    let zero = C64::new(0.0, 0.0);
    let upper = (0..n).all(|i| (0..i).all(|j| t[(i, j)] == zero));
    let lower = (0..n).all(|i| (i + 1..n).all(|j| t[(i, j)] == zero));
    if upper || lower {
        return (0..n).map(|i| t[(i, i)]).collect();
    }
    let (_, tri) = t.clone().schur().unpack();
    (0..n).map(|i| tri[(i, i)]).collect()
}

/// Eigenvalues of a real matrix.
pub fn eigenvalues_real(t: &DMatrix<f64>) -> Vec<C64> {
    eigenvalues(&crate::cmat::to_complex_real(t))
}
