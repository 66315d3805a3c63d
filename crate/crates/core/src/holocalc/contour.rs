//! Circular contours and trapezoidal evaluation of the Cauchy operator integral
//!
//! ```text
//! g(T) = 1/(2πi) ∮ g(z) (z·Id − T)⁻¹ dz
//! ```
//!
//! On `z(θ) = c + r·e^{iθ}` the trapezoidal rule with `M` nodes reads
//! `g(T) ≈ (1/M) Σ_k g(z_k) (z_k·Id − T)⁻¹ · r·e^{iθ_k}`, which converges
//! geometrically for integrands analytic in an annulus around the circle.

use super::{eigenvalues, HoloError};
use crate::cmat::C64;
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Minimum number of quadrature nodes accepted by [`contour_apply`].
pub const MIN_NODES: usize = 16;
pub const DEFAULT_NODES: usize = 256;
/// Largest operator for which [`contour_apply`] verifies enclosure by an
/// eigensolve.
pub const ENCLOSURE_CHECK_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub center: C64,
    pub radius: f64,
    pub nodes: usize,
}

impl Contour {
    pub fn new(center: C64, radius: f64, nodes: usize) -> Result<Self, HoloError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(HoloError::InvalidContour(format!("radius must be positive, got {radius}")));
        }
        if nodes < MIN_NODES {
            return Err(HoloError::InvalidContour(format!(
                "need at least {MIN_NODES} quadrature nodes, got {nodes}"
            )));
        }
        Ok(Self {
            center,
            radius,
            nodes,
        })
    }

    pub fn circle(radius: f64, nodes: usize) -> Result<Self, HoloError> {
        Self::new(C64::new(0.0, 0.0), radius, nodes)
    }

    /// Circle about the origin of radius `1.1 · min(‖T‖_∞, ‖T‖_1)`, which
    /// always encloses the spectrum. The zero operator gets radius one.
    pub fn enclosing(t: &DMatrix<C64>) -> Self {
        let bound = spectral_radius_bound(t);
        let radius = if bound > 0.0 { 1.1 * bound } else { 1.0 };
        Self {
            center: C64::new(0.0, 0.0),
            radius,
            nodes: DEFAULT_NODES,
        }
    }

    pub fn with_nodes(self, nodes: usize) -> Result<Self, HoloError> {
        Self::new(self.center, self.radius, nodes)
    }

    pub fn encloses(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Quadrature nodes `z_k` and the weights `r·e^{iθ_k}/M` that multiply
    /// `g(z_k)(z_k − T)⁻¹`.
    pub fn quadrature(&self) -> Vec<(C64, C64)> {
        let m = self.nodes as f64;
        (0..self.nodes)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / m;
                let e = C64::from_polar(1.0, theta);
                (self.center + e * self.radius, e * (self.radius / m))
            })
            .collect()
    }

    /// Errors if some eigenvalue of `t` lies on or outside the circle.
    pub fn check_encloses(&self, t: &DMatrix<C64>) -> Result<(), HoloError> {
        let extent = eigenvalues(t)
            .into_iter()
            .map(|l| (l - self.center).norm())
            .fold(0.0, f64::max);
        if extent >= self.radius {
            return Err(HoloError::ContourDoesNotEnclose {
                spectral_extent: extent,
                radius: self.radius,
            });
        }
        Ok(())
    }
}

/// `min(‖T‖_∞, ‖T‖_1)`, an upper bound on the spectral radius.
pub fn spectral_radius_bound(t: &DMatrix<C64>) -> f64 {
    let inf = t
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let one = t
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    inf.min(one)
}

/// Smallest-to-largest pivot ratio below which a factorization counts as
/// singular.
pub(crate) const PIVOT_RATIO_FLOOR: f64 = 1e-13;

/// `A⁻¹` via LU, or `None` when `A` is singular to working precision.
pub(crate) fn checked_inverse(a: DMatrix<C64>) -> Option<DMatrix<C64>> {
    let n = a.nrows();
    let lu = a.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if n > 0 && (hi == 0.0 || lo / hi < PIVOT_RATIO_FLOOR) {
        return None;
    }
    let inv = lu.try_inverse()?;
    inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(inv)
}

/// Evaluates `g(T)` by trapezoidal quadrature of the Cauchy integral.
///
/// The per-node solves run in parallel; the sum is taken in node order so
/// the result does not depend on the thread count.
pub fn contour_apply<F>(g: F, t: &DMatrix<C64>, contour: &Contour) -> Result<DMatrix<C64>, HoloError>
where
    F: Fn(C64) -> C64 + Sync,
{
    let n = t.nrows();
    if t.ncols() != n {
        return Err(HoloError::NotSquare {
            rows: n,
            cols: t.ncols(),
        });
    }
    if contour.nodes < MIN_NODES {
        return Err(HoloError::InvalidContour(format!(
            "need at least {MIN_NODES} quadrature nodes, got {}",
            contour.nodes
        )));
    }
    if n <= ENCLOSURE_CHECK_LIMIT {
        contour.check_encloses(t)?;
    }
    let terms: Vec<DMatrix<C64>> = contour
        .quadrature()
        .into_par_iter()
        .map(|(z, w)| {
            let mut shifted = -t.clone();
            for i in 0..n {
                shifted[(i, i)] += z;
            }
            let inv = checked_inverse(shifted).ok_or(HoloError::SingularResolvent { z })?;
            Ok(inv * (g(z) * w))
        })
        .collect::<Result<_, HoloError>>()?;
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for term in &terms {
        acc += term;
    }
    Ok(acc)
}

/// Real-operator convenience wrapper around [`contour_apply`].
pub fn contour_apply_real<F>(g: F, t: &DMatrix<f64>, contour: &Contour) -> Result<DMatrix<C64>, HoloError>
where
    F: Fn(C64) -> C64 + Sync,
{
    contour_apply(g, &crate::cmat::to_complex_real(t), contour)
}
