//! Spectral response through generalized eigenspaces.
//!
//! For every eigenvalue `λ` with algebraic multiplicity `m_λ` and spectral
//! projection `P_λ`,
//!
//! ```text
//! g(T) = Σ_λ Σ_{n < m_λ} g⁽ⁿ⁾(λ)/n! · (T − λ·Id)ⁿ · P_λ
//! ```
//!
//! The projections come from null spaces of `(T − λ·Id)^{m_λ}`. Computing
//! Jordan structure in floating point is unstable, so this is a test oracle
//! for small, well-separated spectra and refuses anything else.

use super::contour::checked_inverse;
use super::functions::{Polynomial, ScalarFunction};
use super::{eigenvalues, HoloError};
use crate::cmat::C64;
use nalgebra::DMatrix;

/// Largest operator the oracle accepts.
pub const ORACLE_MAX_N: usize = 50;
/// Clustering tolerances tried in order until the projections validate.
const CLUSTER_TOLERANCES: [f64; 4] = [1e-6, 1e-5, 1e-4, 1e-3];
/// Relative tolerance for the projection identities.
const PROJECTION_TOL: f64 = 1e-7;
/// Tolerance for the multiset comparison in [`spectral_mapping_check`].
pub const SPECTRAL_MAPPING_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SpectralResponseOracle {
    t: DMatrix<C64>,
    eigenvalues: Vec<C64>,
    multiplicities: Vec<usize>,
    projections: Vec<DMatrix<C64>>,
    cluster_tolerance: f64,
}

impl SpectralResponseOracle {
    pub fn new(t: &DMatrix<C64>) -> Result<Self, HoloError> {
        let n = t.nrows();
        if t.ncols() != n {
            return Err(HoloError::NotSquare { rows: n, cols: t.ncols() });
        }
        if n > ORACLE_MAX_N {
            return Err(HoloError::OracleTooLarge { n, limit: ORACLE_MAX_N });
        }
        let raw = eigenvalues(t);
        let mut last_reason = String::from("no clustering attempted");
        for tol in CLUSTER_TOLERANCES {
            let clusters = cluster(&raw, tol);
            if let Some(reason) = ambiguous(&clusters, tol) {
                last_reason = reason;
                continue;
            }
            match build(t, &clusters) {
                Ok((eigenvalues, multiplicities, projections)) => {
                    let oracle = Self {
                        t: t.clone(),
                        eigenvalues,
                        multiplicities,
                        projections,
                        cluster_tolerance: tol,
                    };
                    match oracle.validate() {
                        Ok(()) => return Ok(oracle),
                        Err(reason) => last_reason = reason,
                    }
                }
                Err(reason) => last_reason = reason,
            }
        }
        Err(HoloError::IllConditionedSpectrum(last_reason))
    }

    pub fn from_real(t: &DMatrix<f64>) -> Result<Self, HoloError> {
        Self::new(&crate::cmat::to_complex_real(t))
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn projections(&self) -> &[DMatrix<C64>] {
        &self.projections
    }

    /// Clustering tolerance that produced a consistent decomposition.
    pub fn cluster_tolerance(&self) -> f64 {
        self.cluster_tolerance
    }

    /// `(T − λ·Id)·P_λ` for the eigenvalue at `index`.
    pub fn nilpotent_part(&self, index: usize) -> DMatrix<C64> {
        shifted(&self.t, self.eigenvalues[index]) * &self.projections[index]
    }

    pub fn apply(&self, g: &dyn ScalarFunction) -> DMatrix<C64> {
        let n = self.t.nrows();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for ((&lambda, &m), p) in self.eigenvalues.iter().zip(&self.multiplicities).zip(&self.projections) {
            let nil = shifted(&self.t, lambda) * p;
            let mut term = p.clone();
            let mut factorial = 1.0;
            for order in 0..m {
                if order > 0 {
                    term = &nil * &term;
                    factorial *= order as f64;
                }
                out += &term * (g.derivative(order, lambda) / factorial);
            }
        }
        out
    }

    fn validate(&self) -> Result<(), String> {
        let n = self.t.nrows();
        let scale = self.t.norm().max(1.0);
        let mut sum = DMatrix::<C64>::zeros(n, n);
        for (i, p) in self.projections.iter().enumerate() {
            let pn = p.norm().max(1.0);
            if (p * p - p).norm() > PROJECTION_TOL * pn * pn {
                return Err(format!("projection {i} is not idempotent"));
            }
            if (p * &self.t - &self.t * p).norm() > PROJECTION_TOL * pn * scale {
                return Err(format!("projection {i} does not commute with T"));
            }
            let nil = self.nilpotent_part(i);
            let power = (1..self.multiplicities[i]).fold(nil.clone(), |acc, _| &acc * &nil);
            if power.norm() > PROJECTION_TOL * pn * scale.powi(self.multiplicities[i] as i32) {
                return Err(format!("nilpotent part {i} does not vanish at its multiplicity"));
            }
            sum += p;
        }
        let eye = DMatrix::<C64>::identity(n, n);
        if (sum - eye).norm() > PROJECTION_TOL * (n as f64).sqrt().max(1.0) {
            return Err("projections do not resolve the identity".into());
        }
        Ok(())
    }
}

fn shifted(t: &DMatrix<C64>, lambda: C64) -> DMatrix<C64> {
    let mut s = t.clone();
    for i in 0..s.nrows() {
        s[(i, i)] -= lambda;
    }
    s
}

/// Single-linkage clusters of eigenvalues closer than `tol`.
fn cluster(values: &[C64], tol: f64) -> Vec<Vec<C64>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<C64>> = Vec::new();
    let mut index_of = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if index_of[root] == usize::MAX {
            index_of[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[root]].push(values[i]);
    }
    groups
}

/// Reason the clustering is unreliable: two cluster centres too close to
/// tell apart at this tolerance.
fn ambiguous(clusters: &[Vec<C64>], tol: f64) -> Option<String> {
    let centres: Vec<C64> = clusters.iter().map(|c| centre(c)).collect();
    for i in 0..centres.len() {
        for j in (i + 1)..centres.len() {
            let d = (centres[i] - centres[j]).norm();
            if d <= 10.0 * tol {
                return Some(format!(
                    "eigenvalue clusters at {} and {} are only {d:e} apart",
                    centres[i], centres[j]
                ));
            }
        }
    }
    None
}

fn centre(c: &[C64]) -> C64 {
    c.iter().sum::<C64>() / c.len() as f64
}

type Decomposition = (Vec<C64>, Vec<usize>, Vec<DMatrix<C64>>);

fn build(t: &DMatrix<C64>, clusters: &[Vec<C64>]) -> Result<Decomposition, String> {
    let n = t.nrows();
    let mut basis = DMatrix::<C64>::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut multiplicities = Vec::with_capacity(clusters.len());
    let mut col = 0;
    for c in clusters {
        let lambda = centre(c);
        let m = c.len();
        let s = shifted(t, lambda);
        let power = (1..m).fold(s.clone(), |acc, _| &acc * &s);
        let svd = power.svd(false, true);
        let v_t = svd.v_t.ok_or("singular value decomposition failed")?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        // rows of Vᴴ for the m smallest singular values span the null space
        for &k in order.iter().take(m) {
            for r in 0..n {
                basis[(r, col)] = v_t[(k, r)].conj();
            }
            col += 1;
        }
        eigenvalues.push(lambda);
        multiplicities.push(m);
    }
    let inv = checked_inverse(basis.clone()).ok_or("generalized eigenvectors are linearly dependent")?;
    let mut projections = Vec::with_capacity(clusters.len());
    let mut start = 0;
    for &m in &multiplicities {
        let v = basis.columns(start, m);
        let w = inv.rows(start, m);
        projections.push(v * w);
        start += m;
    }
    Ok((eigenvalues, multiplicities, projections))
}

/// `g(T)` through the spectral decomposition.
pub fn spectral_response(t: &DMatrix<C64>, g: &dyn ScalarFunction) -> Result<DMatrix<C64>, HoloError> {
    Ok(SpectralResponseOracle::new(t)?.apply(g))
}

/// Whether `σ(p(T))` and `p(σ(T))` agree as multisets, matching each
/// eigenvalue of `p(T)` to its nearest unused partner.
pub fn spectral_mapping_check(t: &DMatrix<C64>, p: &Polynomial) -> bool {
    if t.nrows() > ORACLE_MAX_N || t.nrows() != t.ncols() {
        return false;
    }
    let mapped: Vec<C64> = eigenvalues(t).into_iter().map(|l| p.eval(l)).collect();
    let direct = eigenvalues(&p.apply_matrix(t));
    let scale = mapped.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut used = vec![false; mapped.len()];
    for z in &direct {
        let best = mapped
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, d)) if d <= SPECTRAL_MAPPING_TOL * scale => used[i] = true,
            _ => return false,
        }
    }
    true
}
