//! Complex matrices stored as separate real and imaginary planes.
//!
//! Most operators in this crate are real, and real models never touch an
//! imaginary part. Keeping the planes split lets those paths run on plain
//! `f64` GEMMs, while complex parameters and complex resolvent poles still
//! work through the same type. A missing imaginary plane means the matrix
//! is known to be purely real.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMat {
    re: DMatrix<f64>,
    im: Option<DMatrix<f64>>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_real(DMatrix::zeros(nrows, ncols))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real(DMatrix::identity(n, n))
    }

    pub fn from_real(re: DMatrix<f64>) -> Self {
        Self { re, im: None }
    }

    /// Builds from two planes; panics if their shapes differ.
    pub fn from_parts(re: DMatrix<f64>, im: DMatrix<f64>) -> Self {
        assert_eq!(re.shape(), im.shape(), "real/imaginary plane shapes differ");
        Self { re, im: Some(im) }
    }

    pub fn from_complex(m: &DMatrix<C64>) -> Self {
        let re = m.map(|z| z.re);
        let im = m.map(|z| z.im);
        if im.iter().all(|&v| v == 0.0) {
            Self::from_real(re)
        } else {
            Self::from_parts(re, im)
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let full = DMatrix::from_fn(nrows, ncols, |i, j| f(i, j));
        Self::from_complex(&full)
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        match &self.im {
            None => self.re.map(|v| C64::new(v, 0.0)),
            Some(im) => self.re.zip_map(im, C64::new),
        }
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.re.shape()
    }

    pub fn re(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn im(&self) -> Option<&DMatrix<f64>> {
        self.im.as_ref()
    }

    pub fn im_or_zeros(&self) -> DMatrix<f64> {
        self.im
            .clone()
            .unwrap_or_else(|| DMatrix::zeros(self.nrows(), self.ncols()))
    }

    pub fn into_parts(self) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
        (self.re, self.im)
    }

    /// True when no imaginary plane is stored.
    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    /// True when the imaginary plane is absent or identically zero.
    pub fn is_numerically_real(&self) -> bool {
        self.im.as_ref().is_none_or(|m| m.iter().all(|&v| v == 0.0))
    }

    /// Drops the imaginary plane.
    pub fn real_part(&self) -> CMat {
        Self::from_real(self.re.clone())
    }

    pub fn imag_part(&self) -> CMat {
        Self::from_real(self.im_or_zeros())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re[(i, j)], self.im.as_ref().map_or(0.0, |m| m[(i, j)]))
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.re[(i, j)] = v.re;
        if v.im != 0.0 || self.im.is_some() {
            let (r, c) = self.shape();
            self.im.get_or_insert_with(|| DMatrix::zeros(r, c))[(i, j)] = v.im;
        }
    }

    pub fn transpose(&self) -> CMat {
        Self {
            re: self.re.transpose(),
            im: self.im.as_ref().map(|m| m.transpose()),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        Self {
            re: self.re.transpose(),
            im: self.im.as_ref().map(|m| -m.transpose()),
        }
    }

    pub fn conj(&self) -> CMat {
        Self {
            re: self.re.clone(),
            im: self.im.as_ref().map(|m| -m),
        }
    }

    pub fn scale(&self, s: f64) -> CMat {
        Self {
            re: &self.re * s,
            im: self.im.as_ref().map(|m| m * s),
        }
    }

    pub fn scale_complex(&self, s: C64) -> CMat {
        if s.im == 0.0 {
            return self.scale(s.re);
        }
        let im = self.im_or_zeros();
        Self::from_parts(&self.re * s.re - &im * s.im, &self.re * s.im + &im * s.re)
    }

    /// `self · other`
    pub fn matmul(&self, other: &CMat) -> CMat {
        match (&self.im, &other.im) {
            (None, None) => Self::from_real(&self.re * &other.re),
            (None, Some(bi)) => Self::from_parts(&self.re * &other.re, &self.re * bi),
            (Some(ai), None) => Self::from_parts(&self.re * &other.re, ai * &other.re),
            (Some(ai), Some(bi)) => Self::from_parts(
                &self.re * &other.re - ai * bi,
                &self.re * bi + ai * &other.re,
            ),
        }
    }

    /// `selfᴴ · other` without materialising the adjoint.
    pub fn adjoint_matmul(&self, other: &CMat) -> CMat {
        match (&self.im, &other.im) {
            (None, None) => Self::from_real(self.re.tr_mul(&other.re)),
            (None, Some(bi)) => Self::from_parts(self.re.tr_mul(&other.re), self.re.tr_mul(bi)),
            (Some(ai), None) => Self::from_parts(self.re.tr_mul(&other.re), -ai.tr_mul(&other.re)),
            (Some(ai), Some(bi)) => Self::from_parts(
                self.re.tr_mul(&other.re) + ai.tr_mul(bi),
                self.re.tr_mul(bi) - ai.tr_mul(&other.re),
            ),
        }
    }

    /// `self · otherᴴ` without materialising the adjoint.
    pub fn matmul_adjoint(&self, other: &CMat) -> CMat {
        let bt = other.re.transpose();
        match (&self.im, &other.im) {
            (None, None) => Self::from_real(&self.re * bt),
            (None, Some(bi)) => Self::from_parts(&self.re * &bt, -(&self.re * bi.transpose())),
            (Some(ai), None) => Self::from_parts(&self.re * &bt, ai * &bt),
            (Some(ai), Some(bi)) => {
                let bit = bi.transpose();
                Self::from_parts(&self.re * &bt + ai * &bit, ai * &bt - &self.re * &bit)
            }
        }
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: f64, other: &CMat) {
        self.re.zip_apply(&other.re, |a, b| *a += s * b);
        match (&mut self.im, &other.im) {
            (Some(a), Some(b)) => a.zip_apply(b, |x, y| *x += s * y),
            (None, Some(b)) => self.im = Some(b * s),
            _ => {}
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        let re = self.re.norm_squared();
        let im = self.im.as_ref().map_or(0.0, |m| m.norm_squared());
        (re + im).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                best = best.max(self.get(i, j).norm());
            }
        }
        best
    }

    /// Applies `f` to the real plane and, if present, the imaginary plane.
    pub fn map_planes(&self, f: impl Fn(f64) -> f64) -> CMat {
        Self {
            re: self.re.map(&f),
            im: self.im.as_ref().map(|m| m.map(&f)),
        }
    }

    /// Entrywise modulus |z|.
    pub fn modulus(&self) -> DMatrix<f64> {
        match &self.im {
            None => self.re.abs(),
            Some(im) => self.re.zip_map(im, |a, b| a.hypot(b)),
        }
    }

    /// Horizontal concatenation `[re | im]` as a real matrix.
    pub fn stack_columns(&self) -> DMatrix<f64> {
        let (n, f) = self.shape();
        let mut out = DMatrix::zeros(n, 2 * f);
        out.columns_mut(0, f).copy_from(&self.re);
        if let Some(im) = &self.im {
            out.columns_mut(f, f).copy_from(im);
        }
        out
    }

    /// Inverse of [`CMat::stack_columns`].
    pub fn unstack_columns(stacked: &DMatrix<f64>) -> CMat {
        assert!(stacked.ncols() % 2 == 0, "stacked matrix needs an even column count");
        let f = stacked.ncols() / 2;
        Self::from_parts(
            stacked.columns(0, f).into_owned(),
            stacked.columns(f, f).into_owned(),
        )
    }

    pub fn rows(&self, start: usize, count: usize) -> CMat {
        Self {
            re: self.re.rows(start, count).into_owned(),
            im: self.im.as_ref().map(|m| m.rows(start, count).into_owned()),
        }
    }

    /// Keeps only the selected rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> CMat {
        Self {
            re: self.re.select_rows(idx),
            im: self.im.as_ref().map(|m| m.select_rows(idx)),
        }
    }

    /// Column sums as a 1×F row.
    pub fn column_sums(&self) -> CMat {
        let sum = |m: &DMatrix<f64>| DMatrix::from_fn(1, m.ncols(), |_, j| m.column(j).sum());
        Self {
            re: sum(&self.re),
            im: self.im.as_ref().map(sum),
        }
    }

    /// Repeats a 1×F row `n` times.
    pub fn broadcast_row(&self, n: usize) -> CMat {
        assert_eq!(self.nrows(), 1, "broadcast_row expects a single row");
        let rep = |m: &DMatrix<f64>| DMatrix::from_fn(n, m.ncols(), |_, j| m[(0, j)]);
        Self {
            re: rep(&self.re),
            im: self.im.as_ref().map(rep),
        }
    }

    /// Left-multiplies by a diagonal matrix given as its entries.
    pub fn scale_rows(&self, d: &[f64]) -> CMat {
        assert_eq!(d.len(), self.nrows());
        let f = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)]);
        Self {
            re: f(&self.re),
            im: self.im.as_ref().map(f),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().all(|v| v.is_finite())
            && self.im.as_ref().is_none_or(|m| m.iter().all(|v| v.is_finite()))
    }
}

impl From<DMatrix<f64>> for CMat {
    fn from(m: DMatrix<f64>) -> Self {
        CMat::from_real(m)
    }
}

impl From<&DMatrix<C64>> for CMat {
    fn from(m: &DMatrix<C64>) -> Self {
        CMat::from_complex(m)
    }
}

fn combine(
    a: &CMat,
    b: &CMat,
    op: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    single: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
) -> CMat {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in elementwise op");
    let re = op(&a.re, &b.re);
    let im = match (&a.im, &b.im) {
        (None, None) => None,
        (Some(x), None) => Some(x.clone()),
        (None, Some(y)) => Some(single(y)),
        (Some(x), Some(y)) => Some(op(x, y)),
    };
    CMat { re, im }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        combine(self, rhs, |x, y| x + y, |y| y.clone())
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        combine(self, rhs, |x, y| x - y, |y| -y)
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        self.axpy(1.0, rhs);
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale(-1.0)
    }
}

/// Relative Frobenius distance `‖a − b‖ / ‖b‖`, falling back to the absolute
/// distance when `b` vanishes.
pub fn relative_frobenius(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn to_complex_real(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}
