//! Scalar holomorphic functions with closed-form derivatives.

use crate::cmat::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A holomorphic scalar function that can report its complex derivatives.
///
/// `derivative(0, z)` must equal `eval(z)`.
pub trait ScalarFunction: Sync {
    fn eval(&self, z: C64) -> C64;
    fn derivative(&self, order: usize, z: C64) -> C64;
}

/// Polynomial with coefficients in ascending order: `Σ_k a_k z^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn monomial(power: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); power + 1];
        coeffs[power] = C64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Product of two polynomials.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Polynomial::new(Vec::new());
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// Matrix polynomial by Horner's scheme.
    pub fn apply_matrix(&self, t: &DMatrix<C64>) -> DMatrix<C64> {
        let n = t.nrows();
        let mut acc = DMatrix::<C64>::zeros(n, n);
        for &a in self.coeffs.iter().rev() {
            acc = &acc * t;
            for i in 0..n {
                acc[(i, i)] += a;
            }
        }
        acc
    }
}

impl ScalarFunction for Polynomial {
    fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    fn derivative(&self, order: usize, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in (order..self.coeffs.len()).rev() {
            // k! / (k - order)!
            let falling: f64 = ((k - order + 1)..=k).map(|v| v as f64).product();
            acc = acc * z + self.coeffs[k] * falling;
        }
        acc
    }
}

/// `z ↦ exp(z)`
#[derive(Debug, Clone, Copy, Default)]
pub struct Exp;

impl ScalarFunction for Exp {
    fn eval(&self, z: C64) -> C64 {
        z.exp()
    }

    fn derivative(&self, _order: usize, z: C64) -> C64 {
        z.exp()
    }
}

/// `z ↦ scale · (z − pole)^(−power)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventPower {
    pub pole: C64,
    pub power: usize,
    pub scale: C64,
}

impl ResolventPower {
    pub fn new(pole: C64, power: usize) -> Self {
        Self {
            pole,
            power,
            scale: C64::new(1.0, 0.0),
        }
    }
}

impl ScalarFunction for ResolventPower {
    fn eval(&self, z: C64) -> C64 {
        self.scale * (z - self.pole).powi(-(self.power as i32))
    }

    fn derivative(&self, order: usize, z: C64) -> C64 {
        // d^n/dz^n (z - y)^(-k) = (-1)^n k (k+1) ... (k+n-1) (z - y)^(-k-n)
        let k = self.power as f64;
        let rising: f64 = (0..order).map(|i| k + i as f64).product();
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        self.scale * sign * rising * (z - self.pole).powi(-((self.power + order) as i32))
    }
}
