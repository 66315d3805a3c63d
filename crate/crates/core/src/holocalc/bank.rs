//! Filter banks: symbolic specifications and their precomputed operator atoms.

use super::contour::{checked_inverse, contour_apply, Contour};
use super::functions::{ResolventPower, ScalarFunction};
use super::HoloError;
use crate::cmat::{relative_frobenius, to_complex_real, CMat, C64};
use crate::digraph::CharacteristicOperator;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::Arc;

pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_POLE: f64 = -1.0;

/// Which scalar functions make up a bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterBankSpec {
    /// Circular-domain Faber polynomials, i.e. discounted monomials
    /// `γᵏ λᵏ` for `k = 0 or 1, …, K`.
    Faber {
        max_order: usize,
        gamma: f64,
        include_order_zero: bool,
    },
    /// Resolvent powers `(λ − y)^(−k)` for `k = 1, …, K`.
    Resolvent { max_power: usize, pole: C64 },
}

impl FilterBankSpec {
    pub fn faber(max_order: usize) -> Self {
        Self::Faber {
            max_order,
            gamma: DEFAULT_GAMMA,
            include_order_zero: true,
        }
    }

    pub fn resolvent(max_power: usize) -> Self {
        Self::Resolvent {
            max_power,
            pole: C64::new(DEFAULT_POLE, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), HoloError> {
        match *self {
            Self::Faber { max_order, gamma, .. } => {
                if max_order < 1 {
                    return Err(HoloError::InvalidBankSpec("K must be at least 1".into()));
                }
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(HoloError::InvalidBankSpec(format!("gamma must lie in (0, 1], got {gamma}")));
                }
            }
            Self::Resolvent { max_power, pole } => {
                if max_power < 1 {
                    return Err(HoloError::InvalidBankSpec("K must be at least 1".into()));
                }
                if !(pole.re.is_finite() && pole.im.is_finite()) {
                    return Err(HoloError::InvalidBankSpec("pole must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn atom_count(&self) -> usize {
        match *self {
            Self::Faber {
                max_order,
                include_order_zero,
                ..
            } => max_order + include_order_zero as usize,
            Self::Resolvent { max_power, .. } => max_power,
        }
    }

    /// The scalar function generating atom `index`.
    pub fn atom_function(&self, index: usize) -> BankAtom {
        match *self {
            Self::Faber {
                gamma,
                include_order_zero,
                ..
            } => {
                let power = index + (!include_order_zero) as usize;
                BankAtom::Monomial {
                    power,
                    coefficient: gamma.powi(power as i32),
                }
            }
            Self::Resolvent { pole, .. } => BankAtom::Resolvent(ResolventPower::new(pole, index + 1)),
        }
    }

    /// Whether the atoms of a real operator stay real.
    pub fn preserves_reality(&self) -> bool {
        match self {
            Self::Faber { .. } => true,
            Self::Resolvent { pole, .. } => pole.im == 0.0,
        }
    }

    /// Key-value text form: `kind`, `K`, `gamma`, `include_order_zero`,
    /// `y_real`, `y_imag`, one `key = value` per line.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        match *self {
            Self::Faber {
                max_order,
                gamma,
                include_order_zero,
            } => {
                let _ = writeln!(s, "kind = faber");
                let _ = writeln!(s, "K = {max_order}");
                let _ = writeln!(s, "gamma = {gamma:?}");
                let _ = writeln!(s, "include_order_zero = {include_order_zero}");
            }
            Self::Resolvent { max_power, pole } => {
                let _ = writeln!(s, "kind = resolvent");
                let _ = writeln!(s, "K = {max_power}");
                let _ = writeln!(s, "y_real = {:?}", pole.re);
                let _ = writeln!(s, "y_imag = {:?}", pole.im);
            }
        }
        s
    }

    /// Parses the key-value form. Blank lines and `#` comments are skipped;
    /// unknown keys and keys that do not belong to the chosen kind are
    /// rejected.
    pub fn parse_config(text: &str) -> Result<Self, HoloError> {
        let bad = |m: String| HoloError::InvalidBankSpec(m);
        let mut kind = None;
        let mut k = None;
        let mut gamma = None;
        let mut zero = None;
        let mut y_re = None;
        let mut y_im = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("line {}: `{key}` expects a number", lineno + 1)))
            };
            match key {
                "kind" => kind = Some(value.to_ascii_lowercase()),
                "K" | "k" => {
                    k = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| bad(format!("line {}: K expects a positive integer", lineno + 1)))?,
                    )
                }
                "gamma" => gamma = Some(num(value)?),
                "include_order_zero" => {
                    zero = Some(
                        value
                            .parse::<bool>()
                            .map_err(|_| bad(format!("line {}: include_order_zero expects true/false", lineno + 1)))?,
                    )
                }
                "y_real" => y_re = Some(num(value)?),
                "y_imag" => y_im = Some(num(value)?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let k = k.ok_or_else(|| bad("missing key `K`".into()))?;
        let spec = match kind.as_deref() {
            Some("faber") => {
                if y_re.is_some() || y_im.is_some() {
                    return Err(bad("y_real/y_imag are not valid for a faber bank".into()));
                }
                Self::Faber {
                    max_order: k,
                    gamma: gamma.unwrap_or(DEFAULT_GAMMA),
                    include_order_zero: zero.unwrap_or(true),
                }
            }
            Some("resolvent") => {
                if gamma.is_some() || zero.is_some() {
                    return Err(bad("gamma/include_order_zero are not valid for a resolvent bank".into()));
                }
                Self::Resolvent {
                    max_power: k,
                    pole: C64::new(y_re.unwrap_or(DEFAULT_POLE), y_im.unwrap_or(0.0)),
                }
            }
            Some(other) => return Err(bad(format!("unknown bank kind `{other}`"))),
            None => return Err(bad("missing key `kind`".into())),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Generating function of a single atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BankAtom {
    Monomial { power: usize, coefficient: f64 },
    Resolvent(ResolventPower),
}

impl ScalarFunction for BankAtom {
    fn eval(&self, z: C64) -> C64 {
        match self {
            Self::Monomial { power, coefficient } => z.powi(*power as i32) * *coefficient,
            Self::Resolvent(r) => r.eval(z),
        }
    }

    fn derivative(&self, order: usize, z: C64) -> C64 {
        match self {
            Self::Monomial { power, coefficient } => {
                if order > *power {
                    return C64::new(0.0, 0.0);
                }
                let falling: f64 = ((power - order + 1)..=*power).map(|v| v as f64).product();
                z.powi((power - order) as i32) * (falling * coefficient)
            }
            Self::Resolvent(r) => r.derivative(order, z),
        }
    }
}

/// Atoms `Ψᵢ(T)` of a bank, computed once for a fixed operator.
#[derive(Debug, Clone)]
pub struct PrecomputedBank {
    spec: FilterBankSpec,
    operator: Arc<DMatrix<f64>>,
    atoms: Vec<CMat>,
    purely_real: bool,
}

impl PrecomputedBank {
    /// Builds the atoms in closed form: discounted matrix powers for Faber
    /// banks, powers of `(T − y·Id)⁻¹` for resolvent banks.
    pub fn build(operator: &DMatrix<f64>, spec: FilterBankSpec) -> Result<Self, HoloError> {
        spec.validate()?;
        let n = operator.nrows();
        if operator.ncols() != n {
            return Err(HoloError::NotSquare {
                rows: n,
                cols: operator.ncols(),
            });
        }
        let atoms = match spec {
            FilterBankSpec::Faber {
                max_order,
                gamma,
                include_order_zero,
            } => {
                let mut atoms = Vec::with_capacity(spec.atom_count());
                let mut power = DMatrix::<f64>::identity(n, n);
                for k in 0..=max_order {
                    if k > 0 {
                        power = &power * operator;
                    }
                    if k > 0 || include_order_zero {
                        atoms.push(CMat::from_real(&power * gamma.powi(k as i32)));
                    }
                }
                atoms
            }
            FilterBankSpec::Resolvent { max_power, pole } => {
                let resolvent = resolvent(operator, pole)?;
                let mut atoms = Vec::with_capacity(max_power);
                atoms.push(resolvent.clone());
                for _ in 1..max_power {
                    let next = atoms.last().expect("non-empty").matmul(&resolvent);
                    atoms.push(next);
                }
                atoms
            }
        };
        let purely_real = atoms.iter().all(CMat::is_real);
        Ok(Self {
            spec,
            operator: Arc::new(operator.clone()),
            atoms,
            purely_real,
        })
    }

    /// Bank on `T`.
    pub fn forward(op: &CharacteristicOperator, spec: FilterBankSpec) -> Result<Self, HoloError> {
        Self::build(op.matrix(), spec)
    }

    /// Bank on the weighted adjoint `T*`.
    pub fn backward(op: &CharacteristicOperator, spec: FilterBankSpec) -> Result<Self, HoloError> {
        Self::build(&op.adjoint_matrix(), spec)
    }

    pub fn spec(&self) -> &FilterBankSpec {
        &self.spec
    }

    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    pub fn atoms(&self) -> &[CMat] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.operator.nrows()
    }

    pub fn purely_real(&self) -> bool {
        self.purely_real
    }

    /// `Σᵢ θᵢ Ψᵢ(T)`
    pub fn filter(&self, theta: &[C64]) -> CMat {
        assert_eq!(theta.len(), self.atoms.len(), "one coefficient per atom");
        let n = self.n_nodes();
        let mut acc = CMat::zeros(n, n);
        for (atom, &t) in self.atoms.iter().zip(theta) {
            acc += &atom.scale_complex(t);
        }
        acc
    }
}

/// `(T − y·Id)⁻¹`, real whenever `y` is.
pub fn resolvent(t: &DMatrix<f64>, pole: C64) -> Result<CMat, HoloError> {
    let n = t.nrows();
    let mut shifted = to_complex_real(t);
    for i in 0..n {
        shifted[(i, i)] -= pole;
    }
    let inv = checked_inverse(shifted).ok_or(HoloError::PoleOnSpectrum { pole })?;
    if pole.im == 0.0 {
        Ok(CMat::from_real(inv.map(|z| z.re)))
    } else {
        Ok(CMat::from_complex(&inv))
    }
}

/// Largest relative Frobenius distance between a stored atom and the
/// contour-integral evaluation of its generating function.
///
/// Resolvent poles must lie strictly outside the contour, otherwise the
/// integrand is not holomorphic inside it.
pub fn bank_matches_contour(bank: &PrecomputedBank, contour: &Contour) -> Result<f64, HoloError> {
    if let FilterBankSpec::Resolvent { pole, .. } = bank.spec {
        if (pole - contour.center).norm() <= contour.radius {
            return Err(HoloError::PoleInsideContour { pole });
        }
    }
    let t = to_complex_real(&bank.operator);
    let mut worst = 0.0f64;
    for (i, atom) in bank.atoms.iter().enumerate() {
        let f = bank.spec.atom_function(i);
        let via_contour = contour_apply(|z| f.eval(z), &t, contour)?;
        worst = worst.max(relative_frobenius(&via_contour, &atom.to_complex()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_adjacency() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0., 0., 0., 1., 0., 0., 0., 1., 0.])
    }

    fn path_laplacian() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0., 0., 0., -1., 1., 0., 0., -1., 1.])
    }

    #[test]
    fn faber_atoms_on_path() {
        let w = path_adjacency();
        let spec = FilterBankSpec::Faber {
            max_order: 3,
            gamma: 0.5,
            include_order_zero: true,
        };
        let bank = PrecomputedBank::build(&w, spec).unwrap();
        assert_eq!(bank.len(), 4);
        assert!(bank.purely_real());
        assert_eq!(bank.atoms()[0].re(), &DMatrix::identity(3, 3));
        assert_eq!(bank.atoms()[1].re(), &(&w * 0.5));
        assert_eq!(bank.atoms()[2].re(), &(&w * &w * 0.25));
        assert_eq!(bank.atoms()[3].re(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn faber_without_order_zero_starts_at_one() {
        let spec = FilterBankSpec::Faber {
            max_order: 2,
            gamma: 1.0,
            include_order_zero: false,
        };
        let bank = PrecomputedBank::build(&path_adjacency(), spec).unwrap();
        assert_eq!(bank.len(), 2);
        assert_eq!(bank.atoms()[0].re(), &path_adjacency());
        assert_eq!(spec.atom_function(0), BankAtom::Monomial { power: 1, coefficient: 1.0 });
    }

    #[test]
    fn resolvent_of_zero_operator_is_identity() {
        let bank = PrecomputedBank::build(&DMatrix::zeros(3, 3), FilterBankSpec::resolvent(1)).unwrap();
        assert_eq!(bank.atoms()[0].re(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn resolvent_square_matches_dense_inverse() {
        let l = path_laplacian();
        let bank = PrecomputedBank::build(&l, FilterBankSpec::resolvent(2)).unwrap();
        let inv = (&l + DMatrix::identity(3, 3)).try_inverse().unwrap();
        let sq = &inv * &inv;
        assert!((bank.atoms()[1].re() - sq).norm() < 1e-14);
        let check = (&l + DMatrix::identity(3, 3)) * bank.atoms()[0].re();
        assert!((check - DMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn complex_pole_gives_complex_atoms() {
        let spec = FilterBankSpec::Resolvent {
            max_power: 1,
            pole: C64::new(-1.0, 0.5),
        };
        let bank = PrecomputedBank::build(&path_laplacian(), spec).unwrap();
        assert!(!bank.purely_real());
        assert!(!spec.preserves_reality());
    }

    #[test]
    fn pole_on_spectrum_fails() {
        let spec = FilterBankSpec::Resolvent {
            max_power: 1,
            pole: C64::new(1.0, 0.0),
        };
        assert!(matches!(
            PrecomputedBank::build(&path_laplacian(), spec),
            Err(HoloError::PoleOnSpectrum { .. })
        ));
    }

    #[test]
    fn banks_agree_with_contour_integrals() {
        let faber = PrecomputedBank::build(&path_adjacency(), FilterBankSpec::faber(3)).unwrap();
        let contour = Contour::circle(2.0, 128).unwrap();
        assert!(bank_matches_contour(&faber, &contour).unwrap() <= 1e-9);

        let res = PrecomputedBank::build(&path_laplacian(), FilterBankSpec::resolvent(3)).unwrap();
        let contour = Contour::new(C64::new(1.0, 0.0), 1.5, 256).unwrap();
        assert!(bank_matches_contour(&res, &contour).unwrap() <= 1e-8);

        let zero = PrecomputedBank::build(&DMatrix::zeros(3, 3), FilterBankSpec::faber(2)).unwrap();
        let contour = Contour::circle(0.5, 64).unwrap();
        assert!(bank_matches_contour(&zero, &contour).unwrap() <= 1e-12);
    }

    #[test]
    fn pole_inside_contour_is_rejected() {
        let res = PrecomputedBank::build(&path_laplacian(), FilterBankSpec::resolvent(1)).unwrap();
        let contour = Contour::circle(2.0, 64).unwrap();
        assert!(matches!(
            bank_matches_contour(&res, &contour),
            Err(HoloError::PoleInsideContour { .. })
        ));
    }

    #[test]
    fn config_text_round_trip() {
        for spec in [
            FilterBankSpec::faber(4),
            FilterBankSpec::Faber {
                max_order: 2,
                gamma: 1.0,
                include_order_zero: false,
            },
            FilterBankSpec::Resolvent {
                max_power: 3,
                pole: C64::new(-0.5, 0.25),
            },
        ] {
            let text = spec.to_config_string();
            assert_eq!(FilterBankSpec::parse_config(&text).unwrap(), spec);
        }
    }

    #[test]
    fn config_rejects_unknown_and_invalid() {
        assert!(FilterBankSpec::parse_config("kind = faber\nK = 2\nfoo = 1").is_err());
        assert!(FilterBankSpec::parse_config("kind = faber\nK = 0").is_err());
        assert!(FilterBankSpec::parse_config("kind = faber\nK = 2\ngamma = 1.5").is_err());
        assert!(FilterBankSpec::parse_config("kind = resolvent\nK = 2\ngamma = 0.5").is_err());
        assert!(FilterBankSpec::parse_config("K = 2").is_err());
        let spec = FilterBankSpec::parse_config("# defaults\nkind = resolvent\nK = 2\n").unwrap();
        assert_eq!(spec, FilterBankSpec::resolvent(2));
    }
}
