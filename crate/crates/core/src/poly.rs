//! Dense univariate polynomials in ascending-degree coefficient order.
//!
//! `Polynomial<T>` works over any commutative ring with `num_traits::Num`,
//! which covers `f64` as well as exact `BigRational`. Root finding and
//! reconstruction from roots are provided for `f64` only.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};
use thiserror::Error;

/// Scaled residual accepted for a polished root.
pub const TOL_ROOT: f64 = 1e-7;
/// Imaginary parts below this (relative to the root modulus) are truncated.
pub const TOL_IMAG: f64 = 1e-8;
/// Maximum distance between a root and its conjugate partner.
pub const PAIRING_DISTANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("no roots of constant polynomial")]
    ConstantPolynomial,
    #[error("non-real coefficient result")]
    NonRealResult,
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("malformed polynomial text: {0}")]
    Parse(String),
}

/// Polynomial with `coeffs[k]` multiplying `x^k`. Trailing zeros are trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Clone + Zero> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the last nonzero coefficient; 0 for constants and the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `x^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    pub fn map<U: Clone + Zero>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        Polynomial::new(self.coeffs.iter().map(f).collect())
    }
}

impl<T: Clone + Num> Polynomial<T> {
    pub fn one() -> Self {
        Polynomial::new(vec![T::one()])
    }

    pub fn constant(c: T) -> Self {
        Polynomial::new(vec![c])
    }

    /// `c·x^k`.
    pub fn monomial(k: usize, c: T) -> Self {
        let mut v = vec![T::zero(); k + 1];
        v[k] = c;
        Polynomial::new(v)
    }

    /// `a + b·x`.
    pub fn linear(a: T, b: T) -> Self {
        Polynomial::new(vec![a, b])
    }

    /// Horner evaluation.
    pub fn eval(&self, x: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn scale(&self, c: T) -> Self {
        Polynomial::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Multiplies by `x^k`.
    pub fn shift_up(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![T::zero(); k];
        v.extend(self.coeffs.iter().cloned());
        Polynomial::new(v)
    }

    /// Returns `q` with `q(x) = p(a + s·x)`, by nested composition.
    pub fn shift_variable(&self, a: T, s: T) -> Self {
        let lin = Polynomial::linear(a, s);
        self.coeffs.iter().rev().fold(Self::zero(), |acc, c| {
            &(&acc * &lin) + &Self::constant(c.clone())
        })
    }

    /// `p(2 − x)`.
    pub fn mirror(&self) -> Self {
        let two = T::one() + T::one();
        self.shift_variable(two, T::zero() - T::one())
    }

    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len().saturating_sub(1));
        let mut k = T::zero();
        for c in &self.coeffs {
            if !k.is_zero() {
                out.push(c.clone() * k.clone());
            }
            k = k + T::one();
        }
        Polynomial::new(out)
    }

    /// Divides by `(x − r)`, returning quotient and remainder.
    pub fn synthetic_division(&self, r: T) -> (Self, T) {
        if self.is_zero() {
            return (Self::zero(), T::zero());
        }
        let n = self.coeffs.len();
        let mut q = vec![T::zero(); n - 1];
        let mut acc = T::zero();
        for k in (0..n).rev() {
            acc = acc * r.clone() + self.coeffs[k].clone();
            if k > 0 {
                q[k - 1] = acc.clone();
            }
        }
        (Polynomial::new(q), acc)
    }
}

impl<T: Clone + Num> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Clone + Num> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Clone + Num> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Clone + Num + Neg<Output = T>> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().cloned().map(Neg::neg).collect())
    }
}

macro_rules! owned_binop {
    ($tr:ident, $f:ident) => {
        impl<T: Clone + Num> $tr for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $f(self, rhs: Self) -> Polynomial<T> {
                (&self).$f(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl Polynomial<f64> {
    /// Exact rational image of every coefficient.
    pub fn to_exact(&self) -> Polynomial<BigRational> {
        self.map(|&c| BigRational::from_float(c).expect("finite coefficient"))
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// One CSV line of ascending coefficients at 17 significant digits.
    pub fn to_csv(&self) -> String {
        if self.coeffs.is_empty() {
            return "0".into();
        }
        self.coeffs
            .iter()
            .map(|c| format!("{c:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_csv(line: &str) -> Result<Self, PolyError> {
        line.trim()
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| PolyError::Parse(format!("`{t}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Polynomial::new)
    }

    /// Complex Horner evaluation returning `(p(z), p'(z))`.
    pub fn eval_complex(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// All complex roots with multiplicity.
    pub fn roots(&self) -> Result<RootSet, PolyError> {
        self.roots_with_known(&[])
    }

    /// Root finding where `known` lists roots with declared multiplicity; these
    /// are divided out exactly before the numerical stage.
    pub fn roots_with_known(&self, known: &[(f64, usize)]) -> Result<RootSet, PolyError> {
        if self.degree() == 0 {
            return Err(PolyError::ConstantPolynomial);
        }
        let scale = self.leading();
        let mut roots = Vec::with_capacity(self.degree());
        let mut rest = self.clone();
        while rest.coeffs[0] == 0.0 {
            roots.push(Complex64::new(0.0, 0.0));
            rest = Polynomial::new(rest.coeffs[1..].to_vec());
        }
        let stripped = roots.len();
        for &(a, m) in known {
            let m = if a == 0.0 {
                m.saturating_sub(stripped)
            } else {
                m
            };
            for _ in 0..m.min(rest.degree()) {
                rest = rest.synthetic_division(a).0;
                roots.push(Complex64::new(a, 0.0));
            }
        }
        roots.extend(numeric_roots(&rest)?);
        Ok(RootSet {
            roots: pair_conjugates(roots),
            scale,
        })
    }

    /// Rebuilds the real polynomial `scale·Π(x − r)`.
    pub fn from_roots(rs: &RootSet) -> Result<Self, PolyError> {
        let mut real = Vec::new();
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for &r in &rs.roots {
            if r.im.abs() <= TOL_IMAG * r.norm().max(1.0) {
                real.push(r.re);
            } else if r.im > 0.0 {
                upper.push(r);
            } else {
                lower.push(r);
            }
        }
        if upper.len() != lower.len() {
            return Err(PolyError::NonRealResult);
        }
        let mut p = Polynomial::constant(rs.scale);
        for re in real {
            p = &p * &Polynomial::linear(-re, 1.0);
        }
        let mut used = vec![false; lower.len()];
        for z in upper {
            let best = lower
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, w)| (i, (w.conj() - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((i, d)) if d <= PAIRING_DISTANCE * z.norm().max(1.0) => {
                    used[i] = true;
                    let w = lower[i];
                    let re = 0.5 * (z.re + w.re);
                    let im = 0.5 * (z.im - w.im);
                    p = &p * &Polynomial::new(vec![re * re + im * im, -2.0 * re, 1.0]);
                }
                _ => return Err(PolyError::NonRealResult),
            }
        }
        Ok(p)
    }
}

impl Polynomial<BigRational> {
    /// Rounds every coefficient to the nearest `f64`.
    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map(|c| c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Polynomial::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        )
    }
}

/// Complex roots with multiplicity plus the leading coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub scale: f64,
}

impl RootSet {
    pub fn real_roots(&self) -> impl Iterator<Item = f64> + '_ {
        self.roots.iter().filter(|r| r.im == 0.0).map(|r| r.re)
    }
}

fn numeric_roots(p: &Polynomial<f64>) -> Result<Vec<Complex64>, PolyError> {
    let d = p.degree();
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = p.leading();
    if d == 1 {
        return Ok(vec![Complex64::new(-p.coeffs[0] / lead, 0.0)]);
    }
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        m[(i, d - 1)] = -p.coeffs[i] / lead;
    }
    let eig = m.complex_eigenvalues();
    let mut out = Vec::with_capacity(d);
    for &z0 in eig.iter() {
        if !z0.re.is_finite() || !z0.im.is_finite() {
            return Err(PolyError::RootFinding("non-finite eigenvalue".into()));
        }
        out.push(polish(p, z0));
    }
    for z in &out {
        let (v, _) = p.eval_complex(*z);
        let mag: f64 = p
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * z.norm() + c.abs());
        if v.norm() > TOL_ROOT * mag {
            return Err(PolyError::RootFinding(format!(
                "residual {:.3e} at root {z}",
                v.norm()
            )));
        }
    }
    Ok(out)
}

fn polish(p: &Polynomial<f64>, z0: Complex64) -> Complex64 {
    let mut z = z0;
    let mut best = p.eval_complex(z).0.norm();
    for _ in 0..8 {
        let (v, dv) = p.eval_complex(z);
        if dv.norm() == 0.0 || v.norm() == 0.0 {
            break;
        }
        let cand = z - v / dv;
        let r = p.eval_complex(cand).0.norm();
        if r.is_nan() || r >= best {
            break;
        }
        best = r;
        z = cand;
    }
    z
}

/// Snaps near-real roots onto the axis and symmetrizes conjugate pairs.
fn pair_conjugates(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    for r in roots.iter_mut() {
        if r.im.abs() <= TOL_IMAG * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    let n = roots.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] || roots[i].im <= 0.0 {
            continue;
        }
        let z = roots[i];
        let partner = (0..n)
            .filter(|&j| !done[j] && j != i && roots[j].im < 0.0)
            .map(|j| (j, (roots[j].conj() - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, d)) = partner {
            if d <= PAIRING_DISTANCE * z.norm().max(1.0) {
                let re = 0.5 * (z.re + roots[j].re);
                let im = 0.5 * (z.im - roots[j].im);
                roots[i] = Complex64::new(re, im);
                roots[j] = Complex64::new(re, -im);
                done[i] = true;
                done[j] = true;
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// The rational `num/den`.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Polynomial<f64> {
        Polynomial::new(c.to_vec())
    }

    fn sorted_real(rs: &RootSet) -> Vec<f64> {
        let mut v: Vec<f64> = rs.roots.iter().map(|r| r.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p(&[0.0, 0.0, 1.5, -0.5]).eval(2.0), 2.0);
        assert_eq!(p(&[1.0]).eval(123.0), 1.0);
        assert_eq!(p(&[0.0, 1.0]).eval(0.37), 0.37);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let q = p(&[0.1, -1.0 / 3.0, 2.5e-17, 7.0]);
        assert_eq!(Polynomial::parse_csv(&q.to_csv()).unwrap(), q);
        assert_eq!(
            Polynomial::parse_csv(&Polynomial::<f64>::zero().to_csv()).unwrap(),
            Polynomial::zero()
        );
        assert!(matches!(
            Polynomial::parse_csv("1,x"),
            Err(PolyError::Parse(_))
        ));
    }

    #[test]
    fn trims_trailing_zeros() {
        let q = p(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(q.degree(), 1);
        assert!(p(&[0.0, 0.0]).is_zero());
    }

    #[test]
    fn mul_and_add_examples() {
        let a = p(&[1.0, 1.0]);
        let b = p(&[1.0, -1.0]);
        assert_eq!(&a * &b, p(&[1.0, 0.0, -1.0]));
        let c = &a.pow(2) * &p(&[1.0, -0.5]);
        assert_eq!(c, p(&[1.0, 1.5, 0.0, -0.5]));
        assert_eq!(&a * &Polynomial::one(), a);
        assert_eq!((&a + &b).degree(), 0);
    }

    #[test]
    fn shift_examples() {
        let half = p(&[0.0, 0.0, 1.5, -0.5]);
        assert_eq!(half.shift_variable(1.0, 1.0), p(&[1.0, 1.5, 0.0, -0.5]));
        assert_eq!(half.shift_variable(0.0, 1.0), half);
        assert_eq!(p(&[0.0, 1.0]).mirror(), p(&[2.0, -1.0]));
    }

    #[test]
    fn exact_shift_over_rationals() {
        let half = Polynomial::new(vec![
            rational(0, 1),
            rational(0, 1),
            rational(3, 2),
            rational(-1, 2),
        ]);
        let l = half.shift_variable(rational(1, 1), rational(1, 1));
        let want = Polynomial::new(vec![
            rational(1, 1),
            rational(3, 2),
            rational(0, 1),
            rational(-1, 2),
        ]);
        assert_eq!(l, want);
        assert_eq!(l.shift_variable(rational(-1, 1), rational(1, 1)), half);
        assert_eq!(half.mirror().mirror(), half);
    }

    #[test]
    fn synthetic_division_matches_product() {
        let q = p(&[2.0, -3.0, 1.0]);
        let (d, r) = q.synthetic_division(2.0);
        assert_eq!(d, p(&[-1.0, 1.0]));
        assert_eq!(r, 0.0);
    }

    #[test]
    fn derivative_of_cubic() {
        assert_eq!(p(&[1.0, 2.0, 3.0, 4.0]).derivative(), p(&[2.0, 6.0, 12.0]));
    }

    #[test]
    fn roots_of_quadratic() {
        let rs = p(&[2.0, -3.0, 1.0]).roots().unwrap();
        let r = sorted_real(&rs);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
        assert_eq!(rs.scale, 1.0);
    }

    #[test]
    fn roots_with_exact_zeros() {
        let rs = p(&[0.0, 0.0, 1.5, -0.5]).roots().unwrap();
        let r = sorted_real(&rs);
        assert_eq!(&r[..2], &[0.0, 0.0]);
        assert!((r[2] - 3.0).abs() < 1e-12);
        assert!(rs.roots.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn constant_has_no_roots() {
        assert_eq!(p(&[3.0]).roots(), Err(PolyError::ConstantPolynomial));
        assert_eq!(
            Polynomial::<f64>::zero().roots(),
            Err(PolyError::ConstantPolynomial)
        );
    }

    #[test]
    fn declared_multiplicity_is_deflated() {
        // (x-2)^6 (x+1)
        let q = &p(&[-2.0, 1.0]).pow(6) * &p(&[1.0, 1.0]);
        let rs = q.roots_with_known(&[(2.0, 6)]).unwrap();
        let twos = rs.roots.iter().filter(|r| r.re == 2.0).count();
        assert_eq!(twos, 6);
        assert!(rs.roots.iter().any(|r| (r.re + 1.0).abs() < 1e-12));
    }

    #[test]
    fn from_roots_examples() {
        let c = |re| Complex64::new(re, 0.0);
        let a = Polynomial::from_roots(&RootSet {
            roots: vec![c(1.0), c(2.0)],
            scale: 1.0,
        })
        .unwrap();
        assert_eq!(a, p(&[2.0, -3.0, 1.0]));
        let b = Polynomial::from_roots(&RootSet {
            roots: vec![c(0.0), c(0.0), c(3.0)],
            scale: -0.5,
        })
        .unwrap();
        assert_eq!(b, p(&[0.0, 0.0, 1.5, -0.5]));
        let i = Complex64::new(0.0, 1.0);
        let q = Polynomial::from_roots(&RootSet {
            roots: vec![i, -i],
            scale: 1.0,
        })
        .unwrap();
        assert_eq!(q, p(&[1.0, 0.0, 1.0]));
    }

    #[test]
    fn unpaired_complex_root_is_rejected() {
        let rs = RootSet {
            roots: vec![Complex64::new(1.0, 1.0)],
            scale: 1.0,
        };
        assert_eq!(Polynomial::from_roots(&rs), Err(PolyError::NonRealResult));
    }

    #[test]
    fn conjugate_roots_are_exactly_paired() {
        let q = p(&[5.0, -2.0, 1.0, 3.0, -1.0, 0.5]);
        let rs = q.roots().unwrap();
        for z in rs.roots.iter().filter(|z| z.im != 0.0) {
            assert!(rs.roots.iter().any(|w| *w == z.conj()));
        }
    }

    proptest! {
        #[test]
        fn roots_round_trip(c in proptest::collection::vec(-1.0f64..1.0, 2..=24)) {
            prop_assume!(c.last().unwrap().abs() > 1e-3);
            let q = Polynomial::new(c);
            let back = Polynomial::from_roots(&q.roots().unwrap()).unwrap();
            let s = q.max_abs_coeff();
            for k in 0..=q.degree() {
                prop_assert!((back.coeff(k) - q.coeff(k)).abs() <= 1e-6 * s);
            }
        }

        #[test]
        fn shift_inverse(c in proptest::collection::vec(-10.0f64..10.0, 1..12)) {
            let q = Polynomial::new(c).to_exact();
            let one = rational(1, 1);
            let back = q.shift_variable(one.clone(), one.clone()).shift_variable(-one.clone(), one);
            prop_assert_eq!(back, q);
        }

        #[test]
        fn shift_inverse_in_floats(c in proptest::collection::vec(-10.0f64..10.0, 1..8)) {
            let q = Polynomial::new(c);
            let back = q.shift_variable(1.0, 1.0).shift_variable(-1.0, 1.0);
            // rounding is amplified by at most the binomial growth of the two shifts
            let bound = 1e-12 * q.map(|c| c.abs()).eval(3.0);
            for k in 0..=q.degree() {
                prop_assert!((back.coeff(k) - q.coeff(k)).abs() <= bound);
            }
        }

        #[test]
        fn eval_is_multiplicative(
            a in proptest::collection::vec(-1.0f64..1.0, 1..10),
            b in proptest::collection::vec(-1.0f64..1.0, 1..10),
            x in -2.0f64..2.0,
        ) {
            let (a, b) = (Polynomial::new(a), Polynomial::new(b));
            let lhs = (&a * &b).eval(x);
            let rhs = a.eval(x) * b.eval(x);
            let mag = a.map(|c| c.abs()).eval(x.abs()) * b.map(|c| c.abs()).eval(x.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-10 * mag.max(f64::MIN_POSITIVE));
        }
    }
}
