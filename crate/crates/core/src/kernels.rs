//! graphBior kernel design: maximally-flat half-band kernels, spectral
//! factorization by maximum Θ, mirror kernels and gain factors.
//!
//! The half-band kernel is solved exactly over the rationals; factorization
//! and the Θ search run in `f64`.

pub mod reference;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg;
use crate::metrics::{theta_grid, theta_of};
use crate::poly::{PolyError, Polynomial, RootSet};
use crate::{ExactPoly, Poly64};

/// Largest supported total zero multiplicity `K = k0 + k1`.
pub const MAX_K: usize = 20;
/// Bounds of the scalar split search between `h0` and `g0`.
pub const SCALE_RANGE: (f64, f64) = (0.125, 8.0);
/// Tolerance in `s` for the golden-section refinement.
pub const SCALE_TOL: f64 = 1e-6;
/// Θ values closer than this are treated as ties between splits.
pub const THETA_TIE: f64 = 1e-9;

const COARSE_SCALES: usize = 241;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("half-band order K={0} is outside 1..={MAX_K}")]
    InvalidOrder(usize),
    #[error("conditioning failure: scaled linear-system residual {0:.3e}")]
    Conditioning(f64),
    #[error("graphBior({k0},{k1}) does not factor a K={k} kernel (need k0+k1=K, k0,k1 >= 1)")]
    InvalidSplit { k0: usize, k1: usize, k: usize },
    #[error("parity-infeasible factorization for graphBior({k0},{k1}); {}", nearest_text(.nearest))]
    ParityInfeasible {
        k0: usize,
        k1: usize,
        nearest: Option<(usize, usize)>,
    },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

fn nearest_text(nearest: &Option<(usize, usize)>) -> String {
    match nearest {
        Some((k0, k1)) => format!("nearest feasible pair is ({k0},{k1})"),
        None => "no feasible pair".to_string(),
    }
}

/// Half-band product kernel `p` with `p(λ) + p(2−λ) = 2` and `K` zeros at λ = 2.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfBandKernel {
    k: usize,
    residual_l: ExactPoly,
    exact: ExactPoly,
    p: Poly64,
}

impl HalfBandKernel {
    pub fn order(&self) -> usize {
        self.k
    }

    /// Number of odd-part coefficients, `K − 1`.
    pub fn odd_count(&self) -> usize {
        self.k - 1
    }

    /// Lowpass-oriented kernel in λ, rounded to `f64`.
    pub fn p(&self) -> &Poly64 {
        &self.p
    }

    /// Lowpass-oriented kernel in λ, exact.
    pub fn exact(&self) -> &ExactPoly {
        &self.exact
    }

    /// `R(l)` with `r0 = 1`, the free factor of the l-domain design `(1+l)^K R(l)`.
    pub fn residual_l(&self) -> &ExactPoly {
        &self.residual_l
    }

    /// `Q(λ) = R(1−λ)`, so that `p(λ) = (2−λ)^K Q(λ)`.
    pub fn residual(&self) -> ExactPoly {
        self.residual_l
            .shift_variable(BigRational::one(), -BigRational::one())
    }

    /// `p(1 + l)`: constant 1 plus odd powers only.
    pub fn centered(&self) -> ExactPoly {
        self.exact
            .shift_variable(BigRational::one(), BigRational::one())
    }

    /// Largest violation of the half-band identity over the centered coefficients.
    pub fn halfband_deviation(&self) -> f64 {
        let c = self.centered();
        c.coeffs()
            .iter()
            .enumerate()
            .filter(|(k, _)| k % 2 == 0)
            .map(|(k, v)| {
                let want = if k == 0 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                };
                (v - want).to_f64().unwrap_or(f64::INFINITY).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Maximally-flat half-band design of order `K` (`1 ≤ K ≤ MAX_K`).
pub fn design_halfband(k: usize) -> Result<HalfBandKernel, KernelError> {
    if k == 0 || k > MAX_K {
        return Err(KernelError::InvalidOrder(k));
    }
    let m = k - 1;
    // c_{2i} = Σ_m r_m C(K, 2i − m) must vanish for i = 1..K−1
    let entry = |i: usize, j: usize| -> BigInt {
        let row = 2 * (i + 1);
        if j > row {
            BigInt::zero()
        } else {
            binomial(k, row - j)
        }
    };
    let a: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            (1..=m)
                .map(|j| BigRational::from_integer(entry(i, j)))
                .collect()
        })
        .collect();
    let b: Vec<BigRational> = (0..m)
        .map(|i| -BigRational::from_integer(entry(i, 0)))
        .collect();
    let r = if m == 0 {
        Vec::new()
    } else {
        linalg::solve(a.clone(), b.clone()).ok_or(KernelError::Conditioning(f64::INFINITY))?
    };

    let residual = scaled_residual(&a, &b, &r);
    if residual > 1e-8 {
        return Err(KernelError::Conditioning(residual));
    }

    let mut rc = vec![BigRational::one()];
    rc.extend(r);
    let residual_l = Polynomial::new(rc);
    let one_plus_l = Polynomial::linear(BigRational::one(), BigRational::one());
    let design_centered = &one_plus_l.pow(k as u32) * &residual_l;
    // mirror: p(1+l) = p̃(1−l), then back to λ via l = λ − 1
    let centered = design_centered.shift_variable(BigRational::zero(), -BigRational::one());
    let exact = centered.shift_variable(-BigRational::one(), BigRational::one());
    let p = exact.to_f64();
    Ok(HalfBandKernel {
        k,
        residual_l,
        exact,
        p,
    })
}

/// Backward error of the rounded solution: ‖Ar − b‖∞ / (‖A‖∞‖r‖∞ + ‖b‖∞).
fn scaled_residual(a: &[Vec<BigRational>], b: &[BigRational], r: &[BigRational]) -> f64 {
    let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
    let rf: Vec<f64> = r.iter().map(f).collect();
    let mut res: f64 = 0.0;
    let mut anorm: f64 = 0.0;
    for (row, bi) in a.iter().zip(b) {
        let s: f64 = row.iter().zip(&rf).map(|(x, y)| f(x) * y).sum();
        res = res.max((s - f(bi)).abs());
        anorm = anorm.max(row.iter().map(|x| f(x).abs()).sum());
    }
    let rnorm = rf.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let bnorm = b.iter().fold(0.0f64, |m, x| m.max(f(x).abs()));
    let denom = anorm * rnorm + bnorm;
    if denom == 0.0 {
        0.0
    } else {
        res / denom
    }
}

/// The four graphBior kernels with their design metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSet {
    pub h0: Poly64,
    pub h1: Poly64,
    pub g0: Poly64,
    pub g1: Poly64,
    pub k0: usize,
    pub k1: usize,
    pub theta: f64,
    pub gain_low: f64,
    pub gain_high: f64,
    pub riesz_a: f64,
    pub riesz_b: f64,
}

impl KernelSet {
    /// Wraps arbitrary kernels, computing Θ, Riesz estimates and gains.
    pub fn from_kernels(
        h0: Poly64,
        h1: Poly64,
        g0: Poly64,
        g1: Poly64,
        k0: usize,
        k1: usize,
    ) -> Self {
        let t = theta_of(&h0, &h1, &theta_grid());
        let gain = |x: f64| {
            let g = 1.0 / x.abs();
            if g.is_finite() {
                g
            } else {
                1.0
            }
        };
        KernelSet {
            gain_low: gain(h0.eval(0.0)),
            gain_high: gain(h1.eval(2.0)),
            theta: t.theta,
            riesz_a: t.a,
            riesz_b: t.b,
            h0,
            h1,
            g0,
            g1,
            k0,
            k1,
        }
    }

    /// All-pass kernels `h0 = h1 = g0 = g1 = 1`.
    pub fn identity() -> Self {
        let one = Polynomial::one();
        KernelSet::from_kernels(one.clone(), one.clone(), one.clone(), one, 0, 0)
    }

    /// Filter length `K = k0 + k1`.
    pub fn filter_length(&self) -> usize {
        self.k0 + self.k1
    }
}

/// One admissible assignment of residual roots between `h0` and `g0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitCandidate {
    pub h0_roots: Vec<Complex64>,
    pub g0_roots: Vec<Complex64>,
    pub theta: f64,
    pub scale: f64,
    base: f64,
    product: f64,
}

impl SplitCandidate {
    fn tie_key(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.h0_roots.iter().map(|r| r.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn atoms(roots: &[Complex64]) -> Result<Vec<Vec<Complex64>>, KernelError> {
    let mut out: Vec<Vec<Complex64>> = roots
        .iter()
        .filter(|r| r.im == 0.0)
        .map(|&r| vec![r])
        .collect();
    let lower: Vec<Complex64> = roots.iter().filter(|r| r.im < 0.0).copied().collect();
    let mut used = vec![false; lower.len()];
    for &z in roots.iter().filter(|r| r.im > 0.0) {
        let j = lower
            .iter()
            .enumerate()
            .position(|(j, w)| !used[j] && *w == z.conj())
            .ok_or(PolyError::NonRealResult)?;
        used[j] = true;
        out.push(vec![z, lower[j]]);
    }
    if used.iter().any(|u| !u) {
        return Err(PolyError::NonRealResult.into());
    }
    Ok(out)
}

fn subsets_of_size(atoms: &[Vec<Complex64>], size: usize) -> Vec<Vec<bool>> {
    fn rec(
        atoms: &[Vec<Complex64>],
        i: usize,
        left: usize,
        cur: &mut Vec<bool>,
        out: &mut Vec<Vec<bool>>,
    ) {
        if left == 0 {
            let mut v = cur.clone();
            v.resize(atoms.len(), false);
            out.push(v);
            return;
        }
        if i == atoms.len() {
            return;
        }
        let w = atoms[i].len();
        if w <= left {
            cur.push(true);
            rec(atoms, i + 1, left - w, cur, out);
            cur.pop();
        }
        cur.push(false);
        rec(atoms, i + 1, left, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(atoms, 0, size, &mut Vec::new(), &mut out);
    out
}

fn monic(roots: &[Complex64]) -> Result<Poly64, KernelError> {
    Ok(Polynomial::from_roots(&RootSet {
        roots: roots.to_vec(),
        scale: 1.0,
    })?)
}

fn theta_from_values(v: &[f64], u: &[f64], s: f64) -> (f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (a, b) in v.iter().zip(u) {
        let c = 0.5 * ((s * a).powi(2) + (b / s).powi(2));
        lo = lo.min(c);
        hi = hi.max(c);
    }
    let (a, b) = (lo.sqrt(), hi.sqrt());
    (a, b, 1.0 - (b - a).abs() / (b + a).abs())
}

/// Θ-maximizing scalar split `s` in `SCALE_RANGE`: coarse log scan, then
/// golden-section refinement around the best scan point.
fn optimize_scale(v: &[f64], u: &[f64]) -> (f64, f64) {
    let (lo, hi) = (SCALE_RANGE.0.ln(), SCALE_RANGE.1.ln());
    let step = (hi - lo) / (COARSE_SCALES - 1) as f64;
    let th = |t: f64| theta_from_values(v, u, t.exp()).2;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..COARSE_SCALES {
        let t = th(lo + step * i as f64);
        if t > best {
            best = t;
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (th(c), th(d));
    while b.exp() - a.exp() > SCALE_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = th(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = th(d);
        }
    }
    let t_mid = 0.5 * (a + b);
    let t_best = lo + step * best_i as f64;
    let (f_mid, f_best) = (th(t_mid), th(t_best));
    if f_mid >= f_best {
        (t_mid.exp(), f_mid)
    } else {
        (t_best.exp(), f_best)
    }
}

fn check_split(hb: &HalfBandKernel, k0: usize, k1: usize) -> Result<(), KernelError> {
    let k = hb.order();
    if k0 == 0 || k1 == 0 || k0 + k1 != k {
        return Err(KernelError::InvalidSplit { k0, k1, k });
    }
    Ok(())
}

fn residual_roots(hb: &HalfBandKernel) -> Result<Vec<Complex64>, KernelError> {
    let q = hb.residual().to_f64();
    if q.degree() == 0 {
        return Ok(Vec::new());
    }
    Ok(q.roots()?.roots)
}

/// Every conjugate-consistent split with its Θ at its own optimal scale.
pub fn enumerate_splits(
    hb: &HalfBandKernel,
    k0: usize,
    k1: usize,
) -> Result<Vec<SplitCandidate>, KernelError> {
    check_split(hb, k0, k1)?;
    let roots = residual_roots(hb)?;
    let atoms = atoms(&roots)?;
    let grid = theta_grid();
    let mut out = Vec::new();
    for mask in subsets_of_size(&atoms, k1) {
        let mut sel = Vec::new();
        let mut rest = Vec::new();
        for (atom, &take) in atoms.iter().zip(&mask) {
            if take {
                sel.extend(atom.iter().copied());
            } else {
                rest.extend(atom.iter().copied());
            }
        }
        let (ht, gt) = (monic(&sel)?, monic(&rest)?);
        let h0m0 = (-2f64).powi(k0 as i32) * ht.eval(0.0);
        let g0m0 = (-2f64).powi(k1 as i32) * gt.eval(0.0);
        let product = 2.0 / (h0m0 * g0m0);
        let base = product.abs().sqrt() * h0m0.signum();
        let v: Vec<f64> = grid
            .iter()
            .map(|&x| base * (x - 2.0).powi(k0 as i32) * ht.eval(x))
            .collect();
        let u: Vec<f64> = grid
            .iter()
            .map(|&x| (product / base) * (-x).powi(k1 as i32) * gt.eval(2.0 - x))
            .collect();
        let (scale, theta) = optimize_scale(&v, &u);
        out.push(SplitCandidate {
            h0_roots: sel,
            g0_roots: rest,
            theta,
            scale,
            base,
            product,
        });
    }
    Ok(out)
}

fn nearest_feasible(atoms: &[Vec<Complex64>], k: usize, k1: usize) -> Option<(usize, usize)> {
    (1..k)
        .filter(|&j| !subsets_of_size(atoms, j).is_empty())
        .min_by_key(|&j| (j.abs_diff(k1), j))
        .map(|j| (k - j, j))
}

/// Factors `hb` into graphBior(k0, k1) kernels maximizing Θ.
pub fn factorize(hb: &HalfBandKernel, k0: usize, k1: usize) -> Result<KernelSet, KernelError> {
    let cands = enumerate_splits(hb, k0, k1)?;
    if cands.is_empty() {
        let atoms = atoms(&residual_roots(hb)?)?;
        return Err(KernelError::ParityInfeasible {
            k0,
            k1,
            nearest: nearest_feasible(&atoms, hb.order(), k1),
        });
    }
    let mut best = &cands[0];
    for c in &cands[1..] {
        if c.theta > best.theta + THETA_TIE
            || ((c.theta - best.theta).abs() <= THETA_TIE && c.tie_key() < best.tie_key())
        {
            best = c;
        }
    }
    build_kernels(best, k0, k1)
}

fn mirror_exact(p: &Poly64) -> Poly64 {
    p.to_exact().mirror().to_f64()
}

pub(crate) fn build_kernels(
    c: &SplitCandidate,
    k0: usize,
    k1: usize,
) -> Result<KernelSet, KernelError> {
    let (ht, gt) = (monic(&c.h0_roots)?, monic(&c.g0_roots)?);
    let sh = c.scale * c.base;
    let sg = c.product / sh;
    let at_two = Polynomial::linear(-2.0, 1.0);
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let h0 = (&at_two.pow(k0 as u32) * &ht).scale(sh);
    let g0 = (&at_two.pow(k1 as u32) * &gt).scale(sg);
    let h1 = mirror_exact(&gt).shift_up(k1).scale(sg * sign(k1));
    let g1 = mirror_exact(&ht).shift_up(k0).scale(sh * sign(k0));
    Ok(KernelSet::from_kernels(h0, h1, g0, g1, k0, k1))
}

/// Designs graphBior(k0, k1) from scratch.
pub fn design(k0: usize, k1: usize) -> Result<KernelSet, KernelError> {
    let hb = design_halfband(k0 + k1)?;
    factorize(&hb, k0, k1)
}

/// Graph-independent spectral response of a kernel set at one λ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSample {
    pub lambda: f64,
    pub h0: f64,
    pub h1: f64,
    /// `h0² + h1²`.
    pub c: f64,
    /// `h1(λ)h1(2−λ) − h0(λ)h0(2−λ)`.
    pub d: f64,
    /// `(h0 g0)(λ) + (h0 g0)(2−λ)`, equal to 2 for PR kernels.
    pub pr_check: f64,
}

pub fn spectrum(ks: &KernelSet, points: usize) -> Vec<SpectrumSample> {
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let x = 2.0 * i as f64 / (points - 1) as f64;
            let m = 2.0 - x;
            let (h0, h1) = (ks.h0.eval(x), ks.h1.eval(x));
            SpectrumSample {
                lambda: x,
                h0,
                h1,
                c: h0 * h0 + h1 * h1,
                d: h1 * ks.h1.eval(m) - h0 * ks.h0.eval(m),
                pr_check: h0 * ks.g0.eval(x) + ks.h0.eval(m) * ks.g0.eval(m),
            }
        })
        .collect()
}

/// Deviation report for the perfect-reconstruction conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelReport {
    /// `k0 + k1`.
    pub order: usize,
    /// `max |g0h0 + g1h1 − 2|`.
    pub distortion: f64,
    /// `max |g0(λ)h0(2−λ) − g1(λ)h1(2−λ)|`.
    pub alias: f64,
    /// `max |p(λ) + p(2−λ) − 2|` with `p = h0 g0`.
    pub halfband: f64,
    /// Largest coefficient gap in `h1 = g0(2−λ)` and `g1 = h0(2−λ)`.
    pub mirror: f64,
    pub theta: f64,
    pub gain_low: f64,
    pub gain_high: f64,
    pub curves: Vec<SpectrumSample>,
}

/// PR tolerance on the 1001-point verification grid.
pub const PR_TOL: f64 = 1e-8;
/// Looser tolerance for orders above 16, where monomial evaluation near λ = 2 dominates.
pub const PR_TOL_HIGH_ORDER: f64 = 1e-7;

/// PR tolerance for filter length `k`.
pub fn pr_tolerance(k: usize) -> f64 {
    if k <= 16 {
        PR_TOL
    } else {
        PR_TOL_HIGH_ORDER
    }
}

impl KernelReport {
    pub fn is_pr(&self) -> bool {
        let tol = pr_tolerance(self.order);
        self.distortion <= tol && self.alias <= tol
    }
}

pub fn verify_kernelset(ks: &KernelSet) -> KernelReport {
    let curves = spectrum(ks, 1001);
    let mut distortion: f64 = 0.0;
    let mut alias: f64 = 0.0;
    let mut halfband: f64 = 0.0;
    for s in &curves {
        let x = s.lambda;
        let m = 2.0 - x;
        let d = ks.g0.eval(x) * s.h0 + ks.g1.eval(x) * s.h1 - 2.0;
        let a = ks.g0.eval(x) * ks.h0.eval(m) - ks.g1.eval(x) * ks.h1.eval(m);
        distortion = distortion.max(d.abs());
        alias = alias.max(a.abs());
        halfband = halfband.max((s.pr_check - 2.0).abs());
    }
    let gap = |a: &Poly64, b: &Poly64| {
        let n = a.degree().max(b.degree()) + 1;
        (0..n)
            .map(|k| (a.coeff(k) - b.coeff(k)).abs())
            .fold(0.0, f64::max)
    };
    let mirror = gap(&ks.h1, &mirror_exact(&ks.g0)).max(gap(&ks.g1, &mirror_exact(&ks.h0)));
    KernelReport {
        order: ks.filter_length(),
        distortion,
        alias,
        halfband,
        mirror,
        theta: ks.theta,
        gain_low: ks.gain_low,
        gain_high: ks.gain_high,
        curves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rational;

    /// Closed form p̃(λ) = 2(λ/2)^K Σ_{j<K} C(K−1+j, j)(1−λ/2)^j.
    fn daubechies(k: usize) -> ExactPoly {
        let half = Polynomial::linear(rational(0, 1), rational(1, 2));
        let rest = Polynomial::linear(rational(1, 1), rational(-1, 2));
        let mut sum = Polynomial::zero();
        for j in 0..k {
            let c = BigRational::from_integer(binomial(k - 1 + j, j));
            sum = &sum + &rest.pow(j as u32).scale(c);
        }
        (&half.pow(k as u32) * &sum).scale(rational(2, 1))
    }

    #[test]
    fn matches_closed_form_for_all_orders() {
        for k in 1..=MAX_K {
            let hb = design_halfband(k).unwrap();
            assert_eq!(hb.exact().mirror(), daubechies(k), "K={k}");
        }
    }

    #[test]
    fn order_one_and_two() {
        let one = design_halfband(1).unwrap();
        assert_eq!(one.p().coeffs(), &[2.0, -1.0]);
        let two = design_halfband(2).unwrap();
        assert_eq!(
            two.residual_l().coeffs(),
            &[rational(1, 1), rational(-1, 2)]
        );
        assert_eq!(two.p().mirror().coeffs(), &[0.0, 0.0, 1.5, -0.5]);
        // ½(2−λ)²(1+λ)
        let want =
            (&Polynomial::linear(2.0, -1.0).pow(2) * &Polynomial::linear(1.0, 1.0)).scale(0.5);
        assert_eq!(two.p(), &want);
    }

    #[test]
    fn halfband_identity_holds_exactly() {
        for k in 1..=MAX_K {
            let hb = design_halfband(k).unwrap();
            assert_eq!(hb.halfband_deviation(), 0.0, "K={k}");
            assert_eq!(hb.p().degree(), 2 * k - 1);
        }
    }

    #[test]
    fn endpoints_and_zero_multiplicity() {
        for k in 2..=12 {
            let hb = design_halfband(k).unwrap();
            let p = hb.p();
            assert!((p.eval(0.0) - 2.0).abs() <= 1e-9);
            assert!(p.eval(2.0).abs() <= 1e-9);
            // K-fold zero at 2: p and its first K−1 derivatives vanish there
            let mut d = hb.exact().clone();
            for _ in 0..k {
                assert!(d.eval(rational(2, 1)).is_zero());
                d = d.derivative();
            }
            assert!(!d.eval(rational(2, 1)).is_zero());
        }
    }

    #[test]
    fn order_twelve_example() {
        let hb = design_halfband(12).unwrap();
        assert_eq!(hb.p().degree(), 23);
        assert_eq!(hb.p().eval(0.0), 2.0);
    }

    #[test]
    fn design_form_has_k_zeros_at_origin() {
        let hb = design_halfband(6).unwrap();
        let rs = hb.p().mirror().roots().unwrap();
        assert_eq!(rs.roots.iter().filter(|r| r.norm() == 0.0).count(), 6);
    }

    #[test]
    fn rejects_out_of_range_orders() {
        assert_eq!(design_halfband(0), Err(KernelError::InvalidOrder(0)));
        assert_eq!(
            design_halfband(MAX_K + 1),
            Err(KernelError::InvalidOrder(MAX_K + 1))
        );
    }

    #[test]
    fn deterministic() {
        assert_eq!(design_halfband(14).unwrap(), design_halfband(14).unwrap());
        assert_eq!(design(5, 5).unwrap(), design(5, 5).unwrap());
    }

    #[test]
    fn bior_one_one_closed_form() {
        let ks = design(1, 1).unwrap();
        // h0 ∝ (2−λ)(1+λ), g0 ∝ (2−λ), h1 ∝ λ
        let h0 = ks.h0.scale(1.0 / ks.h0.eval(0.0));
        assert!((h0.coeff(0) - 1.0).abs() < 1e-14);
        assert!((h0.coeff(1) - 0.5).abs() < 1e-14);
        assert!((h0.coeff(2) + 0.5).abs() < 1e-14);
        assert_eq!(ks.g0.degree(), 1);
        assert!((ks.g0.eval(2.0)).abs() < 1e-14);
        assert_eq!(ks.h1.degree(), 1);
        assert_eq!(ks.h1.coeff(0), 0.0);
    }

    #[test]
    fn kernel_degrees_and_trailing_zeros() {
        for (k0, k1) in [(1, 1), (2, 2), (3, 2), (4, 4), (6, 6), (8, 8)] {
            let ks = design(k0, k1).unwrap();
            let k = k0 + k1;
            assert_eq!(ks.h0.degree(), k);
            assert_eq!(ks.g0.degree(), k - 1);
            assert_eq!(ks.h1.degree(), k - 1);
            assert_eq!(ks.g1.degree(), k);
            assert!(ks.h1.coeffs()[..k1].iter().all(|&c| c == 0.0));
            assert!(ks.h1.coeff(k1) != 0.0);
            assert!(ks.g1.coeffs()[..k0].iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn mirror_relations_and_idempotence() {
        for (k0, k1) in [(2, 2), (4, 4), (5, 4), (6, 6)] {
            let ks = design(k0, k1).unwrap();
            let report = verify_kernelset(&ks);
            assert!(
                report.mirror <= 1e-10,
                "({k0},{k1}) mirror gap {}",
                report.mirror
            );
            let exact = ks.h1.to_exact();
            assert_eq!(exact.mirror().mirror(), exact);
        }
    }

    #[test]
    fn product_equals_halfband_kernel() {
        for (k0, k1) in [(2, 2), (3, 3), (5, 3), (6, 6), (8, 8)] {
            let hb = design_halfband(k0 + k1).unwrap();
            let ks = factorize(&hb, k0, k1).unwrap();
            let prod = &ks.h0 * &ks.g0;
            let scale = hb.p().max_abs_coeff();
            for k in 0..=hb.p().degree() {
                assert!((prod.coeff(k) - hb.p().coeff(k)).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn every_split_reconstructs_the_product() {
        let hb = design_halfband(8).unwrap();
        for c in enumerate_splits(&hb, 4, 4).unwrap() {
            let ks = build_kernels(&c, 4, 4).unwrap();
            let prod = &ks.h0 * &ks.g0;
            let scale = hb.p().max_abs_coeff();
            for k in 0..=7 {
                assert!((prod.coeff(k) - hb.p().coeff(k)).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn chosen_split_is_exhaustive_maximum() {
        for (k0, k1) in [(3, 3), (4, 4), (5, 5), (6, 6), (8, 8)] {
            let hb = design_halfband(k0 + k1).unwrap();
            let cands = enumerate_splits(&hb, k0, k1).unwrap();
            let ks = factorize(&hb, k0, k1).unwrap();
            for c in &cands {
                assert!(
                    ks.theta >= c.theta - 1e-6,
                    "({k0},{k1}) {} < {}",
                    ks.theta,
                    c.theta
                );
            }
        }
    }

    #[test]
    fn optimal_scale_is_local_maximum() {
        let ks = design(6, 6).unwrap();
        let grid = theta_grid();
        for s in [0.98, 0.99, 1.01, 1.02] {
            let t = theta_of(&ks.h0.scale(s), &ks.h1.scale(1.0 / s), &grid).theta;
            assert!(t <= ks.theta + 1e-9);
        }
    }

    #[test]
    fn designed_kernels_are_pr() {
        for k in 2..=MAX_K {
            let (k0, k1) = (k - k / 2, k / 2);
            let ks = match design(k0, k1) {
                Ok(ks) => ks,
                Err(KernelError::ParityInfeasible {
                    nearest: Some((a, b)),
                    ..
                }) => design(a, b).unwrap(),
                Err(e) => panic!("{e}"),
            };
            let r = verify_kernelset(&ks);
            println!(
                "K={k}: {:.2e} {:.2e} {:.2e}",
                r.distortion, r.alias, r.halfband
            );
            // monomial evaluation error grows past the 1e-8 contract beyond K = 16
            let tol = pr_tolerance(k);
            assert!(
                r.distortion <= tol && r.alias <= tol && r.halfband <= tol,
                "K={k}"
            );
        }
    }

    #[test]
    fn equal_splits_have_high_theta() {
        for k in 4..=8 {
            let ks = design(k, k).unwrap();
            assert!(ks.theta >= 0.8, "({k},{k}) theta {}", ks.theta);
        }
    }

    #[test]
    fn gains_follow_endpoint_values() {
        let ks = design(4, 4).unwrap();
        assert!((ks.gain_low - 1.0 / ks.h0.eval(0.0).abs()).abs() < 1e-15);
        assert!((ks.gain_high - 1.0 / ks.h1.eval(2.0).abs()).abs() < 1e-15);
        assert!(ks.h0.eval(0.0) > 0.0);
    }

    #[test]
    fn invalid_splits() {
        let hb = design_halfband(4).unwrap();
        assert!(matches!(
            factorize(&hb, 4, 0),
            Err(KernelError::InvalidSplit { .. })
        ));
        assert!(matches!(
            factorize(&hb, 2, 3),
            Err(KernelError::InvalidSplit { .. })
        ));
    }

    #[test]
    fn parity_infeasibility_reports_nearest() {
        // find a (k0,k1) whose residual has no conjugate-consistent split
        let mut seen = false;
        for k in 3..=12 {
            let hb = design_halfband(k).unwrap();
            for k1 in 1..k {
                if let Err(KernelError::ParityInfeasible { nearest, .. }) =
                    factorize(&hb, k - k1, k1)
                {
                    let (a, b) = nearest.unwrap();
                    assert_eq!(a + b, k);
                    assert!(factorize(&hb, a, b).is_ok());
                    seen = true;
                }
            }
        }
        assert!(seen);
    }

    #[test]
    fn identity_set_is_pr() {
        let r = verify_kernelset(&KernelSet::identity());
        assert!(r.is_pr());
        assert_eq!(r.halfband, 0.0);
    }

    #[test]
    fn broken_mirror_is_flagged() {
        let one = Polynomial::one();
        let ks = KernelSet::from_kernels(
            one.clone(),
            one.clone(),
            one.clone(),
            Polynomial::constant(-1.0),
            0,
            0,
        );
        let r = verify_kernelset(&ks);
        assert!(!r.is_pr());
        assert!(r.alias > 1.0 && r.distortion > 1.0);
        assert!(r.mirror > 1.0);
    }

    #[test]
    fn dissimilar_split_has_lower_theta() {
        let bal = design(8, 8).unwrap();
        let skew = design(2, 14).or_else(|_| design(3, 13)).unwrap();
        assert!(skew.theta < bal.theta);
    }
}
