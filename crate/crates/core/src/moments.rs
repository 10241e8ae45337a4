//! Moment polynomials `p_k` with `Σ_n n^{2k} G(t,n) = p_k(2t)`.
//!
//! `p_0 = 1` and, for `k ≥ 1`, `p_k' = Σ_{j<k} C(2k,2j) p_j` with
//! `p_k(0) = 0`. Coefficients are exact big integers; real roots are
//! isolated with Sturm sequences over exact rationals.

use std::fmt;

use num_bigint::BigInt;
use num_integer::{binomial, Integer};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::kernel::{KernelError, KernelSlice};
use crate::sum::NeumaierSum;

/// Largest `k` accepted by [`moment_polynomials`].
pub const K_MAX: usize = 64;
/// Largest degree accepted by [`poly_real_roots`].
pub const ROOT_DEGREE_MAX: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("k_max = {0} exceeds the supported maximum {K_MAX}")]
    KMaxTooLarge(usize),
    #[error("inexact division computing coefficient a[{k},{n}]")]
    InexactDivision { k: usize, n: usize },
    #[error("degree {0} exceeds the root-finding maximum {ROOT_DEGREE_MAX}")]
    DegreeTooLarge(usize),
    #[error("root tolerance must be at least 1e-12, got {0}")]
    InvalidTolerance(f64),
    #[error("isolated {found} real roots, expected {expected}")]
    RootCountMismatch { expected: usize, found: usize },
    #[error("n^{order} overflows binary64 on a window of half-width {window}")]
    Overflow { order: u32, window: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Integer-coefficient polynomial, constant term first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    /// Trailing zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigInt::zero());
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficient of `t^n`; zero beyond the degree.
    pub fn coeff(&self, n: usize) -> BigInt {
        self.coeffs.get(n).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    fn to_rational(&self) -> RatPoly {
        RatPoly(
            self.coeffs
                .iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect(),
        )
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() && self.degree() > 0 {
                continue;
            }
            if !first {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                f.write_str("-")?;
            }
            first = false;
            let mag = c.abs();
            match n {
                0 => write!(f, "{mag}")?,
                _ if mag.is_one() => {}
                _ => write!(f, "{mag}")?,
            }
            match n {
                0 => {}
                1 => f.write_str("t")?,
                _ => write!(f, "t^{n}")?,
            }
        }
        Ok(())
    }
}

/// `p_0, …, p_{k_max}` with exact integer coefficients.
#[allow(clippy::needless_range_loop)]
pub fn moment_polynomials(k_max: usize) -> Result<Vec<IntPolynomial>, MomentError> {
    if k_max > K_MAX {
        return Err(MomentError::KMaxTooLarge(k_max));
    }
    // a[k][n] is the coefficient of t^n in p_k; a[j][0] = δ_{j0}.
    let mut a: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    for k in 1..=k_max {
        let two_k = BigInt::from(2 * k);
        let binom: Vec<BigInt> = (0..k)
            .map(|j| binomial(two_k.clone(), BigInt::from(2 * j)))
            .collect();
        let mut row = vec![BigInt::zero(); k + 1];
        for n in 1..=k {
            let mut acc = BigInt::zero();
            for j in (n - 1)..k {
                if let Some(prev) = a[j].get(n - 1) {
                    acc += &binom[j] * prev;
                }
            }
            let (q, r) = acc.div_rem(&BigInt::from(n));
            if !r.is_zero() {
                return Err(MomentError::InexactDivision { k, n });
            }
            row[n] = q;
        }
        a.push(row);
    }
    Ok(a.into_iter().map(IntPolynomial::new).collect())
}

/// Horner evaluation in binary64.
pub fn poly_eval(p: &IntPolynomial, x: f64) -> f64 {
    p.coeffs
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
}

/// `(2k−1)!!`, with `(−1)!! = 1`.
pub fn double_factorial_odd(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(2 * i - 1))
}

/// `p_k(2t) · k! / ((2k)! · t^k)`, the ratio of the lattice moment of order
/// `2k` to the matching Gaussian moment on ℝ.
pub fn continuum_moment_ratio(p: &IntPolynomial, k: usize, t: f64) -> f64 {
    let gaussian: f64 = ((k + 1)..=(2 * k)).map(|i| i as f64).product::<f64>() * t.powi(k as i32);
    poly_eval(p, 2.0 * t) / gaussian
}

#[derive(Clone, Debug, PartialEq)]
struct RatPoly(Vec<BigRational>);

impl RatPoly {
    fn trim(mut self) -> Self {
        while self.0.len() > 1 && self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    fn eval(&self, x: &BigRational) -> BigRational {
        self.0
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    fn derivative(&self) -> Self {
        let d = self
            .0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| c * BigRational::from_integer(BigInt::from(n)))
            .collect::<Vec<_>>();
        if d.is_empty() {
            Self(vec![BigRational::zero()])
        } else {
            Self(d).trim()
        }
    }

    fn rem(&self, divisor: &Self) -> Self {
        let mut r = self.0.clone();
        let dd = divisor.degree();
        let lead = divisor.0[dd].clone();
        while r.len() > dd && !r.is_empty() {
            let top = r.len() - 1;
            let factor = &r[top] / &lead;
            let shift = top - dd;
            for (i, c) in divisor.0.iter().enumerate() {
                r[shift + i] -= &factor * c;
            }
            r.pop();
        }
        if r.is_empty() {
            r.push(BigRational::zero());
        }
        Self(r).trim()
    }

    fn sign_at_infinity(&self, positive: bool) -> i32 {
        let lead = &self.0[self.degree()];
        let s = if lead.is_positive() {
            1
        } else if lead.is_negative() {
            -1
        } else {
            0
        };
        if positive || self.degree().is_multiple_of(2) {
            s
        } else {
            -s
        }
    }
}

fn sign(x: &BigRational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

struct SturmChain(Vec<RatPoly>);

impl SturmChain {
    fn new(p: &RatPoly) -> Self {
        let mut chain = vec![p.clone(), p.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[n - 2].rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(RatPoly(r.0.into_iter().map(|c| -c).collect()));
        }
        Self(chain)
    }

    fn variations<I: Iterator<Item = i32>>(signs: I) -> usize {
        let mut last = 0;
        let mut count = 0;
        for s in signs.filter(|&s| s != 0) {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    fn variations_at(&self, x: &BigRational) -> usize {
        Self::variations(self.0.iter().map(|p| sign(&p.eval(x))))
    }

    /// Distinct real roots in `(a, b]`.
    fn count(&self, a: &BigRational, b: &BigRational) -> usize {
        self.variations_at(a) - self.variations_at(b)
    }

    fn count_real_line(&self) -> usize {
        let lo = Self::variations(self.0.iter().map(|p| p.sign_at_infinity(false)));
        let hi = Self::variations(self.0.iter().map(|p| p.sign_at_infinity(true)));
        lo - hi
    }
}

/// All real roots of `p`, ascending, each to within `tol`.
///
/// Roots at the origin are exact. The remaining roots are isolated by
/// Sturm-sequence subdivision and refined by sign-change bisection, both in
/// exact rational arithmetic, then polished in binary64 inside the bracket.
/// Fails unless exactly `deg(p)` real roots (counted with multiplicity at the
/// origin) are found, as happens for every `p_k`.
pub fn poly_real_roots(p: &IntPolynomial, tol: f64) -> Result<Vec<f64>, MomentError> {
    if p.degree() > ROOT_DEGREE_MAX {
        return Err(MomentError::DegreeTooLarge(p.degree()));
    }
    if !(tol >= 1e-12) {
        return Err(MomentError::InvalidTolerance(tol));
    }
    let zero_mult = p.coeffs.iter().take_while(|c| c.is_zero()).count();
    let reduced = IntPolynomial::new(p.coeffs[zero_mult..].to_vec());
    let q = reduced.to_rational();

    let mut roots = vec![0.0; zero_mult];
    if reduced.degree() > 0 {
        let chain = SturmChain::new(&q);
        let total = chain.count_real_line();
        let bound = root_bound(&reduced);
        let lo = BigRational::from_integer(-bound.clone());
        let hi = BigRational::from_integer(bound);
        let mut brackets = Vec::new();
        isolate(&chain, lo, hi, &mut brackets);
        if brackets.len() != total {
            return Err(MomentError::RootCountMismatch {
                expected: total,
                found: brackets.len(),
            });
        }
        let tol_q = rational_from_f64(tol / 4.0);
        for (a, b) in brackets {
            roots.push(refine(&q, &chain, a, b, &tol_q));
        }
    }
    roots.sort_by(f64::total_cmp);
    if roots.len() != p.degree() {
        return Err(MomentError::RootCountMismatch {
            expected: p.degree(),
            found: roots.len(),
        });
    }
    Ok(roots)
}

/// Cauchy bound `1 + max|a_i / a_lead|`, rounded up.
fn root_bound(p: &IntPolynomial) -> BigInt {
    let lead = p.coeffs[p.degree()].abs();
    let max = p.coeffs[..p.degree()]
        .iter()
        .map(|c| {
            let (q, r) = c.abs().div_rem(&lead);
            if r.is_zero() {
                q
            } else {
                q + 1
            }
        })
        .max()
        .unwrap_or_else(BigInt::zero);
    max + 1
}

fn isolate(
    chain: &SturmChain,
    a: BigRational,
    b: BigRational,
    out: &mut Vec<(BigRational, BigRational)>,
) {
    match chain.count(&a, &b) {
        0 => {}
        1 => out.push((a, b)),
        _ => {
            let mid = (&a + &b) / BigRational::from_integer(BigInt::from(2));
            isolate(chain, a, mid.clone(), out);
            isolate(chain, mid, b, out);
        }
    }
}

fn refine(
    q: &RatPoly,
    chain: &SturmChain,
    mut a: BigRational,
    mut b: BigRational,
    tol: &BigRational,
) -> f64 {
    let two = BigRational::from_integer(BigInt::from(2));
    if q.eval(&b).is_zero() {
        return b.to_f64().unwrap_or(f64::NAN);
    }
    // The bracket is half-open; move `a` off a root owned by the left neighbour.
    while q.eval(&a).is_zero() {
        let mid = (&a + &b) / &two;
        if chain.count(&mid, &b) == 1 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut sa = sign(&q.eval(&a));
    while &b - &a > *tol {
        let mid = (&a + &b) / &two;
        let sm = sign(&q.eval(&mid));
        if sm == 0 {
            return mid.to_f64().unwrap_or(f64::NAN);
        }
        if sm == sa {
            a = mid;
            sa = sm;
        } else {
            b = mid;
        }
    }
    let lo = a.to_f64().unwrap_or(f64::NAN);
    let hi = b.to_f64().unwrap_or(f64::NAN);
    polish(q, lo, hi)
}

/// Newton steps in binary64, kept only while they stay inside `[lo, hi]`.
fn polish(q: &RatPoly, lo: f64, hi: f64) -> f64 {
    let c: Vec<f64> = q.0.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let (mut v, mut d) = (0.0, 0.0);
        for &ci in c.iter().rev() {
            d = d * x + v;
            v = v * x + ci;
        }
        if d == 0.0 {
            break;
        }
        let next = x - v / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        x = next;
    }
    x
}

fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

/// A weighted kernel sum with its certified truncation bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedMoment {
    pub value: f64,
    pub tail_bound: f64,
    pub window: usize,
}

// Relative target for the n^order-weighted tail.
const MOMENT_TAIL_TARGET: f64 = 1e-14;

/// `Σ_n n^order G(t,n)` with compensated summation.
///
/// The mass tail of a slice does not control `n^order`-weighted mass, so a
/// weighted tail bound is derived from the geometric decay at the window
/// edge and the window is widened until that bound is below `1e-14` of the
/// absolute weighted sum.
pub fn kernel_moment(slice: &KernelSlice, order: u32) -> Result<f64, MomentError> {
    kernel_moment_certified(slice, order).map(|m| m.value)
}

pub fn kernel_moment_certified(
    slice: &KernelSlice,
    order: u32,
) -> Result<CertifiedMoment, MomentError> {
    let mut current = slice.clone();
    loop {
        let n = current.window();
        if n == 0 || current.t() == 0.0 {
            let value = if order == 0 { current.get(0) } else { 0.0 };
            return Ok(CertifiedMoment {
                value,
                tail_bound: current.tail_mass(),
                window: n,
            });
        }
        let edge = (n as f64).powi(order as i32);
        if !edge.is_finite() {
            return Err(MomentError::Overflow { order, window: n });
        }
        let (value, magnitude) = weighted_sums(&current, order);
        let tail = weighted_tail(&current, order);
        if tail <= MOMENT_TAIL_TARGET * magnitude {
            return Ok(CertifiedMoment {
                value,
                tail_bound: tail,
                window: n,
            });
        }
        current = KernelSlice::with_min_window(current.t(), 1e-16, 2 * n)?;
    }
}

/// `(Σ n^k G, Σ |n|^k G)`; terms at `±n` are combined before accumulation.
fn weighted_sums(slice: &KernelSlice, order: u32) -> (f64, f64) {
    let w = slice.window() as i64;
    let mut signed = NeumaierSum::new();
    let mut absolute = NeumaierSum::new();
    for n in (1..=w).rev() {
        let weight = (n as f64).powi(order as i32);
        let (plus, minus) = (slice.get(n), slice.get(-n));
        let odd = order % 2 == 1;
        signed.add(weight * if odd { plus - minus } else { plus + minus });
        absolute.add(weight * (plus + minus));
    }
    if order == 0 {
        signed.add(slice.get(0));
        absolute.add(slice.get(0));
    }
    (signed.value(), absolute.value())
}

/// `2·N^k·G_N·g/(1−g)` with `g = r(1+1/N)^k`, `r = G_N/G_{N−1}`;
/// infinite when `g ≥ 1`.
fn weighted_tail(slice: &KernelSlice, order: u32) -> f64 {
    let n = slice.window() as i64;
    let edge = slice.get(n);
    if edge == 0.0 {
        return 0.0;
    }
    let r = edge / slice.get(n - 1);
    let g = r * (1.0 + 1.0 / n as f64).powi(order as i32);
    if g >= 1.0 {
        return f64::INFINITY;
    }
    2.0 * (n as f64).powi(order as i32) * edge * g / (1.0 - g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::heat_kernel;

    fn p(k: usize) -> IntPolynomial {
        moment_polynomials(k).unwrap().pop().unwrap()
    }

    #[test]
    fn small_polynomials() {
        assert_eq!(p(0), IntPolynomial::from_i64(&[1]));
        assert_eq!(p(1), IntPolynomial::from_i64(&[0, 1]));
        assert_eq!(p(2), IntPolynomial::from_i64(&[0, 1, 3]));
        assert_eq!(
            p(6),
            IntPolynomial::from_i64(&[0, 1, 1023, 21120, 65835, 51975, 10395])
        );
        assert_eq!(p(5).coeff(5), BigInt::from(945));
        assert_eq!(p(2).to_string(), "t + 3t^2");
    }

    #[test]
    fn rejects_large_k() {
        assert_eq!(moment_polynomials(65), Err(MomentError::KMaxTooLarge(65)));
        let all = moment_polynomials(64).unwrap();
        assert_eq!(all[64].degree(), 64);
        assert_eq!(all[64].coeff(64), double_factorial_odd(64));
    }

    #[test]
    fn evaluation() {
        assert_eq!(poly_eval(&p(1), 2.0), 2.0);
        assert_eq!(poly_eval(&p(2), 2.0), 14.0);
        assert_eq!(poly_eval(&p(0), -7.5), 1.0);
    }

    #[test]
    fn roots_of_p2_and_p3() {
        let r2 = poly_real_roots(&p(2), 1e-12).unwrap();
        assert_eq!(r2.len(), 2);
        assert!((r2[0] + 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r2[1], 0.0);
        // 15t² + 15t + 1 = 0 by the quadratic formula.
        let d = (225.0f64 - 60.0).sqrt();
        let r3 = poly_real_roots(&p(3), 1e-12).unwrap();
        assert!((r3[0] - (-15.0 - d) / 30.0).abs() < 1e-12);
        assert!((r3[1] - (-15.0 + d) / 30.0).abs() < 1e-12);
        assert_eq!(r3[2], 0.0);
    }

    #[test]
    fn p5_against_direct_moment_sum() {
        // Σ n^10 G(0.5, n) = 6556 and the zeros below, both from 40-digit mpmath.
        let p5 = p(5);
        assert_eq!(p5, IntPolynomial::from_i64(&[0, 1, 255, 2205, 3150, 945]));
        assert_eq!(poly_eval(&p5, 1.0), 6556.0);
        let expected = [
            -2.41240022657239,
            -0.778144161637362,
            -0.138725422216669,
            -0.00406352290691178,
            0.0,
        ];
        let r = poly_real_roots(&p5, 1e-12).unwrap();
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn roots_with_rational_and_repeated_structure() {
        // t²(2t + 1)(t − 3): root −1/2 lies on a bisection point.
        let q = IntPolynomial::from_i64(&[0, 0, -3, -5, 2]);
        let r = poly_real_roots(&q, 1e-12).unwrap();
        assert_eq!(r.len(), 4);
        assert!((r[0] + 0.5).abs() < 1e-12);
        assert!((r[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn root_count_mismatch_is_reported() {
        // t² + 1 has no real roots.
        let q = IntPolynomial::from_i64(&[1, 0, 1]);
        assert!(matches!(
            poly_real_roots(&q, 1e-12),
            Err(MomentError::RootCountMismatch {
                expected: 2,
                found: 0
            })
        ));
        assert_eq!(
            poly_real_roots(&p(13), 1e-12),
            Err(MomentError::DegreeTooLarge(13))
        );
        assert!(matches!(
            poly_real_roots(&p(2), 1e-13),
            Err(MomentError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn kernel_moments_at_one() {
        let k = heat_kernel(1.0, 1e-12).unwrap();
        assert!((kernel_moment(&k, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!((kernel_moment(&k, 2).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(kernel_moment(&k, 3).unwrap(), 0.0);
    }

    #[test]
    fn moment_window_widens_for_high_orders() {
        let k = heat_kernel(0.5, 1e-12).unwrap();
        let m = kernel_moment_certified(&k, 12).unwrap();
        assert!(m.window > k.window());
        let exact = poly_eval(&p(6), 1.0);
        assert!((m.value - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn moment_overflow_is_reported() {
        let k = heat_kernel(10.0, 1e-12).unwrap();
        assert!(matches!(
            kernel_moment(&k, 400),
            Err(MomentError::Overflow { .. })
        ));
    }
}
