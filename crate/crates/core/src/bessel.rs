//! Exponentially scaled modified Bessel functions `b_n(τ) = e^{-τ} I_n(τ)`.
//!
//! The production path is a Miller backward recurrence normalised with the
//! generating-function identity `Σ_{n∈ℤ} b_n(τ) = 1`. Two independent
//! oracles (the defining power series and the confluent hypergeometric
//! expansion) are provided for cross-validation only.

use thiserror::Error;

use crate::sum::{compensated_sum, NeumaierSum};

/// Largest argument accepted by [`scaled_bessel_series`].
pub const SERIES_TAU_MAX: f64 = 30.0;

/// Largest argument accepted by [`scaled_bessel_kummer`]; beyond it the
/// `e^{-2τ}` prefactor underflows.
pub const KUMMER_TAU_MAX: f64 = 300.0;

// Raw recurrence values are rescaled once they exceed this.
const RESCALE_THRESHOLD: f64 = 1e100;

// Below this argument the recurrence ratios 2n/τ overflow; two series
// terms are exact to rounding there.
const TINY_TAU: f64 = 1e-100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("argument must be finite and non-negative, got {0}")]
    InvalidArgument(f64),
    #[error("tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("argument {tau} outside the oracle range [0, {max}]")]
    OutsideOracleRange { tau: f64, max: f64 },
    #[error("negative order {0}; use the symmetry b_-n = b_n")]
    NegativeOrder(i64),
    #[error("hypergeometric series did not converge within {0} terms")]
    NonConvergence(usize),
    #[error("finite-difference step {h} must satisfy 0 < h < tau = {tau}")]
    InvalidStep { tau: f64, h: f64 },
}

/// The values `b_n(τ)` for `0 ≤ n ≤ half_width`, with `b_{-n} = b_n` implied.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledBesselRow {
    tau: f64,
    half_width: usize,
    values: Vec<f64>,
    tail_bound: f64,
}

impl ScaledBesselRow {
    /// Row whose two-sided truncated tail is certified below `eps`.
    pub fn new(tau: f64, eps: f64) -> Result<Self, BesselError> {
        Self::with_min_half_width(tau, eps, 0)
    }

    /// Like [`ScaledBesselRow::new`], but carries at least `min_half_width`
    /// entries. Used when a weighted sum needs a wider window than the
    /// mass tail alone would ask for.
    pub fn with_min_half_width(
        tau: f64,
        eps: f64,
        min_half_width: usize,
    ) -> Result<Self, BesselError> {
        check_tau(tau)?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(BesselError::InvalidTolerance(eps));
        }
        if tau == 0.0 {
            let mut values = vec![0.0; min_half_width + 1];
            values[0] = 1.0;
            return Ok(Self {
                tau,
                half_width: min_half_width,
                values,
                tail_bound: 0.0,
            });
        }

        let mut start = miller_start(tau).max(2 * min_half_width + 30);
        loop {
            let full = if tau < TINY_TAU {
                tiny_argument_row(tau, start)
            } else {
                miller_row(tau, start)
            };
            if let Some((width, tail)) = select_half_width(&full, eps, min_half_width) {
                let mut values = full;
                values.truncate(width + 1);
                return Ok(Self {
                    tau,
                    half_width: width,
                    values,
                    tail_bound: tail,
                });
            }
            start *= 2;
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Values for `n = 0..=half_width`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Certified bound on `2·Σ_{n>N} b_n(τ)`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `b_n(τ)` for any integer `n`; zero outside the carried window.
    pub fn get(&self, n: i64) -> f64 {
        self.values
            .get(n.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// `b_0 + 2·Σ_{n=1..N} b_n`.
    pub fn mass(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for v in self.values.iter().skip(1).rev() {
            acc.add(2.0 * v);
        }
        acc.add(self.values[0]);
        acc.value()
    }
}

/// Backward-recurrence start index `max(20, ⌈τ + 12√τ + 30⌉)`.
pub fn miller_start(tau: f64) -> usize {
    let m = (tau + 12.0 * tau.sqrt() + 30.0).ceil();
    (m as usize).max(20)
}

/// Row of scaled Bessel values with certified tail below `eps`.
pub fn scaled_bessel_row(tau: f64, eps: f64) -> Result<ScaledBesselRow, BesselError> {
    ScaledBesselRow::new(tau, eps)
}

fn check_tau(tau: f64) -> Result<(), BesselError> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(BesselError::InvalidArgument(tau))
    }
}

/// Normalised Miller recurrence, values for `n = 0..=start`.
fn miller_row(tau: f64, start: usize) -> Vec<f64> {
    let mut v = vec![0.0; start + 2];
    v[start] = 1.0;
    let two_over_tau = 2.0 / tau;
    for n in (1..=start).rev() {
        let next = (n as f64) * two_over_tau * v[n] + v[n + 1];
        v[n - 1] = next;
        if next > RESCALE_THRESHOLD {
            for x in &mut v[n - 1..] {
                *x /= RESCALE_THRESHOLD;
            }
        }
    }
    v.truncate(start + 1);
    let norm = compensated_sum(
        v.iter()
            .enumerate()
            .rev()
            .map(|(n, &x)| if n == 0 { x } else { 2.0 * x }),
    );
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn tiny_argument_row(tau: f64, start: usize) -> Vec<f64> {
    let half = 0.5 * tau;
    let scale = (-tau).exp();
    let mut v = vec![0.0; start + 1];
    let mut lead = scale;
    for (n, slot) in v.iter_mut().enumerate() {
        if n > 0 {
            lead *= half / n as f64;
        }
        *slot = lead * (1.0 + half * half / (n as f64 + 1.0));
        if lead == 0.0 {
            break;
        }
    }
    v
}

/// Smallest `N ≥ max(1, min)` whose one-sided geometric tail estimate
/// `b_N·r/(1-r)`, `r = b_N/b_{N-1}`, is below `eps/4`. The ratios
/// `b_{n+1}/b_n` decrease in `n`, so the estimate is an upper bound.
/// Returns the width and the two-sided bound.
fn select_half_width(values: &[f64], eps: f64, min: usize) -> Option<(usize, f64)> {
    let last = values.len() - 1;
    // Entries near the recurrence start are unreliable.
    let usable = last.saturating_sub(10).max(1);
    for n in min.max(1)..=usable {
        let cur = values[n];
        if cur == 0.0 {
            let underflow = 2.0 * f64::MIN_POSITIVE * values.len() as f64;
            return Some((n, underflow));
        }
        let ratio = cur / values[n - 1];
        if ratio >= 1.0 {
            continue;
        }
        let one_side = cur * ratio / (1.0 - ratio);
        if one_side < 0.25 * eps {
            return Some((n, 2.0 * one_side));
        }
    }
    None
}

/// Power-series oracle `e^{-τ}·Σ_m (τ/2)^{2m+n}/(m!(m+n)!)`.
pub fn scaled_bessel_series(tau: f64, n: i64) -> Result<f64, BesselError> {
    check_tau(tau)?;
    if tau > SERIES_TAU_MAX {
        return Err(BesselError::OutsideOracleRange {
            tau,
            max: SERIES_TAU_MAX,
        });
    }
    if n < 0 {
        return Err(BesselError::NegativeOrder(n));
    }
    let half = 0.5 * tau;
    let mut term = (-tau).exp();
    for j in 1..=n {
        term *= half / j as f64;
    }
    let quarter_sq = half * half;
    let mut acc = NeumaierSum::new();
    let mut m = 0u64;
    loop {
        acc.add(term);
        m += 1;
        term *= quarter_sq / (m as f64 * (m as f64 + n as f64));
        if term <= 1e-18 * acc.value() || term == 0.0 {
            break;
        }
    }
    Ok(acc.value())
}

/// Confluent hypergeometric oracle:
/// `b_n(τ) = e^{-2τ}(τ/2)^n/n! · Σ_k [Γ(n+k+½)/Γ(n+½)]·[(2n)!/(2n+k)!]·(2τ)^k/k!`.
///
/// Summation stops once terms are negligible and the ratio of consecutive
/// terms is below one half; reaching `terms` first is an error.
pub fn scaled_bessel_kummer(tau: f64, n: i64, terms: usize) -> Result<f64, BesselError> {
    check_tau(tau)?;
    if tau > KUMMER_TAU_MAX {
        return Err(BesselError::OutsideOracleRange {
            tau,
            max: KUMMER_TAU_MAX,
        });
    }
    if n < 0 {
        return Err(BesselError::NegativeOrder(n));
    }
    let nf = n as f64;
    let mut term = (-2.0 * tau).exp();
    for j in 1..=n {
        term *= 0.5 * tau / j as f64;
    }
    let mut acc = NeumaierSum::new();
    for k in 0..terms {
        acc.add(term);
        let kf = k as f64;
        let ratio = (nf + kf + 0.5) / (2.0 * nf + kf + 1.0) * (2.0 * tau) / (kf + 1.0);
        term *= ratio;
        if ratio < 0.5 && (term <= 1e-18 * acc.value() || term == 0.0) {
            return Ok(acc.value());
        }
    }
    Err(BesselError::NonConvergence(terms))
}

/// `|central difference of b_n at τ − (½(b_{n-1}+b_{n+1}) − b_n)|`.
///
/// Checks the differential-difference relation `∂_τ I_n = ½(I_{n-1}+I_{n+1})`
/// in scaled form.
pub fn scaled_derivative_residual(tau: f64, n: i64, h: f64) -> Result<f64, BesselError> {
    check_tau(tau)?;
    if !(h > 0.0 && h < tau) {
        return Err(BesselError::InvalidStep { tau, h });
    }
    const EPS: f64 = 1e-15;
    let width = n.unsigned_abs() as usize + 1;
    let plus = ScaledBesselRow::with_min_half_width(tau + h, EPS, width)?;
    let minus = ScaledBesselRow::with_min_half_width(tau - h, EPS, width)?;
    let here = ScaledBesselRow::with_min_half_width(tau, EPS, width)?;
    let derivative = (plus.get(n) - minus.get(n)) / (2.0 * h);
    Ok((derivative - recurrence_rhs(&here, n)).abs())
}

/// `½(b_{n-1}+b_{n+1}) − b_n` read from a row.
pub fn recurrence_rhs(row: &ScaledBesselRow, n: i64) -> f64 {
    0.5 * (row.get(n - 1) + row.get(n + 1)) - row.get(n)
}
