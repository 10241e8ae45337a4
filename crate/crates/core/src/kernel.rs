//! The discrete heat kernel `G(t,n) = e^{-2t} I_n(2t)` as a windowed lattice
//! object, the difference operators, ℓ^p norms and the pointwise bounds.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bessel::{BesselError, ScaledBesselRow};
use crate::sequence::LatticeSequence;
use crate::sum::NeumaierSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("ℓ^p exponent must be ≥ 1 or inf, got {0}")]
    InvalidExponent(String),
}

/// Exponent of an ℓ^p norm. `Infinity` is the sup norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

impl LpExponent {
    pub const ONE: LpExponent = LpExponent::Finite(1.0);
    pub const TWO: LpExponent = LpExponent::Finite(2.0);

    pub fn finite(p: f64) -> Result<Self, KernelError> {
        if p >= 1.0 && p.is_finite() {
            Ok(Self::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Self::Infinity)
        } else {
            Err(KernelError::InvalidExponent(p.to_string()))
        }
    }

    /// `1/p`, zero for the sup norm.
    pub fn reciprocal(self) -> f64 {
        match self {
            Self::Finite(p) => 1.0 / p,
            Self::Infinity => 0.0,
        }
    }

    /// The smoothing exponent `½(1 − 1/p)`.
    pub fn smoothing_exponent(self) -> f64 {
        0.5 * (1.0 - self.reciprocal())
    }
}

impl FromStr for LpExponent {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(Self::Infinity),
            other => other
                .parse::<f64>()
                .map_err(|_| KernelError::InvalidExponent(other.to_string()))
                .and_then(Self::finite),
        }
    }
}

impl fmt::Display for LpExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Infinity => write!(f, "inf"),
        }
    }
}

/// `‖s‖_p` over the stored window.
pub fn lp_norm(s: &LatticeSequence, p: LpExponent) -> f64 {
    match p {
        LpExponent::Infinity => s.values().iter().fold(0.0, |m, v| m.max(v.abs())),
        LpExponent::Finite(1.0) => s
            .values()
            .iter()
            .map(|v| v.abs())
            .sum::<NeumaierSum>()
            .value(),
        LpExponent::Finite(p) => {
            // Scale by the sup to keep the power sum in range.
            let peak = s.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if peak == 0.0 {
                return 0.0;
            }
            let acc = s
                .values()
                .iter()
                .map(|v| (v.abs() / peak).powf(p))
                .sum::<NeumaierSum>()
                .value();
            peak * acc.powf(1.0 / p)
        }
    }
}

/// `∇_d s(n) = s(n+1) − s(n)`; the window grows by one on the left.
pub fn forward_difference(s: &LatticeSequence) -> LatticeSequence {
    if s.is_empty() {
        return s.clone();
    }
    let lo = s.offset() - 1;
    let values = (lo..=s.last_index())
        .map(|n| s.get(n + 1) - s.get(n))
        .collect();
    LatticeSequence::new(lo, values)
}

/// `Δ_d s(n) = s(n+1) − 2s(n) + s(n−1)`; the window grows by one on each side.
pub fn discrete_laplacian(s: &LatticeSequence) -> LatticeSequence {
    if s.is_empty() {
        return s.clone();
    }
    let lo = s.offset() - 1;
    let hi = s.last_index() + 1;
    let values = (lo..=hi)
        .map(|n| s.get(n + 1) - 2.0 * s.get(n) + s.get(n - 1))
        .collect();
    LatticeSequence::new(lo, values)
}

/// `G(t,·)` on the symmetric window `|n| ≤ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSlice {
    t: f64,
    window: usize,
    // values[n + window] = G(t, n)
    values: Vec<f64>,
    tail_mass: f64,
}

impl KernelSlice {
    fn from_row(t: f64, row: &ScaledBesselRow) -> Self {
        let half = row.values();
        let window = row.half_width();
        let mut values = Vec::with_capacity(2 * window + 1);
        values.extend(half.iter().rev());
        values.extend(&half[1..]);
        Self {
            t,
            window,
            values,
            tail_mass: row.tail_bound(),
        }
    }

    /// Kernel slice with window at least `min_window` wide.
    pub fn with_min_window(t: f64, eps: f64, min_window: usize) -> Result<Self, KernelError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(KernelError::InvalidTime(t));
        }
        let row = ScaledBesselRow::with_min_half_width(2.0 * t, eps, min_window)?;
        Ok(Self::from_row(t, &row))
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Half-width `N` of the carried window.
    pub fn window(&self) -> usize {
        self.window
    }

    /// Values for `n = -N..=N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bound on the kernel mass outside the window.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn get(&self, n: i64) -> f64 {
        let i = n + self.window as i64;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn mass(&self) -> f64 {
        // Fixed order: inwards from both edges, centre last.
        let n = self.window;
        let mut acc = NeumaierSum::new();
        for k in (1..=n).rev() {
            acc.add(self.values[n - k]);
            acc.add(self.values[n + k]);
        }
        acc.add(self.values[n]);
        acc.value()
    }

    pub fn to_sequence(&self) -> LatticeSequence {
        LatticeSequence::new(-(self.window as i64), self.values.clone())
            .with_name(format!("G(t={})", self.t))
    }

    /// `∇_d G(t,·)` with its truncation bound `2·tail_mass`.
    pub fn gradient(&self) -> (LatticeSequence, f64) {
        (
            forward_difference(&self.to_sequence()),
            2.0 * self.tail_mass,
        )
    }

    /// `Δ_d G(t,·)` with its truncation bound `4·tail_mass`.
    pub fn laplacian(&self) -> (LatticeSequence, f64) {
        (
            discrete_laplacian(&self.to_sequence()),
            4.0 * self.tail_mass,
        )
    }
}

/// `G(t,·)` with certified tail mass at most `eps`.
pub fn heat_kernel(t: f64, eps: f64) -> Result<KernelSlice, KernelError> {
    KernelSlice::with_min_window(t, eps, 0)
}

/// Which kernel quantity a pointwise bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelQuantity {
    Value,
    Gradient,
    Laplacian,
}

impl fmt::Display for KernelQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Value => "G",
            Self::Gradient => "grad",
            Self::Laplacian => "laplacian",
        })
    }
}

impl FromStr for KernelQuantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "G" | "g" | "value" => Ok(Self::Value),
            "grad" | "gradient" => Ok(Self::Gradient),
            "laplacian" | "lap" => Ok(Self::Laplacian),
            other => Err(format!("unknown kernel quantity `{other}`")),
        }
    }
}

/// Regime of a pointwise bound in `R = n²/t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundRegime {
    /// `R ≤ 1`.
    Inner,
    /// `R ≥ 1`, the form established in the proofs.
    Outer,
    /// `R ≥ 1`, `|G| ≤ C/|n|³` as literally stated. Not uniform in `t`;
    /// reported for comparison only.
    OuterAsStated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub n: i64,
    pub quantity: KernelQuantity,
    pub regime: BoundRegime,
    pub value: f64,
    pub bound: f64,
    /// `|value| / bound`; at most one when the bound holds with this `C`.
    pub ratio: f64,
}

/// Pointwise bounds for `G`, `∇_d G` and `Δ_d G` at time `t` with constant
/// `C = c_budget`, one row per applicable `(n, quantity, regime)`.
///
/// Bounds, with `R = n²/t`:
/// * `|G| ≤ C t^{-1/2}` (R ≤ 1), `C t/|n|³` for `|n| ≥ 2` (R ≥ 1);
/// * `|∇_d G(n)| ≤ C m/t^{3/2}` (R ≤ 1, `m ≥ 1`; `C/t^{3/2}` at `m = 0`),
///   `C t/m⁴` for `m ≥ 2` (R ≥ 1), where `m = n` for `n ≥ 0` and
///   `m = −n−1` otherwise;
/// * `|Δ_d G| ≤ C/t^{3/2}` (R ≤ 1), `C/|n|³` for `|n| ≥ 3` (R ≥ 1).
pub fn pointwise_bound_report(t: f64, c_budget: f64) -> Result<Vec<BoundRow>, KernelError> {
    if !(t.is_finite() && t >= 1.0) {
        return Err(KernelError::InvalidTime(t));
    }
    let slice = heat_kernel(t, crate::DEFAULT_EPS)?;
    let (grad, _) = slice.gradient();
    let (lap, _) = slice.laplacian();
    let sqrt_t = t.sqrt();
    let t32 = t * sqrt_t;
    let mut rows = Vec::new();
    let mut push = |n: i64, quantity, regime, value: f64, shape: f64| {
        let bound = c_budget * shape;
        rows.push(BoundRow {
            n,
            quantity,
            regime,
            value,
            bound,
            ratio: value.abs() / bound,
        });
    };

    let w = slice.window() as i64;
    for n in -w..=w {
        let a = n.unsigned_abs() as f64;
        let r = a * a / t;
        let g = slice.get(n);
        if r <= 1.0 {
            push(
                n,
                KernelQuantity::Value,
                BoundRegime::Inner,
                g,
                1.0 / sqrt_t,
            );
        }
        if r >= 1.0 && a >= 2.0 {
            push(
                n,
                KernelQuantity::Value,
                BoundRegime::Outer,
                g,
                t / a.powi(3),
            );
            push(
                n,
                KernelQuantity::Value,
                BoundRegime::OuterAsStated,
                g,
                1.0 / a.powi(3),
            );
        }
    }
    for (n, d) in grad.iter() {
        let m = if n >= 0 { n } else { -n - 1 } as f64;
        let r = m * m / t;
        if r <= 1.0 {
            let shape = if m == 0.0 { 1.0 / t32 } else { m / t32 };
            push(n, KernelQuantity::Gradient, BoundRegime::Inner, d, shape);
        }
        if r >= 1.0 && m >= 2.0 {
            push(
                n,
                KernelQuantity::Gradient,
                BoundRegime::Outer,
                d,
                t / m.powi(4),
            );
        }
    }
    for (n, d) in lap.iter() {
        let a = n.unsigned_abs() as f64;
        let r = a * a / t;
        if r <= 1.0 {
            push(
                n,
                KernelQuantity::Laplacian,
                BoundRegime::Inner,
                d,
                1.0 / t32,
            );
        }
        if r >= 1.0 && a >= 3.0 {
            push(
                n,
                KernelQuantity::Laplacian,
                BoundRegime::Outer,
                d,
                1.0 / a.powi(3),
            );
        }
    }
    Ok(rows)
}

/// Largest ratio among rows of the given quantity and regime.
pub fn max_ratio(rows: &[BoundRow], quantity: KernelQuantity, regime: BoundRegime) -> f64 {
    rows.iter()
        .filter(|r| r.quantity == quantity && r.regime == regime)
        .fold(0.0, |m, r| m.max(r.ratio))
}
