//! Empirical verification of the asymptotic laws: log-log decay fits,
//! ℓ²-optimality, large-time profiles, the Fourier symbol and the
//! higher-order difference experiment.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::kernel::{
    forward_difference, heat_kernel, lp_norm, KernelError, KernelQuantity, LpExponent,
};
use crate::sequence::LatticeSequence;
use crate::solver::{solve, ForcingSpec, SolverError};
use crate::sum::NeumaierSum;
use crate::DEFAULT_EPS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("time grid invalid: {0}")]
    InvalidGrid(String),
    #[error("fewer than two usable points for a fit ({0} supplied, rest dropped)")]
    InsufficientPoints(usize),
    #[error("norm underflowed to zero at t = {0}")]
    NormUnderflow(f64),
    #[error("data has zero mass")]
    ZeroMass,
    #[error("forcing must decay with gamma > 1 for a finite total mass")]
    ForcingNotIntegrable,
    #[error("difference order must lie in 1..=6, got {0}")]
    InvalidOrder(u32),
}

/// One measured point and its certified numerical error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub value: f64,
    pub error: f64,
}

/// Least-squares fit of `log value = slope·log t + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub label: String,
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub t_range: (f64, f64),
    /// Points excluded because their certified error exceeded 1% of the value.
    pub dropped: Vec<Sample>,
}

impl DecayReport {
    /// Fits the samples whose certified error is below one hundredth of
    /// their value. `t` must increase strictly.
    pub fn fit(label: impl Into<String>, samples: &[Sample]) -> Result<Self, AnalysisError> {
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(AnalysisError::InvalidGrid(
                "times must increase strictly".into(),
            ));
        }
        let (kept, dropped): (Vec<Sample>, Vec<Sample>) = samples
            .iter()
            .partition(|s| s.value > 0.0 && s.error < s.value / 100.0);
        if kept.len() < 2 {
            return Err(AnalysisError::InsufficientPoints(samples.len()));
        }
        let xs: Vec<f64> = kept.iter().map(|s| s.t.ln()).collect();
        let ys: Vec<f64> = kept.iter().map(|s| s.value.ln()).collect();
        let (slope, intercept) = least_squares(&xs, &ys);
        let max_residual = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (slope * x + intercept)).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            label: label.into(),
            pairs: kept.iter().map(|s| (s.t, s.value)).collect(),
            slope,
            intercept,
            max_residual,
            t_range: (kept[0].t, kept[kept.len() - 1].t),
            dropped,
        })
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().copied().sum::<NeumaierSum>().value() / n;
    let my = ys.iter().copied().sum::<NeumaierSum>().value() / n;
    let mut sxy = NeumaierSum::new();
    let mut sxx = NeumaierSum::new();
    for (x, y) in xs.iter().zip(ys) {
        sxy.add((x - mx) * (y - my));
        sxx.add((x - mx) * (x - mx));
    }
    let slope = sxy.value() / sxx.value();
    (slope, my - slope * mx)
}

/// `a, 2a, 4a, …` up to and including `b`.
pub fn dyadic_grid(a: f64, b: f64) -> Result<Vec<f64>, AnalysisError> {
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(AnalysisError::InvalidGrid(format!("dyadic:{a}:{b}")));
    }
    let mut out = vec![a];
    while out[out.len() - 1] * 2.0 <= b {
        out.push(out[out.len() - 1] * 2.0);
    }
    Ok(out)
}

/// The default grid `16·2^j`, `j = 0..6`.
pub fn default_grid() -> Vec<f64> {
    (0..=6).map(|j| 16.0 * f64::powi(2.0, j)).collect()
}

fn check_grid(grid: &[f64], lo: f64, hi: f64, min_len: usize) -> Result<(), AnalysisError> {
    if grid.len() < min_len {
        return Err(AnalysisError::InvalidGrid(format!(
            "need at least {min_len} points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|&t| !(t >= lo && t <= hi)) {
        return Err(AnalysisError::InvalidGrid(format!(
            "times must lie in [{lo}, {hi}]"
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AnalysisError::InvalidGrid(
            "times must increase strictly".into(),
        ));
    }
    Ok(())
}

/// The exponent predicted for `‖D G(t,·)‖_p` where `D` is a difference of
/// the given order: `−½(1−1/p) − order/2`.
pub fn predicted_exponent(p: LpExponent, order: u32) -> f64 {
    -p.smoothing_exponent() - 0.5 * order as f64
}

fn fit_norms(
    label: String,
    grid: &[f64],
    p: LpExponent,
    order: u32,
) -> Result<DecayReport, AnalysisError> {
    let mut samples = Vec::with_capacity(grid.len());
    for &t in grid {
        let kernel = heat_kernel(t, DEFAULT_EPS)?;
        let mut seq = kernel.to_sequence();
        for _ in 0..order {
            seq = forward_difference(&seq);
        }
        let value = lp_norm(&seq, p);
        if value == 0.0 {
            return Err(AnalysisError::NormUnderflow(t));
        }
        samples.push(Sample {
            t,
            value,
            error: f64::powi(2.0, order as i32) * kernel.tail_mass(),
        });
    }
    DecayReport::fit(label, &samples)
}

/// Decay of `‖G‖_p`, `‖∇_d G‖_p` or `‖Δ_d G‖_p` over the grid.
pub fn kernel_decay(
    p: LpExponent,
    quantity: KernelQuantity,
    grid: &[f64],
) -> Result<DecayReport, AnalysisError> {
    check_grid(grid, 1.0, 1e4, 6)?;
    let label = format!("{quantity} p={p}");
    match quantity {
        KernelQuantity::Value => fit_norms(label, grid, p, 0),
        KernelQuantity::Gradient => fit_norms(label, grid, p, 1),
        KernelQuantity::Laplacian => {
            let mut samples = Vec::with_capacity(grid.len());
            for &t in grid {
                let kernel = heat_kernel(t, DEFAULT_EPS)?;
                let (lap, tail) = kernel.laplacian();
                let value = lp_norm(&lap, p);
                if value == 0.0 {
                    return Err(AnalysisError::NormUnderflow(t));
                }
                samples.push(Sample {
                    t,
                    value,
                    error: tail,
                });
            }
            DecayReport::fit(label, &samples)
        }
    }
}

/// `‖∇_d^order G(t,·)‖_p`. Orders above two are an experiment: no decay
/// law is established for them, the report is labelled accordingly.
pub fn higher_difference_decay(
    order: u32,
    p: LpExponent,
    grid: &[f64],
) -> Result<DecayReport, AnalysisError> {
    if !(1..=6).contains(&order) {
        return Err(AnalysisError::InvalidOrder(order));
    }
    check_grid(grid, 1.0, 1e4, 2)?;
    let tag = if order >= 3 { " EXPERIMENTAL" } else { "" };
    fit_norms(
        format!("forward difference order {order} p={p}{tag}"),
        grid,
        p,
        order,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L2OptimalityReport {
    pub decay: DecayReport,
    /// `(t, ‖u_f(t)‖₂·t^{1/4}/|Σf|)`, bounded below.
    pub lower_ratios: Vec<(f64, f64)>,
    /// `(t, ‖u_f(t)‖₂·t^{1/4}/‖f‖₁)`, bounded above.
    pub upper_ratios: Vec<(f64, f64)>,
}

/// Decay of `‖u_f(t)‖₂` and the two-sided `t^{-1/4}` sandwich.
pub fn l2_optimality(
    f: &LatticeSequence,
    grid: &[f64],
) -> Result<L2OptimalityReport, AnalysisError> {
    check_grid(grid, 0.0, f64::INFINITY, 2)?;
    let mass = f.sum();
    if mass.abs() <= 1e-14 {
        return Err(AnalysisError::ZeroMass);
    }
    let l1 = lp_norm(f, LpExponent::ONE);
    let mut samples = Vec::with_capacity(grid.len());
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for &t in grid {
        let snap = solve(f, &ForcingSpec::None, t, DEFAULT_EPS)?;
        let norm = lp_norm(&snap.u, LpExponent::TWO);
        let scaled = norm * t.powf(0.25);
        lower.push((t, scaled / mass.abs()));
        upper.push((t, scaled / l1));
        samples.push(Sample {
            t,
            value: norm,
            error: snap.total_error(),
        });
    }
    Ok(L2OptimalityReport {
        decay: DecayReport::fit("l2 norm of u_f", &samples)?,
        lower_ratios: lower,
        upper_ratios: upper,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileReport {
    /// `M = M_f + M_g`.
    pub mass: f64,
    /// `(t, t^{½(1−1/p)}‖u(t) − M·G(t)‖_p, certified error)`.
    pub samples: Vec<Sample>,
    /// Fit of the profile itself; `None` when every point is dominated by
    /// its certified error (e.g. an identically zero profile).
    pub fit: Option<DecayReport>,
}

impl ProfileReport {
    /// True when the profile does not increase from the second grid point on.
    pub fn is_nonincreasing_after_first(&self) -> bool {
        self.samples
            .windows(2)
            .skip(1)
            .all(|w| w[1].value <= w[0].value + w[0].error + w[1].error)
    }
}

// Per-point solve tolerance for profiles.
const PROFILE_EPS: f64 = 1e-11;

/// `t^{½(1−1/p)}‖u(t) − M·G(t)‖_p` over the grid, `u = u_f + u_g`.
///
/// The kernel `M·G(t)` is taken on the same window as `u` so the difference
/// is index-aligned.
pub fn large_time_profile(
    f: &LatticeSequence,
    g: &ForcingSpec,
    p: LpExponent,
    grid: &[f64],
) -> Result<ProfileReport, AnalysisError> {
    check_grid(grid, 0.0, f64::INFINITY, 2)?;
    let forced_mass = g.total_mass().ok_or(AnalysisError::ForcingNotIntegrable)?;
    let data_mass = f.sum();
    if matches!(g, ForcingSpec::None) && data_mass.abs() <= 1e-14 {
        return Err(AnalysisError::ZeroMass);
    }
    let mass = data_mass + forced_mass;
    let mut samples = Vec::with_capacity(grid.len());
    for &t in grid {
        let snap = solve(f, g, t, PROFILE_EPS)?;
        let kernel = heat_kernel(t, PROFILE_EPS)?;
        let reference = kernel
            .to_sequence()
            .rewindowed(snap.u.offset(), snap.u.last_index())
            .scaled(mass);
        let diff = snap.u.sub(&reference);
        let weight = t.powf(p.smoothing_exponent());
        samples.push(Sample {
            t,
            value: weight * lp_norm(&diff, p),
            error: weight * (snap.total_error() + mass.abs() * kernel.tail_mass()),
        });
    }
    let label = format!("large-time profile p={p}");
    let fit = match DecayReport::fit(label, &samples) {
        Ok(r) => Some(r),
        Err(AnalysisError::InsufficientPoints(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ProfileReport { mass, samples, fit })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierCheck {
    pub t: f64,
    pub max_abs_error: f64,
    pub tail_mass: f64,
    /// `(θ, Σ_n G(t,n)e^{inθ}, e^{−4t sin²(θ/2)})`.
    pub points: Vec<(f64, f64, f64)>,
}

/// Compares the truncated transform `G(t,0) + 2Σ_{n≥1} G(t,n)cos(nθ)` with
/// `e^{−4t sin²(θ/2)}` on `θ_j = −π + 2π(j+1)/grid_size`.
pub fn fourier_symbol_check(t: f64, grid_size: usize) -> Result<FourierCheck, AnalysisError> {
    if !(t > 0.0) {
        return Err(AnalysisError::InvalidGrid(format!(
            "t must be positive, got {t}"
        )));
    }
    if grid_size < 16 {
        return Err(AnalysisError::InvalidGrid(format!(
            "grid size must be at least 16, got {grid_size}"
        )));
    }
    let kernel = heat_kernel(t, DEFAULT_EPS)?;
    let w = kernel.window() as i64;
    let mut points = Vec::with_capacity(grid_size);
    let mut max_err: f64 = 0.0;
    for j in 0..grid_size {
        let theta = -PI + 2.0 * PI * (j + 1) as f64 / grid_size as f64;
        let mut acc = NeumaierSum::new();
        for n in (1..=w).rev() {
            acc.add(2.0 * kernel.get(n) * (n as f64 * theta).cos());
        }
        acc.add(kernel.get(0));
        let computed = acc.value();
        let exact = (-4.0 * t * (0.5 * theta).sin().powi(2)).exp();
        max_err = max_err.max((computed - exact).abs());
        points.push((theta, computed, exact));
    }
    Ok(FourierCheck {
        t,
        max_abs_error: max_err,
        tail_mass: kernel.tail_mass(),
        points,
    })
}
