//! Mild solutions `u(t) = G(t)∗f + ∫₀ᵗ G(t−s)∗g(s) ds`.

use thiserror::Error;

use crate::kernel::{heat_kernel, lp_norm, KernelError, LpExponent};
use crate::sequence::LatticeSequence;
use crate::sum::NeumaierSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("invalid forcing: {0}")]
    InvalidForcing(String),
    #[error("quadrature budget exhausted after {evaluations} evaluations (error estimate {estimate:e}, target {target:e})")]
    QuadratureBudget {
        evaluations: usize,
        estimate: f64,
        target: f64,
    },
}

/// Forcing term `g(s,n)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSpec {
    None,
    /// `g(s,n) = K·(1+s)^{−γ}·φ(n)`.
    Separable {
        spatial: LatticeSequence,
        gamma: f64,
        amplitude: f64,
    },
}

impl ForcingSpec {
    pub fn separable(
        spatial: LatticeSequence,
        gamma: f64,
        amplitude: f64,
    ) -> Result<Self, SolverError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SolverError::InvalidForcing(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !amplitude.is_finite() {
            return Err(SolverError::InvalidForcing(format!(
                "amplitude must be finite, got {amplitude}"
            )));
        }
        Ok(Self::Separable {
            spatial,
            gamma,
            amplitude,
        })
    }

    /// Temporal factor `K(1+s)^{−γ}`.
    pub fn temporal(&self, s: f64) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Separable {
                gamma, amplitude, ..
            } => amplitude * (1.0 + s).powf(-gamma),
        }
    }

    /// `g(s,·)`.
    pub fn at(&self, s: f64) -> LatticeSequence {
        match self {
            Self::None => LatticeSequence::default(),
            Self::Separable { spatial, .. } => spatial.scaled(self.temporal(s)),
        }
    }

    /// `‖g(s,·)‖₁ = |K|·‖φ‖₁·(1+s)^{−γ}`.
    pub fn l1_norm_at(&self, s: f64) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Separable { spatial, .. } => {
                self.temporal(s).abs() * lp_norm(spatial, LpExponent::ONE)
            }
        }
    }

    /// `∫₀ᵗ (1+s)^{−γ} ds`.
    fn time_integral(gamma: f64, t: f64) -> f64 {
        if (gamma - 1.0).abs() < 1e-12 {
            t.ln_1p()
        } else {
            ((1.0 + t).powf(1.0 - gamma) - 1.0) / (1.0 - gamma)
        }
    }

    /// `∫₀ᵗ Σ_n g(s,n) ds`, the mass injected up to time `t`.
    pub fn injected_mass(&self, t: f64) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Separable {
                spatial,
                gamma,
                amplitude,
            } => amplitude * spatial.sum() * Self::time_integral(*gamma, t),
        }
    }

    /// `∫₀ᵗ ‖g(s,·)‖₁ ds`.
    pub fn injected_l1(&self, t: f64) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Separable {
                spatial,
                gamma,
                amplitude,
            } => {
                amplitude.abs() * lp_norm(spatial, LpExponent::ONE) * Self::time_integral(*gamma, t)
            }
        }
    }

    /// `M_g = ∫₀^∞ Σ_n g(s,n) ds`; defined only for `γ > 1`.
    pub fn total_mass(&self) -> Option<f64> {
        match self {
            Self::None => Some(0.0),
            Self::Separable {
                spatial,
                gamma,
                amplitude,
            } if *gamma > 1.0 => Some(amplitude * spatial.sum() / (gamma - 1.0)),
            Self::Separable { .. } => None,
        }
    }
}

/// A computed solution at time `t` with certified ℓ¹ error contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSnapshot {
    pub t: f64,
    pub u: LatticeSequence,
    pub quad_error: f64,
    pub trunc_error: f64,
}

impl SolutionSnapshot {
    pub fn total_error(&self) -> f64 {
        self.quad_error + self.trunc_error
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedQuantities {
    pub mass: f64,
    pub first_moment: f64,
    pub second_moment: f64,
}

/// Exact discrete convolution over the joint support.
pub fn convolve(a: &LatticeSequence, b: &LatticeSequence) -> LatticeSequence {
    if a.is_empty() || b.is_empty() {
        return LatticeSequence::default();
    }
    let (av, bv) = (a.values(), b.values());
    let len = av.len() + bv.len() - 1;
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let lo = k.saturating_sub(bv.len() - 1);
        let hi = k.min(av.len() - 1);
        let mut acc = NeumaierSum::new();
        for i in lo..=hi {
            acc.add(av[i] * bv[k - i]);
        }
        out.push(acc.value());
    }
    LatticeSequence::new(a.offset() + b.offset(), out)
}

fn check_eps(eps: f64) -> Result<(), SolverError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(SolverError::InvalidTolerance(eps))
    }
}

/// `u_f(t) = G(t,·) ∗ f` with `trunc_error ≤ eps·‖f‖₁`.
pub fn evolve(f: &LatticeSequence, t: f64, eps: f64) -> Result<SolutionSnapshot, SolverError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(SolverError::InvalidTime(t));
    }
    check_eps(eps)?;
    let kernel = heat_kernel(t, eps)?;
    let u = convolve(&kernel.to_sequence(), f);
    Ok(SolutionSnapshot {
        t,
        u,
        quad_error: 0.0,
        trunc_error: kernel.tail_mass() * lp_norm(f, LpExponent::ONE),
    })
}

/// Evaluation cap for the adaptive quadrature.
pub const QUADRATURE_EVALUATION_BUDGET: usize = 1 << 18;
const QUADRATURE_MAX_DEPTH: u32 = 48;

struct Integrand<'a> {
    spatial: &'a LatticeSequence,
    gamma: f64,
    amplitude: f64,
    t: f64,
    kernel_eps: f64,
    lo: i64,
    hi: i64,
    evaluations: usize,
    clipped: f64,
}

impl Integrand<'_> {
    /// `K(1+s)^{−γ}·(G(t−s)∗φ)` on the fixed output window.
    fn eval(&mut self, s: f64) -> Result<Vec<f64>, SolverError> {
        self.evaluations += 1;
        let c = self.amplitude * (1.0 + s).powf(-self.gamma);
        let len = (self.hi - self.lo + 1) as usize;
        let tau = (self.t - s).max(0.0);
        let u = if tau == 0.0 {
            self.spatial.clone()
        } else {
            convolve(
                &heat_kernel(tau, self.kernel_eps)?.to_sequence(),
                self.spatial,
            )
        };
        let mut out = vec![0.0; len];
        for (n, v) in u.iter() {
            if n < self.lo || n > self.hi {
                self.clipped = self.clipped.max(c.abs() * v.abs());
                continue;
            }
            out[(n - self.lo) as usize] = c * v;
        }
        Ok(out)
    }
}

fn simpson(a: f64, b: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    let h = (b - a) / 6.0;
    fa.iter()
        .zip(fm)
        .zip(fb)
        .map(|((x, y), z)| h * (x + 4.0 * y + z))
        .collect()
}

struct Panel {
    a: f64,
    b: f64,
    fa: Vec<f64>,
    fm: Vec<f64>,
    fb: Vec<f64>,
    whole: Vec<f64>,
    depth: u32,
}

/// Adaptive Simpson with per-panel ℓ¹ error `‖S₂ − S₁‖₁/15` kept below
/// `tol·(b−a)/(end−start)`. Returns the Richardson-corrected integral and
/// the summed error estimates.
fn adaptive_simpson(
    f: &mut Integrand<'_>,
    start: f64,
    end: f64,
    tol: f64,
) -> Result<(Vec<f64>, f64), SolverError> {
    let span = end - start;
    let fa = f.eval(start)?;
    let fm = f.eval(0.5 * (start + end))?;
    let fb = f.eval(end)?;
    let whole = simpson(start, end, &fa, &fm, &fb);
    let mut acc: Vec<NeumaierSum> = vec![NeumaierSum::new(); fa.len()];
    let mut error = NeumaierSum::new();
    let mut stack = vec![Panel {
        a: start,
        b: end,
        fa,
        fm,
        fb,
        whole,
        depth: 0,
    }];
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let flm = f.eval(0.5 * (p.a + m))?;
        let frm = f.eval(0.5 * (m + p.b))?;
        let left = simpson(p.a, m, &p.fa, &flm, &p.fm);
        let right = simpson(m, p.b, &p.fm, &frm, &p.fb);
        let diff: f64 = left
            .iter()
            .zip(&right)
            .zip(&p.whole)
            .map(|((l, r), w)| (l + r - w).abs())
            .sum::<NeumaierSum>()
            .value();
        let estimate = diff / 15.0;
        let local_tol = tol * (p.b - p.a) / span;
        if estimate <= local_tol || p.depth >= QUADRATURE_MAX_DEPTH {
            if estimate > local_tol {
                return Err(SolverError::QuadratureBudget {
                    evaluations: f.evaluations,
                    estimate,
                    target: local_tol,
                });
            }
            for (i, slot) in acc.iter_mut().enumerate() {
                let two = left[i] + right[i];
                slot.add(two + (two - p.whole[i]) / 15.0);
            }
            error.add(estimate);
            continue;
        }
        if f.evaluations >= QUADRATURE_EVALUATION_BUDGET {
            return Err(SolverError::QuadratureBudget {
                evaluations: f.evaluations,
                estimate,
                target: local_tol,
            });
        }
        // Right panel pushed first so panels are finished left to right.
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm.clone(),
            fm: frm,
            fb: p.fb,
            whole: right,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            depth: p.depth + 1,
        });
    }
    Ok((acc.iter().map(NeumaierSum::value).collect(), error.value()))
}

/// `u_g(t) = ∫₀ᵗ G(t−s)∗g(s) ds` by adaptive composite Simpson.
///
/// Half of `eps` goes to quadrature, half to kernel truncation inside the
/// integrand. The integrand is bounded by `‖g(s)‖₁` uniformly in `s`, so
/// the collapse of the kernel to a delta at `s = t` needs no special care
/// beyond evaluating `G(0) ∗ g(t) = g(t)` exactly.
pub fn duhamel(g: &ForcingSpec, t: f64, eps: f64) -> Result<SolutionSnapshot, SolverError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(SolverError::InvalidTime(t));
    }
    check_eps(eps)?;
    let (spatial, gamma, amplitude) = match g {
        ForcingSpec::None => return Ok(zero_snapshot(t)),
        ForcingSpec::Separable {
            spatial,
            gamma,
            amplitude,
        } => (spatial, *gamma, *amplitude),
    };
    let mass_scale = g.injected_l1(t);
    if t == 0.0 || mass_scale == 0.0 || spatial.is_empty() {
        return Ok(zero_snapshot(t));
    }
    let kernel_eps = (0.5 * eps / mass_scale).clamp(1e-300, 0.5);
    let outer = heat_kernel(t, kernel_eps)?.window() as i64 + 2;
    let mut integrand = Integrand {
        spatial,
        gamma,
        amplitude,
        t,
        kernel_eps,
        lo: spatial.offset() - outer,
        hi: spatial.last_index() + outer,
        evaluations: 0,
        clipped: 0.0,
    };
    let (values, quad_error) = adaptive_simpson(&mut integrand, 0.0, t, 0.5 * eps)?;
    let clipped = integrand.clipped * t;
    Ok(SolutionSnapshot {
        t,
        u: LatticeSequence::new(integrand.lo, values),
        quad_error,
        trunc_error: kernel_eps * mass_scale + clipped,
    })
}

fn zero_snapshot(t: f64) -> SolutionSnapshot {
    SolutionSnapshot {
        t,
        u: LatticeSequence::zeros(0, 0),
        quad_error: 0.0,
        trunc_error: 0.0,
    }
}

/// `u = u_f + u_g`; error fields add.
pub fn solve(
    f: &LatticeSequence,
    g: &ForcingSpec,
    t: f64,
    eps: f64,
) -> Result<SolutionSnapshot, SolverError> {
    let free = evolve(f, t, eps)?;
    if matches!(g, ForcingSpec::None) {
        return Ok(free);
    }
    let forced = duhamel(g, t, eps)?;
    Ok(SolutionSnapshot {
        t,
        u: free.u.add(&forced.u),
        quad_error: free.quad_error + forced.quad_error,
        trunc_error: free.trunc_error + forced.trunc_error,
    })
}

/// Mass, first and second moments of a snapshot.
pub fn conserved_quantities(s: &SolutionSnapshot) -> ConservedQuantities {
    ConservedQuantities {
        mass: s.u.sum(),
        first_moment: s.u.moment(1),
        second_moment: s.u.moment(2),
    }
}

/// Forcing known only on a time grid, `g(times[i], ·) = slices[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedForcing {
    times: Vec<f64>,
    slices: Vec<LatticeSequence>,
}

impl TabulatedForcing {
    /// `times` must start at 0 and be strictly increasing.
    pub fn new(times: Vec<f64>, slices: Vec<LatticeSequence>) -> Result<Self, SolverError> {
        if times.len() != slices.len() || times.len() < 2 {
            return Err(SolverError::InvalidForcing(
                "need at least two time nodes, one slice per node".into(),
            ));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SolverError::InvalidForcing(
                "time nodes must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self { times, slices })
    }

    fn at(&self, s: f64) -> LatticeSequence {
        let i = self.times.partition_point(|&x| x <= s).saturating_sub(1);
        if i + 1 >= self.times.len() {
            return self.slices[self.times.len() - 1].clone();
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (s - t0) / (t1 - t0);
        self.slices[i].combine(1.0 - w, &self.slices[i + 1], w)
    }
}

/// Forced part for a tabulated forcing. The quadrature error is an
/// uncertified estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedSolution {
    pub t: f64,
    pub u: LatticeSequence,
    pub trunc_error: f64,
    /// `|T_h − T_{2h}|/3` from trapezoid sums on all and on every other node.
    pub quad_error_estimate: f64,
}

/// Trapezoidal Duhamel integral over the grid nodes in `[0, t]`, with `g(t)`
/// interpolated linearly when `t` is not a node.
pub fn duhamel_tabulated(
    g: &TabulatedForcing,
    t: f64,
    eps: f64,
) -> Result<TabulatedSolution, SolverError> {
    if !(t.is_finite() && t > 0.0) || t > *g.times.last().unwrap_or(&0.0) {
        return Err(SolverError::InvalidTime(t));
    }
    check_eps(eps)?;
    let mut nodes: Vec<f64> = g.times.iter().copied().filter(|&s| s < t).collect();
    nodes.push(t);
    let mut values = Vec::with_capacity(nodes.len());
    let mut trunc = 0.0;
    for &s in &nodes {
        let snap = evolve(&g.at(s), t - s, eps)?;
        values.push(snap.u);
        trunc = f64::max(trunc, snap.trunc_error);
    }
    let fine = trapezoid(&nodes, &values, 1);
    let estimate = if nodes.len() >= 3 {
        let coarse = trapezoid(&nodes, &values, 2);
        lp_norm(&fine.sub(&coarse), LpExponent::ONE) / 3.0
    } else {
        f64::INFINITY
    };
    Ok(TabulatedSolution {
        t,
        u: fine,
        trunc_error: trunc * t,
        quad_error_estimate: estimate,
    })
}

fn trapezoid(nodes: &[f64], values: &[LatticeSequence], stride: usize) -> LatticeSequence {
    let mut idx: Vec<usize> = (0..nodes.len()).step_by(stride).collect();
    if *idx.last().unwrap_or(&0) != nodes.len() - 1 {
        idx.push(nodes.len() - 1);
    }
    let mut acc = LatticeSequence::default();
    for w in idx.windows(2) {
        let h = nodes[w[1]] - nodes[w[0]];
        acc = acc
            .combine(1.0, &values[w[0]], 0.5 * h)
            .combine(1.0, &values[w[1]], 0.5 * h);
    }
    acc
}
