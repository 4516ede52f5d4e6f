//! Closed-form lower bounds on the probability that random points of the unit ball
//! are linearly separable, together with the derived capacity estimates.
//!
//! Every power of the form `(1 - x)^M` is evaluated as `exp(M * ln_1p(-x))`, every
//! `rho^n` as `exp(n * ln rho)` and `n!` through the log-gamma function, so the
//! bounds stay meaningful for `M` up to `1e9` and beyond and `n` in the thousands.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SepError};

/// Spacing of the coarse grid searched before golden-section refinement.
pub const EPS_GRID_STEP: f64 = 1e-3;
/// Width of the final golden-section bracket.
pub const EPS_TOLERANCE: f64 = 1e-6;

/// Dimension, sample size and boundary-shell thickness of one bound query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationRegime {
    pub n: usize,
    /// Sample size, accepted as a real so that sweeps can reach `1e9` and beyond.
    pub m: f64,
    pub eps: f64,
}

impl SeparationRegime {
    pub fn new(n: usize, m: f64, eps: f64) -> Result<Self> {
        check_n(n)?;
        check_m(m, 1.0)?;
        check_eps(eps)?;
        Ok(SeparationRegime { n, m, eps })
    }

    pub fn rho(&self) -> f64 {
        rho_unchecked(self.eps)
    }
}

/// A probability lower bound, clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub eps_used: f64,
    /// The raw formula fell outside `[0, 1]`.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Largest admissible sample size, as a real.
    pub m_max: f64,
    /// Exponential-in-`n` asymptotic estimate.
    pub asymptotic: f64,
    pub n: usize,
    pub eps: f64,
    /// Target probability (`p` for a single point, `q` for all points).
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approximation {
    pub value: f64,
    /// `rho^n > 0.01`, i.e. outside the regime where the approximation is accurate.
    pub warning: bool,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(SepError::domain("dimension n must be at least 1"));
    }
    Ok(())
}

fn check_m(m: f64, min: f64) -> Result<()> {
    if !m.is_finite() || m < min {
        return Err(SepError::domain(format!("sample size m must be finite and >= {min}, got {m}")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SepError::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

fn check_probability(p: f64, name: &str) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SepError::domain(format!("{name} must lie in (0, 1), got {p}")));
    }
    Ok(())
}

fn rho_unchecked(eps: f64) -> f64 {
    // 1 - (1 - eps)^2 == eps * (2 - eps), without the cancellation
    (eps * (2.0 - eps)).sqrt()
}

/// Radius of the sphere escribing the cap at depth `eps`: `sqrt(1 - (1 - eps)^2)`.
pub fn rho(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(rho_unchecked(eps))
}

/// `ln(1 - (1 - eps)^n)`: log-probability that a uniform point lies in the outer shell.
fn ln_shell(n: usize, eps: f64) -> f64 {
    let inner = n as f64 * (-eps).ln_1p();
    (-inner.exp_m1()).ln()
}

/// `rho(eps)^n / 2`, the cap volume fraction bound.
fn half_cap(n: usize, eps: f64) -> f64 {
    let ln_rho = 0.5 * (eps * (2.0 - eps)).ln();
    0.5 * (n as f64 * ln_rho).exp()
}

/// Lower bound on the probability that a fixed point of norm above `1 - eps` is
/// separated from one uniform point by the normalised functional: `1 - rho^n / 2`.
pub fn cap_exclusion_bound(n: usize, eps: f64) -> Result<f64> {
    check_n(n)?;
    check_eps(eps)?;
    Ok(1.0 - half_cap(n, eps))
}

fn ln_p1(n: usize, m: f64, eps: f64) -> f64 {
    ln_shell(n, eps) + m * (-half_cap(n, eps)).ln_1p()
}

fn from_ln(ln_value: f64, eps: f64) -> BoundResult {
    if ln_value > 0.0 {
        return BoundResult { value: 1.0, eps_used: eps, clamped: true };
    }
    BoundResult { value: ln_value.exp(), eps_used: eps, clamped: false }
}

/// Single-point bound at fixed `eps`: `(1 - (1-eps)^n) (1 - rho^n/2)^M`.
pub fn p1_lower_bound(regime: &SeparationRegime) -> BoundResult {
    from_ln(ln_p1(regime.n, regime.m, regime.eps), regime.eps)
}

/// [`p1_lower_bound`] maximised over `eps`.
pub fn p1_lower_bound_max(n: usize, m: f64) -> Result<BoundResult> {
    check_n(n)?;
    check_m(m, 1.0)?;
    let eps = maximize_over_eps(|e| ln_p1(n, m, e));
    Ok(from_ln(ln_p1(n, m, eps), eps))
}

/// Exponential approximation `(1 - (1-eps)^n) exp(-M rho^n / 2)`. `m = 0` is allowed.
pub fn p1_approx(n: usize, m: f64, eps: f64) -> Result<Approximation> {
    check_n(n)?;
    check_m(m, 0.0)?;
    check_eps(eps)?;
    let a = half_cap(n, eps);
    let value = (ln_shell(n, eps) - m * a).exp();
    Ok(Approximation { value, warning: 2.0 * a > 0.01 })
}

/// Largest sample size keeping the single-point bound at or above `p`, obtained by
/// inverting the bound exactly, plus the asymptotic estimate `rho^-n |ln p|`.
pub fn capacity_single(n: usize, eps: f64, p: f64) -> Result<CapacityResult> {
    check_n(n)?;
    check_eps(eps)?;
    check_probability(p, "p")?;
    let ln_step = (-half_cap(n, eps)).ln_1p();
    let ln_a = ln_shell(n, eps);
    if p.ln() >= ln_a + ln_step {
        return Err(SepError::Unreachable(format!(
            "p = {p} exceeds the bound at m = 1 ({:.6e}) for n = {n}, eps = {eps}",
            (ln_a + ln_step).exp()
        )));
    }
    let m_max = (p.ln() - ln_a) / ln_step;
    let asymptotic = (-(n as f64) * rho_unchecked(eps).ln()).exp() * p.ln().abs();
    Ok(CapacityResult { m_max, asymptotic, n, eps, target: p })
}

fn pm_raw(n: usize, m: f64, eps: f64) -> (f64, bool) {
    let inner = 1.0 - (m - 1.0) * half_cap(n, eps);
    if inner <= 0.0 {
        return (f64::NEG_INFINITY, true);
    }
    (m * (ln_shell(n, eps) + inner.ln()), false)
}

/// Bound on the probability that every sample point is separable from the rest:
/// `[(1 - (1-eps)^n)(1 - (M-1) rho^n / 2)]^M`, clamped at zero.
pub fn pm_lower_bound(regime: &SeparationRegime) -> Result<BoundResult> {
    check_m(regime.m, 2.0)?;
    let (ln_value, clamped) = pm_raw(regime.n, regime.m, regime.eps);
    let mut out = from_ln(ln_value, regime.eps);
    out.clamped |= clamped;
    Ok(out)
}

pub fn pm_lower_bound_max(n: usize, m: f64) -> Result<BoundResult> {
    check_n(n)?;
    check_m(m, 2.0)?;
    let eps = maximize_over_eps(|e| pm_raw(n, m, e).0);
    pm_lower_bound(&SeparationRegime { n, m, eps })
}

/// `max(0, 1 - M (1 - p))` with `1 - p` taken from the log value without cancellation.
fn union_of(m: f64, single: &BoundResult) -> BoundResult {
    let miss = if single.value > 0.0 { -single.value.ln().exp_m1() } else { 1.0 };
    let raw = 1.0 - m * miss;
    BoundResult {
        value: raw.clamp(0.0, 1.0),
        eps_used: single.eps_used,
        clamped: !(0.0..=1.0).contains(&raw),
    }
}

/// Union-bound estimate for all points: `1 - M (1 - P1)` with the maximised single-point bound.
pub fn pm_union_bound(n: usize, m: f64) -> Result<BoundResult> {
    let single = p1_lower_bound_max(n, m)?;
    Ok(union_of(m, &single))
}

/// Explicit capacity for all points: `exp((n/2) ln(1/rho)) sqrt(1 - q)`.
pub fn capacity_all(n: usize, eps: f64, q: f64) -> Result<CapacityResult> {
    check_n(n)?;
    check_eps(eps)?;
    check_probability(q, "q")?;
    let value = (-(n as f64) * 0.5 * rho_unchecked(eps).ln()).exp() * (1.0 - q).sqrt();
    Ok(CapacityResult { m_max: value, asymptotic: value, n, eps, target: q })
}

/// Log of the two-neuron bound at fixed `eps`, and whether it was clamped at zero.
fn two_neuron_raw(n: usize, m: f64, eps: f64) -> (f64, bool) {
    let a = half_cap(n, eps);
    let base = ln_shell(n, eps) + m * (-a).ln_1p();
    let excess = (m - n as f64 + 1.0).max(0.0);
    let t = excess * a / (1.0 - a);
    if t == 0.0 {
        return (base, false);
    }
    let nf = n as f64;
    let ln_tail_term = nf * t.ln() - libm::lgamma(nf + 1.0);
    if ln_tail_term >= 0.0 {
        return (f64::NEG_INFINITY, true);
    }
    (base + t + (-ln_tail_term.exp_m1()).ln(), false)
}

/// Two-neuron (orthogonal second functional) bound at fixed `eps`.
///
/// For `m < n - 1` the excess `M - n + 1` is taken as zero, which reduces the bound
/// to the single-neuron one.
pub fn two_neuron_bound_given_eps(regime: &SeparationRegime) -> BoundResult {
    let (ln_value, clamped) = two_neuron_raw(regime.n, regime.m, regime.eps);
    let mut out = from_ln(ln_value, regime.eps);
    out.clamped |= clamped;
    out
}

pub fn two_neuron_bound_max(n: usize, m: f64) -> Result<BoundResult> {
    check_n(n)?;
    check_m(m, 1.0)?;
    let eps = maximize_over_eps(|e| two_neuron_raw(n, m, e).0.min(0.0));
    Ok(two_neuron_bound_given_eps(&SeparationRegime { n, m, eps }))
}

/// Union-bound estimate of two-neuron separability for every point.
pub fn two_neuron_all(n: usize, m: f64) -> Result<BoundResult> {
    let single = two_neuron_bound_max(n, m)?;
    Ok(union_of(m, &single))
}

/// Maximises `objective` over `(0, 1)`: a dense grid with step [`EPS_GRID_STEP`]
/// followed by golden-section refinement around the best grid node.
pub fn maximize_over_eps(objective: impl Fn(f64) -> f64) -> f64 {
    let nodes = (1.0 / EPS_GRID_STEP).round() as usize;
    let mut best_eps = EPS_GRID_STEP;
    let mut best_val = f64::NEG_INFINITY;
    for i in 1..nodes {
        let e = i as f64 * EPS_GRID_STEP;
        let v = objective(e);
        if v > best_val {
            best_val = v;
            best_eps = e;
        }
    }
    if best_val == f64::NEG_INFINITY {
        return best_eps;
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = (best_eps - EPS_GRID_STEP).max(EPS_GRID_STEP * 1e-3);
    let mut hi = (best_eps + EPS_GRID_STEP).min(1.0 - EPS_GRID_STEP * 1e-3);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while hi - lo > EPS_TOLERANCE {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    if objective(mid) >= best_val {
        mid
    } else {
        best_eps
    }
}
