//! Exact Gibbs model weights, the EPPF, and the one-step prediction rule.
//!
//! Two families are exact-weight-capable:
//!
//! - `PD(α, θ)`: `V_{n,k} = (θ+α)_{k−1↑α} / (θ+1)_{n−1}`.
//! - `NGG(α, β)`: the incomplete-Gamma linear combination
//!   `V_{n,k} = (e^β α^{k−1}/Γ(n)) Σ_{i=0}^{n−1} C(n−1,i)(−1)^i β^{i/α} Γ(k−i/α; β)`,
//!   summed with sign tracking at auto-escalating precision (the bits are
//!   doubled until two successive working precisions agree well below the
//!   target tolerance). The normalized inverse Gaussian model is
//!   `NGG(1/2, β)`.
//!
//! The alternating sum cancels by roughly one bit per unit of `n`, so for
//! large `n` the weight is instead evaluated through the equivalent
//! positive-integrand form
//! `V_{n,k} = (e^β α^{k−1}/Γ(n)) ∫_β^∞ (x^{1/α} − β^{1/α})^{n−1} x^{k−(n−1)/α−1} e^{−x} dx`
//! (binomially expanding the integrand reproduces the alternating sum term
//! by term). Both routes are cross-checked against each other on their
//! overlap in tests.
//!
//! Weights are strictly positive; a nonpositive outcome of the alternating
//! sum surfaces as a precision error, never as a silent negative weight.

use std::sync::atomic::{AtomicU64, Ordering};

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{
    gen_rising_factorial_float, rising_factorial_float, upper_inc_gamma_float,
    validate_ngg_params, validate_pd_params, wprec,
};
use crate::xreal::XReal;

/// Largest `n` routed through the alternating sum; beyond this the
/// positive-integrand quadrature takes over.
const NGG_ALTERNATING_MAX: u32 = 120;
/// Working-precision ceiling for the auto-escalation loop.
const MAX_WORK_BITS: u32 = 1 << 17;

static ESCALATION_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of precision auto-escalation events (working precision doubled
/// beyond its initial estimate) since the last call; resets the counter.
/// Lets front ends report escalations instead of passing them silently.
pub fn take_escalation_events() -> u64 {
    ESCALATION_EVENTS.swap(0, Ordering::Relaxed)
}

/// Model family tag and its family-specific parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Two-parameter Poisson-Dirichlet with `θ > −α`.
    PoissonDirichlet { theta: f64 },
    /// Normalized generalized Gamma with `β > 0`.
    NormalizedGG { beta: f64 },
}

/// A Gibbs prior specification: family, `α ∈ (0,1)`, and working precision.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    alpha: f64,
    kind: ModelKind,
    prec: u32,
}

/// Observed sample summary: `n`, `k`, and the block sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionState {
    sizes: Vec<u32>,
    n: u32,
}

impl PartitionState {
    /// Build from block sizes; they must all be positive and nonempty.
    pub fn new(sizes: Vec<u32>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Domain(
                "a partition state needs at least one block".into(),
            ));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Domain("block sizes must all be ≥ 1".into()));
        }
        let n: u64 = sizes.iter().map(|&s| s as u64).sum();
        let n = u32::try_from(n)
            .map_err(|_| Error::Domain("partition size exceeds the supported range".into()))?;
        Ok(PartitionState { sizes, n })
    }

    /// Total number of observations.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of blocks.
    pub fn k(&self) -> u32 {
        self.sizes.len() as u32
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }
}

/// One-step prediction probabilities from a state: a new block, or joining
/// each existing block.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub p_new: XReal,
    pub p_join: Vec<XReal>,
}

impl GibbsModel {
    /// `PD(α, θ)` with `α ∈ (0,1)`, `θ > −α`.
    pub fn poisson_dirichlet(alpha: f64, theta: f64, prec: u32) -> Result<Self> {
        validate_pd_params(alpha, theta)?;
        Ok(GibbsModel {
            alpha,
            kind: ModelKind::PoissonDirichlet { theta },
            prec: wprec(prec),
        })
    }

    /// `NGG(α, β)` with `α ∈ (0,1)`, `β > 0`.
    pub fn normalized_gg(alpha: f64, beta: f64, prec: u32) -> Result<Self> {
        validate_ngg_params(alpha, beta)?;
        Ok(GibbsModel {
            alpha,
            kind: ModelKind::NormalizedGG { beta },
            prec: wprec(prec),
        })
    }

    /// Normalized inverse Gaussian: `NGG(1/2, β)`.
    pub fn normalized_ig(beta: f64, prec: u32) -> Result<Self> {
        Self::normalized_gg(0.5, beta, prec)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Scale constant `c` of the stable convention this model's tilting
    /// function normalizes against: the mixing density is `h(t)·f_α(t)`
    /// with `f_α` of Laplace exponent `(cλ)^α`.
    pub fn stable_scale(&self) -> f64 {
        match self.kind {
            ModelKind::PoissonDirichlet { .. } => 1.0,
            ModelKind::NormalizedGG { .. } => 2.0,
        }
    }

    /// Tilting function `h(t)` of the mixing density.
    pub fn tilt(&self, t: f64) -> Result<XReal> {
        match self.kind {
            ModelKind::PoissonDirichlet { theta } => {
                crate::special::tilt_pd(t, self.alpha, theta, self.prec)
            }
            ModelKind::NormalizedGG { beta } => {
                crate::special::tilt_ngg(t, self.alpha, beta, self.prec)
            }
        }
    }

    /// Tilt of the α-diversity density relative to the standard Mittag-
    /// Leffler density: the limit law of `K_n/n^α` has density
    /// `H(s)·g₁(s)` with `H(s) = h(c·s^{−1/α})` and `c` the model's stable
    /// scale. The diversity equals `(T/c)^{−α}` for the subordinator mass
    /// `T`, hence the `c` inside `h`'s argument; with it, `H·g₁` integrates
    /// to one exactly for both families.
    pub fn diversity_tilt(&self, s: f64) -> Result<XReal> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!(
                "diversity_tilt requires s > 0, got {s}"
            )));
        }
        let wp = self.prec + 16;
        let t = Float::with_val(wp, self.stable_scale())
            * Float::with_val(wp, s).pow(Float::with_val(wp, -1.0 / self.alpha));
        let t64 = t.to_f64();
        if !(t64 > 0.0) || !t64.is_finite() {
            return Err(Error::Domain(format!(
                "diversity tilt argument out of range at s={s}"
            )));
        }
        self.tilt(t64)
    }

    /// Exact Gibbs weight `V_{n,k} > 0` for `1 ≤ k ≤ n`.
    pub fn weight(&self, n: u32, k: u32) -> Result<XReal> {
        self.weight_prec(n, k, self.prec)
    }

    /// Weight at an explicit result precision.
    pub fn weight_prec(&self, n: u32, k: u32, prec: u32) -> Result<XReal> {
        if !(1 <= k && k <= n) {
            return Err(Error::Domain(format!(
                "weight requires 1 ≤ k ≤ n, got n={n}, k={k}"
            )));
        }
        let p = wprec(prec);
        let v = match self.kind {
            ModelKind::PoissonDirichlet { theta } => pd_weight(n, k, self.alpha, theta, p),
            ModelKind::NormalizedGG { beta } => ngg_weight(n, k, self.alpha, beta, p)?,
        };
        if !v.is_sign_positive() || v.is_zero() || !v.is_finite() {
            return Err(Error::Precision(format!(
                "weight V_{{{n},{k}}} evaluated nonpositive at {p} bits; retry with more precision"
            )));
        }
        Ok(XReal::from_float(v))
    }

    /// Relative residual of the backward recursion
    /// `V_{n,k} = (n − kα)·V_{n+1,k} + V_{n+1,k+1}`.
    pub fn recursion_residual(&self, n: u32, k: u32) -> Result<XReal> {
        let p = self.prec;
        let v = self.weight_prec(n, k, p)?;
        let v_same = self.weight_prec(n + 1, k, p)?;
        let v_up = self.weight_prec(n + 1, k + 1, p)?;
        let mult = XReal::from_float(
            Float::with_val(p, n) - Float::with_val(p, self.alpha) * Float::with_val(p, k),
        );
        let recon = &(&mult * &v_same) + &v_up;
        Ok((&v - &recon).abs() / v)
    }

    /// EPPF value `p(n₁, …, n_k) = V_{n,k} Π_j (1−α)_{n_j−1}`.
    pub fn eppf(&self, state: &PartitionState) -> Result<XReal> {
        let p = self.prec;
        let v = self.weight(state.n(), state.k())?;
        let mut prod = Float::with_val(p, 1);
        let one_minus_alpha = Float::with_val(p, 1.0) - Float::with_val(p, self.alpha);
        for &nj in state.sizes() {
            prod *= rising_factorial_float(&one_minus_alpha, nj - 1, p);
        }
        Ok(&v * &XReal::from_float(prod))
    }

    /// One-step prediction rule: a new block with probability
    /// `V_{n+1,k+1}/V_{n,k}`, join block `j` with probability
    /// `(n_j − α)·V_{n+1,k}/V_{n,k}`. The probabilities sum to one by the
    /// backward recursion.
    pub fn predictive(&self, state: &PartitionState) -> Result<Prediction> {
        let (n, k) = (state.n(), state.k());
        let p = self.prec;
        let v = self.weight(n, k)?;
        let v_up = self.weight(n + 1, k + 1)?;
        let v_same = self.weight(n + 1, k)?;
        let p_new = &v_up / &v;
        let ratio = &v_same / &v;
        let p_join = state
            .sizes()
            .iter()
            .map(|&nj| {
                let w = Float::with_val(p, nj) - Float::with_val(p, self.alpha);
                &XReal::from_float(w) * &ratio
            })
            .collect();
        Ok(Prediction { p_new, p_join })
    }

    /// Natural log of `V_{n,k}` in `f64`, on a fast path suitable for
    /// simulation (weight ratios are well-conditioned, so double precision
    /// is ample for predictive probabilities).
    pub(crate) fn log_weight_f64(&self, n: u32, k: u32) -> Result<f64> {
        if !(1 <= k && k <= n) {
            return Err(Error::Domain(format!(
                "log_weight requires 1 ≤ k ≤ n, got n={n}, k={k}"
            )));
        }
        match self.kind {
            ModelKind::PoissonDirichlet { theta } => {
                let a = self.alpha;
                Ok((k as f64 - 1.0) * a.ln() + lgamma(theta / a + k as f64)
                    - lgamma(theta / a + 1.0)
                    + lgamma(theta + 1.0)
                    - lgamma(theta + n as f64))
            }
            ModelKind::NormalizedGG { beta } => ngg_log_weight_f64(n, k, self.alpha, beta),
        }
    }
}

fn lgamma(x: f64) -> f64 {
    Float::with_val(64, x).ln_gamma().to_f64()
}

fn pd_weight(n: u32, k: u32, alpha: f64, theta: f64, prec: u32) -> Float {
    let wp = prec + 32;
    let x = Float::with_val(wp, theta) + Float::with_val(wp, alpha);
    let num = gen_rising_factorial_float(&x, k - 1, alpha, wp);
    let y = Float::with_val(wp, theta) + 1u32;
    let den = rising_factorial_float(&y, n - 1, wp);
    let mut v = num / den;
    v.set_prec_round(prec, rug::float::Round::Nearest);
    v
}

fn ngg_weight(n: u32, k: u32, alpha: f64, beta: f64, prec: u32) -> Result<Float> {
    if n == 1 {
        // V_{1,1} = e^β Γ(1; β) = 1 analytically; return it exactly.
        return Ok(Float::with_val(prec, 1));
    }
    if n <= NGG_ALTERNATING_MAX {
        ngg_weight_alternating(n, k, alpha, beta, prec)
    } else {
        ngg_weight_integral(n, k, alpha, beta, prec)
    }
}

/// Alternating incomplete-Gamma sum with sign tracking and auto-escalating
/// working precision: double the bits until two successive rounds agree to
/// a hundredth of the target tolerance.
fn ngg_weight_alternating(n: u32, k: u32, alpha: f64, beta: f64, prec: u32) -> Result<Float> {
    // Cancellation budget estimate: terms reach ~C(n−1, n/2)·β^{k−1}e^{−β},
    // the result is ~α^{k−1}Γ(k)/Γ(n)·e^{β−n(β/k)^{1/α}}; the exponent gap
    // is dominated by n plus log₂ Γ(n) plus the tilt decay.
    let est_cancel = n as f64
        + (lgamma(n as f64) / std::f64::consts::LN_2).max(0.0)
        + (n as f64 * (beta / k as f64).powf(1.0 / alpha)) / std::f64::consts::LN_2;
    let wp0 = wprec(prec) + (est_cancel.min(1e6) as u32) + 64;
    let mut wp = wp0;
    let mut previous: Option<Float> = None;
    while wp <= MAX_WORK_BITS {
        let sum = ngg_alternating_sum(n, k, alpha, beta, wp);
        let value = finish_ngg(&sum, n, k, alpha, beta, wp);
        if let Some(prev) = previous {
            if value.is_sign_positive() && !value.is_zero() {
                let diff = Float::with_val(wp, &value - &prev).abs();
                let bound = value.clone().abs() >> (prec + 7);
                if diff <= bound {
                    let mut v = value;
                    v.set_prec_round(prec, rug::float::Round::Nearest);
                    return Ok(v);
                }
            }
            // Two rounds disagreed: this escalation goes beyond the
            // initial cancellation estimate.
            ESCALATION_EVENTS.fetch_add(1, Ordering::Relaxed);
        }
        previous = Some(value);
        wp *= 2;
    }
    Err(Error::Precision(format!(
        "NGG weight V_{{{n},{k}}} (alpha={alpha}, beta={beta}) did not stabilize below \
         {MAX_WORK_BITS} working bits"
    )))
}

/// `Σ_{i=0}^{n−1} C(n−1,i) (−1)^i β^{i/α} Γ(k − i/α; β)` at working
/// precision `wp`.
fn ngg_alternating_sum(n: u32, k: u32, alpha: f64, beta: f64, wp: u32) -> Float {
    let beta_f = Float::with_val(wp, beta);
    let delta = 1.0 / alpha;
    let delta_f = Float::with_val(wp, 1) / Float::with_val(wp, alpha);
    // When 1/α is an exact integer every parameter k − i/α is an integer,
    // and one downward recurrence chain serves all of them.
    let gammas: Vec<Float> = if delta.fract() == 0.0 && delta <= 64.0 {
        ngg_gamma_chain(n, k, delta as i64, &beta_f, wp)
    } else {
        (0..n)
            .map(|i| {
                let a = Float::with_val(wp, k) - Float::with_val(wp, &delta_f * i);
                upper_inc_gamma_float(&a, &beta_f, wp)
            })
            .collect()
    };
    let beta_pow_step = Float::with_val(wp, (&beta_f).pow(&delta_f));
    let mut beta_pow = Float::with_val(wp, 1);
    let mut binom = Float::with_val(wp, 1);
    let mut sum = Float::with_val(wp, 0);
    for i in 0..n {
        if i > 0 {
            binom *= n - i;
            binom /= i;
            beta_pow *= &beta_pow_step;
        }
        let mut term = Float::with_val(wp, &binom * &beta_pow);
        term *= &gammas[i as usize];
        if i % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

/// One downward chain of `Γ(a; β)` over consecutive integers from `a = k`
/// to `a = k − δ(n−1)`, returning the values at `a = k − δi` for each `i`.
/// The chain is re-seeded at `Γ(0; β) = E₁(β)` when it crosses zero, where
/// the recurrence itself degenerates to 0/0.
fn ngg_gamma_chain(n: u32, k: u32, delta: i64, beta: &Float, wp: u32) -> Vec<Float> {
    let a_min = k as i64 - delta * (n as i64 - 1);
    let e_neg = Float::with_val(wp, -beta.clone()).exp();
    let mut values = Vec::with_capacity(n as usize);
    let mut a = k as i64;
    let mut g = Float::with_val(wp, k).gamma_inc(beta);
    // β^{a−1}·e^{−β} rolling factor for the recurrence step down to a−1.
    let mut xc = Float::with_val(wp, beta.pow(Float::with_val(wp, (k - 1) as f64))) * &e_neg;
    values.push(g.clone());
    while a > a_min {
        a -= 1;
        if a == 0 {
            g = -Float::with_val(wp, -beta.clone()).eint();
        } else {
            g = (g - &xc) / Float::with_val(wp, a);
        }
        xc /= beta;
        if (k as i64 - a) % delta == 0 {
            values.push(g.clone());
        }
    }
    values
}

fn finish_ngg(sum: &Float, n: u32, k: u32, alpha: f64, beta: f64, wp: u32) -> Float {
    // e^β α^{k−1} / Γ(n) · sum
    let e_beta = Float::with_val(wp, beta).exp();
    let gamma_n = Float::with_val(wp, n).gamma();
    let alpha_pow = Float::with_val(wp, alpha).pow(k - 1);
    Float::with_val(wp, sum * e_beta) * alpha_pow / gamma_n
}

/// Positive-integrand route:
/// `V_{n,k} = (e^β α^{k−1}/Γ(n)) ∫_β^∞ (x^{1/α}−β^{1/α})^{n−1} x^{k−(n−1)/α−1} e^{−x} dx`.
/// Cancellation-free at any `n`; used beyond the alternating-sum range.
///
/// The integrand is a single sharp peak; it is integrated over a window
/// `[β, x_hi]` chosen so the cut tail lies far below the target precision.
fn ngg_weight_integral(n: u32, k: u32, alpha: f64, beta: f64, prec: u32) -> Result<Float> {
    let wp = prec + 64;
    let drop = (prec as f64 + 64.0) * std::f64::consts::LN_2;
    let (_, x_hi) = ngg_phi_window(n, k, alpha, beta, drop)?;
    let beta_f = Float::with_val(wp, beta);
    let inv_alpha = Float::with_val(wp, 1.0) / Float::with_val(wp, alpha);
    let beta_ia = Float::with_val(wp, (&beta_f).pow(&inv_alpha));
    let x_expo = Float::with_val(wp, k)
        - Float::with_val(wp, (n - 1) as f64) * &inv_alpha
        - Float::with_val(wp, 1);
    let integral = quad::tanh_sinh(
        |x| {
            if *x <= beta_f {
                return Ok(Float::with_val(wp, 0));
            }
            let ratio = Float::with_val(wp, x - &beta_f) / &beta_f;
            let ln_term = Float::with_val(wp, &inv_alpha * ratio.ln_1p());
            let diff = Float::with_val(wp, &beta_ia * ln_term.exp_m1());
            if diff.is_zero() {
                return Ok(Float::with_val(wp, 0));
            }
            let mut v = diff.pow(n - 1);
            v *= Float::with_val(wp, x.pow(&x_expo));
            v *= Float::with_val(wp, -x.clone()).exp();
            Ok(v)
        },
        &beta_f,
        &Float::with_val(wp, x_hi),
        prec + 16,
        (2f64).powi(-((prec as i32) / 2 + 24)),
    )?;
    let e_beta = Float::with_val(wp, beta).exp();
    let alpha_pow = Float::with_val(wp, alpha).pow(k - 1);
    let gamma_n = Float::with_val(wp, n).gamma();
    let mut v = integral * e_beta * alpha_pow / gamma_n;
    v.set_prec_round(prec, rug::float::Round::Nearest);
    Ok(v)
}

/// Peak location and decay window of
/// `φ(x) = (n−1)ln(x^{1/α}−β^{1/α}) + (k−(n−1)/α−1)·ln x − x` on `(β, ∞)`:
/// returns `(x*, x_hi)` with `φ(x_hi) ≤ φ(x*) − drop`.
fn ngg_phi_window(n: u32, k: u32, alpha: f64, beta: f64, drop: f64) -> Result<(f64, f64)> {
    let ia = 1.0 / alpha;
    let nm1 = (n - 1) as f64;
    let kk = k as f64;
    let beta_ia = beta.powf(ia);
    let c2 = kk - nm1 * ia - 1.0;
    let phi = |x: f64| -> f64 { nm1 * (x.powf(ia) - beta_ia).ln() + c2 * x.ln() - x };
    let dphi =
        |x: f64| -> f64 { nm1 * ia * x.powf(ia - 1.0) / (x.powf(ia) - beta_ia) + c2 / x - 1.0 };
    let mut lo = beta * (1.0 + 1e-12);
    let mut hi = (beta + kk).max(2.0 * beta);
    let mut guard = 0;
    while dphi(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Numerical(format!(
                "weight-integrand peak search failed for n={n}, k={k}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dphi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let x_star = 0.5 * (lo + hi);
    let phi_star = phi(x_star);
    let mut x_hi = x_star.max(beta + 1.0);
    let mut step = (x_star - beta).max(1.0);
    let mut guard = 0;
    while phi(x_hi) - phi_star > -drop {
        x_hi += step;
        step *= 2.0;
        guard += 1;
        if guard > 500 {
            return Err(Error::Numerical(format!(
                "weight-integrand tail search failed for n={n}, k={k}"
            )));
        }
    }
    Ok((x_star, x_hi))
}

/// `ln V_{n,k}` for the NGG family by a log-space Laplace evaluation of the
/// positive integral in plain `f64` — the simulation fast path. The
/// half-stable case (`α = 1/2`, where `x^{1/α}` is just `x²`) avoids `powf`
/// in the hot integrand.
fn ngg_log_weight_f64(n: u32, k: u32, alpha: f64, beta: f64) -> Result<f64> {
    if n == 1 {
        return Ok(0.0);
    }
    let ia = 1.0 / alpha;
    let nm1 = (n - 1) as f64;
    let kk = k as f64;
    let beta_ia = beta.powf(ia);
    let c2 = kk - nm1 * ia - 1.0;
    let half = alpha == 0.5;
    let phi = |x: f64| -> f64 {
        let xia = if half { x * x } else { x.powf(ia) };
        nm1 * (xia - beta_ia).ln() + c2 * x.ln() - x
    };
    let dphi = |x: f64| -> f64 {
        let xia = if half { x * x } else { x.powf(ia) };
        nm1 * ia * (xia / x) / (xia - beta_ia) + c2 / x - 1.0
    };
    let ddphi = |x: f64| -> f64 {
        let xia = if half { x * x } else { x.powf(ia) };
        let d = xia - beta_ia;
        let u1 = ia * xia / x; // (x^{1/α})′
        let u2 = ia * (ia - 1.0) * xia / (x * x); // (x^{1/α})″
        nm1 * (u2 * d - u1 * u1) / (d * d) - c2 / (x * x)
    };
    // Newton for the peak from a bracket-safe start; fall back to bisection
    // steps whenever Newton leaves (β, ∞) or stalls.
    let mut lo = beta * (1.0 + 1e-9);
    let mut hi = (beta + kk + alpha * nm1).max(2.0 * beta);
    let mut guard = 0;
    while dphi(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Numerical(format!(
                "NGG log-weight peak search failed for n={n}, k={k}"
            )));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..80 {
        let d = dphi(x);
        if d > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = d / ddphi(x);
        let candidate = x - step;
        x = if candidate > lo && candidate < hi {
            candidate
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= 1e-12 * hi || step.abs() <= 1e-12 * x {
            break;
        }
    }
    let x_star = x;
    let phi_star = phi(x_star);
    // Window end: φ decays at rate ≥ (1 − φ'(x)) → asymptotically like −x;
    // one doubling pass from an analytic first guess.
    let sigma = (-1.0 / ddphi(x_star)).max(0.0).sqrt().max(1.0);
    let mut x_hi = x_star + 42.0 + 10.0 * sigma;
    let mut step = x_hi - x_star;
    let mut guard = 0;
    while phi(x_hi) - phi_star > -38.0 {
        x_hi += step;
        step *= 2.0;
        guard += 1;
        if guard > 400 {
            return Err(Error::Numerical(format!(
                "NGG log-weight tail search failed for n={n}, k={k}"
            )));
        }
    }
    let integral = tanh_sinh_f64(|x| (phi(x) - phi_star).exp(), beta, x_hi, 1e-11)
        .ok_or_else(|| {
            Error::Numerical(format!("NGG log-weight quadrature failed for n={n}, k={k}"))
        })?;
    Ok(beta + (kk - 1.0) * alpha.ln() - lgamma(n as f64) + phi_star + integral.ln())
}

/// Minimal fixed-budget tanh-sinh rule in `f64` for smooth bounded
/// integrands on a finite interval.
pub(crate) fn tanh_sinh_f64<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Option<f64> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    if !(half > 0.0) || !half.is_finite() {
        return None;
    }
    let pi_half = std::f64::consts::FRAC_PI_2;
    let mut sum = pi_half * f(mid);
    let mut h = 1.0f64;
    let mut prev: Option<f64> = None;
    for level in 0..=11u32 {
        if level > 0 {
            h *= 0.5;
        }
        let step = if level == 0 { 1u64 } else { 2 };
        let mut k = 1u64;
        let mut level_sum = 0.0f64;
        let mut tail = 0u32;
        loop {
            let t = h * k as f64;
            let u = pi_half * t.sinh();
            let ch = u.cosh();
            let w = pi_half * t.cosh() / (ch * ch);
            let off = half * u.tanh();
            let xp = mid + off;
            let xm = mid - off;
            let mut c = 0.0;
            if xp < b {
                c += f(xp);
            }
            if xm > a {
                c += f(xm);
            }
            let contrib = w * c;
            level_sum += contrib;
            let floor = (sum + level_sum).abs() * 1e-17 + 1e-300;
            if t >= 1.0 && contrib.abs() <= floor {
                tail += 1;
                if tail >= 3 {
                    break;
                }
            } else if contrib.abs() > floor {
                tail = 0;
            }
            k += step;
            if k > 20 * (1u64 << level.min(16)) + 100 {
                break;
            }
        }
        sum += level_sum;
        let estimate = sum * h * half;
        if let Some(p) = prev {
            if (estimate - p).abs() <= rel_tol * estimate.abs() && level >= 3 {
                return Some(estimate);
            }
        }
        prev = Some(estimate);
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_state_validation() {
        assert!(PartitionState::new(vec![]).is_err());
        assert!(PartitionState::new(vec![2, 0, 1]).is_err());
        let s = PartitionState::new(vec![3, 2, 1]).unwrap();
        assert_eq!(s.n(), 6);
        assert_eq!(s.k(), 3);
    }

    #[test]
    fn model_parameter_validation() {
        assert!(GibbsModel::poisson_dirichlet(0.5, -0.6, 128).is_err());
        assert!(GibbsModel::poisson_dirichlet(1.0, 1.0, 128).is_err());
        assert!(GibbsModel::normalized_gg(0.5, 0.0, 128).is_err());
        assert!(GibbsModel::normalized_ig(1.0, 128).unwrap().alpha() == 0.5);
    }

    #[test]
    fn pd_weight_examples() {
        let m = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        // V_{3,2} = (1.5)_{1↑0.5}/(2)_2 = 1.5/6
        assert!((m.weight(3, 2).unwrap().to_f64() - 0.25).abs() < 1e-30);
        assert_eq!(m.weight(1, 1).unwrap().to_f64(), 1.0);
        assert!(m.weight(3, 4).is_err());
    }

    #[test]
    fn ngg_boundary_weight_is_one() {
        for beta in [0.1, 1.0, 10.0] {
            let m = GibbsModel::normalized_ig(beta, 128).unwrap();
            let v = m.weight(1, 1).unwrap();
            assert_eq!(v.to_f64(), 1.0, "beta={beta}");
        }
    }

    #[test]
    fn ngg_weight_routes_agree() {
        // Alternating sum vs positive integral on overlapping n.
        for (alpha, beta) in [(0.5f64, 1.0f64), (0.5, 0.3), (0.75, 0.5), (0.25, 2.0)] {
            for (n, k) in [(5u32, 2u32), (20, 6), (40, 11), (60, 3)] {
                let alt = ngg_weight_alternating(n, k, alpha, beta, 128).unwrap();
                let int = ngg_weight_integral(n, k, alpha, beta, 128).unwrap();
                let rel = Float::with_val(160, &alt - &int).abs().to_f64() / int.to_f64();
                assert!(
                    rel < 1e-20,
                    "alpha={alpha} beta={beta} n={n} k={k}: rel={rel:e}"
                );
            }
        }
    }

    #[test]
    fn ngg_log_weight_f64_matches_exact() {
        for (alpha, beta) in [(0.5f64, 1.0f64), (0.6, 0.7)] {
            for (n, k) in [(5u32, 2u32), (30, 7), (150, 12), (700, 26)] {
                let m = GibbsModel::normalized_gg(alpha, beta, 160).unwrap();
                let exact_ln = m.weight(n, k).unwrap().ln().to_f64();
                let fast = m.log_weight_f64(n, k).unwrap();
                assert!(
                    (fast - exact_ln).abs() < 1e-9 * exact_ln.abs().max(1.0),
                    "alpha={alpha} beta={beta} n={n} k={k}: {fast} vs {exact_ln}"
                );
            }
        }
    }

    #[test]
    fn pd_log_weight_f64_matches_exact() {
        let m = GibbsModel::poisson_dirichlet(0.5, 1.0, 160).unwrap();
        for (n, k) in [(5u32, 2u32), (50, 9), (400, 20)] {
            let exact_ln = m.weight(n, k).unwrap().ln().to_f64();
            let fast = m.log_weight_f64(n, k).unwrap();
            assert!((fast - exact_ln).abs() < 1e-10 * exact_ln.abs().max(1.0));
        }
    }

    #[test]
    fn backward_recursion_pd() {
        let m = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        for n in 1..=50u32 {
            for k in (1..=n).step_by(7) {
                let r = m.recursion_residual(n, k).unwrap().to_f64();
                assert!(r <= 1e-12, "n={n} k={k}: {r:e}");
            }
        }
    }

    #[test]
    fn backward_recursion_ngg() {
        let m = GibbsModel::normalized_ig(1.0, 128).unwrap();
        for (n, k) in [(1u32, 1u32), (10, 4), (25, 10), (25, 25)] {
            let r = m.recursion_residual(n, k).unwrap().to_f64();
            assert!(r <= 1e-10, "n={n} k={k}: {r:e}");
        }
        let m = GibbsModel::normalized_gg(0.75, 0.5, 128).unwrap();
        for (n, k) in [(7u32, 3u32), (19, 8)] {
            let r = m.recursion_residual(n, k).unwrap().to_f64();
            assert!(r <= 1e-10, "n={n} k={k}: {r:e}");
        }
    }

    #[test]
    fn eppf_examples() {
        let m = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        let s = PartitionState::new(vec![2, 1]).unwrap();
        assert!((m.eppf(&s).unwrap().to_f64() - 0.125).abs() < 1e-30);
        let s1 = PartitionState::new(vec![1]).unwrap();
        assert_eq!(m.eppf(&s1).unwrap().to_f64(), 1.0);
        let nig = GibbsModel::normalized_ig(1.0, 128).unwrap();
        assert_eq!(nig.eppf(&s1).unwrap().to_f64(), 1.0);
    }

    #[test]
    fn eppf_normalization_via_stirling() {
        // Σ_k V_{n,k}·S_{n,k} = 1
        use crate::stirling::build_triangle;
        for (model, tol) in [
            (GibbsModel::poisson_dirichlet(0.5, 1.0, 160).unwrap(), 1e-12),
            (GibbsModel::normalized_ig(1.0, 160).unwrap(), 1e-9),
        ] {
            let t = build_triangle(model.alpha(), 20, 192).unwrap();
            for n in [1u32, 5, 12, 20] {
                let mut total = XReal::zero(160);
                for k in 1..=n {
                    let v = model.weight(n, k).unwrap();
                    let s = t.entry(n as usize, k as usize).unwrap();
                    total = &total + &(&v * &s);
                }
                assert!(
                    (total.to_f64() - 1.0).abs() < tol,
                    "n={n}: {}",
                    total.to_f64()
                );
            }
        }
    }

    #[test]
    fn predictive_sums_to_one() {
        let pd = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        let nig = GibbsModel::normalized_ig(1.0, 128).unwrap();
        for model in [pd, nig] {
            for sizes in [vec![1u32], vec![3, 2], vec![5, 1, 1], vec![2, 2, 2, 1]] {
                let s = PartitionState::new(sizes).unwrap();
                let pr = model.predictive(&s).unwrap();
                let mut total = pr.p_new.clone();
                for pj in &pr.p_join {
                    total = &total + pj;
                }
                assert!(
                    (total.to_f64() - 1.0).abs() < 1e-10,
                    "{:?}: {}",
                    model.kind(),
                    total.to_f64()
                );
            }
        }
    }

    #[test]
    fn pd_predictive_closed_form() {
        // p_new = (θ + kα)/(θ + n)
        let (alpha, theta) = (0.5, 1.0);
        let m = GibbsModel::poisson_dirichlet(alpha, theta, 128).unwrap();
        for sizes in [vec![4u32, 2, 1], vec![1, 1], vec![10]] {
            let s = PartitionState::new(sizes).unwrap();
            let pr = m.predictive(&s).unwrap();
            let expect = (theta + s.k() as f64 * alpha) / (theta + s.n() as f64);
            assert!((pr.p_new.to_f64() - expect).abs() < 1e-25);
        }
    }

    #[test]
    fn diversity_tilt_conventions() {
        // PD: c = 1, plain h(s^{−1/α}).
        let m = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        let s = 1.3f64;
        let expect = crate::special::tilt_pd(s.powf(-2.0), 0.5, 1.0, 128).unwrap();
        assert!(m.diversity_tilt(s).unwrap().rel_diff(&expect) < 1e-14);
        // NGG: c = 2 doubles the argument.
        let m = GibbsModel::normalized_ig(1.0, 128).unwrap();
        let expect = crate::special::tilt_ngg(2.0 * s.powf(-2.0), 0.5, 1.0, 128).unwrap();
        assert!(m.diversity_tilt(s).unwrap().rel_diff(&expect) < 1e-14);
    }
}
