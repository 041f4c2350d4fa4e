//! Double-exponential (tanh-sinh / exp-sinh) quadrature in extended
//! precision.
//!
//! Both rules tolerate integrable endpoint singularities because the node
//! transformation pushes abscissas toward the endpoints double-exponentially.
//! [`exp_sinh`] hands the integrand the exact offset `x − a` alongside `x`,
//! so integrands can resolve behavior near the finite endpoint well below
//! the working precision of `x` itself.

use rug::Float;

use crate::error::{Error, Result};

const MAX_LEVEL: u32 = 12;
/// Consecutive negligible node pairs required before a level is cut off.
const TAIL_RUN: u32 = 3;

fn working(prec: u32) -> u32 {
    prec + 24
}

/// ∫_a^b f(x) dx over a finite interval.
///
/// Converges when successive level refinements agree to `rel_tol` in
/// relative terms; errors out with diagnostics otherwise.
pub fn tanh_sinh<F>(mut f: F, a: &Float, b: &Float, prec: u32, rel_tol: f64) -> Result<Float>
where
    F: FnMut(&Float) -> Result<Float>,
{
    let wp = working(prec);
    let half = Float::with_val(wp, b - a) / 2u32;
    let mid = Float::with_val(wp, a + b) / 2u32;
    if !(half.is_finite() && half.is_sign_positive() && !half.is_zero()) {
        return Err(Error::Domain(format!(
            "tanh_sinh requires a finite interval with a < b, got [{}, {}]",
            a.to_f64(),
            b.to_f64()
        )));
    }
    let pi_half = Float::with_val(wp, rug::float::Constant::Pi) / 2u32;

    let center = {
        let w0 = pi_half.clone();
        f(&mid)? * w0
    };
    let mut sum = center;

    // Node and weight at trapezoid abscissa t: x = mid + half·tanh(u),
    // w = half·(π/2)·cosh(t)/cosh²(u) with u = (π/2)·sinh(t).
    let mut eval_pair = |t: &Float| -> Result<Float> {
        let u = Float::with_val(wp, t.clone().sinh() * &pi_half);
        let ch = u.clone().cosh();
        let tanh_u = u.tanh();
        let w = Float::with_val(wp, t.clone().cosh() * &pi_half) / ch.square();
        let off = Float::with_val(wp, &half * &tanh_u);
        let xp = Float::with_val(wp, &mid + &off);
        let xm = Float::with_val(wp, &mid - &off);
        let mut s = Float::with_val(wp, 0);
        // Skip nodes that rounded onto an endpoint.
        if xp < *b {
            s += f(&xp)?;
        }
        if xm > *a {
            s += f(&xm)?;
        }
        Ok(s * w)
    };
    let mut h = Float::with_val(wp, 1);
    let mut previous: Option<Float> = None;

    for level in 0..=MAX_LEVEL {
        if level > 0 {
            h /= 2u32;
        }
        let mut level_sum = Float::with_val(wp, 0);
        let step: u32 = if level == 0 { 1 } else { 2 };
        let mut k: u32 = 1;
        let mut tail = 0u32;
        loop {
            let t = Float::with_val(wp, &h * k);
            let in_outer_region = t >= 1u32;
            let contrib = eval_pair(&t)?;
            let mag = contrib.clone().abs();
            let floor = Float::with_val(wp, &sum + &level_sum)
                .abs()
                .max(&Float::with_val(wp, 1e-300))
                >> (prec + 10);
            level_sum += contrib;
            // Small contributions near t = 0 say nothing about the rest of
            // the level; only cut off in the double-exponential decay zone.
            if mag <= floor && in_outer_region {
                tail += 1;
                if tail >= TAIL_RUN {
                    break;
                }
            } else if mag > floor {
                tail = 0;
            }
            k += step;
            if k > 20 * (1u32 << level.min(16)) + 100 {
                break;
            }
        }
        sum += level_sum;
        let estimate = Float::with_val(wp, &sum * &h) * &half;
        if let Some(prev) = previous.take() {
            let diff = Float::with_val(wp, &estimate - &prev).abs();
            let bound = estimate.clone().abs() * Float::with_val(wp, rel_tol);
            if diff <= bound && level >= 2 {
                return Ok(estimate);
            }
        }
        previous = Some(estimate);
    }
    Err(Error::Numerical(format!(
        "tanh_sinh did not converge to rel_tol={rel_tol:.3e} within {MAX_LEVEL} levels \
         (last estimate {:.6e})",
        previous.map(|p| p.to_f64()).unwrap_or(f64::NAN)
    )))
}

/// ∫_a^∞ f(x) dx.
///
/// The integrand receives `(x, x − a)`; the offset is exact even when `x`
/// rounds to `a` at working precision.
pub fn exp_sinh<F>(mut f: F, a: &Float, prec: u32, rel_tol: f64) -> Result<Float>
where
    F: FnMut(&Float, &Float) -> Result<Float>,
{
    let wp = working(prec);
    let pi_half = Float::with_val(wp, rug::float::Constant::Pi) / 2u32;

    // x = a + exp(u), dx = exp(u)·(π/2)·cosh(t) dt with u = (π/2)·sinh(t).
    let mut eval_at = |t: &Float| -> Result<Float> {
        let u = Float::with_val(wp, t.clone().sinh() * &pi_half);
        let off = u.exp();
        if !off.is_finite() || off.is_zero() {
            return Ok(Float::with_val(wp, 0));
        }
        let x = Float::with_val(wp, a + &off);
        let w = Float::with_val(wp, t.clone().cosh() * &pi_half) * &off;
        Ok(f(&x, &off)? * w)
    };

    let mut sum = eval_at(&Float::with_val(wp, 0))?;
    let mut h = Float::with_val(wp, 1);
    let mut previous: Option<Float> = None;

    for level in 0..=MAX_LEVEL {
        if level > 0 {
            h /= 2u32;
        }
        let mut level_sum = Float::with_val(wp, 0);
        let step: u32 = if level == 0 { 1 } else { 2 };
        for dir in [1i32, -1i32] {
            let mut k: u32 = 1;
            let mut tail = 0u32;
            loop {
                let t = Float::with_val(wp, &h * k) * dir;
                let in_outer_region = t.clone().abs() >= 1u32;
                let contrib = eval_at(&t)?;
                let mag = contrib.clone().abs();
                let floor = Float::with_val(wp, &sum + &level_sum)
                    .abs()
                    .max(&Float::with_val(wp, 1e-300))
                    >> (prec + 10);
                level_sum += contrib;
                if mag <= floor && in_outer_region {
                    tail += 1;
                    if tail >= TAIL_RUN {
                        break;
                    }
                } else if mag > floor {
                    tail = 0;
                }
                k += step;
                if k > 20 * (1u32 << level.min(16)) + 100 {
                    break;
                }
            }
        }
        sum += level_sum;
        let estimate = Float::with_val(wp, &sum * &h);
        if let Some(prev) = previous.take() {
            let diff = Float::with_val(wp, &estimate - &prev).abs();
            let bound = estimate.clone().abs() * Float::with_val(wp, rel_tol);
            if diff <= bound && level >= 2 {
                return Ok(estimate);
            }
        }
        previous = Some(estimate);
    }
    Err(Error::Numerical(format!(
        "exp_sinh did not converge to rel_tol={rel_tol:.3e} within {MAX_LEVEL} levels \
         (last estimate {:.6e})",
        previous.map(|p| p.to_f64()).unwrap_or(f64::NAN)
    )))
}
