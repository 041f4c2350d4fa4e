//! Central and non-central generalized Stirling numbers.
//!
//! The central numbers `S_{n,k}` (parameters `(−1, −α)`) are the connection
//! coefficients expanding ordinary rising factorials in generalized ones,
//!
//! ```text
//! (x)_n = Σ_{k=1}^n S_{n,k} (x)_{k↑α},
//! ```
//!
//! computed by three independent routes: the triangular recurrence
//! `S_{n+1,k} = S_{n,k−1} + (n − kα)·S_{n,k}` (the bulk route — all-positive
//! additions for `α ∈ (0,1)`), Toscano's explicit alternating sum, and, for
//! the non-central numbers of non-centrality `r = n − kα`, the convolution
//! with rising factorials of `r` and the interchanged direct sum.
//!
//! The direct non-central sum includes the `j = 0` term: dropping it breaks
//! the equality with the convolution definition on every case with
//! `m ≥ k*`; a regression test pins the discrepancy.

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::special::{rising_factorial_float, validate_alpha, wprec};
use crate::xreal::XReal;

/// Cached triangle of central generalized Stirling numbers for a fixed `α`.
///
/// Immutable once built; cheap to share across threads.
#[derive(Debug)]
pub struct StirlingTriangle {
    alpha: f64,
    n_max: usize,
    prec: u32,
    // rows[n-1] holds S[n][1..=n]
    rows: Vec<Vec<Float>>,
}

impl StirlingTriangle {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Entry `S_{n,k}`. Supports the boundary conventions `S_{0,0} = 1`,
    /// `S_{n,0} = 0` for `n ≥ 1`, and `S_{n,k} = 0` for `k > n`.
    pub fn entry(&self, n: usize, k: usize) -> Result<XReal> {
        if n > self.n_max {
            return Err(Error::Capacity(format!(
                "triangle holds n ≤ {}, asked for n = {n}",
                self.n_max
            )));
        }
        Ok(XReal::from_float(self.entry_float(n, k)))
    }

    pub(crate) fn entry_float(&self, n: usize, k: usize) -> Float {
        if n == 0 && k == 0 {
            return Float::with_val(self.prec, 1);
        }
        if k == 0 || k > n {
            return Float::with_val(self.prec, 0);
        }
        self.rows[n - 1][k - 1].clone()
    }

    pub(crate) fn entry_ref(&self, n: usize, k: usize) -> Option<&Float> {
        if n >= 1 && k >= 1 && k <= n && n <= self.n_max {
            Some(&self.rows[n - 1][k - 1])
        } else {
            None
        }
    }
}

/// Build the triangle up to `n_max` by the recurrence
/// `S[n+1][k] = S[n][k−1] + (n − kα)·S[n][k]`, `S[1][1] = 1`.
pub fn build_triangle(alpha: f64, n_max: usize, prec: u32) -> Result<StirlingTriangle> {
    validate_alpha(alpha)?;
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let p = wprec(prec);
    let alpha_f = Float::with_val(p, alpha);
    let mut rows: Vec<Vec<Float>> = Vec::with_capacity(n_max);
    rows.push(vec![Float::with_val(p, 1)]);
    for n in 1..n_max {
        let prev = &rows[n - 1];
        let mut row = Vec::with_capacity(n + 1);
        for k in 1..=(n + 1) {
            // multiplier n − kα > 0 for all k ≤ n, α ∈ (0,1)
            let mut v = if k >= 2 {
                prev[k - 2].clone()
            } else {
                Float::with_val(p, 0)
            };
            if k <= n {
                let mult = Float::with_val(p, n) - Float::with_val(p, &alpha_f * k);
                v += mult * &prev[k - 1];
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(StirlingTriangle {
        alpha,
        n_max,
        prec: p,
        rows,
    })
}

/// Central number by Toscano's explicit formula
/// `S_{n,k} = (1/(α^k k!)) Σ_{j=1}^k (−1)^j C(k,j) (−jα)_n`,
/// an independent cross-check of the recurrence route.
///
/// The alternating sum cancels heavily for large `n`; the working precision
/// is set from a log-space estimate of the largest term before summing.
pub fn central_toscano(n: usize, k: usize, alpha: f64, prec: u32) -> Result<XReal> {
    validate_alpha(alpha)?;
    if !(1 <= k && k <= n) {
        return Err(Error::Domain(format!(
            "central_toscano requires 1 ≤ k ≤ n, got n={n}, k={k}"
        )));
    }
    let p = wprec(prec);

    // Largest-term magnitude in bits, from f64 logs.
    let mut max_log2: f64 = f64::NEG_INFINITY;
    for j in 1..=k {
        let ja = j as f64 * alpha;
        let mut lg: f64 = log2_binomial(k, j);
        for i in 0..n {
            let f = (i as f64 - ja).abs();
            if f == 0.0 {
                lg = f64::NEG_INFINITY;
                break;
            }
            lg += f.log2();
        }
        max_log2 = max_log2.max(lg);
    }
    // Answer magnitude lower bound: every entry is at least (1−α)^{n−k}.
    let ans_log2_lb = (n - k) as f64 * (1.0 - alpha).log2();
    let cancel = (max_log2 - ans_log2_lb).max(0.0);
    let wp = p + (cancel.ceil() as u32) + 64;

    let mut sum = Float::with_val(wp, 0);
    let mut binom = Float::with_val(wp, 1); // C(k, j), starting at j = 0
    let alpha_f = Float::with_val(wp, alpha);
    for j in 1..=k {
        binom *= k + 1 - j;
        binom /= j;
        let base = -Float::with_val(wp, &alpha_f * (j as u32));
        let rf = rising_factorial_float(&base, n as u32, wp);
        let term = Float::with_val(wp, &binom * &rf);
        if j % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
    }
    let alpha_pow = Float::with_val(wp, alpha).pow(k as u32);
    let mut k_fact = Float::with_val(wp, 1);
    for j in 2..=k {
        k_fact *= j;
    }
    let mut v = sum / (alpha_pow * k_fact);
    v.set_prec_round(p, rug::float::Round::Nearest);
    Ok(XReal::from_float(v))
}

fn log2_binomial(n: usize, k: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..k {
        s += ((n - i) as f64).log2() - ((i + 1) as f64).log2();
    }
    s
}

/// Parameters of a non-central generalized Stirling number
/// `S_{m,k*}^{(−1, −α, −r)}` with non-centrality `r = n − kα > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralParams {
    alpha: f64,
    n: u32,
    k: u32,
}

impl NoncentralParams {
    pub fn new(alpha: f64, n: u32, k: u32) -> Result<Self> {
        validate_alpha(alpha)?;
        if n < 1 || k < 1 {
            return Err(Error::Domain(format!(
                "non-central parameters require n ≥ 1 and k ≥ 1, got n={n}, k={k}"
            )));
        }
        if !((k as f64) * alpha < n as f64) {
            return Err(Error::Domain(format!(
                "non-centrality requires kα < n, got n={n}, k={k}, alpha={alpha}"
            )));
        }
        Ok(NoncentralParams { alpha, n, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Non-centrality `r = n − kα`.
    pub fn r(&self) -> f64 {
        self.n as f64 - self.k as f64 * self.alpha
    }
}

/// Non-central number by the convolution
/// `S^{nc}_{m,k*} = Σ_{s=k*}^m C(m,s) (r)_{m−s} S_{s,k*}`.
///
/// All terms are positive, so this route is numerically benign; it is the
/// oracle the direct route is checked against. `k* = 0` uses the convention
/// `S^{nc}_{m,0} = (r)_m`.
pub fn noncentral_convolution(
    m: usize,
    k_star: usize,
    params: &NoncentralParams,
    triangle: &StirlingTriangle,
) -> Result<XReal> {
    if triangle.alpha() != params.alpha() {
        return Err(Error::Domain(format!(
            "triangle was built for alpha={}, parameters have alpha={}",
            triangle.alpha(),
            params.alpha()
        )));
    }
    if k_star > m {
        return Err(Error::Domain(format!(
            "noncentral_convolution requires k* ≤ m, got k*={k_star}, m={m}"
        )));
    }
    if m > triangle.n_max() {
        return Err(Error::Capacity(format!(
            "triangle holds n ≤ {}, convolution needs s ≤ {m}",
            triangle.n_max()
        )));
    }
    let p = triangle.precision();
    let r = Float::with_val(p, params.n()) - Float::with_val(p, params.alpha()) * params.k();
    if k_star == 0 {
        return Ok(XReal::from_float(rising_factorial_float(&r, m as u32, p)));
    }
    // (r)_j table; C(m,s) built incrementally.
    let mut rf = Vec::with_capacity(m + 1);
    let mut acc = Float::with_val(p, 1);
    rf.push(acc.clone()); // (r)_0
    for i in 0..m {
        acc *= Float::with_val(p, &r + i);
        rf.push(acc.clone());
    }
    let mut sum = Float::with_val(p, 0);
    let mut binom = Float::with_val(p, 1);
    for s in 0..=m {
        if s > 0 {
            binom *= m + 1 - s;
            binom /= s;
        }
        if s < k_star {
            continue;
        }
        if let Some(st) = triangle.entry_ref(s, k_star) {
            let term = Float::with_val(p, &binom * &rf[m - s]);
            sum += term * st;
        }
    }
    Ok(XReal::from_float(sum))
}

/// Non-central number by the direct interchanged sum
/// `S^{nc}_{m,k*} = (1/(α^{k*} k*!)) Σ_{j=0}^{k*} (−1)^j C(k*,j) (r − jα)_m`.
///
/// The `j = 0` term carries `(r)_m` and is essential: it is exactly the
/// Vandermonde completion of the convolution. Must agree with
/// [`noncentral_convolution`].
pub fn noncentral_direct(
    m: usize,
    k_star: usize,
    params: &NoncentralParams,
    prec: u32,
) -> Result<XReal> {
    if k_star > m {
        return Err(Error::Domain(format!(
            "noncentral_direct requires k* ≤ m, got k*={k_star}, m={m}"
        )));
    }
    let p = wprec(prec);
    let alpha = params.alpha();
    let r = params.r();
    if k_star == 0 {
        let rf_base =
            Float::with_val(p, params.n()) - Float::with_val(p, alpha) * params.k();
        let rf = rising_factorial_float(&rf_base, m as u32, p);
        return Ok(XReal::from_float(rf));
    }

    // Cancellation budget from the largest term.
    let mut max_log2 = f64::NEG_INFINITY;
    for j in 0..=k_star {
        let base = r - j as f64 * alpha;
        let mut lg = log2_binomial(k_star, j);
        for i in 0..m {
            let f = (base + i as f64).abs();
            if f == 0.0 {
                lg = f64::NEG_INFINITY;
                break;
            }
            lg += f.log2();
        }
        max_log2 = max_log2.max(lg);
    }
    let wp = p + (max_log2.max(0.0).ceil() as u32) + 64;

    let mut sum = Float::with_val(wp, 0);
    let mut binom = Float::with_val(wp, 1);
    let alpha_f = Float::with_val(wp, alpha);
    let r_f = Float::with_val(wp, params.n()) - Float::with_val(wp, &alpha_f * params.k());
    for j in 0..=k_star {
        if j > 0 {
            binom *= k_star + 1 - j;
            binom /= j;
        }
        let base = Float::with_val(wp, &r_f - &Float::with_val(wp, &alpha_f * (j as u32)));
        let rf = rising_factorial_float(&base, m as u32, wp);
        let term = Float::with_val(wp, &binom * &rf);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let alpha_pow = Float::with_val(wp, alpha).pow(k_star as u32);
    let mut k_fact = Float::with_val(wp, 1);
    for j in 2..=k_star {
        k_fact *= j;
    }
    let mut v = sum / (alpha_pow * k_fact);
    v.set_prec_round(p, rug::float::Round::Nearest);
    Ok(XReal::from_float(v))
}
