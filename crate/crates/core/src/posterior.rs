//! Exact posterior quantities for species sampling: posterior weight
//! ratios, the joint law of new-sample statistics, the expected number of
//! new species, the posterior pmf of the number of new blocks, and the
//! exact discovery estimator.
//!
//! For an additional sample of size `m` after observing `(n, k)`:
//!
//! - `P(K_m = k*, L_m = s, sizes) = (s!/(s₁!⋯s_{k*}!·k*!))·
//!   (V_{n+m,k+k*}/V_{n,k})·C(m,s)·(n−kα)_{m−s}·Π(1−α)_{s_i−1}` — note the
//!   `k*!` in the denominator: exhaustive normalization over all outcomes
//!   forces it (a factorial over the observed, rather than new, block count
//!   does not normalize; the brute-force test pins this).
//! - `P(K_m = k* | K_n = k) = (V_{n+m,k+k*}/V_{n,k})·S^{nc}_{m,k*}` with
//!   non-centrality `r = n − kα`, using `S^{nc}_{m,0} = (r)_m` and
//!   `S^{nc}_{0,0} = 1`.
//! - Discovery: `D = Σ_{k*=0}^m (V_{n+m+1,k+k*+1}/V_{n,k})·S^{nc}_{m,k*}`,
//!   the probability that draw `n+m+1` is a new species when the
//!   intermediate `m` draws go unobserved.

use rug::Float;

use crate::error::{Error, Result};
use crate::models::GibbsModel;
use crate::special::rising_factorial_float;
use crate::stirling::{build_triangle, noncentral_convolution, NoncentralParams, StirlingTriangle};
use crate::xreal::XReal;

/// Summary of the new-species content of an additional sample: the number
/// of new species `k*`, the number `l` of observations falling in them, and
/// their sizes (summing to `l`) in exchangeable order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuationOutcome {
    k_star: u32,
    new_count: u32,
    sizes: Vec<u32>,
}

impl ContinuationOutcome {
    pub fn new(sizes: Vec<u32>) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Domain(
                "continuation sizes must all be ≥ 1".into(),
            ));
        }
        let l: u64 = sizes.iter().map(|&s| s as u64).sum();
        let l = u32::try_from(l)
            .map_err(|_| Error::Domain("continuation size exceeds supported range".into()))?;
        Ok(ContinuationOutcome {
            k_star: sizes.len() as u32,
            new_count: l,
            sizes,
        })
    }

    /// The empty outcome: no new species.
    pub fn empty() -> Self {
        ContinuationOutcome {
            k_star: 0,
            new_count: 0,
            sizes: Vec::new(),
        }
    }

    pub fn k_star(&self) -> u32 {
        self.k_star
    }

    /// Number of observations in new species (`L_m`).
    pub fn new_count(&self) -> u32 {
        self.new_count
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    /// True when the outcome can arise from an `m`-sample.
    pub fn fits(&self, m: u32) -> bool {
        self.new_count <= m
    }
}

/// Exact posterior weight ratio `V_{n+m,k+k*}/V_{n,k}`.
pub fn posterior_ratio_exact(
    model: &GibbsModel,
    n: u32,
    k: u32,
    m: u32,
    k_star: u32,
) -> Result<XReal> {
    if k + k_star > n + m {
        return Err(Error::Domain(format!(
            "posterior ratio requires k + k* ≤ n + m, got k={k}, k*={k_star}, n={n}, m={m}"
        )));
    }
    if m == 0 && k_star == 0 {
        return Ok(XReal::one(model.precision()));
    }
    let num = model.weight(n + m, k + k_star)?;
    let den = model.weight(n, k)?;
    Ok(&num / &den)
}

/// Joint posterior pmf of `(K_m, L_m, sizes)` for the additional sample.
pub fn joint_continuation_pmf(
    model: &GibbsModel,
    n: u32,
    k: u32,
    m: u32,
    outcome: &ContinuationOutcome,
) -> Result<XReal> {
    if !outcome.fits(m) {
        return Err(Error::Domain(format!(
            "outcome with {} new observations cannot arise from m={m}",
            outcome.new_count()
        )));
    }
    let p = model.precision();
    let s = outcome.new_count();
    let k_star = outcome.k_star();
    let ratio = posterior_ratio_exact(model, n, k, m, k_star)?;

    let wp = p + 32;
    // s!/(s₁!⋯s_{k*}!·k*!)
    let mut comb = Float::with_val(wp, 1);
    for i in 2..=s {
        comb *= i;
    }
    for &si in outcome.sizes() {
        for i in 2..=si {
            comb /= i;
        }
    }
    for i in 2..=k_star {
        comb /= i;
    }
    // C(m, s)
    let mut binom = Float::with_val(wp, 1);
    for i in 0..s {
        binom *= m - i;
        binom /= i + 1;
    }
    // (n − kα)_{m−s}
    let r = Float::with_val(wp, n) - Float::with_val(wp, model.alpha()) * k;
    let rf = rising_factorial_float(&r, m - s, wp);
    // Π (1−α)_{s_i − 1}
    let one_minus_alpha = Float::with_val(wp, 1.0) - Float::with_val(wp, model.alpha());
    let mut prod = Float::with_val(wp, 1);
    for &si in outcome.sizes() {
        prod *= rising_factorial_float(&one_minus_alpha, si - 1, wp);
    }
    let mut factor = comb * binom * rf * prod;
    factor.set_prec_round(p, rug::float::Round::Nearest);
    Ok(&ratio * &XReal::from_float(factor))
}

/// Posterior pmf of the number of new species,
/// `P(K_m = k* | K_n = k) = (V_{n+m,k+k*}/V_{n,k})·S^{nc}_{m,k*}`.
pub fn posterior_km_pmf(
    model: &GibbsModel,
    n: u32,
    k: u32,
    m: u32,
    k_star: u32,
) -> Result<XReal> {
    if k_star > m {
        return Err(Error::Domain(format!(
            "posterior_km_pmf requires k* ≤ m, got k*={k_star}, m={m}"
        )));
    }
    let wp = model.precision() + 32;
    if m == 0 {
        return Ok(XReal::one(model.precision()));
    }
    let params = NoncentralParams::new(model.alpha(), n, k)?;
    let triangle = build_triangle(model.alpha(), m as usize, wp)?;
    km_pmf_term(model, n, k, m, k_star, &params, &triangle)
}

fn km_pmf_term(
    model: &GibbsModel,
    n: u32,
    k: u32,
    m: u32,
    k_star: u32,
    params: &NoncentralParams,
    triangle: &StirlingTriangle,
) -> Result<XReal> {
    let ratio = posterior_ratio_exact(model, n, k, m, k_star)?;
    let snc = noncentral_convolution(m as usize, k_star as usize, params, triangle)?;
    Ok(&ratio * &snc)
}

/// The whole pmf vector `k* = 0..=m` sharing one Stirling triangle.
pub fn posterior_km_pmf_all(model: &GibbsModel, n: u32, k: u32, m: u32) -> Result<Vec<XReal>> {
    if m == 0 {
        return Ok(vec![XReal::one(model.precision())]);
    }
    let wp = model.precision() + 32;
    let params = NoncentralParams::new(model.alpha(), n, k)?;
    let triangle = build_triangle(model.alpha(), m as usize, wp)?;
    (0..=m)
        .map(|k_star| km_pmf_term(model, n, k, m, k_star, &params, &triangle))
        .collect()
}

/// Posterior expected number of new species,
/// `E[K_m | K_n = k] = Σ k*·P(K_m = k*)`.
pub fn expected_new_species(model: &GibbsModel, n: u32, k: u32, m: u32) -> Result<XReal> {
    let pmf = posterior_km_pmf_all(model, n, k, m)?;
    let p = model.precision();
    let mut total = XReal::zero(p);
    for (k_star, prob) in pmf.iter().enumerate().skip(1) {
        total = &total + &(&XReal::new(p, k_star as f64) * prob);
    }
    Ok(total)
}

/// Exact discovery probability: the chance that observation `n+m+1` is a
/// species unseen among the first `n`, without observing the intermediate
/// `m` draws:
/// `Σ_{k*=0}^m (V_{n+m+1,k+k*+1}/V_{n,k})·S^{nc}_{m,k*}`.
pub fn discovery_exact(model: &GibbsModel, n: u32, k: u32, m: u32) -> Result<XReal> {
    let p = model.precision();
    let v_nk = model.weight(n, k)?;
    if m == 0 {
        let v = model.weight(n + 1, k + 1)?;
        return Ok(&v / &v_nk);
    }
    let wp = p + 32;
    let params = NoncentralParams::new(model.alpha(), n, k)?;
    let triangle = build_triangle(model.alpha(), m as usize, wp)?;
    let mut total = XReal::zero(p);
    for k_star in 0..=m {
        let v_top = model.weight(n + m + 1, k + k_star + 1)?;
        let snc = noncentral_convolution(m as usize, k_star as usize, &params, &triangle)?;
        total = &total + &(&(&v_top / &v_nk) * &snc);
    }
    Ok(total)
}

/// All continuation outcomes of an `m`-sample, compositions enumerated in
/// lexicographic order (fixed for reproducibility; sums are order-free).
pub fn enumerate_outcomes(m: u32) -> Vec<ContinuationOutcome> {
    let mut out = vec![ContinuationOutcome::empty()];
    for k_star in 1..=m {
        for l in k_star..=m {
            let mut prefix = Vec::with_capacity(k_star as usize);
            push_compositions(l, k_star, &mut prefix, &mut out);
        }
    }
    out
}

fn push_compositions(
    total: u32,
    parts: u32,
    prefix: &mut Vec<u32>,
    out: &mut Vec<ContinuationOutcome>,
) {
    if parts == 1 {
        prefix.push(total);
        out.push(ContinuationOutcome::new(prefix.clone()).expect("valid composition"));
        prefix.pop();
        return;
    }
    // first part runs 1..=total−(parts−1), ascending → lexicographic order
    for first in 1..=(total - (parts - 1)) {
        prefix.push(first);
        push_compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PartitionState;
    use crate::special::{gen_rising_factorial, rising_factorial, upper_incomplete_gamma};

    #[test]
    fn outcome_validation() {
        assert!(ContinuationOutcome::new(vec![2, 0]).is_err());
        let o = ContinuationOutcome::new(vec![2, 1]).unwrap();
        assert_eq!(o.k_star(), 2);
        assert_eq!(o.new_count(), 3);
        assert!(o.fits(3) && !o.fits(2));
        let e = ContinuationOutcome::empty();
        assert_eq!((e.k_star(), e.new_count()), (0, 0));
    }

    #[test]
    fn enumerate_outcomes_counts() {
        // Outcomes of an m-sample: empty + Σ_{k*,l} C(l−1, k*−1).
        let outs = enumerate_outcomes(3);
        // k*=0: ()
        // k*=1: (1),(2),(3)
        // k*=2: (1,1),(1,2),(2,1)
        // k*=3: (1,1,1)
        assert_eq!(outs.len(), 8);
        assert_eq!(outs[0], ContinuationOutcome::empty());
        // lexicographic within (k*=2, l=3)
        let pos_12 = outs.iter().position(|o| o.sizes() == [1, 2]).unwrap();
        let pos_21 = outs.iter().position(|o| o.sizes() == [2, 1]).unwrap();
        assert!(pos_12 < pos_21);
        let outs4 = enumerate_outcomes(4);
        // 1 + [4 choose-l sums]: k*=1: 4; k*=2: C(1,1)+C(2,1)+C(3,1)=1+2+3=6;
        // k*=3: C(2,2)+C(3,2)=1+3=4; k*=4: 1 → total 1+4+6+4+1 = 16
        assert_eq!(outs4.len(), 16);
    }

    #[test]
    fn posterior_ratio_identity_cases() {
        let m = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        assert_eq!(
            posterior_ratio_exact(&m, 5, 2, 0, 0).unwrap().to_f64(),
            1.0
        );
        assert!(posterior_ratio_exact(&m, 5, 2, 1, 5).is_err());
    }

    #[test]
    fn posterior_ratio_pd_closed_form() {
        // (θ+kα)_{k*↑α}/(θ+n)_m to 1e−12
        let (alpha, theta) = (0.5f64, 1.0f64);
        let model = GibbsModel::poisson_dirichlet(alpha, theta, 160).unwrap();
        for (n, k, m, k_star) in [(3u32, 2u32, 2u32, 1u32), (10, 4, 7, 3), (6, 1, 12, 9)] {
            let generic = posterior_ratio_exact(&model, n, k, m, k_star).unwrap();
            let num = gen_rising_factorial(theta + k as f64 * alpha, k_star, alpha, 160);
            let den = rising_factorial(theta + n as f64, m, 160);
            let closed = &num / &den;
            assert!(
                generic.rel_diff(&closed) < 1e-12,
                "n={n} k={k} m={m} k*={k_star}"
            );
        }
    }

    #[test]
    fn posterior_ratio_ngg_display_form() {
        // Two independent code paths: weight ratio vs the incomplete-Gamma
        // display α^{k*}·Σ_{n+m}/((n)_m·Σ_n).
        let (alpha, beta, n, k, m, k_star) = (0.5f64, 1.0f64, 3u32, 2u32, 2u32, 1u32);
        let model = GibbsModel::normalized_gg(alpha, beta, 192).unwrap();
        let lhs = posterior_ratio_exact(&model, n, k, m, k_star).unwrap();
        let sum_at = |nn: u32, kk: u32| -> XReal {
            let mut sum = XReal::zero(256);
            let mut binom = 1.0f64;
            for i in 0..nn {
                if i > 0 {
                    binom *= (nn - i) as f64 / i as f64;
                }
                let g =
                    upper_incomplete_gamma(kk as f64 - i as f64 / alpha, beta, 256).unwrap();
                let c = XReal::new(
                    256,
                    binom * beta.powf(i as f64 / alpha) * if i % 2 == 0 { 1.0 } else { -1.0 },
                );
                sum = &sum + &(&c * &g);
            }
            sum
        };
        let rhs = &(&XReal::new(256, alpha.powi(k_star as i32)) * &sum_at(n + m, k + k_star))
            / &(&rising_factorial(n as f64, m, 256) * &sum_at(n, k));
        assert!(lhs.rel_diff(&rhs) < 1e-12, "{} vs {}", lhs.to_f64(), rhs.to_f64());
    }

    #[test]
    fn joint_pmf_normalizes_pd() {
        let model = GibbsModel::poisson_dirichlet(0.5, 1.0, 160).unwrap();
        let (n, k, m) = (4u32, 2u32, 3u32);
        let mut total = XReal::zero(160);
        for o in enumerate_outcomes(m) {
            total = &total + &joint_continuation_pmf(&model, n, k, m, &o).unwrap();
        }
        assert!((total.to_f64() - 1.0).abs() < 1e-10, "{}", total.to_f64());
    }

    #[test]
    fn joint_pmf_normalizes_nig() {
        let model = GibbsModel::normalized_ig(1.0, 160).unwrap();
        let (n, k, m) = (4u32, 2u32, 3u32);
        let mut total = XReal::zero(160);
        for o in enumerate_outcomes(m) {
            total = &total + &joint_continuation_pmf(&model, n, k, m, &o).unwrap();
        }
        assert!((total.to_f64() - 1.0).abs() < 1e-8, "{}", total.to_f64());
    }

    #[test]
    fn joint_pmf_empty_outcome_m1() {
        // (k*=0, l=0): (V_{n+1,k}/V_{n,k})·(n−kα)
        let model = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        let (n, k) = (5u32, 2u32);
        let v = joint_continuation_pmf(&model, n, k, 1, &ContinuationOutcome::empty()).unwrap();
        let expect = &(&model.weight(n + 1, k).unwrap() / &model.weight(n, k).unwrap())
            * &XReal::new(128, n as f64 - k as f64 * 0.5);
        assert!(v.rel_diff(&expect) < 1e-25);
    }

    #[test]
    fn km_pmf_normalizes() {
        let model = GibbsModel::poisson_dirichlet(0.5, 1.0, 160).unwrap();
        let pmf = posterior_km_pmf_all(&model, 5, 2, 6).unwrap();
        let total: f64 = pmf.iter().map(|x| x.to_f64()).sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        let nig = GibbsModel::normalized_ig(1.0, 160).unwrap();
        let pmf = posterior_km_pmf_all(&nig, 5, 2, 6).unwrap();
        let total: f64 = pmf.iter().map(|x| x.to_f64()).sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn km_pmf_m1_is_predictive() {
        let model = GibbsModel::normalized_ig(1.0, 128).unwrap();
        let (n, k) = (7u32, 3u32);
        let pmf1 = posterior_km_pmf(&model, n, k, 1, 1).unwrap();
        let expect = &model.weight(n + 1, k + 1).unwrap() / &model.weight(n, k).unwrap();
        assert!(pmf1.rel_diff(&expect) < 1e-25);
    }

    #[test]
    fn expected_new_species_basics() {
        let model = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        let (n, k) = (6u32, 3u32);
        // m = 1 → V_{n+1,k+1}/V_{n,k}
        let e1 = expected_new_species(&model, n, k, 1).unwrap();
        let expect = &model.weight(n + 1, k + 1).unwrap() / &model.weight(n, k).unwrap();
        assert!(e1.rel_diff(&expect) < 1e-25);
        // monotone nondecreasing in m for both families
        for model in [
            GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap(),
            GibbsModel::normalized_ig(1.0, 128).unwrap(),
        ] {
            let mut last = 0.0f64;
            for m in 1..=20u32 {
                let e = expected_new_species(&model, n, k, m).unwrap().to_f64();
                assert!(e >= last - 1e-12, "m={m}: {e} < {last}");
                last = e;
            }
        }
    }

    #[test]
    fn discovery_exact_m0_and_range() {
        for model in [
            GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap(),
            GibbsModel::normalized_ig(1.0, 128).unwrap(),
        ] {
            let (n, k) = (8u32, 3u32);
            let d0 = discovery_exact(&model, n, k, 0).unwrap();
            let expect = &model.weight(n + 1, k + 1).unwrap() / &model.weight(n, k).unwrap();
            assert!(d0.rel_diff(&expect) < 1e-30);
            for m in [1u32, 4, 9] {
                let d = discovery_exact(&model, n, k, m).unwrap().to_f64();
                assert!(d > 0.0 && d < 1.0, "m={m}: {d}");
            }
        }
    }

    #[test]
    fn discovery_equals_marginalized_predictive() {
        // D must equal Σ_{k*} P(K_m=k*)·p_new(n+m, k+k*).
        let model = GibbsModel::normalized_ig(1.0, 160).unwrap();
        let (n, k, m) = (6u32, 2u32, 5u32);
        let d = discovery_exact(&model, n, k, m).unwrap();
        let pmf = posterior_km_pmf_all(&model, n, k, m).unwrap();
        let mut total = XReal::zero(160);
        for (k_star, prob) in pmf.iter().enumerate() {
            let kk = k + k_star as u32;
            let p_new = &model.weight(n + m + 1, kk + 1).unwrap()
                / &model.weight(n + m, kk).unwrap();
            total = &total + &(prob * &p_new);
        }
        assert!(d.rel_diff(&total) < 1e-20);
    }

    #[test]
    fn state_shapes_do_not_matter_for_km() {
        // K_m | K_n = k depends on the state only through (n, k).
        let model = GibbsModel::poisson_dirichlet(0.5, 1.0, 128).unwrap();
        let s1 = PartitionState::new(vec![4, 1, 1]).unwrap();
        let s2 = PartitionState::new(vec![2, 2, 2]).unwrap();
        assert_eq!((s1.n(), s1.k()), (s2.n(), s2.k()));
        let a = posterior_km_pmf(&model, s1.n(), s1.k(), 4, 2).unwrap();
        let b = posterior_km_pmf(&model, s2.n(), s2.k(), 4, 2).unwrap();
        assert!(a.rel_diff(&b) == 0.0);
    }
}
