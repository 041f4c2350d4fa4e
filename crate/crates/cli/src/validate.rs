//! Identity validation suites: each check re-derives a structural identity
//! at desk scale and reports its maximum residual.

use gibbs_core::approx::{posterior_ratio_approx, prior_weight_approx};
use gibbs_core::models::{GibbsModel, PartitionState};
use gibbs_core::posterior::{
    discovery_exact, enumerate_outcomes, joint_continuation_pmf, posterior_km_pmf_all,
};
use gibbs_core::special::{gen_rising_factorial, log_gamma, rising_factorial};
use gibbs_core::stirling::{
    build_triangle, central_toscano, noncentral_convolution, noncentral_direct, NoncentralParams,
};
use gibbs_core::XReal;

use crate::table::{Cell, Table};
use crate::Suite;

struct Check {
    name: &'static str,
    tolerance: f64,
    residual: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }
}

pub fn run_suite(suite: Suite, prec: u32) -> Table {
    let mut checks = Vec::new();
    if matches!(suite, Suite::All | Suite::Stirling) {
        checks.extend(stirling_checks(prec));
    }
    if matches!(suite, Suite::All | Suite::Models) {
        checks.extend(model_checks(prec));
    }
    if matches!(suite, Suite::All | Suite::Posterior) {
        checks.extend(posterior_checks(prec));
    }
    if matches!(suite, Suite::All | Suite::Approx) {
        checks.extend(approx_checks(prec));
    }
    let mut table = Table::new(
        "validate",
        vec![("precision", prec.to_string())],
        &["check", "status", "max_residual", "tolerance"],
        prec,
    );
    let mut failures = 0usize;
    for c in checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        if !c.passed() {
            failures += 1;
        }
        table.push(vec![
            Cell::Str(c.name.to_string()),
            Cell::Str(status.to_string()),
            Cell::F64(c.residual),
            Cell::F64(c.tolerance),
        ]);
    }
    if failures > 0 {
        table
            .diagnostics
            .push(format!("{failures} validation check(s) failed"));
        table.failed = true;
    }
    table
}

fn stirling_checks(prec: u32) -> Vec<Check> {
    let p = prec.max(160);
    let mut expansion: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let t = build_triangle(alpha, 20, p).unwrap();
        for x in [0.3, 1.0, 2.7] {
            for n in 1..=20usize {
                let mut sum = XReal::zero(p);
                for k in 1..=n {
                    sum = &sum
                        + &(&t.entry(n, k).unwrap() * &gen_rising_factorial(x, k as u32, alpha, p));
                }
                expansion = expansion.max(sum.rel_diff(&rising_factorial(x, n as u32, p)));
            }
        }
    }
    let mut routes: f64 = 0.0;
    for alpha in [0.35, 0.5] {
        let t = build_triangle(alpha, 12, p).unwrap();
        for n in 1..=12usize {
            for k in 1..=n {
                let a = central_toscano(n, k, alpha, p).unwrap();
                routes = routes.max(a.rel_diff(&t.entry(n, k).unwrap()));
            }
        }
    }
    let mut noncentral: f64 = 0.0;
    for (n, k, alpha) in [(2u32, 1u32, 0.5f64), (5, 2, 0.3)] {
        let params = NoncentralParams::new(alpha, n, k).unwrap();
        let t = build_triangle(alpha, 12, p).unwrap();
        for m in 1..=12usize {
            for k_star in 0..=m {
                let a = noncentral_convolution(m, k_star, &params, &t).unwrap();
                let b = noncentral_direct(m, k_star, &params, p).unwrap();
                noncentral = noncentral.max(a.rel_diff(&b));
            }
        }
    }
    vec![
        Check {
            name: "stirling/expansion_identity",
            tolerance: 1e-10,
            residual: expansion,
        },
        Check {
            name: "stirling/toscano_vs_recurrence",
            tolerance: 1e-12,
            residual: routes,
        },
        Check {
            name: "stirling/direct_vs_convolution",
            tolerance: 1e-10,
            residual: noncentral,
        },
    ]
}

fn model_checks(prec: u32) -> Vec<Check> {
    let models = [
        GibbsModel::poisson_dirichlet(0.5, 1.0, prec).unwrap(),
        GibbsModel::normalized_ig(1.0, prec).unwrap(),
    ];
    let mut recursion: f64 = 0.0;
    for model in &models {
        for n in 1..=15u32 {
            for k in 1..=n {
                recursion = recursion.max(model.recursion_residual(n, k).unwrap().to_f64());
            }
        }
    }
    let mut normalization: f64 = 0.0;
    for model in &models {
        let t = build_triangle(model.alpha(), 15, prec.max(192)).unwrap();
        for n in [5u32, 10, 15] {
            let mut total = XReal::zero(prec);
            for k in 1..=n {
                total = &total + &(&model.weight(n, k).unwrap() * &t.entry(n as usize, k as usize).unwrap());
            }
            normalization = normalization.max((total.to_f64() - 1.0).abs());
        }
    }
    let mut predictive: f64 = 0.0;
    for model in &models {
        for sizes in [vec![1u32], vec![4, 2, 1], vec![3, 3, 2, 1]] {
            let s = PartitionState::new(sizes).unwrap();
            let pr = model.predictive(&s).unwrap();
            let mut total = pr.p_new;
            for pj in &pr.p_join {
                total = &total + pj;
            }
            predictive = predictive.max((total.to_f64() - 1.0).abs());
        }
    }
    vec![
        Check {
            name: "models/backward_recursion",
            tolerance: 1e-8,
            residual: recursion,
        },
        Check {
            name: "models/eppf_normalization",
            tolerance: 1e-8,
            residual: normalization,
        },
        Check {
            name: "models/predictive_sums_to_one",
            tolerance: 1e-10,
            residual: predictive,
        },
    ]
}

fn posterior_checks(prec: u32) -> Vec<Check> {
    let models = [
        GibbsModel::poisson_dirichlet(0.5, 1.0, prec.max(160)).unwrap(),
        GibbsModel::normalized_ig(1.0, prec.max(160)).unwrap(),
    ];
    let mut joint: f64 = 0.0;
    for model in &models {
        let (n, k, m) = (4u32, 2u32, 3u32);
        let mut total = XReal::zero(prec);
        for o in enumerate_outcomes(m) {
            total = &total + &joint_continuation_pmf(model, n, k, m, &o).unwrap();
        }
        joint = joint.max((total.to_f64() - 1.0).abs());
    }
    let mut km: f64 = 0.0;
    for model in &models {
        let pmf = posterior_km_pmf_all(model, 5, 2, 10).unwrap();
        let total: f64 = pmf.iter().map(|x| x.to_f64()).sum();
        km = km.max((total - 1.0).abs());
    }
    let mut disc: f64 = 0.0;
    for model in &models {
        let (n, k) = (6u32, 2u32);
        let d0 = discovery_exact(model, n, k, 0).unwrap();
        let expect = &model.weight(n + 1, k + 1).unwrap() / &model.weight(n, k).unwrap();
        disc = disc.max(d0.rel_diff(&expect));
    }
    vec![
        Check {
            name: "posterior/joint_pmf_normalization",
            tolerance: 1e-8,
            residual: joint,
        },
        Check {
            name: "posterior/km_pmf_normalization",
            tolerance: 1e-8,
            residual: km,
        },
        Check {
            name: "posterior/discovery_m0_identity",
            tolerance: 1e-12,
            residual: disc,
        },
    ]
}

fn approx_checks(prec: u32) -> Vec<Check> {
    // Posterior-ratio identity on a deterministic pseudo-random grid.
    let wp = prec.max(224);
    let gx = |x: f64| log_gamma(x, wp).unwrap().exp();
    let powx = |b: f64, e: f64| XReal::new(wp, b).powf(e);
    let mut ident: f64 = 0.0;
    let mut stream = 0x9E3779B97F4A7C15u64;
    let mut next = || {
        stream = stream
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (stream >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..10 {
        let alpha = 0.2 + 0.6 * next();
        let theta = -alpha + 0.1 + 3.0 * next();
        let n = 5 + (next() * 20.0) as u32;
        let k = 1 + (next() * (n as f64 - 1.0)) as u32;
        let m = 20 + (next() * 100.0) as u32;
        let k_star = 1 + (next() * (m as f64 / 2.0)) as u32;
        let model = GibbsModel::poisson_dirichlet(alpha, theta, prec.max(160)).unwrap();
        let lhs = posterior_ratio_approx(&model, n, k, m, k_star).unwrap();
        let rhs = &(&(&(&powx(alpha, k_star as f64)
            * &powx(k_star as f64, theta / alpha + k as f64))
            * &gx(k_star as f64))
            * &gx(theta + n as f64))
            / &(&(&gx(m as f64) * &gx(theta / alpha + k as f64))
                * &powx(m as f64, theta + n as f64));
        ident = ident.max(lhs.rel_diff(&rhs));
    }
    // Prior approximation heads toward the exact weight along a mini-ladder.
    let mut monotone: f64 = 0.0;
    for model in [
        GibbsModel::poisson_dirichlet(0.5, 1.0, prec.max(160)).unwrap(),
        GibbsModel::normalized_ig(1.0, prec.max(160)).unwrap(),
    ] {
        let mut last = f64::INFINITY;
        for n in [100u32, 1000] {
            let k = (n as f64).powf(model.alpha()).round() as u32;
            let exact = model.weight(n, k).unwrap();
            let approx = prior_weight_approx(&model, n, k).unwrap();
            let err = approx.rel_diff(&exact);
            if err >= last {
                monotone = f64::INFINITY;
            }
            last = err;
        }
        monotone = monotone.max(last);
    }
    vec![
        Check {
            name: "approx/posterior_ratio_pd_identity",
            tolerance: 1e-10,
            residual: ident,
        },
        Check {
            name: "approx/prior_weight_error_shrinks",
            tolerance: 0.05,
            residual: monotone,
        },
    ]
}
