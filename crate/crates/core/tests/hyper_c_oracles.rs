mod common;

use bayes_screen::hyper_c::{
    ghg_log_kernel, log_prior_density, update_c, update_c_gzs, CConditional, CUpdateStats,
};
use bayes_screen::posterior::g_prior_bounds;
use bayes_screen::rng::stream_rng;
use bayes_screen::{CPrior, MhTuning, PriorConfig, SamplerState};
use proptest::prelude::*;
use statrs::distribution::{Continuous, InverseGamma};
use statrs::function::gamma::ln_gamma;

use common::{gaussian_dataset, ghg_frozen_log_target, ghg_mh_chi_square, gzs_frozen_states, gzs_ks_statistics, integrate, ks_critical_1pct};

#[test]
fn gzs_draws_pass_ks_at_frozen_states() {
    for (i, ks) in gzs_ks_statistics(10_000, 17).into_iter().enumerate() {
        assert!(ks < ks_critical_1pct(10_000), "state {i}: KS {ks}");
    }
}

#[test]
fn gzs_parameters_match_kernel_on_a_grid() {
    for (a, b_n, beta, s2) in gzs_frozen_states() {
        let p = beta.len();
        let d = gaussian_dataset(12, &vec![0.0; p], 1.0, 1);
        let state = SamplerState::from_beta(&d, beta.clone(), s2, p, 1.0).unwrap();
        let k = state.size as f64;
        let bb = state.beta_sq_norm();
        let (shape, scale) = CConditional::of(&state).gzs_params(a, (p as f64).powf(b_n));
        if shape <= 0.0 {
            continue;
        }
        let law = InverseGamma::new(shape, scale).unwrap();
        let kernel = |c: f64| -(a + k / 2.0 + 1.0) * c.ln() - ((p as f64).powf(b_n) + bb / (2.0 * s2)) / c;
        let mode = scale / (shape + 1.0);
        let shift = law.ln_pdf(mode) - kernel(mode);
        for c in [0.05, 0.3, 1.0, 2.0, 10.0, 100.0].map(|f| f * mode) {
            let diff = law.ln_pdf(c) - kernel(c) - shift;
            assert!(diff.abs() < 1e-9 * kernel(c).abs().max(1.0), "c = {c}: {diff}");
        }
    }
}

#[test]
fn gzs_empty_model_median() {
    let d = gaussian_dataset(12, &[0.0; 4], 1.0, 2);
    let mut state = SamplerState::empty(&d, 1.0, 1, 1.0);
    let mut rng = stream_rng(6, 0);
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|_| {
            update_c_gzs(&mut state, 1.0, 2.0, 4, &mut rng).unwrap();
            state.c
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    let median = 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
    let s = 16.0;
    let m = s / std::f64::consts::LN_2;
    // density of IG(1, s) at its median, and the asymptotic sd of the sample median
    let f_m = s / (m * m) * 0.5;
    let se = 1.0 / (2.0 * f_m * (n as f64).sqrt());
    assert!((median - m).abs() < 3.0 * se, "{median} vs {m} (se {se})");
}

#[test]
fn improper_gzs_on_empty_model_leaves_c_alone() {
    let d = gaussian_dataset(12, &[0.0; 4], 1.0, 2);
    let prior = PriorConfig::for_n(12).with_c_prior(CPrior::gzs(3.0));
    let mut state = SamplerState::empty(&d, 1.0, 1, 7.5);
    let mut stats = CUpdateStats::default();
    let mut rng = stream_rng(1, 0);
    for _ in 0..10 {
        update_c(&mut state, &prior, 4, &MhTuning::default(), &mut stats, &mut rng).unwrap();
    }
    assert_eq!(state.c, 7.5);
    assert_eq!(stats.skipped, 10);
}

#[test]
fn ghg_mh_matches_quadrature_target() {
    let (p_value, rate) = ghg_mh_chi_square(1_000_000, 100, 29);
    assert!(p_value > 0.01, "chi-square p = {p_value}");
    assert!(rate > 0.1 && rate < 0.9, "acceptance {rate}");
}

#[test]
fn ghg_prior_density_is_normalised() {
    for (d, b, p) in [(0.5, 1.0, 4), (1.0, 2.0, 20), (0.3, 0.5, 100)] {
        let prior = CPrior::Ghg { d, b };
        let (lo, hi) = g_prior_bounds(&prior, p).unwrap();
        let mass = integrate(&mut |k: f64| (log_prior_density(&prior, k.exp(), p).unwrap() + k).exp(), lo.ln(), hi.ln(), 1e-12);
        assert!((mass - 1.0).abs() < 1e-7, "{prior:?}: {mass}");
    }
}

#[test]
fn gzs_prior_density_is_normalised() {
    for (a, b_n, p) in [(1.0, 2.0, 4), (2.5, 1.0, 30), (0.5, 3.0, 10)] {
        let prior = CPrior::Gzs { a, b_n };
        let (lo, hi) = g_prior_bounds(&prior, p).unwrap();
        let mass = integrate(&mut |k: f64| (log_prior_density(&prior, k.exp(), p).unwrap() + k).exp(), lo.ln(), hi.ln(), 1e-12);
        assert!((mass - 1.0).abs() < 1e-7, "{prior:?}: {mass}");
    }
}

proptest! {
    #[test]
    fn ghg_conditional_matches_written_out_target(
        kappa in -20.0f64..20.0,
        other in -20.0f64..20.0,
        k in 0usize..6,
        bb in 0.0f64..10.0,
        s2 in 0.1f64..5.0,
        alpha in 1.5f64..1e4,
        b in 0.0f64..3.0,
    ) {
        let cond = CConditional { size: k, beta_sq: bb, sigma_sq: s2 };
        let lib = cond.ghg_log_kappa(kappa, alpha, b) - cond.ghg_log_kappa(other, alpha, b);
        let direct = ghg_frozen_log_target(kappa, k as f64, bb, s2, alpha, b)
            - ghg_frozen_log_target(other, k as f64, bb, s2, alpha, b);
        prop_assert!((lib - direct).abs() <= 1e-8 * direct.abs().max(1.0));
    }

    #[test]
    fn ghg_log_kernel_against_beta_density(kappa in -15.0f64..15.0, alpha in 1.1f64..50.0, b in 0.1f64..5.0) {
        // v = c / (1 + c) ~ Beta(alpha, b); the density of c is Beta(v) / (1 + c)^2
        let c = kappa.exp();
        let v = c / (1.0 + c);
        let log_beta = ln_gamma(alpha + b) - ln_gamma(alpha) - ln_gamma(b);
        let direct = log_beta + (alpha - 1.0) * v.ln() + (b - 1.0) * (1.0 - v).ln() - 2.0 * c.ln_1p();
        let lib = log_beta + ghg_log_kernel(kappa, alpha, b);
        prop_assert!((lib - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }
}
