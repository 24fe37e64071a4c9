//! Test-side oracles shared by the integration tests.
//!
//! The oracles avoid the factorisation path of the library: integrals are
//! done by adaptive Gauss-Kronrod, linear algebra by dense LU.

#![allow(dead_code)]

use bayes_screen::{Dataset, ModelIndicator};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = half * XGK[i];
        let s = f(mid - x) + f(mid + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Adaptive G7-K15 on `[a, b]`, bisecting the worst interval until the summed
/// error estimate drops below `rel * |I|` (or `1e-300`).
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    let mut parts = vec![(a, b, kronrod(f, a, b))];
    for _ in 0..2000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= (rel * total.abs()).max(1e-300) {
            break;
        }
        let worst = (0..parts.len()).max_by(|&i, &j| parts[i].2 .1.total_cmp(&parts[j].2 .1)).unwrap();
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, kronrod(f, lo, mid)));
        parts.push((mid, hi, kronrod(f, mid, hi)));
    }
    parts.iter().map(|p| p.2 .0).sum()
}

/// Design matrix restricted to `gamma`.
pub fn sub_design(d: &Dataset, gamma: &ModelIndicator) -> DMatrix<f64> {
    DMatrix::from_fn(d.n(), gamma.len(), |i, k| d.x()[(i, gamma.indices()[k])])
}

/// `c U = I + c X'X` for the dense identity checks.
pub fn u_dense(d: &Dataset, gamma: &ModelIndicator, c: f64) -> DMatrix<f64> {
    let xg = sub_design(d, gamma);
    let k = gamma.len();
    DMatrix::identity(k, k) / c + xg.transpose() * &xg
}

/// Log density of the full joint at `(beta_gamma, sigma^2)`, including the
/// normalising constants of the likelihood, slab and inverse chi-square prior.
pub fn log_joint(d: &Dataset, gamma: &ModelIndicator, beta: &[f64], sigma_sq: f64, c: f64, nu: f64) -> f64 {
    let n = d.n() as f64;
    let k = gamma.len() as f64;
    let mut rss = 0.0;
    for i in 0..d.n() {
        let fit: f64 = gamma.iter().zip(beta).map(|(j, b)| d.x()[(i, j)] * b).sum();
        rss += (d.y()[i] - fit).powi(2);
    }
    let bb: f64 = beta.iter().map(|b| b * b).sum();
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let lik = -0.5 * n * (ln2pi + sigma_sq.ln()) - rss / (2.0 * sigma_sq);
    let slab = -0.5 * k * (ln2pi + (c * sigma_sq).ln()) - bb / (2.0 * c * sigma_sq);
    let a = nu / 2.0;
    let ig = a * 0.5f64.ln() - ln_gamma(a) - (a + 1.0) * sigma_sq.ln() - 0.5 / sigma_sq;
    lik + slab + ig
}

/// `log ∫∫ joint dβ dσ²` by nested adaptive quadrature over `τ = log σ²` and
/// each coordinate of `β_γ`.
pub fn log_joint_integral(d: &Dataset, gamma: &ModelIndicator, c: f64, nu: f64) -> f64 {
    let k = gamma.len();
    let y = DVector::from_column_slice(d.y());
    let (mu, cov_diag, rss_hat) = if k == 0 {
        (vec![], vec![], y.norm_squared())
    } else {
        let xg = sub_design(d, gamma);
        let lu = u_dense(d, gamma, c).lu();
        let mu = lu.solve(&(xg.transpose() * &y)).unwrap();
        let inv = lu.try_inverse().unwrap();
        let rss = (&y - &xg * &mu).norm_squared() + mu.norm_squared() / c;
        (mu.as_slice().to_vec(), (0..k).map(|j| inv[(j, j)]).collect(), rss)
    };
    let tau0 = ((rss_hat + 1.0) / (d.n() as f64 + nu + 2.0)).ln();
    let peak = log_joint(d, gamma, &mu, tau0.exp(), c, nu) + tau0;

    let mut beta = vec![0.0; k];
    let mut outer = |tau: f64| {
        let s2 = tau.exp();
        inner(d, gamma, c, nu, s2, tau, peak, &mu, &cov_diag, &mut beta, 0)
    };
    let val = integrate(&mut outer, tau0 - 8.0, tau0 + 8.0, 1e-11);
    val.ln() + peak
}

#[allow(clippy::too_many_arguments)]
fn inner(
    d: &Dataset,
    gamma: &ModelIndicator,
    c: f64,
    nu: f64,
    s2: f64,
    tau: f64,
    peak: f64,
    mu: &[f64],
    var: &[f64],
    beta: &mut Vec<f64>,
    level: usize,
) -> f64 {
    if level == beta.len() {
        return (log_joint(d, gamma, beta, s2, c, nu) + tau - peak).exp();
    }
    let half = 12.0 * (s2 * var[level]).sqrt();
    let mut f = |b: f64| {
        beta[level] = b;
        inner(d, gamma, c, nu, s2, tau, peak, mu, var, beta, level + 1)
    };
    integrate(&mut f, mu[level] - half, mu[level] + half, 1e-11)
}

/// Additive constant between the joint integral and the library score with
/// an indifference model prior.
pub fn joint_constant(n: usize, nu: f64) -> f64 {
    -(n as f64 / 2.0) * std::f64::consts::PI.ln() + ln_gamma((n as f64 + nu) / 2.0) - ln_gamma(nu / 2.0)
}

/// Gaussian design with response `y = X beta0 + sigma eps`.
pub fn gaussian_dataset(n: usize, beta0: &[f64], sigma: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = beta0.len();
    let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            (0..p).map(|j| x[(i, j)] * beta0[j]).sum::<f64>() + sigma * eps
        })
        .collect();
    Dataset::from_matrix(y, x).unwrap()
}

/// Size-marginal target `sum_t 1[|gamma| <= t] q(gamma)` over `t = 1..=m_n`,
/// built model by model from the kernel.
pub fn marginal_target(d: &Dataset, prior: &bayes_screen::PriorConfig, c: f64) -> Vec<(ModelIndicator, f64)> {
    let mut logs = Vec::new();
    for g in bayes_screen::posterior::all_models(d.p(), prior.m_n) {
        let mut acc = f64::NEG_INFINITY;
        for t in 1..=prior.m_n {
            if let Some(v) = bayes_screen::log_unnorm_posterior(&g, c, d, prior, t).unwrap().value {
                acc = if acc == f64::NEG_INFINITY { v } else { acc.max(v) + (-(acc - v).abs()).exp().ln_1p() };
            }
        }
        logs.push((g, acc));
    }
    let max = logs.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|e| (e.1 - max).exp()).sum();
    logs.into_iter().map(|(g, l)| (g, (l - max).exp() / z)).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Pearson chi-square p-value of observed counts against expected counts.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    let df = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// Frozen `(beta, sigma^2)` states and GZS parameters used by the
/// conjugacy checks: `(a, b_n, beta, sigma_sq)`.
pub fn gzs_frozen_states() -> Vec<(f64, f64, Vec<f64>, f64)> {
    vec![
        (0.0, 3.0, vec![1.5, -0.7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.8),
        (1.0, 2.0, vec![0.0; 4], 1.0),
        (0.5, 1.0, (0..50).map(|j| if j % 10 == 0 { 0.3 * (j as f64 + 1.0) } else { 0.0 }).collect(), 2.5),
    ]
}

/// KS statistic of `draws` GZS conjugate updates against the inverse gamma
/// law built directly from the frozen state, one entry per state.
pub fn gzs_ks_statistics(draws: usize, seed: u64) -> Vec<f64> {
    use bayes_screen::hyper_c::update_c_gzs;
    use bayes_screen::rng::stream_rng;
    use bayes_screen::SamplerState;
    use statrs::distribution::InverseGamma;

    gzs_frozen_states()
        .into_iter()
        .enumerate()
        .map(|(i, (a, b_n, beta, s2))| {
            let p = beta.len();
            let d = gaussian_dataset(12, &vec![0.0; p], 1.0, 40 + i as u64);
            let mut state = SamplerState::from_beta(&d, beta.clone(), s2, p, 1.0).unwrap();
            let k = beta.iter().filter(|b| **b != 0.0).count() as f64;
            let bb: f64 = beta.iter().map(|b| b * b).sum();
            let shape = a + k / 2.0;
            let scale = (p as f64).powf(b_n) + bb / (2.0 * s2);
            let law = InverseGamma::new(shape, scale).unwrap();
            let mut rng = stream_rng(seed, i as u64);
            let mut xs: Vec<f64> = (0..draws)
                .map(|_| {
                    assert!(update_c_gzs(&mut state, a, b_n, p, &mut rng).unwrap());
                    state.c
                })
                .collect();
            ks_statistic(&mut xs, |x| law.cdf(x))
        })
        .collect()
}

/// Log target of `kappa = log c` for the frozen GHG check, written out from
/// the model: `c^{-k/2} exp(-|beta|^2 / (2 c s2))` times the GHG density
/// `c^{alpha - 1} (1 + c)^{-(alpha + b)}` times the Jacobian `c`.
pub fn ghg_frozen_log_target(kappa: f64, k: f64, bb: f64, s2: f64, alpha: f64, b: f64) -> f64 {
    let c = kappa.exp();
    -0.5 * k * kappa - bb / (2.0 * c * s2) + (alpha - 1.0) * kappa - (alpha + b) * c.ln_1p() + kappa
}

/// Runs `steps` GHG Metropolis-Hastings updates on a frozen state
/// (`p = 4`, `d = 0.5`, `b = 1`, `|gamma| = 2`, `|beta|^2 = 2`, `sigma^2 = 1`)
/// and bins every `thin`-th `kappa` into 50 bins of equal target mass.
/// Returns the chi-square p-value and the acceptance rate.
pub fn ghg_mh_chi_square(steps: usize, thin: usize, seed: u64) -> (f64, f64) {
    use bayes_screen::hyper_c::update_c_ghg_mh;
    use bayes_screen::rng::stream_rng;
    use bayes_screen::{MhTuning, SamplerState};

    let (k, bb, s2, alpha, b) = (2.0, 2.0, 1.0, 3.0, 1.0);
    let log_f = |x: f64| ghg_frozen_log_target(x, k, bb, s2, alpha, b);
    let (lo, hi) = (-12.0, 25.0);
    let peak = (0..=3700).map(|i| log_f(lo + i as f64 * 0.01)).fold(f64::NEG_INFINITY, f64::max);
    let total = integrate(&mut |x| (log_f(x) - peak).exp(), lo, hi, 1e-12);
    let cdf = |x: f64| integrate(&mut |t| (log_f(t) - peak).exp(), lo, x, 1e-12) / total;

    let bins = 50;
    let edges: Vec<f64> = (1..bins)
        .map(|i| {
            let target = i as f64 / bins as f64;
            let (mut a, mut z) = (lo, hi);
            for _ in 0..80 {
                let m = 0.5 * (a + z);
                if cdf(m) < target {
                    a = m;
                } else {
                    z = m;
                }
            }
            0.5 * (a + z)
        })
        .collect();

    let d = gaussian_dataset(10, &[0.0; 4], 1.0, 3);
    let mut state = SamplerState::from_beta(&d, vec![1.0, 1.0, 0.0, 0.0], s2, 2, 1.0).unwrap();
    let tuning = MhTuning::default();
    let mut rng = stream_rng(seed, 0);
    let mut counts = vec![0u64; bins];
    let mut accepted = 0usize;
    for step in 1..=steps {
        accepted += usize::from(update_c_ghg_mh(&mut state, 0.5, b, 4, &tuning, &mut rng).unwrap());
        if step % thin == 0 {
            let kappa = state.c.ln();
            counts[edges.partition_point(|e| *e < kappa)] += 1;
        }
    }
    let n: u64 = counts.iter().sum();
    let expected = vec![n as f64 / bins as f64; bins];
    (chi_square_p(&counts, &expected), accepted as f64 / steps as f64)
}
