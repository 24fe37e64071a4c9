//! Exact model scores.
//!
//! With `c` fixed, integrating `beta_gamma` and `sigma^2` out of the joint
//! posterior leaves
//!
//! ```text
//! p(gamma | Z)  ∝  det(W_gamma)^{-1/2} pi_gamma (1 + Y'(I - X_gamma U^{-1} X_gamma')Y)^{-(n + nu) / 2}
//! ```
//!
//! with `U_gamma = I / c + X_gamma' X_gamma` and `det W_gamma = c^|gamma| det U_gamma`.
//! The proportionality constant depends on neither `gamma` nor `c`, so the
//! kernel can be integrated against a prior on `c` directly.
//!
//! Everything is evaluated in the log domain from a Cholesky factor of
//! `U_gamma`; no `n x n` matrix is ever formed.

use std::collections::HashMap;

use itertools::Itertools;
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::hyper_c::{ghg_alpha, gzs_scale, log_prior_density};
use crate::linalg::{log_sum_exp, Gram, UFactor};
use crate::model::{CPrior, Dataset, ModelIndicator, PriorConfig};
use crate::quadrature::GaussLegendre;
use crate::rng::stream_rng;

/// Largest model space [`enumerate_posterior`] will visit.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Default node count for the g-prior quadrature.
pub const DEFAULT_G_NODES: usize = 128;

/// Unnormalised log posterior mass of one model. `value` is `None` for models
/// that exceed the size cap, which have zero prior mass.
#[derive(Clone, Debug, PartialEq)]
pub struct LogScore {
    pub gamma: ModelIndicator,
    pub value: Option<f64>,
}

fn score_from_factor(factor: &UFactor, c: f64, n: usize, yty: f64, prior: &PriorConfig, gamma: &ModelIndicator) -> f64 {
    let k = factor.size() as f64;
    let log_det_w = k * c.ln() + factor.log_det();
    let quad = 1.0 + (yty - factor.explained()).max(0.0);
    prior.model_prior.log_mass(gamma) - 0.5 * log_det_w - 0.5 * (n as f64 + prior.nu) * quad.ln()
}

fn yty(d: &Dataset) -> f64 {
    d.y().iter().map(|v| v * v).sum()
}

pub fn log_unnorm_posterior(
    gamma: &ModelIndicator,
    c: f64,
    d: &Dataset,
    prior: &PriorConfig,
    t_n: usize,
) -> Result<LogScore> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("c must be positive"));
    }
    if gamma.len() > t_n {
        return Ok(LogScore { gamma: gamma.clone(), value: None });
    }
    let factor = Gram::new(d, gamma).factor(c)?;
    let value = score_from_factor(&factor, c, d.n(), yty(d), prior, gamma);
    Ok(LogScore { gamma: gamma.clone(), value: Some(value) })
}

/// `log ∫ q(gamma | c, Z) g(c) dc` by Gauss-Legendre quadrature in `log c`.
pub fn log_unnorm_posterior_g(gamma: &ModelIndicator, d: &Dataset, prior: &PriorConfig, t_n: usize) -> Result<LogScore> {
    log_unnorm_posterior_g_with_nodes(gamma, d, prior, t_n, DEFAULT_G_NODES)
}

pub fn log_unnorm_posterior_g_with_nodes(
    gamma: &ModelIndicator,
    d: &Dataset,
    prior: &PriorConfig,
    t_n: usize,
    nodes: usize,
) -> Result<LogScore> {
    let (lo, hi) = g_prior_bounds(&prior.c_prior, d.p())?;
    if gamma.len() > t_n {
        return Ok(LogScore { gamma: gamma.clone(), value: None });
    }
    let gl = GaussLegendre::new(nodes.max(DEFAULT_G_NODES));
    let value = g_integral(&Gram::new(d, gamma), gamma, d, prior, &gl, lo.ln(), hi.ln())?;
    Ok(LogScore { gamma: gamma.clone(), value: Some(value) })
}

fn g_integral(
    gram: &Gram,
    gamma: &ModelIndicator,
    d: &Dataset,
    prior: &PriorConfig,
    gl: &GaussLegendre,
    kappa_lo: f64,
    kappa_hi: f64,
) -> Result<f64> {
    let yty = yty(d);
    let terms = gl
        .mapped_log(kappa_lo, kappa_hi)
        .map(|(kappa, log_w)| {
            let c = kappa.exp();
            let factor = gram.factor(c)?;
            let log_q = score_from_factor(&factor, c, d.n(), yty, prior, gamma);
            let log_g = log_prior_density(&prior.c_prior, c, d.p()).ok_or(Error::ImproperPrior)?;
            Ok(log_w + log_q + log_g + kappa)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_sum_exp(&terms))
}

/// Integration range for `c`: the `1e-9` and `1 - 1e-9` prior quantiles,
/// clipped to `[1e-12, 1e300]`.
pub fn g_prior_bounds(prior: &CPrior, p: usize) -> Result<(f64, f64)> {
    const TAIL: f64 = 1e-9;
    let (lo, hi) = match *prior {
        CPrior::Gzs { a, b_n } if a > 0.0 => {
            // c = s / G with G ~ Gamma(a, 1)
            let s = gzs_scale(b_n, p)?;
            let g = Gamma::new(a, 1.0).map_err(|e| Error::config(e.to_string()))?;
            let hi = 2.0 * (a + 50.0);
            (s / quantile(|x| g.cdf(x), 1.0 - TAIL, hi), s / quantile(|x| g.cdf(x), TAIL, hi))
        }
        CPrior::Ghg { d, b } if b > 0.0 => {
            // 1 / (1 + c) ~ Beta(b, alpha), so c = (1 - v) / v
            let alpha = ghg_alpha(d, p)?;
            let beta = Beta::new(b, alpha).map_err(|e| Error::config(e.to_string()))?;
            let v_hi = quantile(|x| beta.cdf(x), 1.0 - TAIL, 1.0);
            let v_lo = quantile(|x| beta.cdf(x), TAIL, 1.0);
            ((1.0 - v_hi) / v_hi, (1.0 - v_lo) / v_lo)
        }
        _ => return Err(Error::ImproperPrior),
    };
    let clip = |c: f64| if c.is_nan() { c } else { c.clamp(1e-12, 1e300) };
    let (lo, hi) = (clip(lo), clip(hi));
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::config(format!("degenerate quadrature range [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

/// Quantile of a continuous law on `(0, hi]` by bisecting its CDF in `log x`.
fn quantile(cdf: impl Fn(f64) -> f64, prob: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (f64::MIN_POSITIVE.ln(), hi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid.exp()) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Normalised posterior over every model with `|gamma| <= t_n`.
#[derive(Clone, Debug)]
pub struct EnumeratedPosterior {
    pub entries: Vec<EnumeratedEntry>,
    pub t_n: usize,
    /// Fixed slab scale, or `None` when `c` was integrated against a g-prior.
    pub c: Option<f64>,
    index: HashMap<ModelIndicator, usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumeratedEntry {
    pub gamma: ModelIndicator,
    pub log_score: f64,
    pub prob: f64,
}

impl EnumeratedPosterior {
    fn from_scores(scores: Vec<(ModelIndicator, f64)>, t_n: usize, c: Option<f64>) -> Self {
        let logs: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
        let norm = log_sum_exp(&logs);
        let entries: Vec<EnumeratedEntry> = scores
            .into_iter()
            .map(|(gamma, log_score)| EnumeratedEntry { prob: (log_score - norm).exp(), gamma, log_score })
            .collect();
        let index = entries.iter().enumerate().map(|(i, e)| (e.gamma.clone(), i)).collect();
        Self { entries, t_n, c, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prob(&self, gamma: &ModelIndicator) -> f64 {
        self.index.get(gamma).map_or(0.0, |&i| self.entries[i].prob)
    }

    pub fn map_model(&self) -> &ModelIndicator {
        let scores: Vec<LogScore> =
            self.entries.iter().map(|e| LogScore { gamma: e.gamma.clone(), value: Some(e.log_score) }).collect();
        let best = map_model(&scores).expect("enumeration is never empty").clone();
        &self.entries[self.index[&best]].gamma
    }

    /// Renormalised restriction to the models nested in `outer`.
    pub fn restrict_to_subsets(&self, outer: &ModelIndicator) -> EnumeratedPosterior {
        let scores =
            self.entries.iter().filter(|e| e.gamma.is_subset_of(outer)).map(|e| (e.gamma.clone(), e.log_score)).collect();
        Self::from_scores(scores, self.t_n, self.c)
    }
}

/// `sum_{k <= k_max} C(p, k)`, saturating.
pub fn model_count(p: usize, k_max: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for k in 0..=k_max.min(p) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((p - k) as u128) / (k as u128 + 1);
    }
    total
}

/// All models of size at most `k_max`, by size and then lexicographically.
pub fn all_models(p: usize, k_max: usize) -> impl Iterator<Item = ModelIndicator> {
    (0..=k_max.min(p)).flat_map(move |k| {
        (0..p).combinations(k).map(move |idx| ModelIndicator::from_sorted_unchecked(p, idx))
    })
}

fn enumerate_with<F>(p: usize, k_max: usize, score: F) -> Result<Vec<(ModelIndicator, f64)>>
where
    F: Fn(&ModelIndicator) -> Result<f64> + Sync,
{
    let models = model_count(p, k_max);
    if models > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge { models, limit: ENUMERATION_LIMIT });
    }
    let gammas: Vec<ModelIndicator> = all_models(p, k_max).collect();
    gammas.into_par_iter().map(|g| score(&g).map(|s| (g, s))).collect()
}

/// Exact posterior at fixed `c` and `t_n`.
pub fn enumerate_posterior(d: &Dataset, prior: &PriorConfig, c: f64, t_n: usize) -> Result<EnumeratedPosterior> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("c must be positive"));
    }
    let y2 = yty(d);
    let scores = enumerate_with(d.p(), t_n, |g| {
        let factor = Gram::new(d, g).factor(c)?;
        Ok(score_from_factor(&factor, c, d.n(), y2, prior, g))
    })?;
    Ok(EnumeratedPosterior::from_scores(scores, t_n, Some(c)))
}

/// Exact posterior at fixed `t_n` with `c` integrated against a proper g-prior.
pub fn enumerate_posterior_g(d: &Dataset, prior: &PriorConfig, t_n: usize) -> Result<EnumeratedPosterior> {
    let (lo, hi) = g_prior_bounds(&prior.c_prior, d.p())?;
    let gl = GaussLegendre::new(DEFAULT_G_NODES);
    let scores = enumerate_with(d.p(), t_n, |g| g_integral(&Gram::new(d, g), g, d, prior, &gl, lo.ln(), hi.ln()))?;
    Ok(EnumeratedPosterior::from_scores(scores, t_n, None))
}

/// Exact `gamma`-marginal of the sampler's target at fixed `c`, with `t_n`
/// summed out under its uniform prior on `1..=m_n`.
///
/// The model prior is constant below the cap, so
/// `p(gamma, t_n | Z) ∝ q(gamma | c, Z) 1{|gamma| <= t_n}` and summing over
/// `t_n` multiplies each kernel by `m_n - max(|gamma|, 1) + 1`.
pub fn enumerate_size_marginal(d: &Dataset, prior: &PriorConfig, c: f64) -> Result<EnumeratedPosterior> {
    let m_n = prior.m_n;
    let per_t = enumerate_posterior(d, prior, c, m_n)?;
    let scores = per_t
        .entries
        .into_iter()
        .map(|e| {
            let admissible_t = m_n + 1 - e.gamma.len().max(1);
            (e.gamma, e.log_score + (admissible_t as f64).ln())
        })
        .collect();
    Ok(EnumeratedPosterior::from_scores(scores, m_n, Some(c)))
}

/// The highest scoring model; ties go to the smaller model, then to the
/// lexicographically smaller index set. Absent scores are skipped.
pub fn map_model(scores: &[LogScore]) -> Option<&ModelIndicator> {
    scores
        .iter()
        .filter_map(|s| s.value.map(|v| (v, &s.gamma)))
        .max_by(|(va, ga), (vb, gb)| va.total_cmp(vb).then_with(|| gb.tie_break_cmp(ga)))
        .map(|(_, g)| g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RieszMode {
    Exact,
    Sampled { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RieszReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `max(1 / lambda_min, lambda_max)`; only a lower bound in sampled mode.
    pub c0_estimate: f64,
    pub lower_bound_only: bool,
    pub condition_violated: bool,
    pub submatrices_checked: usize,
}

/// Extreme eigenvalues of `X_gamma' X_gamma / n` over models of size `<= 2r`.
///
/// By Cauchy interlacing the smallest eigenvalue can only shrink and the
/// largest only grow as columns are added, so the extremes over all
/// `|gamma| <= 2r` are attained at `|gamma| = min(2r, p)` and only those
/// submatrices are factorised.
pub fn check_sparse_riesz(x: &nalgebra::DMatrix<f64>, r: usize, mode: RieszMode, budget: usize) -> Result<RieszReport> {
    if r < 1 {
        return Err(Error::config("r must be at least 1"));
    }
    let (n, p) = x.shape();
    let k = (2 * r).min(p);
    let subsets: Vec<Vec<usize>> = match mode {
        RieszMode::Exact => {
            let total = model_count(p, 2 * r);
            if total > budget as u128 {
                return Err(Error::EnumerationTooLarge { models: total, limit: budget as u128 });
            }
            (0..p).combinations(k).collect()
        }
        RieszMode::Sampled { seed } => {
            let mut rng = stream_rng(seed, 0);
            (0..budget)
                .map(|_| {
                    let mut idx = sample_indices(&mut rng, p, k).into_vec();
                    idx.sort_unstable();
                    idx
                })
                .collect()
        }
    };
    let extremes: Vec<(f64, f64)> = subsets
        .par_iter()
        .map(|idx| {
            let sub = x.select_columns(idx);
            let gram = sub.transpose() * &sub / n as f64;
            let eig = gram.symmetric_eigenvalues();
            (eig.min(), eig.max())
        })
        .collect();
    let mut lambda_min = extremes.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let lambda_max = extremes.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let condition_violated = lambda_min <= 1e-12 * lambda_max.max(1.0);
    if condition_violated {
        lambda_min = 0.0;
    }
    let c0_estimate = if condition_violated { f64::INFINITY } else { (1.0 / lambda_min).max(lambda_max) };
    Ok(RieszReport {
        lambda_min,
        lambda_max,
        c0_estimate,
        lower_bound_only: matches!(mode, RieszMode::Sampled { .. }),
        condition_violated,
        submatrices_checked: extremes.len(),
    })
}
