//! The constrained blockwise Gibbs sampler.
//!
//! One sweep visits `(beta_j, gamma_j)` for `j = 1..p` in ascending order,
//! then draws `sigma^2`, then `c`, then `t_n`. Block `j` is forced to zero
//! whenever the other coordinates already fill the size cap `t_n`; otherwise
//! `gamma_j` is drawn with `beta_j` integrated out and `beta_j` is drawn from
//! its normal conditional.
//!
//! The residual `r = Y - X beta` is cached, so `u_j = r'X_j + beta_j ||X_j||^2`
//! costs `O(n)` and a sweep costs `O(np)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hyper_c::{initial_c, sample_inverse_gamma, update_c, CUpdateStats, MhTuning};
use crate::linalg::{dot, sigmoid};
use crate::model::{Dataset, ModelIndicator, Precomputed, PriorConfig, SamplerState};
use crate::rng::{chain_stream, stream_rng};

/// Sweeps between residual drift checks.
pub const RESIDUAL_CHECK_EVERY: usize = 1000;

#[derive(Clone, Debug, Default, PartialEq)]
pub enum ChainInit {
    /// `beta = 0`, `gamma = 0`, `sigma^2 ~ U(0.5, 2)`, `t_n ~ U{1..m_n}` and
    /// `c` at its fixed value or prior mode.
    #[default]
    Default,
    Explicit(SamplerState),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub seed: u64,
    pub record_beta: bool,
    pub init: ChainInit,
    pub mh: MhTuning,
}

impl ChainConfig {
    pub fn new(n_iter: usize, n_burn: usize, seed: u64) -> Self {
        Self { n_iter, n_burn, thin: 1, seed, record_beta: false, init: ChainInit::Default, mh: MhTuning::default() }
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_beta(mut self, record: bool) -> Self {
        self.record_beta = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_burn >= self.n_iter {
            return Err(Error::config(format!("burn-in {} must be below the iteration count {}", self.n_burn, self.n_iter)));
        }
        if self.thin < 1 {
            return Err(Error::config("thin must be at least 1"));
        }
        self.mh.validate()
    }

    /// Number of states kept after burn-in and thinning.
    pub fn n_recorded(&self) -> usize {
        (self.n_iter - self.n_burn).div_ceil(self.thin)
    }
}

/// Sparse coefficient draw: `(column, value)` pairs for the included columns.
pub type SparseBeta = Vec<(usize, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    /// Post-burn-in visit counts, one per sweep (not thinned).
    pub model_counts: BTreeMap<ModelIndicator, u64>,
    /// 1-based sweep index of each recorded state.
    pub iterations: Vec<usize>,
    pub sigma_sq_draws: Vec<f64>,
    pub c_draws: Vec<f64>,
    pub t_n_draws: Vec<usize>,
    pub beta_draws: Option<Vec<SparseBeta>>,
    pub mh_accept_rate: Option<f64>,
    pub c_updates_skipped: u64,
    /// Residual drift checks that exceeded tolerance.
    pub residual_drift_failures: u64,
    pub seed: u64,
    pub stream: u64,
    pub p: usize,
}

impl ChainOutput {
    pub fn total_visits(&self) -> u64 {
        self.model_counts.values().sum()
    }

    /// Most visited model; ties go to the smaller, then lexicographically
    /// smaller model.
    pub fn modal_model(&self) -> Option<&ModelIndicator> {
        self.model_counts
            .iter()
            .max_by(|(ga, ca), (gb, cb)| ca.cmp(cb).then_with(|| gb.tie_break_cmp(ga)))
            .map(|(g, _)| g)
    }

    /// Post-burn-in visit frequency of `gamma`.
    pub fn frequency(&self, gamma: &ModelIndicator) -> f64 {
        let total = self.total_visits();
        if total == 0 {
            return 0.0;
        }
        self.model_counts.get(gamma).copied().unwrap_or(0) as f64 / total as f64
    }

    /// The `k` most visited models with their frequencies.
    pub fn top_models(&self, k: usize) -> Vec<(ModelIndicator, f64)> {
        let total = self.total_visits().max(1) as f64;
        let mut all: Vec<(&ModelIndicator, u64)> = self.model_counts.iter().map(|(g, c)| (g, *c)).collect();
        all.sort_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.tie_break_cmp(gb)));
        all.into_iter().take(k).map(|(g, c)| (g.clone(), c as f64 / total)).collect()
    }

    pub fn posterior_mean_beta(&self) -> Result<Vec<f64>> {
        let draws = self.beta_draws.as_ref().ok_or(Error::BetaRecordingDisabled)?;
        if draws.is_empty() {
            return Err(Error::EmptyInput("beta draws"));
        }
        let mut sum = vec![0.0; self.p];
        for draw in draws {
            for &(j, b) in draw {
                sum[j] += b;
            }
        }
        let m = draws.len() as f64;
        Ok(sum.into_iter().map(|s| s / m).collect())
    }

    pub fn mean_sigma_sq(&self) -> f64 {
        mean(&self.sigma_sq_draws)
    }

    pub fn mean_c(&self) -> f64 {
        mean(&self.c_draws)
    }

    /// Pools several chains on the same dataset, in the order given.
    pub fn merge(chains: &[ChainOutput]) -> Result<ChainOutput> {
        let first = chains.first().ok_or(Error::EmptyInput("chains"))?;
        let mut out = first.clone();
        for ch in &chains[1..] {
            if ch.p != out.p {
                return Err(Error::config("cannot merge chains with different p"));
            }
            for (g, c) in &ch.model_counts {
                *out.model_counts.entry(g.clone()).or_insert(0) += c;
            }
            out.iterations.extend(&ch.iterations);
            out.sigma_sq_draws.extend(&ch.sigma_sq_draws);
            out.c_draws.extend(&ch.c_draws);
            out.t_n_draws.extend(&ch.t_n_draws);
            out.beta_draws = match (out.beta_draws.take(), &ch.beta_draws) {
                (Some(mut a), Some(b)) => {
                    a.extend(b.iter().cloned());
                    Some(a)
                }
                _ => None,
            };
            out.c_updates_skipped += ch.c_updates_skipped;
            out.residual_drift_failures += ch.residual_drift_failures;
        }
        let rates: Vec<f64> = chains.iter().filter_map(|c| c.mh_accept_rate).collect();
        out.mh_accept_rate = (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
        Ok(out)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Draws `(gamma_j, beta_j)` from their joint full conditional.
pub fn block_update<R: Rng + ?Sized>(
    state: &mut SamplerState,
    j: usize,
    d: &Dataset,
    pre: &Precomputed,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<()> {
    let was_in = state.included[j];
    let beta_old = state.beta[j];
    let others = state.size - usize::from(was_in);
    let col = d.column(j);

    let beta_new = if others >= state.t_n {
        0.0
    } else {
        let xtx = pre.col_sq_norms[j];
        let u = dot(&state.residual, col) + beta_old * xtx;
        if !u.is_finite() {
            return Err(Error::Diverged { coordinate: j + 1, reason: format!("u_j = {u}") });
        }
        let v2 = xtx + 1.0 / state.c;
        let log_theta = -0.5 * state.c.ln() - 0.5 * v2.ln()
            + prior.model_prior.log_inclusion_ratio()
            + u * u / (2.0 * state.sigma_sq * v2);
        if rng.random::<f64>() < sigmoid(log_theta) {
            let z: f64 = rng.sample(StandardNormal);
            let b = u / v2 + (state.sigma_sq / v2).sqrt() * z;
            // an exact zero would break the support/inclusion match
            if b == 0.0 {
                f64::MIN_POSITIVE
            } else {
                b
            }
        } else {
            0.0
        }
    };

    let delta = beta_new - beta_old;
    if delta != 0.0 {
        for (r, x) in state.residual.iter_mut().zip(col) {
            *r -= x * delta;
        }
    }
    state.beta[j] = beta_new;
    let now_in = beta_new != 0.0;
    state.included[j] = now_in;
    state.size = others + usize::from(now_in);
    Ok(())
}

/// `sigma^2 ~ IG((n + |gamma| + nu) / 2, (RSS + ||beta||^2 / c + 1) / 2)`.
pub fn update_sigma_sq<R: Rng + ?Sized>(state: &mut SamplerState, d: &Dataset, prior: &PriorConfig, rng: &mut R) {
    let (shape, scale) = sigma_sq_conditional(state, d, prior);
    state.sigma_sq = sample_inverse_gamma(shape, scale, rng);
}

/// Shape and scale of the inverse gamma full conditional of `sigma^2`.
pub fn sigma_sq_conditional(state: &SamplerState, d: &Dataset, prior: &PriorConfig) -> (f64, f64) {
    let rss: f64 = state.residual.iter().map(|r| r * r).sum();
    let shape = (d.n() as f64 + state.size as f64 + prior.nu) / 2.0;
    let scale = (rss + state.beta_sq_norm() / state.c + 1.0) / 2.0;
    (shape, scale)
}

/// `t_n` uniform on `max(|gamma|, 1)..=m_n`.
pub fn update_t_n<R: Rng + ?Sized>(state: &mut SamplerState, prior: &PriorConfig, rng: &mut R) {
    let lo = state.size.max(1);
    state.t_n = if lo >= prior.m_n { prior.m_n } else { rng.random_range(lo..=prior.m_n) };
}

/// Scratch state carried across sweeps.
#[derive(Clone, Debug, Default)]
pub struct SweepStats {
    pub c: CUpdateStats,
}

#[allow(clippy::too_many_arguments)]
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut SamplerState,
    d: &Dataset,
    pre: &Precomputed,
    prior: &PriorConfig,
    mh: &MhTuning,
    stats: &mut SweepStats,
    rng: &mut R,
) -> Result<()> {
    for j in 0..d.p() {
        block_update(state, j, d, pre, prior, rng)?;
    }
    update_sigma_sq(state, d, prior, rng);
    if !(state.sigma_sq > 0.0 && state.sigma_sq.is_finite()) {
        return Err(Error::Diverged { coordinate: 0, reason: format!("sigma^2 = {}", state.sigma_sq) });
    }
    update_c(state, prior, d.p(), mh, &mut stats.c, rng)?;
    update_t_n(state, prior, rng);
    Ok(())
}

/// Runs one chain on stream `chain_stream(0, 0)` of `cfg.seed`.
pub fn run_chain(d: &Dataset, prior: &PriorConfig, cfg: &ChainConfig) -> Result<ChainOutput> {
    run_chain_on_stream(d, prior, cfg, chain_stream(0, 0))
}

/// Runs `n_chains` chains of one replication in parallel; results are in
/// chain order.
pub fn run_chains(d: &Dataset, prior: &PriorConfig, cfg: &ChainConfig, replication: u64, n_chains: usize) -> Result<Vec<ChainOutput>> {
    (0..n_chains as u64)
        .into_par_iter()
        .map(|k| run_chain_on_stream(d, prior, cfg, chain_stream(replication, k)))
        .collect()
}

fn initial_state<R: Rng + ?Sized>(d: &Dataset, prior: &PriorConfig, cfg: &ChainConfig, rng: &mut R) -> Result<SamplerState> {
    match &cfg.init {
        ChainInit::Default => {
            let sigma_sq = rng.random_range(0.5..2.0);
            let t_n = rng.random_range(1..=prior.m_n);
            Ok(SamplerState::empty(d, sigma_sq, t_n, initial_c(&prior.c_prior, d.p())?))
        }
        ChainInit::Explicit(s) => {
            if s.beta.len() != d.p() || s.residual.len() != d.n() {
                return Err(Error::config("initial state does not match the dataset dimensions"));
            }
            s.check_invariants()?;
            if s.t_n > prior.m_n {
                return Err(Error::config(format!("initial t_n = {} exceeds m_n = {}", s.t_n, prior.m_n)));
            }
            let mut s = s.clone();
            s.rebuild_residual(d);
            Ok(s)
        }
    }
}

pub fn run_chain_on_stream(d: &Dataset, prior: &PriorConfig, cfg: &ChainConfig, stream: u64) -> Result<ChainOutput> {
    cfg.validate()?;
    prior.validate(d.n(), d.p())?;
    let mut rng = stream_rng(cfg.seed, stream);
    let pre = Precomputed::new(d);
    let mut state = initial_state(d, prior, cfg, &mut rng)?;
    let mut stats = SweepStats::default();

    let n_rec = cfg.n_recorded();
    let mut out = ChainOutput {
        model_counts: BTreeMap::new(),
        iterations: Vec::with_capacity(n_rec),
        sigma_sq_draws: Vec::with_capacity(n_rec),
        c_draws: Vec::with_capacity(n_rec),
        t_n_draws: Vec::with_capacity(n_rec),
        beta_draws: cfg.record_beta.then(|| Vec::with_capacity(n_rec)),
        mh_accept_rate: None,
        c_updates_skipped: 0,
        residual_drift_failures: 0,
        seed: cfg.seed,
        stream,
        p: d.p(),
    };
    let y_inf = d.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let drift_tol = 1e-8 * (1.0 + y_inf);

    for iter in 1..=cfg.n_iter {
        gibbs_sweep(&mut state, d, &pre, prior, &cfg.mh, &mut stats, &mut rng).map_err(|e| Error::ChainAborted {
            iteration: iter,
            reason: e.to_string(),
        })?;
        if iter % RESIDUAL_CHECK_EVERY == 0 {
            let fresh = d.residual(&state.beta);
            let drift = fresh.iter().zip(&state.residual).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if drift.is_nan() || drift >= drift_tol {
                out.residual_drift_failures += 1;
                log::warn!("residual drift {drift:e} at sweep {iter}");
            }
            state.residual = fresh;
        }
        if iter <= cfg.n_burn {
            continue;
        }
        *out.model_counts.entry(state.model()).or_insert(0) += 1;
        if (iter - cfg.n_burn - 1).is_multiple_of(cfg.thin) {
            out.iterations.push(iter);
            out.sigma_sq_draws.push(state.sigma_sq);
            out.c_draws.push(state.c);
            out.t_n_draws.push(state.t_n);
            if let Some(draws) = out.beta_draws.as_mut() {
                draws.push(state.beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, b)| (j, *b)).collect());
            }
        }
    }
    out.mh_accept_rate = stats.c.accept_rate();
    out.c_updates_skipped = stats.c.skipped;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CPrior;

    fn small_dataset() -> Dataset {
        let n = 12;
        let p = 3;
        let x: Vec<f64> = (0..n * p).map(|i| (((i * 37 + 11) % 23) as f64 - 11.0) / 6.0).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.5 * x[i] - 0.8 * x[n + i] + 0.3 * ((i % 5) as f64 - 2.0)).collect();
        Dataset::new(y, x, n, p).unwrap()
    }

    #[test]
    fn saturated_cap_forces_zero() {
        let d = small_dataset();
        let pre = Precomputed::new(&d);
        let prior = PriorConfig::for_n(12).with_c_prior(CPrior::Fixed { c: 10.0 }).with_m_n(3);
        let mut state = SamplerState::from_beta(&d, vec![1.0, 0.5, 0.0], 1.0, 2, 10.0).unwrap();
        let mut rng = stream_rng(1, 1);
        for _ in 0..50 {
            block_update(&mut state, 2, &d, &pre, &prior, &mut rng).unwrap();
            assert_eq!((state.included[2], state.beta[2]), (false, 0.0));
        }
    }

    #[test]
    fn huge_c_prefers_exclusion() {
        let d = small_dataset();
        let pre = Precomputed::new(&d);
        let prior = PriorConfig::for_n(12).with_c_prior(CPrior::Fixed { c: 1e300 }).with_m_n(3);
        let mut state = SamplerState::empty(&d, 1.0, 3, 1e300);
        let mut rng = stream_rng(2, 1);
        for _ in 0..200 {
            block_update(&mut state, 0, &d, &pre, &prior, &mut rng).unwrap();
            assert!(!state.included[0]);
        }
    }

    #[test]
    fn t_n_singleton_range() {
        let d = small_dataset();
        let prior = PriorConfig::for_n(12).with_m_n(2);
        let mut state = SamplerState::from_beta(&d, vec![1.0, 0.5, 0.0], 1.0, 2, 10.0).unwrap();
        let mut rng = stream_rng(3, 1);
        update_t_n(&mut state, &prior, &mut rng);
        assert_eq!(state.t_n, 2);
    }

    #[test]
    fn one_sweep_from_zero_keeps_invariants() {
        let d = small_dataset();
        let pre = Precomputed::new(&d);
        let prior = PriorConfig::for_n(12).with_c_prior(CPrior::gzs(3.0)).with_m_n(3);
        let mut state = SamplerState::empty(&d, 1.0, 1, 27.0);
        let mut rng = stream_rng(4, 1);
        let mut stats = SweepStats::default();
        gibbs_sweep(&mut state, &d, &pre, &prior, &MhTuning::default(), &mut stats, &mut rng).unwrap();
        state.check_invariants().unwrap();
        let fresh = d.residual(&state.beta);
        for (a, b) in fresh.iter().zip(&state.residual) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_recorded_state() {
        let d = small_dataset();
        let prior = PriorConfig::for_n(12).with_m_n(3);
        let out = run_chain(&d, &prior, &ChainConfig::new(6, 5, 9).with_beta(true)).unwrap();
        assert_eq!(out.total_visits(), 1);
        assert_eq!(out.iterations, vec![6]);
        assert_eq!(out.beta_draws.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn thinning_and_counts() {
        let d = small_dataset();
        let prior = PriorConfig::for_n(12).with_m_n(3);
        let cfg = ChainConfig::new(100, 20, 5).with_thin(7);
        let out = run_chain(&d, &prior, &cfg).unwrap();
        assert_eq!(out.total_visits(), 80);
        assert_eq!(out.sigma_sq_draws.len(), cfg.n_recorded());
        assert_eq!(out.iterations[0], 21);
        assert_eq!(out.iterations[1], 28);
        assert!(matches!(out.posterior_mean_beta(), Err(Error::BetaRecordingDisabled)));
    }

    #[test]
    fn same_seed_same_output() {
        let d = small_dataset();
        let prior = PriorConfig::for_n(12).with_c_prior(CPrior::ghg(3.0)).with_m_n(3);
        let cfg = ChainConfig::new(300, 100, 77).with_beta(true);
        let a = run_chains(&d, &prior, &cfg, 0, 3).unwrap();
        let b = run_chains(&d, &prior, &cfg, 0, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].sigma_sq_draws, a[1].sigma_sq_draws);
        assert!(a[0].mh_accept_rate.is_some());
    }

    #[test]
    fn burn_in_must_be_below_iterations() {
        let d = small_dataset();
        let prior = PriorConfig::for_n(12).with_m_n(3);
        assert!(run_chain(&d, &prior, &ChainConfig::new(10, 10, 1)).is_err());
        assert!(run_chain(&d, &prior, &ChainConfig::new(10, 2, 1).with_thin(0)).is_err());
    }

    #[test]
    fn merge_pools_counts() {
        let d = small_dataset();
        let prior = PriorConfig::for_n(12).with_m_n(3);
        let cfg = ChainConfig::new(50, 10, 3).with_beta(true);
        let chains = run_chains(&d, &prior, &cfg, 0, 2).unwrap();
        let m = ChainOutput::merge(&chains).unwrap();
        assert_eq!(m.total_visits(), 80);
        assert_eq!(m.beta_draws.unwrap().len(), 80);
        assert!(m.mh_accept_rate.is_none());
    }
}
