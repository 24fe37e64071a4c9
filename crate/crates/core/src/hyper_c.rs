//! Updates of the slab scale `c`.
//!
//! Three regimes are supported:
//!
//! - fixed `c`, including the BIC (`n`), RIC (`p^2`) and benchmark
//!   (`max(n, p^2)`) presets;
//! - the generalised Zellner-Siow prior `c ~ IG(a, p^b_n)`, whose full
//!   conditional is again inverse gamma,
//!   `IG(a + |gamma| / 2, p^b_n + ||beta_gamma||^2 / (2 sigma^2))`;
//! - the generalised hyper-g prior, `c / (1 + c) ~ Beta(alpha_n, b)` with
//!   `alpha_n = p^d + 1`, updated by a random-walk Metropolis-Hastings step on
//!   `kappa = log c`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::softplus;
use crate::model::{CPrior, PriorConfig, SamplerState};

/// Largest exponent accepted for `p^b` before it is considered an overflow.
const MAX_LOG_SCALE: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CPreset {
    Bic,
    Ric,
    Benchmark,
}

impl std::str::FromStr for CPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Ok(CPreset::Bic),
            "ric" => Ok(CPreset::Ric),
            "benchmark" => Ok(CPreset::Benchmark),
            other => Err(Error::config(format!("unknown c preset '{other}'"))),
        }
    }
}

pub fn preset_c(kind: CPreset, n: usize, p: usize) -> f64 {
    let n = n as f64;
    let p2 = (p as f64).powi(2);
    match kind {
        CPreset::Bic => n,
        CPreset::Ric => p2,
        CPreset::Benchmark => n.max(p2),
    }
}

/// Proposal scale of the Metropolis-Hastings step on `log c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MhTuning {
    pub sigma_kappa: f64,
    pub track_acceptance: bool,
}

impl Default for MhTuning {
    fn default() -> Self {
        Self { sigma_kappa: 0.5, track_acceptance: true }
    }
}

impl MhTuning {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_kappa > 0.0 && self.sigma_kappa.is_finite() {
            Ok(())
        } else {
            Err(Error::config("sigma_kappa must be positive"))
        }
    }
}

/// Counters for the `c` updates of one chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CUpdateStats {
    pub proposals: u64,
    pub accepted: u64,
    pub skipped: u64,
}

impl CUpdateStats {
    pub fn accept_rate(&self) -> Option<f64> {
        (self.proposals > 0).then(|| self.accepted as f64 / self.proposals as f64)
    }
}

/// `p^b_n`, computed through `b_n log p`; errors above `e^700`.
pub fn gzs_scale(b_n: f64, p: usize) -> Result<f64> {
    let log_scale = b_n * (p as f64).ln();
    if log_scale > MAX_LOG_SCALE {
        return Err(Error::config(format!("p^b_n = exp({log_scale:.1}) overflows")));
    }
    Ok(log_scale.exp())
}

/// `alpha_n = p^d + 1`; errors when it is not representable.
pub fn ghg_alpha(d: f64, p: usize) -> Result<f64> {
    let log_pd = d * (p as f64).ln();
    if log_pd > MAX_LOG_SCALE {
        return Err(Error::config(format!("alpha_n = p^d + 1 = exp({log_pd:.1}) overflows")));
    }
    Ok(log_pd.exp() + 1.0)
}

/// Starting value of `c`: the fixed value or the prior mode.
pub fn initial_c(prior: &CPrior, p: usize) -> Result<f64> {
    match *prior {
        CPrior::Fixed { c } => Ok(c),
        CPrior::Gzs { a, b_n } => Ok(gzs_scale(b_n, p)? / (a + 1.0)),
        CPrior::Ghg { d, b } => Ok((ghg_alpha(d, p)? - 1.0) / (b + 1.0)),
    }
}

/// Normalised log density of a proper c-prior; `None` for fixed or improper priors.
pub fn log_prior_density(prior: &CPrior, c: f64, p: usize) -> Option<f64> {
    match *prior {
        CPrior::Gzs { a, b_n } if a > 0.0 => {
            let log_p = (p as f64).ln();
            let scale = (b_n * log_p).exp();
            Some(a * b_n * log_p - ln_gamma(a) - (a + 1.0) * c.ln() - scale / c)
        }
        CPrior::Ghg { d, b } if b > 0.0 => {
            let alpha = (d * (p as f64).ln()).exp() + 1.0;
            let kappa = c.ln();
            Some(
                ln_gamma(alpha + b) - ln_gamma(alpha) - ln_gamma(b) - (alpha - 1.0) * softplus(-kappa)
                    - (1.0 + b) * softplus(kappa),
            )
        }
        _ => None,
    }
}

/// Unnormalised log of the GHG density at `c = exp(kappa)`:
/// `(alpha - 1) log c - (alpha + b) log(1 + c)`, rearranged so that large
/// `alpha` does not cancel.
pub fn ghg_log_kernel(kappa: f64, alpha: f64, b: f64) -> f64 {
    -(alpha - 1.0) * softplus(-kappa) - (1.0 + b) * softplus(kappa)
}

/// Frozen quantities entering the full conditional of `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CConditional {
    pub size: usize,
    pub beta_sq: f64,
    pub sigma_sq: f64,
}

impl CConditional {
    pub fn of(state: &SamplerState) -> Self {
        Self { size: state.size, beta_sq: state.beta_sq_norm(), sigma_sq: state.sigma_sq }
    }

    /// Log full conditional of `c` under GHG, up to a constant:
    /// `-(|gamma| / 2) log c - ||beta||^2 / (2 c sigma^2) + log g(c)`.
    pub fn ghg_log_c(&self, c: f64, alpha: f64, b: f64) -> f64 {
        let kappa = c.ln();
        -(self.size as f64 / 2.0) * kappa - self.beta_sq / (2.0 * c * self.sigma_sq) + ghg_log_kernel(kappa, alpha, b)
    }

    /// Log full conditional of `kappa = log c`; the Jacobian adds `kappa`.
    pub fn ghg_log_kappa(&self, kappa: f64, alpha: f64, b: f64) -> f64 {
        -(self.size as f64 / 2.0) * kappa - self.beta_sq * (-kappa).exp() / (2.0 * self.sigma_sq)
            + ghg_log_kernel(kappa, alpha, b)
            + kappa
    }

    /// Shape and scale of the GZS conditional.
    pub fn gzs_params(&self, a: f64, scale: f64) -> (f64, f64) {
        (a + self.size as f64 / 2.0, scale + self.beta_sq / (2.0 * self.sigma_sq))
    }
}

/// Draws `x ~ IG(shape, scale)`, i.e. density proportional to
/// `x^{-shape-1} exp(-scale / x)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    scale / g
}

/// Conjugate GZS draw. Returns `false` (and leaves `c` alone) when the
/// conditional is degenerate, which happens for `a = 0` and an empty model.
pub fn update_c_gzs<R: Rng + ?Sized>(state: &mut SamplerState, a: f64, b_n: f64, p: usize, rng: &mut R) -> Result<bool> {
    let cond = CConditional::of(state);
    let (shape, scale) = cond.gzs_params(a, gzs_scale(b_n, p)?);
    if shape <= 0.0 {
        return Ok(false);
    }
    let c = sample_inverse_gamma(shape, scale, rng);
    if c > 0.0 && c.is_finite() {
        state.c = c;
    }
    Ok(true)
}

/// One random-walk Metropolis-Hastings step on `log c` under GHG.
/// Returns whether the proposal was accepted.
pub fn update_c_ghg_mh<R: Rng + ?Sized>(
    state: &mut SamplerState,
    d: f64,
    b: f64,
    p: usize,
    tuning: &MhTuning,
    rng: &mut R,
) -> Result<bool> {
    let alpha = ghg_alpha(d, p)?;
    let cond = CConditional::of(state);
    let kappa_old = state.c.ln();
    let step: f64 = rng.sample(StandardNormal);
    let kappa_new = kappa_old + tuning.sigma_kappa * step;
    let log_u = rng.random::<f64>().ln();
    let accept = mh_accept(&cond, kappa_old, kappa_new, alpha, b, log_u);
    if accept {
        state.c = kappa_new.exp();
    }
    Ok(accept)
}

/// Accept/reject decision given `log u`; non-finite proposals are rejected.
fn mh_accept(cond: &CConditional, kappa_old: f64, kappa_new: f64, alpha: f64, b: f64, log_u: f64) -> bool {
    let new = cond.ghg_log_kappa(kappa_new, alpha, b);
    let c_new = kappa_new.exp();
    if !new.is_finite() || !(c_new > 0.0 && c_new.is_finite()) {
        return false;
    }
    log_u < new - cond.ghg_log_kappa(kappa_old, alpha, b)
}

/// Acceptance probability `min(1, exp(l(new) - l(old)))`.
pub fn ghg_acceptance_probability(cond: &CConditional, kappa_old: f64, kappa_new: f64, alpha: f64, b: f64) -> f64 {
    let new = cond.ghg_log_kappa(kappa_new, alpha, b);
    if !new.is_finite() {
        return 0.0;
    }
    (new - cond.ghg_log_kappa(kappa_old, alpha, b)).exp().min(1.0)
}

/// Dispatches the `c` update for the configured prior.
pub fn update_c<R: Rng + ?Sized>(
    state: &mut SamplerState,
    prior: &PriorConfig,
    p: usize,
    tuning: &MhTuning,
    stats: &mut CUpdateStats,
    rng: &mut R,
) -> Result<()> {
    match prior.c_prior {
        CPrior::Fixed { .. } => {}
        CPrior::Gzs { a, b_n } => {
            if !update_c_gzs(state, a, b_n, p, rng)? {
                stats.skipped += 1;
            }
        }
        CPrior::Ghg { d, b } => {
            let accepted = update_c_ghg_mh(state, d, b, p, tuning, rng)?;
            if tuning.track_acceptance {
                stats.proposals += 1;
                stats.accepted += u64::from(accepted);
            }
        }
    }
    Ok(())
}
