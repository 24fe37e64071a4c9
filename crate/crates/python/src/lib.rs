//! Python bindings for `bayes_screen`.
//!
//! Datasets cross the boundary as plain lists; models are lists of 0-based
//! column indices.

use bayes_screen::diagnostics::{ess as ess_of, gelman_rubin as rhat_of, ScalarChains};
use bayes_screen::inference::credible_intervals as intervals_of;
use bayes_screen::simgen::{gen_example1, gen_example2, Example1Spec, Example2Spec, Setting};
use bayes_screen::{
    enumerate_posterior, enumerate_posterior_g, enumerate_size_marginal, log_unnorm_posterior, run_chains, CPrior,
    ChainConfig, ChainOutput, ModelIndicator, PriorConfig,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: bayes_screen::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, module = "bayes_screen")]
struct Dataset {
    inner: bayes_screen::Dataset,
}

#[pymethods]
impl Dataset {
    /// `x` is given row by row.
    #[new]
    fn new(y: Vec<f64>, x: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: bayes_screen::Dataset::from_rows(y, &x).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y().to_vec()
    }

    fn column(&self, j: usize) -> PyResult<Vec<f64>> {
        if j >= self.inner.p() {
            return Err(PyValueError::new_err(format!("column {j} out of range")));
        }
        Ok(self.inner.column(j).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

#[allow(clippy::too_many_arguments)]
fn prior_config(
    n: usize,
    prior: &str,
    c: Option<f64>,
    d: f64,
    a: f64,
    b: f64,
    m_n: Option<usize>,
    nu: f64,
) -> PyResult<PriorConfig> {
    let c_prior = match prior {
        "fixed" => CPrior::Fixed { c: c.ok_or_else(|| PyValueError::new_err("prior 'fixed' needs c"))? },
        "gzs" => CPrior::Gzs { a, b_n: d },
        "ghg" => CPrior::Ghg { d, b },
        other => return Err(PyValueError::new_err(format!("unknown prior '{other}'"))),
    };
    let mut cfg = PriorConfig::for_n(n).with_c_prior(c_prior);
    cfg.nu = nu;
    if let Some(m) = m_n {
        cfg = cfg.with_m_n(m);
    }
    Ok(cfg)
}

fn model(p: usize, gamma: Vec<usize>) -> PyResult<ModelIndicator> {
    ModelIndicator::new(p, gamma).map_err(to_py)
}

/// Example 1: equicorrelated Gaussian design. Returns `(data, beta0)`.
#[pyfunction]
#[pyo3(signature = (n, p, s, rho = 0.0, sigma_sq = 1.0, seed = 0))]
fn simulate_example1(n: usize, p: usize, s: usize, rho: f64, sigma_sq: f64, seed: u64) -> PyResult<(Dataset, Vec<f64>)> {
    let (inner, truth) = gen_example1(&Example1Spec { n, p, s_n: s, rho, sigma_sq, seed }).map_err(to_py)?;
    Ok((Dataset { inner }, truth.beta0))
}

/// Example 2 at one of its published configurations. Returns `(data, beta0)`.
#[pyfunction]
#[pyo3(signature = (setting, n, p, s, seed = 0))]
fn simulate_example2(setting: &str, n: usize, p: usize, s: usize, seed: u64) -> PyResult<(Dataset, Vec<f64>)> {
    let setting: Setting = setting.parse().map_err(to_py)?;
    let spec = Example2Spec::preset(setting, n, p, s, seed).map_err(to_py)?;
    let (inner, truth) = gen_example2(&spec).map_err(to_py)?;
    Ok((Dataset { inner }, truth.beta0))
}

fn chain_dict<'py>(py: Python<'py>, out: &ChainOutput) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    let models: Vec<(Vec<usize>, f64)> =
        out.top_models(out.model_counts.len()).into_iter().map(|(g, f)| (g.indices().to_vec(), f)).collect();
    dict.set_item("models", models)?;
    dict.set_item("modal_model", out.modal_model().map(|g| g.indices().to_vec()))?;
    dict.set_item("sigma_sq", out.sigma_sq_draws.clone())?;
    dict.set_item("c", out.c_draws.clone())?;
    dict.set_item("t_n", out.t_n_draws.clone())?;
    dict.set_item("mh_accept_rate", out.mh_accept_rate)?;
    if out.beta_draws.is_some() {
        dict.set_item("posterior_mean_beta", out.posterior_mean_beta().map_err(to_py)?)?;
    }
    Ok(dict)
}

/// Runs `chains` independent Gibbs chains and returns one dict per chain with
/// model frequencies and the recorded scalar traces.
#[pyfunction]
#[pyo3(signature = (
    data, prior = "gzs", c = None, d = 3.0, a = 0.0, b = 1.0, m_n = None, nu = 6.0,
    iters = 10_000, burn = 5_000, thin = 1, chains = 1, seed = 0, record_beta = true,
))]
#[allow(clippy::too_many_arguments)]
fn fit<'py>(
    py: Python<'py>,
    data: &Dataset,
    prior: &str,
    c: Option<f64>,
    d: f64,
    a: f64,
    b: f64,
    m_n: Option<usize>,
    nu: f64,
    iters: usize,
    burn: usize,
    thin: usize,
    chains: usize,
    seed: u64,
    record_beta: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = prior_config(data.inner.n(), prior, c, d, a, b, m_n, nu)?;
    let chain = ChainConfig::new(iters, burn, seed).with_thin(thin).with_beta(record_beta);
    let outputs = py.detach(|| run_chains(&data.inner, &cfg, &chain, 0, chains)).map_err(to_py)?;
    outputs.iter().map(|o| chain_dict(py, o)).collect()
}

/// Exact posterior over all models of size at most `t_n` (or marginally over
/// `t_n` when `t_n` is omitted). `c = None` integrates `c` against the
/// chosen g-prior. Returns `(model, log_score, prob)` triples.
#[pyfunction]
#[pyo3(signature = (data, t_n = None, prior = "fixed", c = None, d = 3.0, a = 0.0, b = 1.0, m_n = None, nu = 6.0))]
#[allow(clippy::too_many_arguments)]
fn enumerate(
    py: Python<'_>,
    data: &Dataset,
    t_n: Option<usize>,
    prior: &str,
    c: Option<f64>,
    d: f64,
    a: f64,
    b: f64,
    m_n: Option<usize>,
    nu: f64,
) -> PyResult<Vec<(Vec<usize>, f64, f64)>> {
    let cfg = prior_config(data.inner.n(), prior, c, d, a, b, m_n, nu)?;
    if t_n.is_none() && !matches!(cfg.c_prior, CPrior::Fixed { .. }) {
        return Err(PyValueError::new_err("the size marginal needs a fixed c"));
    }
    let post = py
        .detach(|| match (t_n, cfg.c_prior) {
            (Some(t), CPrior::Fixed { c }) => enumerate_posterior(&data.inner, &cfg, c, t),
            (Some(t), _) => enumerate_posterior_g(&data.inner, &cfg, t),
            (None, CPrior::Fixed { c }) => enumerate_size_marginal(&data.inner, &cfg, c),
            (None, _) => unreachable!(),
        })
        .map_err(to_py)?;
    Ok(post.entries.iter().map(|e| (e.gamma.indices().to_vec(), e.log_score, e.prob)).collect())
}

/// Unnormalised log posterior of one model at fixed `c`; `None` when the
/// model is larger than `t_n`.
#[pyfunction]
#[pyo3(signature = (data, gamma, c, t_n, nu = 6.0))]
fn log_posterior(data: &Dataset, gamma: Vec<usize>, c: f64, t_n: usize, nu: f64) -> PyResult<Option<f64>> {
    let mut cfg = PriorConfig::for_n(data.inner.n());
    cfg.nu = nu;
    let g = model(data.inner.p(), gamma)?;
    Ok(log_unnorm_posterior(&g, c, &data.inner, &cfg, t_n).map_err(to_py)?.value)
}

/// Marginal `1 - alpha` intervals `(j, lower, upper)` for the coefficients of
/// `gamma` given `c` and `sigma_sq`.
#[pyfunction]
#[pyo3(signature = (data, gamma, c, sigma_sq, alpha = 0.05))]
fn credible_intervals(
    data: &Dataset,
    gamma: Vec<usize>,
    c: f64,
    sigma_sq: f64,
    alpha: f64,
) -> PyResult<Vec<(usize, f64, f64)>> {
    let g = model(data.inner.p(), gamma)?;
    let set = intervals_of(&g, c, sigma_sq, &data.inner, alpha).map_err(to_py)?;
    Ok(set.entries.iter().map(|ci| (ci.j, ci.lower(), ci.upper())).collect())
}

#[pyfunction]
fn gelman_rubin(chains: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(rhat_of(&ScalarChains::new(chains).map_err(to_py)?).value)
}

#[pyfunction]
fn ess(chain: Vec<f64>) -> PyResult<f64> {
    Ok(ess_of(&chain).map_err(to_py)?.value)
}

#[pymodule(name = "bayes_screen")]
fn bayes_screen_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Dataset>()?;
    m.add_function(wrap_pyfunction!(simulate_example1, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_example2, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(log_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(credible_intervals, m)?)?;
    m.add_function(wrap_pyfunction!(gelman_rubin, m)?)?;
    m.add_function(wrap_pyfunction!(ess, m)?)?;
    Ok(())
}
