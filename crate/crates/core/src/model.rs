//! Domain types shared by every other module.
//!
//! Column indices are 0-based everywhere inside the crate. The 1-based
//! convention of user-facing files and labels is applied only by
//! [`ModelIndicator::label`], [`ModelIndicator::parse_label`] and the readers
//! and writers in [`crate::io`].

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Response vector and design matrix of one regression problem.
///
/// The design matrix is stored column-major so that a column is a contiguous
/// slice; the sampler touches one column at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    NonFinite { row: usize, col: usize },
    NonFiniteResponse { row: usize },
    ZeroNormColumn { col: usize },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch: {what} has {found}, expected {expected}")
            }
            Violation::NonFinite { row, col } => {
                write!(f, "non-finite entry at row {}, column {}", row + 1, col + 1)
            }
            Violation::NonFiniteResponse { row } => {
                write!(f, "non-finite response at row {}", row + 1)
            }
            Violation::ZeroNormColumn { col } => write!(f, "zero-norm column {}", col + 1),
            Violation::Empty => write!(f, "n and p must be positive"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks raw inputs before they become a [`Dataset`]. `x` is column-major.
pub fn validate_dataset(y: &[f64], x: &[f64], n: usize, p: usize) -> ValidationReport {
    let mut violations = Vec::new();
    if n == 0 || p == 0 {
        violations.push(Violation::Empty);
        return ValidationReport { violations };
    }
    if y.len() != n {
        violations.push(Violation::DimensionMismatch { what: "y", expected: n, found: y.len() });
    }
    if x.len() != n * p {
        violations.push(Violation::DimensionMismatch { what: "x", expected: n * p, found: x.len() });
        return ValidationReport { violations };
    }
    for (row, v) in y.iter().enumerate() {
        if !v.is_finite() {
            violations.push(Violation::NonFiniteResponse { row });
        }
    }
    for col in 0..p {
        let column = &x[col * n..(col + 1) * n];
        let mut finite = true;
        for (row, v) in column.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFinite { row, col });
                finite = false;
            }
        }
        if finite && column.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
            violations.push(Violation::ZeroNormColumn { col });
        }
    }
    ValidationReport { violations }
}

impl Dataset {
    /// Builds a dataset from a column-major design matrix buffer.
    pub fn new(y: Vec<f64>, x_col_major: Vec<f64>, n: usize, p: usize) -> Result<Self> {
        let report = validate_dataset(&y, &x_col_major, n, p);
        if !report.is_ok() {
            return Err(Error::InvalidDataset(report));
        }
        Ok(Self { y, x: DMatrix::from_vec(n, p, x_col_major) })
    }

    pub fn from_matrix(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        Self::new(y, x.as_slice().to_vec(), n, p)
    }

    /// Builds a dataset from row-major observations.
    pub fn from_rows(y: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            let bad = rows.iter().find(|r| r.len() != p).map_or(0, Vec::len);
            return Err(Error::InvalidDataset(ValidationReport {
                violations: vec![Violation::DimensionMismatch { what: "row", expected: p, found: bad }],
            }));
        }
        let mut x = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                x[j * n + i] = *v;
            }
        }
        Self::new(y, x, n, p)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    pub fn validate(&self) -> ValidationReport {
        validate_dataset(&self.y, self.x.as_slice(), self.n(), self.p())
    }

    /// `Y - X beta`, computed from scratch.
    pub fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = self.y.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (ri, xi) in r.iter_mut().zip(self.column(j)) {
                    *ri -= xi * b;
                }
            }
        }
        r
    }
}

/// True coefficients of a simulated dataset together with derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub beta0: Vec<f64>,
    pub gamma0: ModelIndicator,
    pub s_n: usize,
    pub sigma0_sq: f64,
    /// Squared norm of the nonzero coefficients.
    pub k_n: f64,
    /// Smallest nonzero magnitude; absent when the true model is empty.
    pub psi_n: Option<f64>,
}

pub fn derive_ground_truth(beta0: Vec<f64>, sigma0_sq: f64) -> Result<GroundTruth> {
    if beta0.iter().any(|b| !b.is_finite()) {
        return Err(Error::config("beta0 must be finite"));
    }
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::config("sigma0_sq must be positive"));
    }
    let p = beta0.len();
    let support: Vec<usize> = (0..p).filter(|&j| beta0[j] != 0.0).collect();
    let gamma0 = ModelIndicator::from_sorted_unchecked(p, support);
    let k_n = gamma0.iter().map(|j| beta0[j] * beta0[j]).sum();
    let psi_n = gamma0.iter().map(|j| beta0[j].abs()).reduce(f64::min);
    if gamma0.is_empty() {
        log::warn!("true model empty");
    }
    Ok(GroundTruth { s_n: gamma0.len(), gamma0, beta0, sigma0_sq, k_n, psi_n })
}

impl GroundTruth {
    pub fn is_empty_model(&self) -> bool {
        self.s_n == 0
    }
}

/// A model, i.e. the set of included columns.
///
/// Ordering compares `p` first, then the sorted index lists lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelIndicator {
    p: usize,
    included: Vec<usize>,
}

impl ModelIndicator {
    pub fn empty(p: usize) -> Self {
        Self { p, included: Vec::new() }
    }

    /// Builds a model from 0-based indices; duplicates and out-of-range
    /// indices are rejected.
    pub fn new(p: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut included: Vec<usize> = indices.into_iter().collect();
        included.sort_unstable();
        if included.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("duplicate index in model"));
        }
        if included.last().is_some_and(|&j| j >= p) {
            return Err(Error::config(format!("model index out of range for p = {p}")));
        }
        Ok(Self { p, included })
    }

    pub(crate) fn from_sorted_unchecked(p: usize, included: Vec<usize>) -> Self {
        debug_assert!(included.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(included.last().is_none_or(|&j| j < p));
        Self { p, included }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        let included = mask.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect();
        Self { p: mask.len(), included }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.included
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.included.iter().copied()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.included.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &ModelIndicator) -> bool {
        self.included.iter().all(|&j| other.contains(j))
    }

    /// `+`-joined 1-based indices; the empty model is the empty string.
    pub fn label(&self) -> String {
        self.included.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join("+")
    }

    pub fn parse_label(p: usize, label: &str) -> Result<Self> {
        let label = label.trim();
        if label.is_empty() {
            return Ok(Self::empty(p));
        }
        let indices = label
            .split('+')
            .map(|tok| match tok.trim().parse::<usize>() {
                Ok(j) if j >= 1 => Ok(j - 1),
                _ => Err(Error::config(format!("bad model label '{label}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, indices)
    }

    /// Tie-break order for equally scored models: smaller size first, then
    /// the lexicographically smaller index list.
    pub fn tie_break_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.included.cmp(&other.included))
    }
}

impl fmt::Display for ModelIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.label().replace('+', ","))
    }
}

/// Prior on the model space below the size cap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModelPrior {
    /// Constant mass for every model with `|gamma| <= t_n`.
    #[default]
    Indifference,
}

impl ModelPrior {
    /// Log prior mass of an admissible model, up to an additive constant.
    pub fn log_mass(&self, _gamma: &ModelIndicator) -> f64 {
        match self {
            ModelPrior::Indifference => 0.0,
        }
    }

    /// `log p(gamma_j = 1, gamma_-j) - log p(gamma_j = 0, gamma_-j)` when both
    /// models respect the cap.
    pub fn log_inclusion_ratio(&self) -> f64 {
        match self {
            ModelPrior::Indifference => 0.0,
        }
    }
}

/// Prior on the slab scale `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CPrior {
    Fixed { c: f64 },
    /// Generalised Zellner-Siow: `c ~ IG(a, p^b_n)`.
    Gzs { a: f64, b_n: f64 },
    /// Generalised hyper-g: `c / (1 + c) ~ Beta(p^d + 1, b)`.
    Ghg { d: f64, b: f64 },
}

impl CPrior {
    pub fn gzs(d: f64) -> Self {
        CPrior::Gzs { a: 0.0, b_n: d }
    }

    pub fn ghg(d: f64) -> Self {
        CPrior::Ghg { d, b: 0.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CPrior::Fixed { .. } => "fixed",
            CPrior::Gzs { .. } => "gzs",
            CPrior::Ghg { .. } => "ghg",
        }
    }
}

/// All hyperpriors of the hierarchical model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorConfig {
    /// Degrees of freedom of the inverse chi-square prior on `sigma^2`.
    pub nu: f64,
    /// Upper end of the uniform prior on `t_n`.
    pub m_n: usize,
    pub model_prior: ModelPrior,
    pub c_prior: CPrior,
}

impl PriorConfig {
    /// `nu = 6`, `m_n = floor(n / 2)` and GZS with `d = 3`.
    pub fn for_n(n: usize) -> Self {
        Self { nu: 6.0, m_n: (n / 2).max(1), model_prior: ModelPrior::Indifference, c_prior: CPrior::gzs(3.0) }
    }

    pub fn with_c_prior(mut self, c_prior: CPrior) -> Self {
        self.c_prior = c_prior;
        self
    }

    pub fn with_m_n(mut self, m_n: usize) -> Self {
        self.m_n = m_n;
        self
    }

    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::config("nu must be positive"));
        }
        if self.m_n < 1 || self.m_n > n {
            return Err(Error::config(format!("m_n = {} must lie in [1, n = {n}]", self.m_n)));
        }
        match self.c_prior {
            CPrior::Fixed { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::config("fixed c must be positive and finite"))
            }
            CPrior::Gzs { a, b_n } => {
                if !(a >= 0.0 && a.is_finite()) || !(b_n > 0.0 && b_n.is_finite()) {
                    return Err(Error::config("GZS needs a >= 0 and b_n > 0"));
                }
                crate::hyper_c::gzs_scale(b_n, p).map(|_| ())
            }
            CPrior::Ghg { d, b } => {
                if !(d > 0.0 && d.is_finite()) || !(b >= 0.0 && b.is_finite()) {
                    return Err(Error::config("GHG needs d > 0 and b >= 0"));
                }
                crate::hyper_c::ghg_alpha(d, p).map(|_| ())
            }
            _ => Ok(()),
        }
    }
}

/// One state of the Markov chain.
///
/// Inclusion is kept as a dense mask for O(1) membership; [`Self::model`]
/// converts to a [`ModelIndicator`].
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerState {
    pub beta: Vec<f64>,
    pub included: Vec<bool>,
    pub size: usize,
    pub sigma_sq: f64,
    pub t_n: usize,
    pub c: f64,
    /// Cached `Y - X beta`.
    pub residual: Vec<f64>,
}

impl SamplerState {
    /// The all-zero state.
    pub fn empty(d: &Dataset, sigma_sq: f64, t_n: usize, c: f64) -> Self {
        Self {
            beta: vec![0.0; d.p()],
            included: vec![false; d.p()],
            size: 0,
            sigma_sq,
            t_n,
            c,
            residual: d.y().to_vec(),
        }
    }

    /// A state with the given coefficients; the inclusion mask is their support.
    pub fn from_beta(d: &Dataset, beta: Vec<f64>, sigma_sq: f64, t_n: usize, c: f64) -> Result<Self> {
        if beta.len() != d.p() {
            return Err(Error::config("beta length differs from p"));
        }
        let included: Vec<bool> = beta.iter().map(|b| *b != 0.0).collect();
        let size = included.iter().filter(|b| **b).count();
        let residual = d.residual(&beta);
        let state = Self { beta, included, size, sigma_sq, t_n, c, residual };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn model(&self) -> ModelIndicator {
        ModelIndicator::from_mask(&self.included)
    }

    /// `||beta_gamma||^2`.
    pub fn beta_sq_norm(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum()
    }

    pub fn rebuild_residual(&mut self, d: &Dataset) {
        self.residual = d.residual(&self.beta);
    }

    pub fn check_invariants(&self) -> Result<()> {
        let mismatch = self.beta.iter().zip(&self.included).position(|(b, g)| (*b != 0.0) != *g);
        if let Some(j) = mismatch {
            return Err(Error::config(format!("beta and gamma disagree at column {}", j + 1)));
        }
        if self.included.iter().filter(|b| **b).count() != self.size {
            return Err(Error::config("cached model size is stale"));
        }
        if self.size > self.t_n {
            return Err(Error::config(format!("|gamma| = {} exceeds t_n = {}", self.size, self.t_n)));
        }
        if self.sigma_sq.is_nan() || self.c.is_nan() || self.sigma_sq <= 0.0 || self.c <= 0.0 {
            return Err(Error::config("sigma^2 and c must be positive"));
        }
        Ok(())
    }
}

/// Column norms and `Y'Y`, computed once per dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Precomputed {
    pub col_sq_norms: Vec<f64>,
    pub yty: f64,
}

impl Precomputed {
    pub fn new(d: &Dataset) -> Self {
        let col_sq_norms = (0..d.p()).map(|j| d.column(j).iter().map(|v| v * v).sum()).collect();
        let yty = d.y().iter().map(|v| v * v).sum();
        Self { col_sq_norms, yty }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_dataset() -> Dataset {
        let n = 10;
        let p = 5;
        let mut x = vec![0.0; n * p];
        for j in 0..p {
            x[j * n + j] = 1.0;
        }
        Dataset::new((0..n).map(|i| i as f64).collect(), x, n, p).unwrap()
    }

    #[test]
    fn well_formed_dataset_validates() {
        let d = unit_dataset();
        assert!(d.validate().is_ok());
        assert_eq!(d.column(2)[2], 1.0);
    }

    #[test]
    fn zero_column_is_reported() {
        let n = 10;
        let mut x = vec![1.0; n * 5];
        for v in &mut x[3 * n..4 * n] {
            *v = 0.0;
        }
        let report = validate_dataset(&[0.0; 10], &x, n, 5);
        assert_eq!(report.violations, vec![Violation::ZeroNormColumn { col: 3 }]);
        assert_eq!(report.to_string(), "zero-norm column 4");
    }

    #[test]
    fn short_response_is_a_dimension_mismatch() {
        let report = validate_dataset(&[0.0; 9], &[1.0; 50], 10, 5);
        assert!(matches!(report.violations[0], Violation::DimensionMismatch { what: "y", .. }));
        assert!(report.to_string().starts_with("dimension mismatch"));
    }

    #[test]
    fn non_finite_entries_are_reported() {
        let mut x = vec![1.0; 20];
        x[7] = f64::NAN;
        let report = validate_dataset(&[0.0; 10], &x, 10, 2);
        assert_eq!(report.violations, vec![Violation::NonFinite { row: 7, col: 0 }]);
    }

    #[test]
    fn ground_truth_from_small_vector() {
        let t = derive_ground_truth(vec![2.0, -3.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(t.s_n, 2);
        assert_eq!(t.k_n, 13.0);
        assert_eq!(t.psi_n, Some(2.0));
        assert_eq!(t.gamma0.indices(), &[0, 1]);
    }

    #[test]
    fn ground_truth_of_zero_vector_is_flagged() {
        let t = derive_ground_truth(vec![0.0; 4], 1.0).unwrap();
        assert_eq!(t.s_n, 0);
        assert_eq!(t.psi_n, None);
        assert_eq!(t.k_n, 0.0);
        assert!(t.is_empty_model());
        assert!(derive_ground_truth(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn labels_are_one_based() {
        let m = ModelIndicator::new(10, [4, 0]).unwrap();
        assert_eq!(m.label(), "1+5");
        assert_eq!(ModelIndicator::parse_label(10, "1+5").unwrap(), m);
        assert_eq!(ModelIndicator::parse_label(10, "").unwrap(), ModelIndicator::empty(10));
        assert!(ModelIndicator::parse_label(10, "0").is_err());
        assert!(ModelIndicator::new(3, [3]).is_err());
        assert!(ModelIndicator::new(3, [1, 1]).is_err());
        assert!(m.contains(4) && !m.contains(3));
    }

    #[test]
    fn prior_validation() {
        let prior = PriorConfig::for_n(100);
        assert_eq!(prior.m_n, 50);
        assert!(prior.validate(100, 15).is_ok());
        assert!(prior.with_m_n(101).validate(100, 15).is_err());
        assert!(prior.with_m_n(0).validate(100, 15).is_err());
        // p^d overflows double precision.
        assert!(prior.with_c_prior(CPrior::ghg(400.0)).validate(100, 20000).is_err());
        assert!(prior.with_c_prior(CPrior::Fixed { c: -1.0 }).validate(100, 15).is_err());
    }

    #[test]
    fn precomputed_matches_fresh_norms() {
        let d = unit_dataset();
        let pre = Precomputed::new(&d);
        for j in 0..d.p() {
            let fresh: f64 = d.column(j).iter().map(|v| v * v).sum();
            assert!((pre.col_sq_norms[j] - fresh).abs() <= 1e-12 * fresh);
            assert!(pre.col_sq_norms[j] > 0.0);
        }
        assert_eq!(pre.yty, (0..10).map(|i| (i * i) as f64).sum::<f64>());
    }

    #[test]
    fn state_from_beta_matches_support() {
        let d = unit_dataset();
        let s = SamplerState::from_beta(&d, vec![1.0, 0.0, 0.0, -2.0, 0.0], 1.0, 2, 10.0).unwrap();
        assert_eq!(s.size, 2);
        assert_eq!(s.model().indices(), &[0, 3]);
        assert!(SamplerState::from_beta(&d, vec![1.0, 1.0, 1.0, 0.0, 0.0], 1.0, 2, 10.0).is_err());
    }
}
