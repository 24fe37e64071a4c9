//! Seeded generators for the two simulation designs.
//!
//! Example 1 draws rows of `X` from an AR(1) process across columns, so that
//! `corr(X_j1, X_j2) = rho^|j1 - j2|`, and splits the true coefficients into a
//! positive half `U[1, 5]` and a negative half `U[-5, -1]`.
//!
//! Example 2 has coefficients `(-1)^u (a + |z|)` with `u ~ Bernoulli(0.4)`.
//! Setting I uses an iid Gaussian design. Setting II draws the first `s_n`
//! columns from `N(0, A)` and builds the rest from them:
//! `X_j = W_j + r X_{j - s_n}` for `s_n < j <= 2 s_n` and
//! `X_j = W_j + (1 - r) X_1` beyond. `A = Q D Q'` with `Q` a random orthogonal
//! matrix and `D` geometrically spaced from 1 to `sqrt(n) / log n`.
//! The columns drawn from `N(0, A)` are not standardised.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::model::{derive_ground_truth, Dataset, GroundTruth};
use crate::rng::{data_stream, stream_rng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example1Spec {
    pub n: usize,
    pub p: usize,
    pub s_n: usize,
    pub rho: f64,
    pub sigma_sq: f64,
    pub seed: u64,
}

impl Example1Spec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::config("n and p must be positive"));
        }
        if !self.s_n.is_multiple_of(2) || self.s_n > self.p {
            return Err(Error::config("s_n must be even and at most p"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::config("rho must lie in [0, 1)"));
        }
        if !(self.sigma_sq > 0.0 && self.sigma_sq.is_finite()) {
            return Err(Error::config("sigma^2 must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Setting {
    I,
    II,
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Setting::I),
            "II" | "2" => Ok(Setting::II),
            other => Err(Error::config(format!("unknown setting '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example2Spec {
    pub setting: Setting,
    pub n: usize,
    pub p: usize,
    pub s_n: usize,
    pub sigma: f64,
    /// Floor on the nonzero coefficient magnitudes.
    pub a: f64,
    /// Collinearity strength; used by Setting II only.
    pub r: f64,
    pub seed: u64,
}

impl Example2Spec {
    /// The published configurations: Setting I at (200, 1000, 8) and
    /// (800, 20000, 18); Setting II at (200, 1000, 5), (200, 1000, 8) and
    /// (800, 20000, 14).
    pub fn preset(setting: Setting, n: usize, p: usize, s_n: usize, seed: u64) -> Result<Self> {
        let log_n = (n as f64).ln();
        let root_n = (n as f64).sqrt();
        let (sigma, a_mult, r_mult) = match (setting, n, p, s_n) {
            (Setting::I, 200, 1000, 8) => (1.5, 4.0, 0.0),
            (Setting::I, 800, 20000, 18) => (1.5, 5.0, 0.0),
            (Setting::II, 200, 1000, 5) => (1.0, 2.0, 4.0),
            (Setting::II, 200, 1000, 8) => (1.5, 4.0, 5.0),
            (Setting::II, 800, 20000, 14) => (2.0, 4.0, 5.0),
            _ => return Err(Error::config(format!("no preset for setting {setting:?} at ({n}, {p}, {s_n})"))),
        };
        let r = if setting == Setting::II { 1.0 - r_mult * log_n / p as f64 } else { 0.0 };
        Ok(Self { setting, n, p, s_n, sigma, a: a_mult * log_n / root_n, r, seed })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::config("n and p must be positive"));
        }
        if self.s_n > self.p {
            return Err(Error::config("s_n must be at most p"));
        }
        if self.setting == Setting::II && self.s_n == 0 {
            return Err(Error::config("setting II needs s_n >= 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) || !(self.a >= 0.0 && self.a.is_finite()) || !self.r.is_finite() {
            return Err(Error::config("sigma must be positive, a non-negative and r finite"));
        }
        Ok(())
    }
}

pub fn gen_example1(spec: &Example1Spec) -> Result<(Dataset, GroundTruth)> {
    gen_example1_with_rng(spec, &mut stream_rng(spec.seed, data_stream(0)))
}

pub fn gen_example1_with_rng<R: Rng + ?Sized>(spec: &Example1Spec, rng: &mut R) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let Example1Spec { n, p, s_n, rho, sigma_sq, .. } = *spec;
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = vec![0.0; n * p];
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { rho * prev + innov * z };
            x[j * n + i] = v;
            prev = v;
        }
    }
    let pos = Uniform::new_inclusive(1.0, 5.0).expect("valid range");
    let mut beta0 = vec![0.0; p];
    for (j, b) in beta0.iter_mut().enumerate().take(s_n) {
        let u = pos.sample(rng);
        *b = if j < s_n / 2 { u } else { -u };
    }
    finish(x, n, p, beta0, sigma_sq, rng)
}

pub fn gen_example2(spec: &Example2Spec) -> Result<(Dataset, GroundTruth)> {
    gen_example2_with_rng(spec, &mut stream_rng(spec.seed, data_stream(0)))
}

pub fn gen_example2_with_rng<R: Rng + ?Sized>(spec: &Example2Spec, rng: &mut R) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let Example2Spec { setting, n, p, s_n, sigma, a, r, .. } = *spec;
    let mut x: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    if setting == Setting::II {
        let root = sqrt_psd(&setting_two_covariance(s_n, n, rng));
        // rows of the first s_n columns become A^{1/2} z
        for i in 0..n {
            let z = DVector::from_iterator(s_n, (0..s_n).map(|j| x[j * n + i]));
            let row = &root * z;
            for j in 0..s_n {
                x[j * n + i] = row[j];
            }
        }
        for j in s_n..p {
            let (src, weight) = if j < 2 * s_n { (j - s_n, r) } else { (0, 1.0 - r) };
            for i in 0..n {
                x[j * n + i] += weight * x[src * n + i];
            }
        }
    }
    let flip = Bernoulli::new(0.4).expect("valid probability");
    let mut beta0 = vec![0.0; p];
    for b in beta0.iter_mut().take(s_n) {
        let negative = flip.sample(rng);
        let z: f64 = rng.sample(StandardNormal);
        let mag = a + z.abs();
        *b = if negative { -mag } else { mag };
    }
    finish(x, n, p, beta0, sigma * sigma, rng)
}

fn finish<R: Rng + ?Sized>(
    x: Vec<f64>,
    n: usize,
    p: usize,
    beta0: Vec<f64>,
    sigma_sq: f64,
    rng: &mut R,
) -> Result<(Dataset, GroundTruth)> {
    let sd = sigma_sq.sqrt();
    let mut y: Vec<f64> = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    for (j, &b) in beta0.iter().enumerate() {
        if b != 0.0 {
            for (yi, xi) in y.iter_mut().zip(&x[j * n..(j + 1) * n]) {
                *yi += b * xi;
            }
        }
    }
    let data = Dataset::new(y, x, n, p)?;
    let truth = derive_ground_truth(beta0, sigma_sq)?;
    Ok((data, truth))
}

/// `A = Q D Q'` with condition number `sqrt(n) / log n` (for `s >= 2`).
pub fn setting_two_covariance<R: Rng + ?Sized>(s: usize, n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(s, s, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let rdiag = qr.r().diagonal();
    for k in 0..s {
        if rdiag[k] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    let kappa = (n as f64).sqrt() / (n as f64).ln();
    let eig = DVector::from_fn(s, |k, _| if s == 1 { 1.0 } else { kappa.powf(k as f64 / (s - 1) as f64) });
    &q * DMatrix::from_diagonal(&eig) * q.transpose()
}

fn sqrt_psd(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}
