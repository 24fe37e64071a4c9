//! Small dense factorizations of `U_gamma = I / c + X_gamma' X_gamma`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::model::{Dataset, ModelIndicator};

/// `X_gamma' X_gamma` and `X_gamma' Y` for one model.
#[derive(Clone, Debug)]
pub struct Gram {
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
    label: String,
}

impl Gram {
    pub fn new(d: &Dataset, gamma: &ModelIndicator) -> Self {
        let idx = gamma.indices();
        let k = idx.len();
        let mut xtx = DMatrix::zeros(k, k);
        let mut xty = DVector::zeros(k);
        for (a, &ja) in idx.iter().enumerate() {
            let col_a = d.column(ja);
            xty[a] = dot(col_a, d.y());
            for (b, &jb) in idx.iter().enumerate().take(a + 1) {
                let v = dot(col_a, d.column(jb));
                xtx[(a, b)] = v;
                xtx[(b, a)] = v;
            }
        }
        Self { xtx, xty, label: gamma.to_string() }
    }

    pub fn size(&self) -> usize {
        self.xty.len()
    }

    /// `U_gamma` for the given slab scale.
    pub fn u_matrix(&self, c: f64) -> DMatrix<f64> {
        let mut u = self.xtx.clone();
        for i in 0..u.nrows() {
            u[(i, i)] += 1.0 / c;
        }
        u
    }

    /// Cholesky factor of `U_gamma`. On failure the diagonal is bumped once by
    /// `1e-10 * trace / k` before giving up.
    pub fn factor(&self, c: f64) -> Result<UFactor> {
        let u = self.u_matrix(c);
        let k = u.nrows();
        let chol = match Cholesky::new(u.clone()) {
            Some(ch) => ch,
            None => {
                let jitter = 1e-10 * u.trace() / k.max(1) as f64;
                let mut bumped = u;
                for i in 0..k {
                    bumped[(i, i)] += jitter;
                }
                Cholesky::new(bumped).ok_or_else(|| Error::SingularModel { model: self.label.clone() })?
            }
        };
        let z = chol
            .l_dirty()
            .solve_lower_triangular(&self.xty)
            .ok_or_else(|| Error::SingularModel { model: self.label.clone() })?;
        Ok(UFactor { chol, z })
    }
}

pub struct UFactor {
    chol: Cholesky<f64, Dyn>,
    /// `L^{-1} X_gamma' Y`.
    z: DVector<f64>,
}

impl UFactor {
    pub fn size(&self) -> usize {
        self.z.len()
    }

    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
    }

    /// `Y' X_gamma U^{-1} X_gamma' Y`.
    pub fn explained(&self) -> f64 {
        self.z.norm_squared()
    }

    /// Posterior mean `xi = U^{-1} X_gamma' Y`.
    pub fn xi(&self) -> DVector<f64> {
        self.chol.l_dirty().tr_solve_lower_triangular(&self.z).expect("factor is nonsingular")
    }

    /// Diagonal of `U^{-1}`, one triangular solve per column.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let k = self.size();
        let l = self.chol.l();
        (0..k)
            .map(|j| {
                let mut e = DVector::zeros(k);
                e[j] = 1.0;
                let col = l.solve_lower_triangular(&e).expect("factor is nonsingular");
                col.norm_squared()
            })
            .collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log(sum(exp(v)))` without overflow; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log(1 + exp(x))`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-x))`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
