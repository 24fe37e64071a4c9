//! Convergence diagnostics for scalar traces.

use crate::error::{Error, Result};

/// `m >= 2` traces of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarChains {
    chains: Vec<Vec<f64>>,
}

impl ScalarChains {
    pub fn new(chains: Vec<Vec<f64>>) -> Result<Self> {
        if chains.len() < 2 {
            return Err(Error::config("potential scale reduction needs at least two chains"));
        }
        let len = chains[0].len();
        if len < 2 {
            return Err(Error::config("chains need at least two draws"));
        }
        if chains.iter().any(|c| c.len() != len) {
            return Err(Error::config("chains have different lengths"));
        }
        Ok(Self { chains })
    }

    pub fn chains(&self) -> &[Vec<f64>] {
        &self.chains
    }

    pub fn len(&self) -> usize {
        self.chains[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rhat {
    pub value: f64,
    /// Set when the within-chain variance vanishes but the chain means differ.
    pub infinite: bool,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Potential scale reduction `sqrt(((L - 1) / L W + B / L) / W)`.
pub fn gelman_rubin(chains: &ScalarChains) -> Rhat {
    let l = chains.len() as f64;
    let m = chains.chains.len() as f64;
    let means: Vec<f64> = chains.chains.iter().map(|c| mean(c)).collect();
    let w = chains.chains.iter().zip(&means).map(|(c, &mu)| variance(c, mu)).sum::<f64>() / m;
    let grand = mean(&means);
    let b = l * means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>() / (m - 1.0);
    if w <= 0.0 {
        return if b > 0.0 { Rhat { value: f64::INFINITY, infinite: true } } else { Rhat { value: 1.0, infinite: false } };
    }
    Rhat { value: (((l - 1.0) / l * w + b / l) / w).sqrt(), infinite: false }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ess {
    pub value: f64,
    /// The chain is constant; `value` is then the chain length.
    pub constant: bool,
}

/// Effective sample size from autocorrelations truncated by Geyer's initial
/// positive sequence rule, capped at the chain length.
pub fn ess(chain: &[f64]) -> Result<Ess> {
    let n = chain.len();
    if n < 10 {
        return Err(Error::config("effective sample size needs at least 10 draws"));
    }
    let mu = mean(chain);
    let centred: Vec<f64> = chain.iter().map(|x| x - mu).collect();
    let gamma0 = centred.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if gamma0 <= 0.0 {
        return Ok(Ess { value: n as f64, constant: true });
    }
    let autocov = |k: usize| centred[..n - k].iter().zip(&centred[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = (autocov(k) + autocov(k + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    let value = (n as f64 / tau.max(1e-12)).min(n as f64);
    Ok(Ess { value, constant: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, len: usize) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..len).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn identical_chains() {
        let c = normals(1, 50);
        let r = gelman_rubin(&ScalarChains::new(vec![c.clone(), c.clone(), c]).unwrap());
        assert!((r.value - (49.0f64 / 50.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn iid_chains_are_near_one() {
        let chains = (0..4).map(|s| normals(s, 10_000)).collect();
        let r = gelman_rubin(&ScalarChains::new(chains).unwrap());
        assert!(r.value > 0.99 && r.value < 1.01, "{}", r.value);
    }

    #[test]
    fn separated_chains() {
        let a: Vec<f64> = normals(2, 500).iter().map(|x| x + 10.0).collect();
        let b: Vec<f64> = normals(3, 500).iter().map(|x| x - 10.0).collect();
        assert!(gelman_rubin(&ScalarChains::new(vec![a, b]).unwrap()).value > 3.0);
        let r = gelman_rubin(&ScalarChains::new(vec![vec![1.0; 5], vec![2.0; 5]]).unwrap());
        assert!(r.infinite && r.value.is_infinite());
    }

    #[test]
    fn ess_of_iid_and_ar1() {
        let iid = normals(4, 20_000);
        let e = ess(&iid).unwrap().value;
        assert!((e / 20_000.0 - 1.0).abs() < 0.2, "{e}");

        let z = normals(5, 50_000);
        let mut ar = vec![0.0; z.len()];
        for t in 1..z.len() {
            ar[t] = 0.9 * ar[t - 1] + z[t];
        }
        let e = ess(&ar).unwrap().value;
        let expected = 50_000.0 * 0.1 / 1.9;
        assert!((e / expected - 1.0).abs() < 0.3, "{e} vs {expected}");
    }

    #[test]
    fn constant_chain_is_flagged() {
        let e = ess(&[2.0; 20]).unwrap();
        assert!(e.constant);
        assert_eq!(e.value, 20.0);
        assert!(ess(&[1.0; 5]).is_err());
    }
}
