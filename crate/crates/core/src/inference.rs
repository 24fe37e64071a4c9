//! Credible intervals on the selected model and replication metrics.

use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::linalg::Gram;
use crate::model::{Dataset, GroundTruth, ModelIndicator};

/// Standard normal quantile by Wichura's AS241 (PPND16), accurate to about
/// `1e-16` relative over `(0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.043_131_018_784_873e-15,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CredibleInterval {
    /// 0-based column index.
    pub j: usize,
    pub center: f64,
    pub halfwidth: f64,
}

impl CredibleInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.center + self.halfwidth
    }

    pub fn length(&self) -> f64 {
        2.0 * self.halfwidth
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower() <= value && value <= self.upper()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CredibleIntervalSet {
    pub entries: Vec<CredibleInterval>,
    pub alpha: f64,
    pub gamma: ModelIndicator,
}

/// `xi_j +- z_{1 - alpha/2} sigma_j` with `xi = U^{-1} X_gamma' Y` and
/// `sigma_j^2 = sigma^2 (U^{-1})_jj`.
pub fn credible_intervals(
    gamma: &ModelIndicator,
    c: f64,
    sigma_sq: f64,
    d: &Dataset,
    alpha: f64,
) -> Result<CredibleIntervalSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("alpha must lie in (0, 1)"));
    }
    if !(c > 0.0 && sigma_sq > 0.0) {
        return Err(Error::config("c and sigma^2 must be positive"));
    }
    if gamma.is_empty() {
        return Err(Error::NoSelection);
    }
    let factor = Gram::new(d, gamma).factor(c)?;
    let xi = factor.xi();
    let z = normal_quantile(1.0 - alpha / 2.0);
    let entries = gamma
        .iter()
        .zip(factor.inverse_diagonal())
        .enumerate()
        .map(|(k, (j, inv))| CredibleInterval { j, center: xi[k], halfwidth: z * (sigma_sq * inv).sqrt() })
        .collect();
    Ok(CredibleIntervalSet { entries, alpha, gamma: gamma.clone() })
}

/// Fraction of intervals that miss the true coefficient; 0 when nothing was
/// selected.
pub fn fcr(intervals: &CredibleIntervalSet, truth: &GroundTruth) -> f64 {
    let r = intervals.entries.len();
    if r == 0 {
        return 0.0;
    }
    let misses = intervals.entries.iter().filter(|ci| !ci.covers(truth.beta0[ci.j])).count();
    misses as f64 / r as f64
}

/// Share of replications whose true-model frequency strictly exceeds `eta`.
pub fn f_eta(freqs: &[f64], eta: f64) -> Result<f64> {
    if freqs.is_empty() {
        return Err(Error::EmptyInput("replication frequencies"));
    }
    Ok(freqs.iter().filter(|&&f| f > eta).count() as f64 / freqs.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryOptions {
    pub alpha: f64,
    pub etas: Vec<f64>,
    /// Build credible intervals and FCR at the selected model.
    pub intervals: bool,
    /// Compute `||beta_hat - beta0||`; needs recorded beta draws.
    pub estimation_error: bool,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self { alpha: 0.05, etas: vec![0.5, 0.9], intervals: true, estimation_error: true }
    }
}

/// Metrics of one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub selected: ModelIndicator,
    pub freq_true: f64,
    pub fcr: Option<f64>,
    pub ci_lengths: Vec<f64>,
    pub size: usize,
    pub err: Option<f64>,
}

impl ReplicationRecord {
    pub fn mean_ci_length(&self) -> Option<f64> {
        (!self.ci_lengths.is_empty()).then(|| sorted_sum(&self.ci_lengths) / self.ci_lengths.len() as f64)
    }
}

/// One replication's fitted output, possibly pooled over chains.
pub struct ReplicationInput<'a> {
    pub rep: usize,
    pub output: &'a ChainOutput,
    pub truth: &'a GroundTruth,
    /// Needed only for credible intervals.
    pub data: Option<&'a Dataset>,
}

pub fn replication_record(input: &ReplicationInput<'_>, opts: &SummaryOptions) -> Result<ReplicationRecord> {
    let out = input.output;
    if out.p != input.truth.beta0.len() {
        return Err(Error::config("ground truth and chain disagree on p"));
    }
    let selected = out.modal_model().ok_or(Error::EmptyInput("model counts"))?.clone();
    let freq_true = out.frequency(&input.truth.gamma0);
    let (fcr_v, ci_lengths) = match (opts.intervals, input.data) {
        (true, Some(d)) if !selected.is_empty() => {
            let cis = credible_intervals(&selected, out.mean_c(), out.mean_sigma_sq(), d, opts.alpha)?;
            (Some(fcr(&cis, input.truth)), cis.entries.iter().map(CredibleInterval::length).collect())
        }
        (true, Some(_)) => (Some(0.0), Vec::new()),
        (true, None) => return Err(Error::config("credible intervals need the dataset")),
        (false, _) => (None, Vec::new()),
    };
    let err = if opts.estimation_error {
        let beta_hat = out.posterior_mean_beta()?;
        let sq: Vec<f64> = beta_hat.iter().zip(&input.truth.beta0).map(|(a, b)| (a - b) * (a - b)).collect();
        Some(sorted_sum(&sq).sqrt())
    } else {
        None
    };
    Ok(ReplicationRecord { rep: input.rep, size: selected.len(), selected, freq_true, fcr: fcr_v, ci_lengths, err })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregates {
    pub replications: usize,
    /// `(eta, F(eta))` pairs.
    pub f_eta: Vec<(f64, f64)>,
    pub mssm: f64,
    pub me: Option<f64>,
    pub err_sd: Option<f64>,
    pub fcr: Option<f64>,
    /// Mean interval length over all intervals of all replications.
    pub mean_ci_length: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationSummary {
    pub records: Vec<ReplicationRecord>,
    pub aggregates: Aggregates,
}

pub fn summarize_replications(runs: &[ReplicationInput<'_>], opts: &SummaryOptions) -> Result<ReplicationSummary> {
    let records = runs.iter().map(|r| replication_record(r, opts)).collect::<Result<Vec<_>>>()?;
    summarize_records(records, opts)
}

/// Aggregates computed from the records alone; the result does not depend on
/// record order.
pub fn summarize_records(records: Vec<ReplicationRecord>, opts: &SummaryOptions) -> Result<ReplicationSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput("replications"));
    }
    let freqs: Vec<f64> = records.iter().map(|r| r.freq_true).collect();
    let f = opts.etas.iter().map(|&eta| f_eta(&freqs, eta).map(|v| (eta, v))).collect::<Result<Vec<_>>>()?;
    let sizes: Vec<f64> = records.iter().map(|r| r.size as f64).collect();
    let errs: Option<Vec<f64>> = records.iter().map(|r| r.err).collect();
    let fcrs: Option<Vec<f64>> = records.iter().map(|r| r.fcr).collect();
    let lengths: Vec<f64> = records.iter().flat_map(|r| r.ci_lengths.iter().copied()).collect();
    let aggregates = Aggregates {
        replications: records.len(),
        f_eta: f,
        mssm: median(&sizes),
        me: errs.as_deref().map(median),
        err_sd: errs.as_deref().map(sample_sd),
        fcr: fcrs.as_deref().map(|v| sorted_sum(v) / v.len() as f64),
        mean_ci_length: (!lengths.is_empty()).then(|| sorted_sum(&lengths) / lengths.len() as f64),
    };
    let mut records = records;
    records.sort_by_key(|r| r.rep);
    Ok(ReplicationSummary { records, aggregates })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Order-independent sum.
fn sorted_sum(v: &[f64]) -> f64 {
    sorted(v).iter().sum()
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(v: &[f64]) -> f64 {
    let s = sorted(v);
    let m = s.len();
    match m {
        0 => f64::NAN,
        _ if m % 2 == 1 => s[m / 2],
        _ => 0.5 * (s[m / 2 - 1] + s[m / 2]),
    }
}

/// Sample standard deviation with the `m - 1` divisor; 0 for one value.
pub fn sample_sd(v: &[f64]) -> f64 {
    let m = v.len();
    if m < 2 {
        return 0.0;
    }
    let mean = sorted_sum(v) / m as f64;
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    (sorted_sum(&dev) / (m - 1) as f64).sqrt()
}
