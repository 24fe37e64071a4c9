//! Command line front end.
//!
//! Every setting can come from a flag, from a `key = value` config file given
//! with `--config`, or from its default, in that order of precedence. Config
//! keys are the long flag names with `-` or `_` as separator. The resolved
//! settings are echoed as `#` comments at the top of every CSV and in
//! `meta.json`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{ess, gelman_rubin, ScalarChains};
use crate::error::{Error, Result};
use crate::experiment::{replicate, Generator, ReplicateConfig};
use crate::gibbs::{run_chains, ChainConfig, ChainOutput};
use crate::hyper_c::{preset_c, CPreset, MhTuning};
use crate::inference::{credible_intervals, fcr, SummaryOptions};
use crate::io;
use crate::model::{CPrior, GroundTruth, ModelIndicator, PriorConfig};
use crate::posterior::{check_sparse_riesz, enumerate_posterior, enumerate_posterior_g, enumerate_size_marginal, RieszMode};
use crate::simgen::{gen_example1, gen_example2, Example1Spec, Example2Spec, Setting};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bayes-screen", version, about = "Bayesian variable selection with a size-control model prior")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulated dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Run Gibbs chains on a dataset.
    Fit(FitArgs),
    /// Enumerate the exact posterior over small model spaces.
    Exact(ExactArgs),
    /// Replicated simulation study: generate, fit and summarise.
    Replicate(ReplicateArgs),
    /// Gelman-Rubin and effective sample size for a finished `fit` run.
    Diagnose(DiagnoseArgs),
    /// Sparse Riesz eigenvalue bounds of a design.
    CheckRiesz(RieszArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// 1 (AR(1) design) or 2.
    #[arg(long)]
    pub example: Option<u8>,
    /// Example 2 design: I or II.
    #[arg(long)]
    pub setting: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Number of nonzero coefficients.
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Error variance (Example 1).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Error standard deviation (Example 2).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Signal floor (Example 2).
    #[arg(long = "signal-floor")]
    pub signal_floor: Option<f64>,
    /// Collinearity (Example 2, setting II).
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PriorArgs {
    /// fixed, gzs or ghg.
    #[arg(long)]
    pub prior: Option<String>,
    /// Exponent of the g-prior scale.
    #[arg(long)]
    pub d: Option<f64>,
    /// GZS shape.
    #[arg(long)]
    pub a: Option<f64>,
    /// GHG second beta parameter.
    #[arg(long)]
    pub b: Option<f64>,
    /// Fixed slab scale.
    #[arg(long)]
    pub c: Option<f64>,
    /// bic, ric or benchmark.
    #[arg(long)]
    pub c_preset: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub m_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub sigma_kappa: Option<f64>,
    /// Record coefficient draws (true/false).
    #[arg(long)]
    pub record_beta: Option<bool>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub gen: GenArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Optional ground-truth sidecar.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Credible interval level is `1 - alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Size cap.
    #[arg(long)]
    pub t_n: Option<usize>,
    /// Sum `t_n` out under its uniform prior on `1..=m_n` instead.
    #[arg(long)]
    pub t_n_marginal: Option<bool>,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub gen: GenArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory of a `fit` run.
    #[arg(long)]
    pub run: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RieszArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long = "order")]
    pub r: Option<usize>,
    /// exact or sampled.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub budget: Option<usize>,
}

/// Flag, file and default lookup that remembers every resolved value.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        Ok(Self { file: parse_config(path, &std::fs::read_to_string(path)?)?, resolved: BTreeMap::new() })
    }

    fn file_value<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.file
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::config(format!("config key '{key}': {e}"))))
            .transpose()
    }

    /// Flag, then file, then nothing.
    pub fn opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn require<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T::Err: Display,
    {
        self.opt(key, flag)?.ok_or_else(|| Error::config(format!("missing required setting '{key}'")))
    }

    pub fn record(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    /// Comment lines for CSV headers.
    pub fn comments(&self, command: &str) -> Vec<String> {
        let mut out = vec![format!("bayes-screen {} {command}", io::version_stamp())];
        out.extend(self.resolved.iter().map(|(k, v)| format!("{k}={v}")));
        out
    }

    pub fn meta(&self, command: &str) -> serde_json::Value {
        serde_json::json!({ "command": command, "config": self.resolved })
    }
}

/// `key = value` lines; `#` starts a comment; keys are normalised to `_`.
pub fn parse_config(path: &Path, text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: expected key = value", no + 1),
        })?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

fn resolve_prior(s: &mut Settings, args: &PriorArgs, n: usize, p: usize) -> Result<PriorConfig> {
    let kind = s.get("prior", args.prior.clone(), "gzs".to_string())?;
    let c_prior = match kind.to_ascii_lowercase().as_str() {
        "fixed" => {
            let c = match s.opt("c", args.c)? {
                Some(c) => c,
                None => {
                    let preset: String = s.require("c_preset", args.c_preset.clone())?;
                    preset_c(preset.parse::<CPreset>()?, n, p)
                }
            };
            s.record("c", c);
            CPrior::Fixed { c }
        }
        "gzs" => {
            let d = s.get("d", args.d, 3.0)?;
            CPrior::Gzs { a: s.get("a", args.a, 0.0)?, b_n: d }
        }
        "ghg" => {
            let d = s.get("d", args.d, 3.0)?;
            CPrior::Ghg { d, b: s.get("b", args.b, 0.0)? }
        }
        other => return Err(Error::config(format!("unknown prior '{other}'"))),
    };
    let base = PriorConfig::for_n(n);
    let prior = PriorConfig {
        nu: s.get("nu", args.nu, base.nu)?,
        m_n: s.get("m_n", args.m_n, base.m_n)?,
        c_prior,
        ..base
    };
    prior.validate(n, p)?;
    Ok(prior)
}

fn resolve_chain(s: &mut Settings, args: &ChainArgs, seed: u64, default_chains: usize) -> Result<(ChainConfig, usize)> {
    let cfg = ChainConfig {
        n_iter: s.get("iters", args.iters, 10_000)?,
        n_burn: s.get("burn", args.burn, 5_000)?,
        thin: s.get("thin", args.thin, 1)?,
        seed,
        record_beta: s.get("record_beta", args.record_beta, true)?,
        init: Default::default(),
        mh: MhTuning { sigma_kappa: s.get("sigma_kappa", args.sigma_kappa, 0.5)?, track_acceptance: true },
    };
    cfg.validate()?;
    let chains = s.get("chains", args.chains, default_chains)?;
    if chains < 1 {
        return Err(Error::config("chains must be at least 1"));
    }
    Ok((cfg, chains))
}

fn resolve_generator(s: &mut Settings, args: &GenArgs, seed: u64) -> Result<Generator> {
    let example: u8 = s.require("example", args.example)?;
    let n = s.require("n", args.n)?;
    let p = s.require("p", args.p)?;
    let s_n = s.require("s", args.s)?;
    match example {
        1 => {
            let spec = Example1Spec {
                n,
                p,
                s_n,
                rho: s.get("rho", args.rho, 0.0)?,
                sigma_sq: s.get("sigma2", args.sigma2, 1.0)?,
                seed,
            };
            spec.validate()?;
            Ok(Generator::Example1(spec))
        }
        2 => {
            let setting: Setting = s.get("setting", args.setting.clone(), "I".to_string())?.parse()?;
            let base = Example2Spec::preset(setting, n, p, s_n, seed).ok();
            let log_n = (n as f64).ln();
            let spec = Example2Spec {
                setting,
                n,
                p,
                s_n,
                sigma: match base {
                    Some(b) => s.get("sigma", args.sigma, b.sigma)?,
                    None => s.require("sigma", args.sigma)?,
                },
                a: match base {
                    Some(b) => s.get("signal_floor", args.signal_floor, b.a)?,
                    None => s.require("signal_floor", args.signal_floor)?,
                },
                r: s.get("r", args.r, base.map_or(1.0 - 5.0 * log_n / p as f64, |b| b.r))?,
                seed,
            };
            spec.validate()?;
            Ok(Generator::Example2(spec))
        }
        other => Err(Error::config(format!("unknown example {other}; expected 1 or 2"))),
    }
}

fn out_dir(s: &mut Settings, common: &CommonArgs) -> Result<PathBuf> {
    let dir: PathBuf = s.get("out", common.out.as_ref().map(|p| p.display().to_string()), ".".to_string())?.into();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load_data(s: &mut Settings, data: &Option<PathBuf>) -> Result<crate::model::Dataset> {
    let path: String = s.require("data", data.as_ref().map(|p| p.display().to_string()))?;
    io::read_dataset(Path::new(&path))
}

/// Parses arguments, runs the command on a pool of the requested size and
/// returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::EnumerationTooLarge { .. }) {
                eprintln!("hint: use `bayes-screen fit` to sample large model spaces");
            }
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidDataset(_)
        | Error::InvalidConfig(_)
        | Error::EnumerationTooLarge { .. }
        | Error::ImproperPrior
        | Error::Parse { .. }
        | Error::Csv(_)
        | Error::Json(_)
        | Error::EmptyInput(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Replicate(a) => cmd_replicate(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::CheckRiesz(a) => cmd_check_riesz(a),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let mut s = Settings::load(args.common.config.as_deref())?;
    let seed = s.get("seed", args.common.seed, 0)?;
    let gen = resolve_generator(&mut s, &args.gen, seed)?;
    let dir = out_dir(&mut s, &args.common)?;
    let (data, truth) = match gen {
        Generator::Example1(spec) => gen_example1(&spec)?,
        Generator::Example2(spec) => gen_example2(&spec)?,
    };
    let comments = s.comments("simulate");
    io::write_dataset(&dir.join("data.csv"), &data, &comments)?;
    io::write_ground_truth(&dir.join("truth.csv"), &truth, &comments)?;
    println!("seed {seed}");
    println!("spec {gen:?}");
    println!("wrote {} and {}", dir.join("data.csv").display(), dir.join("truth.csv").display());
    Ok(EXIT_OK)
}

fn write_intervals(path: &Path, cis: &crate::inference::CredibleIntervalSet, comments: &[String]) -> Result<()> {
    let rows: Vec<String> = cis
        .entries
        .iter()
        .map(|ci| format!("{},{},{},{}", ci.j + 1, ci.center, ci.lower(), ci.upper()))
        .collect();
    let mut text: String = comments.iter().map(|c| format!("# {c}\n")).collect();
    text.push_str("j,center,lower,upper\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn diagnostics_rows(chains: &[ChainOutput]) -> Result<Vec<(String, crate::diagnostics::Rhat, crate::diagnostics::Ess)>> {
    let traces: [(&str, Vec<Vec<f64>>); 3] = [
        ("sigma_sq", chains.iter().map(|c| c.sigma_sq_draws.clone()).collect()),
        ("log_c", chains.iter().map(|c| c.c_draws.iter().map(|v| v.ln()).collect()).collect()),
        ("t_n", chains.iter().map(|c| c.t_n_draws.iter().map(|&v| v as f64).collect()).collect()),
    ];
    let mut rows = Vec::new();
    for (name, tr) in traces {
        if tr.len() < 2 || tr[0].len() < 10 {
            continue;
        }
        let rhat = gelman_rubin(&ScalarChains::new(tr.clone())?);
        let ess_min = tr
            .iter()
            .map(|c| ess(c))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .expect("at least two chains");
        rows.push((name.to_string(), rhat, ess_min));
    }
    Ok(rows)
}

pub fn cmd_fit(args: &FitArgs) -> Result<i32> {
    let mut s = Settings::load(args.common.config.as_deref())?;
    let data = load_data(&mut s, &args.data)?;
    let truth: Option<GroundTruth> = match s.opt("truth", args.truth.as_ref().map(|p| p.display().to_string()))? {
        Some(path) => Some(io::read_ground_truth(Path::new(&path), data.p())?),
        None => None,
    };
    let seed = s.get("seed", args.common.seed, 0)?;
    let prior = resolve_prior(&mut s, &args.prior, data.n(), data.p())?;
    let (cfg, n_chains) = resolve_chain(&mut s, &args.chain, seed, 2)?;
    let alpha = s.get("alpha", args.alpha, 0.05)?;
    let dir = out_dir(&mut s, &args.common)?;
    let comments = s.comments("fit");
    let meta = s.meta("fit");

    let chains = run_chains(&data, &prior, &cfg, 0, n_chains)?;
    for (k, ch) in chains.iter().enumerate() {
        io::write_chain_output(&dir.join(format!("chain_{}", k + 1)), ch, &meta, &comments)?;
    }
    let pooled = ChainOutput::merge(&chains)?;
    io::write_model_counts(&dir.join("models.csv"), &pooled, &comments)?;
    let diag = diagnostics_rows(&chains)?;
    io::write_diagnostics(&dir.join("diagnostics.csv"), &diag, &comments)?;

    let map = pooled.modal_model().cloned().unwrap_or_else(|| ModelIndicator::empty(data.p()));
    println!("MAP model: {map}");
    println!("top models:");
    for (g, f) in pooled.top_models(10) {
        println!("  {:<40} {f:.4}", g.to_string());
    }
    if let Some(rate) = pooled.mh_accept_rate {
        println!("MH acceptance rate: {rate:.3}");
    }
    for (name, rhat, e) in &diag {
        println!("R-hat {name}: {:.4} (min ESS {:.1})", rhat.value, e.value);
    }
    if !map.is_empty() {
        let cis = credible_intervals(&map, pooled.mean_c(), pooled.mean_sigma_sq(), &data, alpha)?;
        write_intervals(&dir.join("intervals.csv"), &cis, &comments)?;
        println!("{}% credible intervals at the MAP model:", 100.0 * (1.0 - alpha));
        for ci in &cis.entries {
            println!("  x{:<6} {:>10.4}  [{:.4}, {:.4}]", ci.j + 1, ci.center, ci.lower(), ci.upper());
        }
        if let Some(t) = &truth {
            println!("FCR against ground truth: {}", fcr(&cis, t));
        }
    }
    if let Some(t) = &truth {
        println!("frequency of the true model: {:.4}", pooled.frequency(&t.gamma0));
    }
    Ok(EXIT_OK)
}

pub fn cmd_exact(args: &ExactArgs) -> Result<i32> {
    let mut s = Settings::load(args.common.config.as_deref())?;
    let data = load_data(&mut s, &args.data)?;
    let prior = resolve_prior(&mut s, &args.prior, data.n(), data.p())?;
    let marginal = s.get("t_n_marginal", args.t_n_marginal, false)?;
    let post = match (prior.c_prior, marginal) {
        (CPrior::Fixed { c }, true) => enumerate_size_marginal(&data, &prior, c)?,
        (CPrior::Fixed { c }, false) => {
            let t_n = s.require("t_n", args.t_n)?;
            enumerate_posterior(&data, &prior, c, t_n)?
        }
        (_, false) => {
            let t_n = s.require("t_n", args.t_n)?;
            enumerate_posterior_g(&data, &prior, t_n)?
        }
        (_, true) => return Err(Error::config("t_n_marginal needs a fixed c")),
    };
    let dir = out_dir(&mut s, &args.common)?;
    io::write_enumeration(&dir.join("exact.csv"), &post, &s.comments("exact"))?;
    let map = post.map_model();
    println!("models enumerated: {}", post.len());
    println!("MAP model: {map} (probability {:.6})", post.prob(map));
    Ok(EXIT_OK)
}

pub fn cmd_replicate(args: &ReplicateArgs) -> Result<i32> {
    let mut s = Settings::load(args.common.config.as_deref())?;
    let seed = s.get("seed", args.common.seed, 0)?;
    let generator = resolve_generator(&mut s, &args.gen, seed)?;
    let prior = resolve_prior(&mut s, &args.prior, generator.n(), generator.p())?;
    let (chain, chains_per_replication) = resolve_chain(&mut s, &args.chain, seed, 1)?;
    let replications = s.get("reps", args.reps, 100)?;
    let alpha = s.get("alpha", args.alpha, 0.05)?;
    let summary = SummaryOptions {
        alpha,
        etas: vec![0.5, 0.9],
        intervals: true,
        estimation_error: chain.record_beta,
    };
    let dir = out_dir(&mut s, &args.common)?;
    let comments = s.comments("replicate");
    let cfg = ReplicateConfig { generator, prior, chain, replications, chains_per_replication, summary };
    let outcome = replicate(&cfg)?;

    if !outcome.failures.is_empty() {
        let mut text: String = comments.iter().map(|c| format!("# {c}\n")).collect();
        text.push_str("rep,reason\n");
        for f in &outcome.failures {
            text.push_str(&format!("{},\"{}\"\n", f.rep + 1, f.reason.replace('"', "'")));
        }
        std::fs::write(dir.join("failures.csv"), text)?;
    }
    let Some(summary) = outcome.summary else {
        eprintln!("every replication failed");
        return Ok(EXIT_RUNTIME);
    };
    io::write_summary(&dir.join("summary.csv"), &summary, &comments)?;
    io::write_aggregate(&dir.join("aggregate.csv"), &summary, &comments)?;
    let agg = &summary.aggregates;
    println!("replications: {} ({} failed)", agg.replications, outcome.failures.len());
    for (eta, v) in &agg.f_eta {
        println!("F({eta}) = {v}");
    }
    println!("MSSM = {}", agg.mssm);
    if let (Some(me), Some(sd)) = (agg.me, agg.err_sd) {
        println!("ME = {me:.4} (sd {sd:.4})");
    }
    if let Some(f) = agg.fcr {
        println!("FCR = {f:.4}");
    }
    if let Some(l) = agg.mean_ci_length {
        println!("mean CI length = {l:.4}");
    }
    Ok(if outcome.failures.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<i32> {
    let mut s = Settings::load(args.common.config.as_deref())?;
    let run: PathBuf = s.require("run", args.run.as_ref().map(|p| p.display().to_string()))?.into();
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&run)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("scalars.csv").is_file())
        .collect();
    dirs.sort();
    if dirs.len() < 2 {
        return Err(Error::config(format!("{} holds fewer than two chains", run.display())));
    }
    let mut sig = Vec::new();
    let mut logc = Vec::new();
    let mut tn = Vec::new();
    for d in &dirs {
        let (a, b, c) = io::read_scalars(&d.join("scalars.csv"))?;
        sig.push(a);
        logc.push(b.iter().map(|v| v.ln()).collect());
        tn.push(c);
    }
    let mut rows = Vec::new();
    for (name, tr) in [("sigma_sq", sig), ("log_c", logc), ("t_n", tn)] {
        let rhat = gelman_rubin(&ScalarChains::new(tr.clone())?);
        let ess_min = tr
            .iter()
            .map(|c| ess(c))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .expect("at least two chains");
        println!("{name}: R-hat {:.4}, min ESS {:.1}", rhat.value, ess_min.value);
        rows.push((name.to_string(), rhat, ess_min));
    }
    let dir = match s.opt("out", args.common.out.as_ref().map(|p| p.display().to_string()))? {
        Some(d) => PathBuf::from(d),
        None => run.clone(),
    };
    std::fs::create_dir_all(&dir)?;
    io::write_diagnostics(&dir.join("diagnostics.csv"), &rows, &s.comments("diagnose"))?;
    Ok(EXIT_OK)
}

pub fn cmd_check_riesz(args: &RieszArgs) -> Result<i32> {
    let mut s = Settings::load(args.common.config.as_deref())?;
    let data = load_data(&mut s, &args.data)?;
    let r = s.require("order", args.r)?;
    let mode = s.get("mode", args.mode.clone(), "exact".to_string())?;
    let budget = s.get("budget", args.budget, 1_000_000)?;
    let mode = match mode.as_str() {
        "exact" => RieszMode::Exact,
        "sampled" => RieszMode::Sampled { seed: s.get("seed", args.common.seed, 0)? },
        other => return Err(Error::config(format!("unknown mode '{other}'"))),
    };
    let rep = check_sparse_riesz(data.x(), r, mode, budget)?;
    println!("lambda_min = {}", rep.lambda_min);
    println!("lambda_max = {}", rep.lambda_max);
    let bound = if rep.lower_bound_only { " (lower bound)" } else { "" };
    println!("c0 estimate = {}{bound}", rep.c0_estimate);
    if rep.condition_violated {
        println!("condition violated");
    }
    if let Some(dir) = s.opt("out", args.common.out.as_ref().map(|p| p.display().to_string()))? {
        std::fs::create_dir_all(&dir)?;
        let mut meta = s.meta("check-riesz");
        meta["report"] = serde_json::json!({
            "lambda_min": rep.lambda_min,
            "lambda_max": rep.lambda_max,
            "c0_estimate": if rep.c0_estimate.is_finite() { Some(rep.c0_estimate) } else { None },
            "lower_bound_only": rep.lower_bound_only,
            "condition_violated": rep.condition_violated,
            "submatrices_checked": rep.submatrices_checked,
        });
        std::fs::write(Path::new(&dir).join("riesz.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    Ok(EXIT_OK)
}
