//! Replicated simulation experiments: generate, fit, summarise.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::{run_chains, ChainConfig, ChainOutput};
use crate::inference::{replication_record, summarize_records, ReplicationInput, ReplicationRecord, ReplicationSummary, SummaryOptions};
use crate::model::{Dataset, GroundTruth, PriorConfig};
use crate::rng::{data_stream, stream_rng};
use crate::simgen::{gen_example1_with_rng, gen_example2_with_rng, Example1Spec, Example2Spec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    Example1(Example1Spec),
    Example2(Example2Spec),
}

impl Generator {
    pub fn n(&self) -> usize {
        match self {
            Generator::Example1(s) => s.n,
            Generator::Example2(s) => s.n,
        }
    }

    pub fn p(&self) -> usize {
        match self {
            Generator::Example1(s) => s.p,
            Generator::Example2(s) => s.p,
        }
    }

    /// Dataset of replication `rep` under `master_seed`. The `seed` stored in
    /// the spec is ignored.
    pub fn generate(&self, master_seed: u64, rep: u64) -> Result<(Dataset, GroundTruth)> {
        let mut rng = stream_rng(master_seed, data_stream(rep));
        match self {
            Generator::Example1(s) => gen_example1_with_rng(s, &mut rng),
            Generator::Example2(s) => gen_example2_with_rng(s, &mut rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateConfig {
    pub generator: Generator,
    pub prior: PriorConfig,
    /// Its `seed` is the master seed of the whole experiment.
    pub chain: ChainConfig,
    pub replications: usize,
    pub chains_per_replication: usize,
    pub summary: SummaryOptions,
}

impl ReplicateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.chains_per_replication < 1 {
            return Err(Error::config("need at least one chain per replication"));
        }
        self.chain.validate()?;
        self.prior.validate(self.generator.n(), self.generator.p())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct ReplicateOutcome {
    /// Absent when every replication failed.
    pub summary: Option<ReplicationSummary>,
    pub failures: Vec<ReplicationFailure>,
}

impl ReplicateOutcome {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Generates and fits one replication; chains are pooled before summarising.
pub fn run_replication(cfg: &ReplicateConfig, rep: usize) -> Result<(ReplicationRecord, ChainOutput)> {
    let (data, truth) = cfg.generator.generate(cfg.chain.seed, rep as u64)?;
    let chains = run_chains(&data, &cfg.prior, &cfg.chain, rep as u64, cfg.chains_per_replication)?;
    let pooled = ChainOutput::merge(&chains)?;
    let input = ReplicationInput { rep, output: &pooled, truth: &truth, data: Some(&data) };
    let record = replication_record(&input, &cfg.summary)?;
    Ok((record, pooled))
}

/// Runs all replications in parallel on the current rayon pool. Failed
/// replications are recorded and left out of the aggregates.
pub fn replicate(cfg: &ReplicateConfig) -> Result<ReplicateOutcome> {
    cfg.validate()?;
    let results: Vec<Result<ReplicationRecord>> =
        (0..cfg.replications).into_par_iter().map(|rep| run_replication(cfg, rep).map(|(r, _)| r)).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (rep, res) in results.into_iter().enumerate() {
        match res {
            Ok(r) => records.push(r),
            Err(e) => {
                log::error!("replication {} failed: {e}", rep + 1);
                failures.push(ReplicationFailure { rep, reason: e.to_string() });
            }
        }
    }
    let summary = if records.is_empty() { None } else { Some(summarize_records(records, &cfg.summary)?) };
    Ok(ReplicateOutcome { summary, failures })
}
