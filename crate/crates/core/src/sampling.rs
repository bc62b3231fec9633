//! Monte-Carlo measurement records drawn from exact reading densities.
//!
//! Each trial picks a (branch, pointer reading) pair by inverse CDF over the
//! discretised unnormalised branch densities, so the meter is effectively
//! read before the post-selection. Trial `i` uses its own ChaCha stream, which
//! makes the record list independent of the number of worker threads.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meter::{joint_branch_distributions, Grid, JointDistribution, MeterSpec};
use crate::paths::MeasurementChain;

pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Which final state the system was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Success,
    /// Index into the post-selection complement.
    Failure(usize),
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Success => write!(f, "success"),
            Branch::Failure(k) => write!(f, "failure:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub readings: Vec<f64>,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    pub success_fraction: f64,
    pub success_fraction_se: f64,
    /// `sum` of the success-branch density, i.e. the exact post-selection probability.
    pub exact_success_probability: f64,
    /// Per meter, over successful trials only.
    pub conditional_means: Vec<Option<f64>>,
    pub conditional_se: Vec<Option<f64>>,
    pub exact_conditional_means: Vec<Option<f64>>,
    pub z_scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub records: Vec<TrialRecord>,
    pub summary: SampleSummary,
}

/// Discretised joint law of (branch, readings).
#[derive(Debug, Clone)]
pub struct JointSampler {
    branches: Vec<JointDistribution>,
    cdf: Vec<f64>,
    block: usize,
}

impl JointSampler {
    pub fn new(branches: Vec<JointDistribution>) -> Result<Self> {
        let block = branches.first().map(|b| b.density.len()).ok_or(Error::ZeroProbability)?;
        let mut cdf = Vec::with_capacity(block * branches.len());
        let mut acc = 0.0;
        for b in &branches {
            for m in b.node_masses() {
                acc += m;
                cdf.push(acc);
            }
        }
        if !(acc > 0.0) {
            return Err(Error::ZeroProbability);
        }
        Ok(Self {
            branches,
            cdf,
            block,
        })
    }

    pub fn branches(&self) -> &[JointDistribution] {
        &self.branches
    }

    /// Total discretised probability over all branches, nominally 1.
    pub fn total(&self) -> f64 {
        self.cdf[self.cdf.len() - 1]
    }

    pub fn draw(&self, rng: &mut impl Rng) -> (Branch, Vec<f64>) {
        let u = rng.random::<f64>() * self.total();
        let flat = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        let (b, node) = (flat / self.block, flat % self.block);
        let branch = if b == 0 { Branch::Success } else { Branch::Failure(b - 1) };
        (branch, self.branches[b].coordinates(node))
    }

    pub fn sample(&self, trials: u64, seed: u64) -> Vec<TrialRecord> {
        (0..trials)
            .into_par_iter()
            .map(|id| {
                let (branch, readings) = self.draw(&mut trial_rng(seed, id));
                TrialRecord {
                    trial_id: id,
                    readings,
                    branch,
                }
            })
            .collect()
    }
}

fn mean_and_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some((var / n as f64).sqrt()))
}

pub fn summarize(sampler: &JointSampler, records: &[TrialRecord], seed: u64) -> Result<SampleSummary> {
    let success = &sampler.branches()[0];
    let axes = success.axes();
    let exact_conditional_means = if success.norm > 1e-300 {
        success.marginal_means()?.into_iter().map(Some).collect()
    } else {
        vec![None; axes]
    };
    let chosen: Vec<&TrialRecord> = records.iter().filter(|r| r.branch == Branch::Success).collect();
    let n = records.len() as f64;
    let successes = chosen.len() as u64;
    let fraction = if records.is_empty() { 0.0 } else { successes as f64 / n };
    let mut conditional_means = Vec::with_capacity(axes);
    let mut conditional_se = Vec::with_capacity(axes);
    let mut z_scores = Vec::with_capacity(axes);
    for r in 0..axes {
        let values: Vec<f64> = chosen.iter().map(|t| t.readings[r]).collect();
        let (mean, se) = mean_and_se(&values);
        let z = match (mean, se, exact_conditional_means[r]) {
            (Some(m), Some(s), Some(e)) if s > 0.0 => Some((m - e) / s),
            _ => None,
        };
        conditional_means.push(mean);
        conditional_se.push(se);
        z_scores.push(z);
    }
    Ok(SampleSummary {
        trials: records.len() as u64,
        seed,
        successes,
        success_fraction: fraction,
        success_fraction_se: if records.is_empty() { 0.0 } else { (fraction * (1.0 - fraction) / n).sqrt() },
        exact_success_probability: success.norm / sampler.total(),
        conditional_means,
        conditional_se,
        exact_conditional_means,
        z_scores,
    })
}

/// Draws `trials` independent measurement records of `meters` on `chain`.
pub fn sample_trials(
    chain: &MeasurementChain,
    meters: &[MeterSpec],
    grids: &[Grid],
    trials: u64,
    seed: u64,
) -> Result<SampleRun> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let sampler = JointSampler::new(joint_branch_distributions(chain, meters, grids)?)?;
    let records = sampler.sample(trials, seed);
    let summary = summarize(&sampler, &records, seed)?;
    Ok(SampleRun { records, summary })
}

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], mut out: W) -> io::Result<()> {
    let axes = records.first().map_or(0, |r| r.readings.len());
    write!(out, "trial_id")?;
    for r in 1..=axes {
        write!(out, ",xi_{r}")?;
    }
    writeln!(out, ",branch")?;
    for rec in records {
        write!(out, "{}", rec.trial_id)?;
        for x in &rec.readings {
            write!(out, ",{x}")?;
        }
        writeln!(out, ",{}", rec.branch)?;
    }
    Ok(())
}
