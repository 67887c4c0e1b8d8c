//! Seeded Monte Carlo batches. Every controller sees the same scenario
//! sequence; episodes run in parallel when the `parallel` feature is on
//! and are merged in a fixed order either way.

use crate::config::RunConfig;
use crate::error::ConfigError;
use crate::world::{generate_scenario, Family, ScenarioConfig, WorldState};

use super::episode::{run_episode, EpisodeRecord};
use super::metrics::{summarize_all, Summary};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// Ordered by family, episode index, then controller as configured.
    pub records: Vec<EpisodeRecord>,
    pub summaries: Vec<Summary>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scenario seed of episode `index` of `family` under `master_seed`.
pub fn episode_seed(master_seed: u64, family: Family, index: u64) -> u64 {
    let family_tag = family as u64 + 1;
    splitmix64(splitmix64(master_seed ^ family_tag.wrapping_mul(0xA24B_AED4_963E_E407)) ^ index)
}

pub fn scenario_config(cfg: &RunConfig, family: Family, index: u64) -> ScenarioConfig {
    ScenarioConfig {
        family,
        seed: episode_seed(cfg.batch.master_seed, family, index),
        ..cfg.scenario.clone()
    }
}

pub fn scenario_for(cfg: &RunConfig, family: Family, index: u64) -> Result<WorldState, ConfigError> {
    generate_scenario(&scenario_config(cfg, family, index))
}

fn jobs(cfg: &RunConfig) -> Vec<(Family, u64)> {
    cfg.batch
        .families
        .iter()
        .flat_map(|&f| (0..cfg.batch.episodes as u64).map(move |i| (f, i)))
        .collect()
}

fn run_job(cfg: &RunConfig, family: Family, index: u64) -> Result<Vec<EpisodeRecord>, ConfigError> {
    let world = scenario_for(cfg, family, index)?;
    Ok(cfg
        .batch
        .controllers
        .iter()
        .map(|&kind| run_episode(&world, kind, &cfg.controller, &cfg.sensor, &cfg.episode, cfg.dt()))
        .collect())
}

fn finish(per_job: Vec<Vec<EpisodeRecord>>) -> BatchResult {
    let records: Vec<EpisodeRecord> = per_job.into_iter().flatten().collect();
    let summaries = summarize_all(&records);
    BatchResult { records, summaries }
}

pub fn run_batch_sequential(cfg: &RunConfig) -> Result<BatchResult, ConfigError> {
    cfg.validate()?;
    let per_job = jobs(cfg)
        .into_iter()
        .map(|(f, i)| run_job(cfg, f, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(finish(per_job))
}

/// Runs on the current rayon pool; install a sized pool to bound workers.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(cfg: &RunConfig) -> Result<BatchResult, ConfigError> {
    use rayon::prelude::*;
    cfg.validate()?;
    let per_job = jobs(cfg)
        .into_par_iter()
        .map(|(f, i)| run_job(cfg, f, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(finish(per_job))
}

/// Parallel when built with the `parallel` feature, sequential otherwise.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchResult, ConfigError> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(cfg)
    }
}
