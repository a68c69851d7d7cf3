use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::behavior::{handcrafted_embed, Backend, BehaviorVector, HandcraftedMetrics, SessionPool};
use crate::capture::subsample;
use crate::sim::{run_episode, ControllerGenome, SimProfile};

use super::archive::{ArchiveEntry, NoveltyArchive};
use super::config::{SearchConfig, SeedPolicy};
use super::ga::evolve_generation;
use super::novelty::novelty_among;
use super::{DiscoveryError, RunError};

/// How behaviors are turned into vectors during a run.
pub enum EvalBackend<'a> {
    Handcrafted,
    Learned {
        pool: &'a mut SessionPool,
        width: usize,
        height: usize,
    },
}

impl EvalBackend<'_> {
    pub fn kind(&self) -> Backend {
        match self {
            EvalBackend::Handcrafted => Backend::Handcrafted,
            EvalBackend::Learned { .. } => Backend::Learned,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EvalBackend::Handcrafted => HandcraftedMetrics::DIM,
            EvalBackend::Learned { pool, .. } => pool.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSummary {
    pub generation: usize,
    pub archive_len: usize,
    pub mean_novelty: f64,
    pub max_novelty: f64,
}

/// Simulates and embeds one cohort. Errors carry the genome index.
pub fn evaluate(
    genomes: &[ControllerGenome],
    seeds: &[u64],
    profile: &SimProfile,
    backend: &mut EvalBackend<'_>,
) -> Result<Vec<BehaviorVector>, (usize, DiscoveryError)> {
    let first_error = |results: Vec<Result<BehaviorVector, DiscoveryError>>| {
        results
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| (i, e)))
            .collect::<Result<Vec<_>, _>>()
    };
    match backend {
        EvalBackend::Handcrafted => first_error(
            genomes
                .par_iter()
                .zip(seeds)
                .map(|(g, &s)| {
                    let traj = run_episode(g, profile, s)?;
                    Ok(handcrafted_embed(&traj, profile).to_vector())
                })
                .collect(),
        ),
        EvalBackend::Learned { pool, width, height } => {
            let (w, h) = (*width, *height);
            let stacks = genomes
                .par_iter()
                .zip(seeds)
                .map(|(g, &s)| {
                    let traj = run_episode(g, profile, s)?;
                    Ok(subsample(&traj, w, h)?)
                })
                .collect::<Vec<Result<_, DiscoveryError>>>()
                .into_iter()
                .enumerate()
                .map(|(i, r)| r.map_err(|e| (i, e)))
                .collect::<Result<Vec<_>, _>>()?;
            pool.embed_all(&stacks).map_err(|(i, e)| (i, DiscoveryError::Embed(e)))
        }
    }
}

/// Novelty of each cohort member. Without an archive, each member is scored
/// against the rest of its cohort.
fn score(
    vectors: &[BehaviorVector],
    archive: &NoveltyArchive,
    k: usize,
) -> Result<Vec<f64>, (usize, DiscoveryError)> {
    (0..vectors.len())
        .into_par_iter()
        .map(|i| {
            let b = &vectors[i].values;
            let result = if archive.is_empty() {
                let others = vectors
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v.values.as_slice());
                novelty_among(b, others, k)
            } else {
                novelty_among(b, archive.vectors(), k)
            };
            result.map_err(|e| (i, e))
        })
        .collect()
}

pub fn run_discovery(
    profile: &SimProfile,
    config: &SearchConfig,
    backend: &mut EvalBackend<'_>,
    seeds: SeedPolicy,
) -> Result<NoveltyArchive, RunError> {
    run_discovery_with(profile, config, backend, seeds, |_| {})
}

/// [`run_discovery`] with a callback after every generation.
pub fn run_discovery_with<F: FnMut(&GenerationSummary)>(
    profile: &SimProfile,
    config: &SearchConfig,
    backend: &mut EvalBackend<'_>,
    seeds: SeedPolicy,
    mut on_generation: F,
) -> Result<NoveltyArchive, RunError> {
    let mut archive = NoveltyArchive::new(backend.kind(), backend.dim());
    let setup_error = |source: DiscoveryError, archive: &NoveltyArchive| RunError {
        generation: 0,
        genome: None,
        source,
        partial: Box::new(archive.clone()),
    };
    config.validate().map_err(|e| setup_error(e, &archive))?;
    profile
        .validate()
        .map_err(|e| setup_error(DiscoveryError::Config(e.to_string()), &archive))?;

    let mut ga_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seed_rng = ChaCha8Rng::seed_from_u64(config.seed);
    seed_rng.set_stream(1);

    let mut population: Vec<ControllerGenome> = (0..config.population)
        .map(|_| ControllerGenome::sample_uniform(profile, &mut ga_rng).to_single_precision())
        .collect();

    for generation in 0..config.generations {
        let episode_seeds: Vec<u64> = match seeds {
            SeedPolicy::Fixed(s) => vec![s; population.len()],
            SeedPolicy::PerGenome => (0..population.len()).map(|_| seed_rng.random()).collect(),
        };
        let fail = |(i, source): (usize, DiscoveryError), archive: &NoveltyArchive| RunError {
            generation,
            genome: Some(i),
            source,
            partial: Box::new(archive.clone()),
        };
        let vectors: Vec<BehaviorVector> = evaluate(&population, &episode_seeds, profile, backend)
            .map_err(|e| fail(e, &archive))?
            .iter()
            .map(BehaviorVector::to_single_precision)
            .collect();
        if let Some(i) = vectors.iter().position(|v| !v.is_finite() || v.dim() != archive.dim()) {
            let source = if vectors[i].dim() != archive.dim() {
                DiscoveryError::Dimension {
                    expected: archive.dim(),
                    found: vectors[i].dim(),
                }
            } else {
                DiscoveryError::NonFinite { index: i }
            };
            return Err(fail((i, source), &archive));
        }
        let scores = score(&vectors, &archive, config.k_neighbors).map_err(|e| fail(e, &archive))?;

        for (i, vector) in vectors.into_iter().enumerate() {
            archive
                .push(ArchiveEntry {
                    genome: population[i],
                    seed: episode_seeds[i],
                    generation: generation as u32,
                    vector,
                    novelty: Some(scores[i]),
                })
                .map_err(|e| fail((i, e), &archive))?;
        }
        let summary = GenerationSummary {
            generation,
            archive_len: archive.len(),
            mean_novelty: scores.iter().sum::<f64>() / scores.len() as f64,
            max_novelty: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
        log::info!(
            "generation {generation}: archive {} mean novelty {:.5} max {:.5}",
            summary.archive_len,
            summary.mean_novelty,
            summary.max_novelty
        );
        on_generation(&summary);

        if generation + 1 < config.generations {
            population = evolve_generation(&population, &scores, config, profile, &mut ga_rng)
                .map_err(|e| RunError {
                    generation,
                    genome: None,
                    source: e,
                    partial: Box::new(archive.clone()),
                })?
                .into_iter()
                .map(ControllerGenome::to_single_precision)
                .collect();
        }
    }
    Ok(archive)
}
