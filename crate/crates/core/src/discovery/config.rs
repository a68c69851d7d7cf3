use std::fmt;
use std::str::FromStr;

use super::DiscoveryError;

/// How episode spawn seeds are chosen during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPolicy {
    /// Every genome starts from the layout drawn with this seed.
    Fixed(u64),
    /// Each evaluation draws its own seed from the run's seed stream.
    PerGenome,
}

impl fmt::Display for SeedPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedPolicy::Fixed(s) => write!(f, "fixed:{s}"),
            SeedPolicy::PerGenome => f.write_str("per-genome"),
        }
    }
}

impl FromStr for SeedPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "per-genome" {
            return Ok(SeedPolicy::PerGenome);
        }
        s.strip_prefix("fixed:")
            .and_then(|n| n.parse().ok())
            .map(SeedPolicy::Fixed)
            .ok_or_else(|| format!("expected 'fixed:<seed>' or 'per-genome', got '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub population: usize,
    pub generations: usize,
    pub k_neighbors: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub mutation_sigma_fraction: f64,
    pub seed: u64,
    pub k_medoids: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 100,
            k_neighbors: 15,
            crossover_rate: 0.7,
            mutation_rate: 0.15,
            tournament_size: 3,
            mutation_sigma_fraction: 0.1,
            seed: 0,
            k_medoids: 10,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        let bad = |msg: String| Err(DiscoveryError::Config(msg));
        if self.population < 2 {
            return bad(format!("population must be at least 2, got {}", self.population));
        }
        if self.generations < 1 {
            return bad("generations must be at least 1".into());
        }
        if self.k_neighbors < 1 {
            return bad("k_neighbors must be at least 1".into());
        }
        if self.tournament_size < 1 {
            return bad("tournament_size must be at least 1".into());
        }
        for (name, p) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.mutation_sigma_fraction.is_finite() && self.mutation_sigma_fraction >= 0.0) {
            return bad(format!("mutation_sigma_fraction must be >= 0, got {}", self.mutation_sigma_fraction));
        }
        if self.k_medoids < 1 {
            return bad("k_medoids must be at least 1".into());
        }
        if self.k_medoids > self.archive_size() {
            return bad(format!(
                "k_medoids = {} exceeds the archive size {}",
                self.k_medoids,
                self.archive_size()
            ));
        }
        Ok(())
    }

    /// Entries in the archive after a complete run.
    pub fn archive_size(&self) -> usize {
        self.population * self.generations
    }
}
