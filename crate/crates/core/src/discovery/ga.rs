use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::sim::{ControllerGenome, SimProfile};

use super::{DiscoveryError, SearchConfig};

/// Index of the best of `size` uniformly drawn contestants. Equal scores go
/// to the lower population index.
pub fn tournament<R: Rng + ?Sized>(scores: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..scores.len());
    for _ in 1..size {
        let c = rng.random_range(0..scores.len());
        if scores[c] > scores[best] || (scores[c] == scores[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Genes `0..cut` from `a`, the rest from `b`.
pub fn single_point_crossover(a: &ControllerGenome, b: &ControllerGenome, cut: usize) -> ControllerGenome {
    let (a, b) = (a.to_array(), b.to_array());
    ControllerGenome::from_array(std::array::from_fn(|g| if g < cut { a[g] } else { b[g] }))
}

/// Breeds the next population from novelty scores.
pub fn evolve_generation<R: Rng + ?Sized>(
    population: &[ControllerGenome],
    scores: &[f64],
    config: &SearchConfig,
    profile: &SimProfile,
    rng: &mut R,
) -> Result<Vec<ControllerGenome>, DiscoveryError> {
    if population.len() != config.population || scores.len() != config.population {
        return Err(DiscoveryError::PopulationSize {
            expected: config.population,
            genomes: population.len(),
            scores: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(DiscoveryError::Config(format!("novelty score {i} is NaN")));
    }
    let bounds = ControllerGenome::bounds(profile);
    let noise: Vec<Normal<f64>> = bounds
        .iter()
        .map(|b| Normal::new(0.0, config.mutation_sigma_fraction * 2.0 * b).expect("sigma is finite and >= 0"))
        .collect();

    let mut next = Vec::with_capacity(config.population);
    while next.len() < config.population {
        let i = tournament(scores, config.tournament_size, rng);
        let j = tournament(scores, config.tournament_size, rng);
        let child = if rng.random_bool(config.crossover_rate) {
            let cut = rng.random_range(1..4);
            single_point_crossover(&population[i], &population[j], cut)
        } else {
            let fitter = if scores[j] > scores[i] || (scores[j] == scores[i] && j < i) { j } else { i };
            population[fitter]
        };
        let mut genes = child.to_array();
        for g in 0..4 {
            if rng.random_bool(config.mutation_rate) {
                genes[g] = (genes[g] + noise[g].sample(rng)).clamp(-bounds[g], bounds[g]);
            }
        }
        next.push(ControllerGenome::from_array(genes));
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tournament_of_one_is_uniform_pick() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scores = [0.0, 1.0, 2.0];
        let mut seen = [false; 3];
        for _ in 0..100 {
            seen[tournament(&scores, 1, &mut rng)] = true;
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn large_tournament_finds_the_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let scores = [0.5, 3.0, 1.0, 3.0];
        for _ in 0..50 {
            let w = tournament(&scores, 64, &mut rng);
            assert_eq!(w, 1, "ties go to the lower index");
        }
    }

    #[test]
    fn crossover_splices_genes() {
        let a = ControllerGenome::new(1.0, 2.0, 3.0, 4.0);
        let b = ControllerGenome::new(-1.0, -2.0, -3.0, -4.0);
        assert_eq!(single_point_crossover(&a, &b, 1), ControllerGenome::new(1.0, -2.0, -3.0, -4.0));
        assert_eq!(single_point_crossover(&a, &b, 3), ControllerGenome::new(1.0, 2.0, 3.0, -4.0));
    }
}
