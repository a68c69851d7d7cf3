use thiserror::Error;

use super::genome::{ControllerGenome, GenomeError};
use super::profile::{ProfileError, SimProfile};
use super::world::{spawn_world, AgentState, ConfigError, WorldState};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Every state of one episode, initial state included.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub profile: SimProfile,
    pub genome: ControllerGenome,
    pub seed: u64,
    /// `episode_steps + 1` snapshots, each holding every agent.
    pub snapshots: Vec<Vec<AgentState>>,
}

impl Trajectory {
    /// Number of steps `T`; there are `T + 1` snapshots.
    pub fn steps(&self) -> usize {
        self.snapshots.len().saturating_sub(1)
    }

    pub fn n_agents(&self) -> usize {
        self.snapshots.first().map_or(0, Vec::len)
    }
}

/// Simulates `genome` from the spawn layout drawn with `seed`.
pub fn run_episode(
    genome: &ControllerGenome,
    profile: &SimProfile,
    seed: u64,
) -> Result<Trajectory, EpisodeError> {
    profile.validate()?;
    genome.validate(profile)?;
    let world = spawn_world(profile, seed)?;
    Ok(run_from(world, genome, profile, seed))
}

/// Simulates from an explicit initial state. No validation is performed.
pub fn run_from(mut world: WorldState, genome: &ControllerGenome, profile: &SimProfile, seed: u64) -> Trajectory {
    let steps = profile.episode_steps as usize;
    let mut snapshots = Vec::with_capacity(steps + 1);
    snapshots.push(world.agents.clone());
    for _ in 0..steps {
        world.step(genome, profile);
        snapshots.push(world.agents.clone());
    }
    Trajectory {
        profile: profile.clone(),
        genome: *genome,
        seed,
        snapshots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_includes_initial_state() {
        let mut p = SimProfile::rsrs();
        p.episode_steps = 25;
        let t = run_episode(&ControllerGenome::new(0.05, 0.3, -0.02, 1.0), &p, 9).unwrap();
        assert_eq!(t.snapshots.len(), 26);
        assert_eq!(t.steps(), 25);
        assert_eq!(t.n_agents(), 8);
    }

    #[test]
    fn zero_genome_keeps_everyone_still() {
        let p = SimProfile::rsrs();
        let t = run_episode(&ControllerGenome::default(), &p, 5).unwrap();
        assert_eq!(t.snapshots.len(), 601);
        for snap in &t.snapshots {
            for (a, b) in snap.iter().zip(&t.snapshots[0]) {
                assert_eq!(a.position, b.position);
                assert_eq!(a.heading, b.heading);
            }
        }
    }

    #[test]
    fn out_of_bounds_genome_names_gene() {
        let p = SimProfile::rsrs();
        match run_episode(&ControllerGenome::new(0.0, 2.0, 0.0, 0.0), &p, 0) {
            Err(EpisodeError::Genome(e)) => assert_eq!(e.gene, "u_w0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let p = SimProfile::default_sim();
        let g = ControllerGenome::new(0.15, -2.0, 0.2, 1.0);
        assert_eq!(run_episode(&g, &p, 11).unwrap(), run_episode(&g, &p, 11).unwrap());
    }
}
