//! Lightweight 2D simulation of unicycle robots with a single binary
//! line-of-sight sensor, disc contacts with friction, and a walled arena.

mod episode;
mod genome;
mod profile;
pub mod trajfile;
mod vec2;
mod world;

pub use episode::{run_episode, run_from, EpisodeError, Trajectory};
pub use genome::{ControllerGenome, GenomeError, GENE_NAMES};
pub use profile::{ProfileError, SensorRange, SimProfile, ARENA_HEIGHT, ARENA_WIDTH};
pub use vec2::Vec2;
pub use world::{
    normalize_angle, sense_line_of_sight, spawn_lattice, spawn_world, step_world, AgentState, ConfigError,
    WorldState, COLLISION_PASSES, CONTACT_SLACK, PENETRATION_TOLERANCE, SPAWN_COLUMNS, SPAWN_PITCH, SPAWN_ROWS,
};
