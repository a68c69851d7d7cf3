//! Swarm state, line-of-sight sensing and the per-step update.

use std::f64::consts::TAU;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::genome::ControllerGenome;
use super::profile::SimProfile;
use super::vec2::Vec2;

/// Slack allowed on contact constraints after projection, m.
pub const PENETRATION_TOLERANCE: f64 = 1e-6;

/// Upper bound on projection passes per step. Passes stop as soon as no
/// contact is violated by more than [`CONTACT_SLACK`].
pub const COLLISION_PASSES: usize = 256;

/// Overlap below which a contact counts as resolved, m.
pub const CONTACT_SLACK: f64 = 1e-9;

/// Spawn lattice: 4 columns x 3 rows, 0.25 m pitch, centred in the arena.
pub const SPAWN_COLUMNS: usize = 4;
pub const SPAWN_ROWS: usize = 3;
pub const SPAWN_PITCH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{n_agents} agents requested but only {points} spawn points exist")]
    TooManyAgents { n_agents: usize, points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    /// Radians in `[0, 2pi)`.
    pub heading: f64,
    /// Sensor reading that selected the most recent command.
    pub last_sensor: bool,
    /// Realized planar velocity over the most recent step, after contacts.
    pub velocity: Vec2,
    /// Realized angular velocity over the most recent step.
    pub angular_velocity: f64,
}

impl AgentState {
    pub fn at(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
            last_sensor: false,
            velocity: Vec2::ZERO,
            angular_velocity: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub agents: Vec<AgentState>,
    pub time_index: u64,
    /// Per-episode random stream. The dynamics are noise-free, so only
    /// spawning draws from it.
    pub rng: ChaCha8Rng,
}

pub fn normalize_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// The 12 spawn points, row-major from the lower-left.
pub fn spawn_lattice(profile: &SimProfile) -> Vec<Vec2> {
    let cx = 0.5 * profile.arena_width;
    let cy = 0.5 * profile.arena_height;
    let x0 = cx - 0.5 * SPAWN_PITCH * (SPAWN_COLUMNS - 1) as f64;
    let y0 = cy - 0.5 * SPAWN_PITCH * (SPAWN_ROWS - 1) as f64;
    (0..SPAWN_ROWS)
        .flat_map(|row| {
            (0..SPAWN_COLUMNS)
                .map(move |col| Vec2::new(x0 + SPAWN_PITCH * col as f64, y0 + SPAWN_PITCH * row as f64))
        })
        .collect()
}

/// Places the swarm on distinct lattice points with uniform random headings.
pub fn spawn_world(profile: &SimProfile, seed: u64) -> Result<WorldState, ConfigError> {
    let lattice = spawn_lattice(profile);
    if profile.n_agents > lattice.len() {
        return Err(ConfigError::TooManyAgents {
            n_agents: profile.n_agents,
            points: lattice.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = index::sample(&mut rng, lattice.len(), profile.n_agents);
    let agents = slots
        .iter()
        .map(|slot| AgentState::at(lattice[slot], rng.random_range(0.0..TAU)))
        .collect();
    let mut world = WorldState { agents, time_index: 0, rng };
    world.refresh_sensors(profile);
    Ok(world)
}

/// Distance along a unit ray to the first point of a disc, if the ray meets it.
/// An origin inside the disc hits at distance 0.
fn ray_disc_entry(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let to_center = center - origin;
    let along = to_center.dot(dir);
    let perp_sq = to_center.norm_sq() - along * along;
    let r_sq = radius * radius;
    if perp_sq > r_sq {
        return None;
    }
    let half_chord = (r_sq - perp_sq).max(0.0).sqrt();
    if along + half_chord < 0.0 {
        return None;
    }
    Some((along - half_chord).max(0.0))
}

/// Binary line-of-sight reading: does the heading ray meet another robot's
/// body within sensor range? Walls are below the sensor and never register.
pub fn sense_line_of_sight(world: &WorldState, agent_index: usize, profile: &SimProfile) -> bool {
    let me = &world.agents[agent_index];
    let dir = Vec2::from_angle(me.heading);
    world
        .agents
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != agent_index)
        .filter_map(|(_, other)| ray_disc_entry(me.position, dir, other.position, profile.body_radius))
        .any(|hit| profile.sensor_range.reaches(hit))
}

/// Inward wall normals paired with the free distance to each wall.
fn wall_gaps(p: Vec2, profile: &SimProfile) -> [(Vec2, f64); 4] {
    let r = profile.body_radius;
    [
        (Vec2::new(1.0, 0.0), p.x - r),
        (Vec2::new(-1.0, 0.0), profile.arena_width - r - p.x),
        (Vec2::new(0.0, 1.0), p.y - r),
        (Vec2::new(0.0, -1.0), profile.arena_height - r - p.y),
    ]
}

/// Resolves a displacement against one contact with outward normal `normal`.
/// Normal motion is limited to the free gap; the tangential part is scaled
/// by `1 - mu`.
fn constrain(displacement: Vec2, normal: Vec2, gap: f64, mu: f64) -> Vec2 {
    let gap = gap.max(0.0);
    let along = displacement.dot(normal);
    if along >= -gap {
        return displacement;
    }
    let tangential = displacement - normal * along;
    tangential * (1.0 - mu) - normal * gap
}

fn separation_axis(i: usize, j: usize) -> Vec2 {
    // deterministic axis for coincident centres
    Vec2::from_angle((i * 7 + j * 13) as f64)
}

fn clamp_to_arena(p: Vec2, profile: &SimProfile) -> Vec2 {
    let r = profile.body_radius;
    Vec2::new(
        p.x.clamp(r, profile.arena_width - r),
        p.y.clamp(r, profile.arena_height - r),
    )
}

impl WorldState {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    fn refresh_sensors(&mut self, profile: &SimProfile) {
        let readings: Vec<bool> = (0..self.agents.len())
            .map(|i| sense_line_of_sight(self, i, profile))
            .collect();
        for (agent, h) in self.agents.iter_mut().zip(readings) {
            agent.last_sensor = h;
        }
    }

    /// Advances the swarm by one `dt`.
    pub fn step(&mut self, genome: &ControllerGenome, profile: &SimProfile) {
        let n = self.agents.len();
        let dt = profile.dt;
        let r = profile.body_radius;
        let mu = profile.friction_mu;

        let readings: Vec<bool> = (0..n).map(|i| sense_line_of_sight(self, i, profile)).collect();
        let commands: Vec<(f64, f64)> = readings.iter().map(|&h| genome.command(h)).collect();
        let proposed: Vec<Vec2> = self
            .agents
            .iter()
            .zip(&commands)
            .map(|(a, &(v, _))| Vec2::from_angle(a.heading) * (v * dt))
            .collect();

        let mut displacements = Vec::with_capacity(n);
        for i in 0..n {
            let p = self.agents[i].position;
            let mut d = proposed[i];
            for (normal, gap) in wall_gaps(p, profile) {
                d = constrain(d, normal, gap, mu);
            }
            for j in (0..n).filter(|&j| j != i) {
                let sep = p - self.agents[j].position;
                let dist = sep.norm();
                let reach = proposed[i].norm() + proposed[j].norm();
                if dist >= 2.0 * r + reach {
                    continue;
                }
                let normal = if dist > 0.0 { sep * (1.0 / dist) } else { separation_axis(i, j) };
                // room freed by the other robot moving away this step
                let retreat = (-proposed[j].dot(normal)).max(0.0);
                d = constrain(d, normal, dist - 2.0 * r + retreat, mu);
            }
            for (normal, gap) in wall_gaps(p, profile) {
                d = constrain(d, normal, gap, mu);
            }
            displacements.push(d);
        }

        for (i, agent) in self.agents.iter_mut().enumerate() {
            let (_, omega) = commands[i];
            agent.position += displacements[i];
            agent.heading = normalize_angle(agent.heading + omega * dt);
            agent.last_sensor = readings[i];
            agent.velocity = displacements[i] * (1.0 / dt);
            agent.angular_velocity = omega;
        }

        for agent in &mut self.agents {
            agent.position = clamp_to_arena(agent.position, profile);
        }
        self.resolve_overlaps(profile);
        self.time_index += 1;
    }

    /// Positional projection: pushes overlapping pairs apart to contact
    /// distance along their centre line without leaving the arena.
    fn resolve_overlaps(&mut self, profile: &SimProfile) {
        let n = self.agents.len();
        let contact = 2.0 * profile.body_radius;
        for _ in 0..COLLISION_PASSES {
            let mut moved = false;
            for i in 0..n {
                for j in i + 1..n {
                    let sep = self.agents[i].position - self.agents[j].position;
                    let dist = sep.norm();
                    if dist >= contact - CONTACT_SLACK {
                        continue;
                    }
                    let normal = if dist > 0.0 { sep * (1.0 / dist) } else { separation_axis(i, j) };
                    let overlap = contact - dist;
                    let (pi, pj) = (self.agents[i].position, self.agents[j].position);
                    // a disc pinned by a wall hands its share to the partner
                    let mut new_i = clamp_to_arena(pi + normal * (0.5 * overlap), profile);
                    let gained_i = (new_i - pi).dot(normal);
                    let new_j = clamp_to_arena(pj - normal * (overlap - gained_i), profile);
                    let gained_j = (pj - new_j).dot(normal);
                    let short = overlap - gained_i - gained_j;
                    if short > 0.0 {
                        new_i = clamp_to_arena(new_i + normal * short, profile);
                    }
                    self.agents[i].position = new_i;
                    self.agents[j].position = new_j;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
}

/// Functional form of [`WorldState::step`].
pub fn step_world(world: &WorldState, genome: &ControllerGenome, profile: &SimProfile) -> WorldState {
    let mut next = world.clone();
    next.step(genome, profile);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn solo(position: Vec2, heading: f64) -> WorldState {
        WorldState {
            agents: vec![AgentState::at(position, heading)],
            time_index: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    fn pair(a: Vec2, heading: f64, b: Vec2) -> WorldState {
        let mut w = solo(a, heading);
        w.agents.push(AgentState::at(b, 0.0));
        w
    }

    fn bits(w: &WorldState) -> Vec<u64> {
        w.agents
            .iter()
            .flat_map(|a| [a.position.x.to_bits(), a.position.y.to_bits(), a.heading.to_bits()])
            .collect()
    }

    #[test]
    fn spawn_is_deterministic() {
        let p = SimProfile::rsrs();
        let a = spawn_world(&p, 42).unwrap();
        let b = spawn_world(&p, 42).unwrap();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a, b);
        assert_ne!(bits(&a), bits(&spawn_world(&p, 43).unwrap()));
    }

    #[test]
    fn spawn_rejects_more_agents_than_points() {
        let mut p = SimProfile::rsrs();
        p.n_agents = 13;
        assert_eq!(
            spawn_world(&p, 0).unwrap_err(),
            ConfigError::TooManyAgents { n_agents: 13, points: 12 }
        );
        p.n_agents = 12;
        assert_eq!(spawn_world(&p, 0).unwrap().n_agents(), 12);
    }

    #[test]
    fn spawn_uses_distinct_lattice_points() {
        let p = SimProfile::rsrs();
        let lattice = spawn_lattice(&p);
        assert_eq!(lattice.len(), 12);
        let world = spawn_world(&p, 7).unwrap();
        assert_eq!(world.n_agents(), 8);
        for (i, a) in world.agents.iter().enumerate() {
            assert!(lattice.contains(&a.position));
            assert!((0.0..TAU).contains(&a.heading));
            for b in &world.agents[i + 1..] {
                assert_ne!(a.position, b.position);
            }
        }
    }

    #[test]
    fn lattice_is_centred() {
        let p = SimProfile::rsrs();
        let lattice = spawn_lattice(&p);
        let sum = lattice.iter().fold(Vec2::ZERO, |acc, &q| acc + q);
        let centroid = sum * (1.0 / 12.0);
        assert!((centroid.x - 0.85).abs() < 1e-12 && (centroid.y - 0.71).abs() < 1e-12);
        let xs: Vec<f64> = lattice.iter().map(|q| q.x).collect();
        let ys: Vec<f64> = lattice.iter().map(|q| q.y).collect();
        let span = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        assert!((span(&xs) - 0.75).abs() < 1e-12);
        assert!((span(&ys) - 0.50).abs() < 1e-12);
    }

    #[test]
    fn sensor_sees_target_on_ray() {
        let p = SimProfile::rsrs();
        let w = pair(Vec2::new(0.5, 0.5), 0.0, Vec2::new(1.0, 0.5));
        assert!(sense_line_of_sight(&w, 0, &p));
        let w = pair(Vec2::new(0.5, 0.5), FRAC_PI_2, Vec2::new(1.0, 0.5));
        assert!(!sense_line_of_sight(&w, 0, &p));
    }

    #[test]
    fn sensor_ignores_walls_and_respects_range() {
        let p = SimProfile::rsrs();
        // facing the left wall at close range, nobody in between
        let w = pair(Vec2::new(0.2, 0.7), std::f64::consts::PI, Vec2::new(1.2, 0.7));
        assert!(!sense_line_of_sight(&w, 0, &p));

        let mut far = SimProfile::rsrs();
        far.arena_width = 5.0;
        let w = pair(Vec2::new(0.2, 0.7), 0.0, Vec2::new(2.2, 0.7));
        // surface at 1.93 m
        assert!(sense_line_of_sight(&w, 0, &far));
        let w = pair(Vec2::new(0.2, 0.7), 0.0, Vec2::new(2.3, 0.7));
        assert!(!sense_line_of_sight(&w, 0, &far));
        far.sensor_range = super::super::profile::SensorRange::Unlimited;
        assert!(sense_line_of_sight(&w, 0, &far));
    }

    #[test]
    fn sensor_does_not_look_backwards() {
        let p = SimProfile::rsrs();
        let w = pair(Vec2::new(0.5, 0.5), std::f64::consts::PI, Vec2::new(1.0, 0.5));
        assert!(!sense_line_of_sight(&w, 0, &p));
    }

    #[test]
    fn straight_euler_step() {
        let p = SimProfile::rsrs();
        let w = step_world(&solo(Vec2::new(0.5, 0.5), 0.0), &ControllerGenome::new(0.09, 0.0, 0.09, 0.0), &p);
        let a = w.agents[0];
        assert!((a.position.x - 0.509).abs() < 1e-12);
        assert!((a.position.y - 0.5).abs() < 1e-12);
        assert_eq!(a.heading, 0.0);
        assert_eq!(w.time_index, 1);
    }

    #[test]
    fn pure_rotation_step() {
        let p = SimProfile::rsrs();
        let w = step_world(&solo(Vec2::new(0.5, 0.5), 0.0), &ControllerGenome::new(0.0, 1.6, 0.0, 1.6), &p);
        let a = w.agents[0];
        assert_eq!(a.position, Vec2::new(0.5, 0.5));
        assert!((a.heading - 0.16).abs() < 1e-12);
    }

    #[test]
    fn head_on_pair_stops_at_contact() {
        let p = SimProfile::rsrs();
        let mut w = pair(Vec2::new(0.6, 0.7), 0.0, Vec2::new(0.9, 0.7));
        w.agents[1].heading = std::f64::consts::PI;
        let g = ControllerGenome::new(0.09, 0.0, 0.09, 0.0);
        for _ in 0..100 {
            w.step(&g, &p);
            let d = w.agents[0].position.distance(w.agents[1].position);
            assert!(d >= 2.0 * p.body_radius - PENETRATION_TOLERANCE);
        }
        let d = w.agents[0].position.distance(w.agents[1].position);
        assert!((d - 2.0 * p.body_radius).abs() < 1e-9);
    }

    fn wall_slide_progress(mu: f64) -> Vec<f64> {
        let mut p = SimProfile::default_sim();
        p.friction_mu = mu;
        // heading 45 degrees into the bottom wall, moving right
        let mut w = solo(Vec2::new(0.5, p.body_radius + 0.02), -FRAC_PI_4);
        let g = ControllerGenome::new(p.v_max, 0.0, p.v_max, 0.0);
        let mut progress = Vec::new();
        for _ in 0..20 {
            let before = w.agents[0].position;
            w.step(&g, &p);
            let after = w.agents[0].position;
            let touching = (after.y - p.body_radius).abs() < PENETRATION_TOLERANCE;
            if touching && (before.y - p.body_radius).abs() < PENETRATION_TOLERANCE {
                progress.push(after.x - before.x);
            }
        }
        progress
    }

    #[test]
    fn frictionless_wall_slide() {
        let progress = wall_slide_progress(0.0);
        assert!(progress.len() > 10);
        let expected = 0.20 * 0.1 * FRAC_PI_4.cos();
        for step in progress {
            assert!((step - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn full_friction_stops_sliding() {
        let progress = wall_slide_progress(1.0);
        assert!(progress.len() > 10);
        assert!(progress.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn coincident_agents_are_separated() {
        let p = SimProfile::rsrs();
        let mut w = pair(Vec2::new(0.8, 0.7), 0.0, Vec2::new(0.8, 0.7));
        w.step(&ControllerGenome::default(), &p);
        let d = w.agents[0].position.distance(w.agents[1].position);
        assert!(d >= 2.0 * p.body_radius - PENETRATION_TOLERANCE);
    }
}
