//! Closed-form trajectories for each behavior class, used as ground truth
//! for calibrating and testing the classifier and triplet evaluation.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sim::{AgentState, ControllerGenome, SimProfile, Trajectory, Vec2};

use super::Label;

/// Sense of rotation for the rotating classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    CounterClockwise,
    Clockwise,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::CounterClockwise => 1.0,
            Sense::Clockwise => -1.0,
        }
    }
}

fn centre(profile: &SimProfile) -> Vec2 {
    Vec2::new(profile.arena_width / 2.0, profile.arena_height / 2.0)
}

fn agent(position: Vec2, velocity: Vec2) -> AgentState {
    let heading = if velocity.norm() > 0.0 { velocity.y.atan2(velocity.x) } else { 0.0 };
    let mut a = AgentState::at(position, heading);
    a.velocity = velocity;
    a
}

fn trajectory(profile: &SimProfile, seed: u64, snapshots: Vec<Vec<AgentState>>) -> Trajectory {
    Trajectory {
        profile: profile.clone(),
        genome: ControllerGenome::default(),
        seed,
        snapshots,
    }
}

fn jitter(rng: &mut ChaCha8Rng, amount: f64) -> Vec2 {
    Vec2::new(rng.random_range(-amount..=amount), rng.random_range(-amount..=amount))
}

/// Agents evenly spaced on a circle, all moving tangentially at `speed`.
pub fn rotating_ring(profile: &SimProfile, centre: Vec2, radius: f64, speed: f64, sense: Sense, phase: f64) -> Trajectory {
    let n = profile.n_agents;
    let omega = sense.sign() * speed / radius;
    let snapshots = (0..=profile.episode_steps as usize)
        .map(|t| {
            (0..n)
                .map(|i| {
                    let theta = phase + TAU * i as f64 / n as f64 + omega * profile.dt * t as f64;
                    let (s, c) = theta.sin_cos();
                    agent(centre + Vec2::new(c, s) * radius, Vec2::new(-s, c) * (sense.sign() * speed))
                })
                .collect()
        })
        .collect();
    trajectory(profile, 0, snapshots)
}

fn cyclic_pursuit(profile: &SimProfile, rng: &mut ChaCha8Rng, sense: Sense) -> Vec<Vec<AgentState>> {
    let radius = rng.random_range(0.18..0.26);
    let speed = profile.v_max * rng.random_range(0.85..=1.0);
    let c = centre(profile) + jitter(rng, 0.1);
    rotating_ring(profile, c, radius, speed, sense, rng.random_range(0.0..TAU)).snapshots
}

/// Opposite pairs on nested circles, each robot at its own angular rate.
fn milling(profile: &SimProfile, rng: &mut ChaCha8Rng, sense: Sense) -> Vec<Vec<AgentState>> {
    let n = profile.n_agents;
    let pairs = n / 2;
    let c = centre(profile) + jitter(rng, 0.05);
    let inner = rng.random_range(0.08..0.12);
    let outer = rng.random_range(0.5f64..0.6).min(profile.arena_height / 2.0 - profile.body_radius - 0.06);
    let rings: Vec<(f64, f64, f64)> = (0..pairs)
        .map(|k| {
            let radius = if pairs > 1 { inner + (outer - inner) * k as f64 / (pairs - 1) as f64 } else { outer };
            let speed = profile.v_max * rng.random_range(0.85..=1.0);
            (radius, speed, rng.random_range(0.0..TAU))
        })
        .collect();
    (0..=profile.episode_steps as usize)
        .map(|t| {
            let mut agents = Vec::with_capacity(n);
            for &(radius, speed, phase) in &rings {
                let omega = sense.sign() * speed / radius;
                for half in [0.0, TAU / 2.0] {
                    let theta = phase + half + omega * profile.dt * t as f64;
                    let (s, co) = theta.sin_cos();
                    agents.push(agent(c + Vec2::new(co, s) * radius, Vec2::new(-s, co) * (sense.sign() * speed)));
                }
            }
            if n % 2 == 1 {
                agents.push(agent(c, Vec2::ZERO));
            }
            agents
        })
        .collect()
}

/// Hexagonal packing offsets around a point, nearest first.
fn packed_offsets(n: usize, spacing: f64) -> Vec<Vec2> {
    let mut out = vec![Vec2::ZERO];
    let mut ring = 1;
    while out.len() < n {
        for side in 0..6 {
            let corner = Vec2::from_angle(TAU * side as f64 / 6.0) * (spacing * ring as f64);
            let step = Vec2::from_angle(TAU * (side as f64 + 2.0) / 6.0) * spacing;
            for k in 0..ring {
                out.push(corner + step * k as f64);
            }
        }
        ring += 1;
    }
    out.truncate(n);
    out
}

/// Straight-line moves from `start` to `end` finishing at step `arrive`,
/// then rest.
fn move_then_rest(profile: &SimProfile, start: &[Vec2], end: &[Vec2], arrive: usize) -> Vec<Vec<AgentState>> {
    let dt = profile.dt;
    (0..=profile.episode_steps as usize)
        .map(|t| {
            start
                .iter()
                .zip(end)
                .map(|(&s, &e)| {
                    if t == 0 {
                        agent(s, Vec2::ZERO)
                    } else if t <= arrive {
                        let v = (e - s) * (1.0 / (arrive as f64 * dt));
                        agent(s + (e - s) * (t as f64 / arrive as f64), v)
                    } else {
                        agent(e, Vec2::ZERO)
                    }
                })
                .collect()
        })
        .collect()
}

fn inset_uniform(profile: &SimProfile, rng: &mut ChaCha8Rng, inset: f64) -> Vec2 {
    Vec2::new(
        rng.random_range(inset..profile.arena_width - inset),
        rng.random_range(inset..profile.arena_height - inset),
    )
}

fn aggregation(profile: &SimProfile, rng: &mut ChaCha8Rng) -> Vec<Vec<AgentState>> {
    let n = profile.n_agents;
    let start: Vec<Vec2> = (0..n).map(|_| inset_uniform(profile, rng, 0.2)).collect();
    let target = centre(profile) + jitter(rng, 0.25);
    let spacing = 2.0 * profile.body_radius * rng.random_range(1.02..1.2);
    let end: Vec<Vec2> = packed_offsets(n, spacing).into_iter().map(|o| target + o).collect();
    let arrive = (profile.episode_steps as f64 * rng.random_range(0.25..0.4)) as usize;
    move_then_rest(profile, &start, &end, arrive.max(1))
}

/// Point where the ray from `from` along `dir` leaves the arena shrunk by `inset`.
fn exit_point(profile: &SimProfile, from: Vec2, dir: Vec2, inset: f64) -> Vec2 {
    let mut t = f64::INFINITY;
    if dir.x > 0.0 {
        t = t.min((profile.arena_width - inset - from.x) / dir.x);
    } else if dir.x < 0.0 {
        t = t.min((inset - from.x) / dir.x);
    }
    if dir.y > 0.0 {
        t = t.min((profile.arena_height - inset - from.y) / dir.y);
    } else if dir.y < 0.0 {
        t = t.min((inset - from.y) / dir.y);
    }
    from + dir * t
}

fn dispersal(profile: &SimProfile, rng: &mut ChaCha8Rng) -> Vec<Vec<AgentState>> {
    let n = profile.n_agents;
    let c = centre(profile) + jitter(rng, 0.05);
    let spacing = 2.0 * profile.body_radius * 1.05;
    let start: Vec<Vec2> = packed_offsets(n, spacing).into_iter().map(|o| c + o).collect();
    let phase = rng.random_range(0.0..TAU);
    let end: Vec<Vec2> = (0..n)
        .map(|i| {
            let dir = Vec2::from_angle(phase + TAU * i as f64 / n as f64);
            let inset = profile.body_radius + rng.random_range(0.02..0.08);
            exit_point(profile, c, dir, inset)
        })
        .collect();
    let arrive = (profile.episode_steps as f64 * rng.random_range(0.3..0.45)) as usize;
    move_then_rest(profile, &start, &end, arrive.max(1))
}

/// Position and direction of travel at arclength `s` on the boundary of a
/// rectangle `[x0, x1] x [y0, y1]`, counter-clockwise from the lower left.
fn along_rectangle(x0: f64, y0: f64, x1: f64, y1: f64, s: f64) -> (Vec2, Vec2) {
    let (w, h) = (x1 - x0, y1 - y0);
    let s = s.rem_euclid(2.0 * (w + h));
    if s < w {
        (Vec2::new(x0 + s, y0), Vec2::new(1.0, 0.0))
    } else if s < w + h {
        (Vec2::new(x1, y0 + s - w), Vec2::new(0.0, 1.0))
    } else if s < 2.0 * w + h {
        (Vec2::new(x1 - (s - w - h), y1), Vec2::new(-1.0, 0.0))
    } else {
        (Vec2::new(x0, y1 - (s - 2.0 * w - h)), Vec2::new(0.0, -1.0))
    }
}

fn wall_following(profile: &SimProfile, rng: &mut ChaCha8Rng, sense: Sense) -> Vec<Vec<AgentState>> {
    let n = profile.n_agents;
    let inset = profile.body_radius + rng.random_range(0.005..0.03);
    let (x0, y0, x1, y1) = (inset, inset, profile.arena_width - inset, profile.arena_height - inset);
    let perimeter = 2.0 * ((x1 - x0) + (y1 - y0));
    let phase = rng.random_range(0.0..perimeter);
    let speed = profile.v_max * rng.random_range(0.85..=1.0);
    (0..=profile.episode_steps as usize)
        .map(|t| {
            (0..n)
                .map(|i| {
                    let s = phase + perimeter * i as f64 / n as f64 + sense.sign() * speed * profile.dt * t as f64;
                    let (p, dir) = along_rectangle(x0, y0, x1, y1, s);
                    agent(p, dir * (sense.sign() * speed))
                })
                .collect()
        })
        .collect()
}

/// Independent wandering robots that bounce off the walls.
fn random_walk(profile: &SimProfile, rng: &mut ChaCha8Rng) -> Vec<Vec<AgentState>> {
    let n = profile.n_agents;
    let inset = profile.body_radius;
    let (lo, hi) = (Vec2::new(inset, inset), Vec2::new(profile.arena_width - inset, profile.arena_height - inset));
    let mut pos: Vec<Vec2> = (0..n).map(|_| inset_uniform(profile, rng, 0.1)).collect();
    let mut heading: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    let speed: Vec<f64> = (0..n).map(|_| profile.v_max * rng.random_range(0.3..=1.0)).collect();
    let mut snapshots = vec![pos.iter().map(|&p| agent(p, Vec2::ZERO)).collect::<Vec<_>>()];
    for _ in 0..profile.episode_steps {
        let mut agents = Vec::with_capacity(n);
        for i in 0..n {
            heading[i] += rng.random_range(-0.6..=0.6);
            let old = pos[i];
            let mut p = old + Vec2::from_angle(heading[i]) * (speed[i] * profile.dt);
            if p.x < lo.x || p.x > hi.x {
                p.x = if p.x < lo.x { 2.0 * lo.x - p.x } else { 2.0 * hi.x - p.x };
                heading[i] = std::f64::consts::PI - heading[i];
            }
            if p.y < lo.y || p.y > hi.y {
                p.y = if p.y < lo.y { 2.0 * lo.y - p.y } else { 2.0 * hi.y - p.y };
                heading[i] = -heading[i];
            }
            pos[i] = p;
            agents.push(agent(p, (p - old) * (1.0 / profile.dt)));
        }
        snapshots.push(agents);
    }
    snapshots
}

/// One synthetic episode of the given class. Rotating classes turn in `sense`.
pub fn synthetic_trajectory_with(label: Label, profile: &SimProfile, seed: u64, sense: Sense) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snapshots = match label {
        Label::CyclicPursuit => cyclic_pursuit(profile, &mut rng, sense),
        Label::Milling => milling(profile, &mut rng, sense),
        Label::Aggregation => aggregation(profile, &mut rng),
        Label::Dispersal => dispersal(profile, &mut rng),
        Label::WallFollowing => wall_following(profile, &mut rng, sense),
        Label::Random => random_walk(profile, &mut rng),
    };
    trajectory(profile, seed, snapshots)
}

/// Counter-clockwise variant of [`synthetic_trajectory_with`].
pub fn synthetic_trajectory(label: Label, profile: &SimProfile, seed: u64) -> Trajectory {
    synthetic_trajectory_with(label, profile, seed, Sense::CounterClockwise)
}

/// `per_class` episodes of every class. Rotating classes all turn
/// counter-clockwise: the signed metrics treat mirror images as different
/// behaviors.
pub fn synthetic_suite(profile: &SimProfile, per_class: usize, seed: u64) -> Vec<(Label, Trajectory)> {
    let mut out = Vec::with_capacity(per_class * Label::ALL.len());
    for (c, label) in Label::ALL.into_iter().enumerate() {
        for i in 0..per_class {
            let s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add((c * 1_000_003 + i) as u64);
            out.push((label, synthetic_trajectory(label, profile, s)));
        }
    }
    out
}
