//! The friction mechanism behind the profile ablation: a robot driving
//! obliquely into a wall slides along it without contact friction and sticks
//! with full friction.

use std::f64::consts::FRAC_PI_4;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swarmdisc::sim::{AgentState, ControllerGenome, SimProfile, Vec2, WorldState, PENETRATION_TOLERANCE};

const PROBE_STEPS: usize = 40;

/// Tangential progress per step of a lone robot pressed against the bottom
/// wall at 45 degrees. Only steps that start and end in contact count.
pub fn wall_slide_progress(profile: &SimProfile) -> Vec<f64> {
    let r = profile.body_radius;
    let start = Vec2::new(0.3 * profile.arena_width, r + 0.02);
    let mut world = WorldState {
        agents: vec![AgentState::at(start, -FRAC_PI_4)],
        time_index: 0,
        rng: ChaCha8Rng::seed_from_u64(0),
    };
    let genome = ControllerGenome::new(profile.v_max, 0.0, profile.v_max, 0.0);
    let touching = |p: Vec2| (p.y - r).abs() < PENETRATION_TOLERANCE;
    let mut progress = Vec::new();
    for _ in 0..PROBE_STEPS {
        let before = world.agents[0].position;
        world.step(&genome, profile);
        let after = world.agents[0].position;
        if touching(before) && touching(after) {
            progress.push(after.x - before.x);
        }
    }
    progress
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlideReport {
    pub profile: String,
    pub friction_mu: f64,
    pub progress: Vec<f64>,
}

impl SlideReport {
    pub fn measure(profile: &SimProfile) -> Self {
        Self {
            profile: profile.name.clone(),
            friction_mu: profile.friction_mu,
            progress: wall_slide_progress(profile),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.progress.is_empty() {
            0.0
        } else {
            self.progress.iter().sum::<f64>() / self.progress.len() as f64
        }
    }

    pub fn min(&self) -> f64 {
        self.progress.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.progress.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn slides(&self) -> bool {
        !self.progress.is_empty() && self.progress.iter().all(|&p| p > 0.0)
    }

    pub fn sticks(&self) -> bool {
        !self.progress.is_empty() && self.progress.iter().all(|&p| p == 0.0)
    }
}

/// Slide measurements for the ablation: the frictionless profile as given,
/// the calibrated profile with friction forced to 1, and the calibrated
/// profile as given.
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionCheck {
    pub frictionless: SlideReport,
    pub full_friction: SlideReport,
    pub calibrated: SlideReport,
}

impl FrictionCheck {
    pub fn run(frictionless: &SimProfile, calibrated: &SimProfile) -> Self {
        let mut stuck = calibrated.clone();
        stuck.friction_mu = 1.0;
        Self {
            frictionless: SlideReport::measure(frictionless),
            full_friction: SlideReport::measure(&stuck),
            calibrated: SlideReport::measure(calibrated),
        }
    }

    pub fn holds(&self) -> bool {
        self.frictionless.slides() && self.full_friction.sticks()
    }
}
