use crate::sim::{AgentState, SimProfile, Trajectory, Vec2};

use super::vector::{Backend, BehaviorVector};

/// Below this length a relative position or velocity is treated as zero.
const DIRECTION_EPS: f64 = 1e-12;

/// The five scalar order parameters of the hand-crafted baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandcraftedMetrics {
    pub avg_speed: f64,
    pub angular_momentum: f64,
    pub radial_variance: f64,
    pub scatter: f64,
    pub group_rotation: f64,
}

impl HandcraftedMetrics {
    pub const DIM: usize = 5;
    pub const NAMES: [&'static str; 5] = ["avg_speed", "angular_momentum", "radial_variance", "scatter", "group_rotation"];

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.avg_speed,
            self.angular_momentum,
            self.radial_variance,
            self.scatter,
            self.group_rotation,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            avg_speed: a[0],
            angular_momentum: a[1],
            radial_variance: a[2],
            scatter: a[3],
            group_rotation: a[4],
        }
    }

    pub fn to_vector(&self) -> BehaviorVector {
        BehaviorVector::new(Backend::Handcrafted, self.to_array().to_vec())
    }
}

/// Per-snapshot quantities before averaging over time. Lengths are in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotStats {
    pub mean_speed: f64,
    pub angular_momentum: f64,
    pub radial_variance: f64,
    pub scatter: f64,
    pub group_rotation: f64,
}

pub fn centroid(agents: &[AgentState]) -> Vec2 {
    if agents.is_empty() {
        return Vec2::ZERO;
    }
    let sum = agents.iter().fold(Vec2::ZERO, |acc, a| acc + a.position);
    sum * (1.0 / agents.len() as f64)
}

pub fn snapshot_stats(agents: &[AgentState]) -> SnapshotStats {
    let n = agents.len();
    if n == 0 {
        return SnapshotStats {
            mean_speed: 0.0,
            angular_momentum: 0.0,
            radial_variance: 0.0,
            scatter: 0.0,
            group_rotation: 0.0,
        };
    }
    let inv_n = 1.0 / n as f64;
    let mu = centroid(agents);
    let (mut speed, mut am, mut sum_d, mut sum_d2, mut rot) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for a in agents {
        let rel = a.position - mu;
        let d = rel.norm();
        let s = a.velocity.norm();
        speed += s;
        am += rel.cross(a.velocity);
        sum_d += d;
        sum_d2 += d * d;
        if s > DIRECTION_EPS && d > DIRECTION_EPS {
            rot += a.velocity.dot(rel.perp()) / (s * d);
        }
    }
    let mean_d = sum_d * inv_n;
    let var_d = agents
        .iter()
        .map(|a| {
            let e = (a.position - mu).norm() - mean_d;
            e * e
        })
        .sum::<f64>()
        * inv_n;
    SnapshotStats {
        mean_speed: speed * inv_n,
        angular_momentum: am * inv_n,
        radial_variance: var_d,
        scatter: sum_d2 * inv_n,
        group_rotation: rot * inv_n,
    }
}

/// First snapshot index of the metric window: the second half of the episode.
pub fn window_start(snapshot_count: usize) -> usize {
    snapshot_count.saturating_sub(1) / 2
}

/// Normalized scatter of every snapshot, used for trend statistics.
pub fn scatter_series(traj: &Trajectory) -> Vec<f64> {
    let r2 = traj.profile.half_diagonal().powi(2);
    traj.snapshots.iter().map(|s| snapshot_stats(s).scatter / r2).collect()
}

/// Metrics averaged over snapshots `floor(T/2)..=T`.
pub fn handcrafted_embed(traj: &Trajectory, profile: &SimProfile) -> HandcraftedMetrics {
    let window = &traj.snapshots[window_start(traj.snapshots.len()).min(traj.snapshots.len())..];
    if window.is_empty() {
        return HandcraftedMetrics::from_array([0.0; 5]);
    }
    let mut acc = [0.0; 5];
    for agents in window {
        let s = snapshot_stats(agents);
        acc[0] += s.mean_speed;
        acc[1] += s.angular_momentum;
        acc[2] += s.radial_variance;
        acc[3] += s.scatter;
        acc[4] += s.group_rotation;
    }
    let t = window.len() as f64;
    let r = profile.half_diagonal();
    HandcraftedMetrics {
        avg_speed: acc[0] / t / profile.v_max,
        angular_momentum: acc[1] / t / (r * profile.v_max),
        radial_variance: acc[2] / t / (r * r),
        scatter: acc[3] / t / (r * r),
        group_rotation: acc[4] / t,
    }
}
