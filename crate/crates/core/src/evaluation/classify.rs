use std::collections::BTreeMap;
use std::path::Path;

use crate::behavior::{handcrafted_embed, scatter_series, window_start, HandcraftedMetrics};
use crate::sim::{SimProfile, Trajectory};

use super::{EvalError, Label};

pub const CALIBRATION_VERSION: u32 = 1;

const BUILTIN_RSRS: &str = include_str!("../../calibration/rsrs.cal");
const BUILTIN_DEFAULT: &str = include_str!("../../calibration/default.cal");

/// Thresholds of the behavior classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub min_abs_group_rotation: f64,
    pub cyclic_max_radial_variance: f64,
    pub cyclic_min_scatter: f64,
    pub cyclic_max_scatter: f64,
    pub aggregation_max_final_scatter: f64,
    pub aggregation_max_scatter_ratio: f64,
    pub dispersal_min_final_scatter: f64,
    pub dispersal_min_scatter_growth: f64,
    pub dispersal_max_late_change: f64,
    pub dispersal_max_avg_speed: f64,
    pub wall_max_clearance: f64,
    pub wall_min_avg_speed: f64,
    /// Fraction of the episode averaged for the mid and final scatter.
    pub trend_window_fraction: f64,
}

const KEYS: [&str; 13] = [
    "rotation.min_abs_group_rotation",
    "cyclic.max_radial_variance",
    "cyclic.min_scatter",
    "cyclic.max_scatter",
    "aggregation.max_final_scatter",
    "aggregation.max_scatter_ratio",
    "dispersal.min_final_scatter",
    "dispersal.min_scatter_growth",
    "dispersal.max_late_change",
    "dispersal.max_avg_speed",
    "wall.max_clearance",
    "wall.min_avg_speed",
    "trend.window_fraction",
];

impl Calibration {
    fn to_array(&self) -> [f64; 13] {
        [
            self.min_abs_group_rotation,
            self.cyclic_max_radial_variance,
            self.cyclic_min_scatter,
            self.cyclic_max_scatter,
            self.aggregation_max_final_scatter,
            self.aggregation_max_scatter_ratio,
            self.dispersal_min_final_scatter,
            self.dispersal_min_scatter_growth,
            self.dispersal_max_late_change,
            self.dispersal_max_avg_speed,
            self.wall_max_clearance,
            self.wall_min_avg_speed,
            self.trend_window_fraction,
        ]
    }

    fn from_array(v: [f64; 13]) -> Self {
        Self {
            min_abs_group_rotation: v[0],
            cyclic_max_radial_variance: v[1],
            cyclic_min_scatter: v[2],
            cyclic_max_scatter: v[3],
            aggregation_max_final_scatter: v[4],
            aggregation_max_scatter_ratio: v[5],
            dispersal_min_final_scatter: v[6],
            dispersal_min_scatter_growth: v[7],
            dispersal_max_late_change: v[8],
            dispersal_max_avg_speed: v[9],
            wall_max_clearance: v[10],
            wall_min_avg_speed: v[11],
            trend_window_fraction: v[12],
        }
    }

    /// Shipped thresholds for a built-in profile name; other names get the
    /// `default` thresholds.
    pub fn builtin(profile_name: &str) -> Self {
        let text = if profile_name == "rsrs" { BUILTIN_RSRS } else { BUILTIN_DEFAULT };
        Self::parse(text).expect("shipped calibration parses")
    }

    /// Strict `key=value` parser. A `version` key is required.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let bad = |line: usize, msg: String| EvalError::Calibration(format!("line {line}: {msg}"));
        let mut seen: BTreeMap<&str, f64> = BTreeMap::new();
        let mut version = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(i + 1, format!("expected key=value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "version" {
                let v: u32 = value.parse().map_err(|_| bad(i + 1, format!("bad version '{value}'")))?;
                if v != CALIBRATION_VERSION {
                    return Err(bad(i + 1, format!("unsupported calibration version {v}")));
                }
                version = Some(v);
                continue;
            }
            let slot = KEYS
                .iter()
                .find(|&&k| k == key)
                .ok_or_else(|| bad(i + 1, format!("unknown key '{key}'")))?;
            let v: f64 = value.parse().map_err(|_| bad(i + 1, format!("bad number '{value}' for {key}")))?;
            if !v.is_finite() {
                return Err(bad(i + 1, format!("{key} must be finite")));
            }
            if seen.insert(slot, v).is_some() {
                return Err(bad(i + 1, format!("duplicate key '{key}'")));
            }
        }
        if version.is_none() {
            return Err(EvalError::Calibration("missing version".into()));
        }
        let mut values = [0.0; 13];
        for (slot, key) in values.iter_mut().zip(KEYS) {
            *slot = *seen
                .get(key)
                .ok_or_else(|| EvalError::Calibration(format!("missing key '{key}'")))?;
        }
        Ok(Self::from_array(values))
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# swarmdisc classifier calibration\nversion={CALIBRATION_VERSION}\n");
        for (k, v) in KEYS.iter().zip(self.to_array()) {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }
}

/// Everything the classifier looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierFeatures {
    pub metrics: HandcraftedMetrics,
    /// Mean distance between a robot's edge and the nearest wall over the
    /// metric window, in half-diagonals.
    pub mean_wall_clearance: f64,
    pub scatter_initial: f64,
    pub scatter_mid: f64,
    pub scatter_final: f64,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn features(traj: &Trajectory, profile: &SimProfile, calibration: &Calibration) -> ClassifierFeatures {
    let metrics = handcrafted_embed(traj, profile);
    let r = profile.half_diagonal();
    let start = window_start(traj.snapshots.len()).min(traj.snapshots.len());
    let mut clearance = Vec::new();
    for agents in &traj.snapshots[start..] {
        for a in agents {
            let p = a.position;
            let wall = p.x.min(profile.arena_width - p.x).min(p.y).min(profile.arena_height - p.y);
            clearance.push((wall - profile.body_radius).max(0.0) / r);
        }
    }
    let scatter = scatter_series(traj);
    let t = scatter.len().saturating_sub(1);
    let half = ((calibration.trend_window_fraction * t as f64 / 2.0).round() as usize).max(1);
    let around = |centre: usize| {
        let lo = centre.saturating_sub(half);
        let hi = (centre + half).min(t);
        mean(scatter.get(lo..=hi).unwrap_or(&[]))
    };
    ClassifierFeatures {
        metrics,
        mean_wall_clearance: mean(&clearance),
        scatter_initial: scatter.first().copied().unwrap_or(0.0),
        scatter_mid: around(3 * t / 4),
        scatter_final: mean(scatter.get(t.saturating_sub(2 * half)..).unwrap_or(&[])),
    }
}

/// Decision list over precomputed features.
pub fn classify_features(f: &ClassifierFeatures, c: &Calibration) -> Label {
    let m = &f.metrics;
    if f.mean_wall_clearance < c.wall_max_clearance && m.avg_speed >= c.wall_min_avg_speed {
        return Label::WallFollowing;
    }
    let rotating = m.group_rotation.abs() >= c.min_abs_group_rotation;
    if rotating
        && m.radial_variance <= c.cyclic_max_radial_variance
        && (c.cyclic_min_scatter..=c.cyclic_max_scatter).contains(&m.scatter)
    {
        return Label::CyclicPursuit;
    }
    if rotating && m.radial_variance > c.cyclic_max_radial_variance {
        return Label::Milling;
    }
    if f.scatter_final <= c.aggregation_max_final_scatter
        && f.scatter_final < c.aggregation_max_scatter_ratio * f.scatter_initial
    {
        return Label::Aggregation;
    }
    if f.scatter_final >= c.dispersal_min_final_scatter
        && f.scatter_final >= c.dispersal_min_scatter_growth * f.scatter_initial
        && (f.scatter_final - f.scatter_mid).abs() <= c.dispersal_max_late_change * f.scatter_final
        && m.avg_speed <= c.dispersal_max_avg_speed
    {
        return Label::Dispersal;
    }
    Label::Random
}

pub fn classify_behavior(traj: &Trajectory, profile: &SimProfile, calibration: &Calibration) -> Label {
    classify_features(&features(traj, profile, calibration), calibration)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_files_parse() {
        for name in ["rsrs", "default", "custom"] {
            let c = Calibration::builtin(name);
            assert_eq!(Calibration::parse(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn parser_is_strict() {
        let good = Calibration::builtin("rsrs").to_text();
        assert!(Calibration::parse(&good.replace("version=1", "version=2")).is_err());
        assert!(Calibration::parse(&good.replace("version=1\n", "")).is_err());
        assert!(Calibration::parse(&format!("{good}wall.max_clearance=1\n")).is_err());
        assert!(Calibration::parse(&format!("{good}wall.colour=1\n")).is_err());
        let without_last = good.lines().filter(|l| !l.starts_with("trend.")).collect::<Vec<_>>().join("\n");
        assert!(Calibration::parse(&without_last).is_err());
        assert!(Calibration::parse(&good.replace("wall.min_avg_speed=", "wall.min_avg_speed=x")).is_err());
    }
}
