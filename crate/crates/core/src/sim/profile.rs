//! Physics and sensing parameter sets.
//!
//! Two built-ins exist: `rsrs`, carrying the measured robot limits (speed caps
//! that leave time to sense, a 2 m time-of-flight range, contact friction), and
//! `default`, the uncalibrated simulator with the hardware's raw speed caps,
//! unlimited sensing and frictionless contacts.
//!
//! Profiles can also be loaded from flat `key=value` text files whose keys are
//! exactly the field names of [`SimProfile`].

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

/// Arena dimensions shared by both built-ins (170 x 142 cm).
pub const ARENA_WIDTH: f64 = 1.70;
pub const ARENA_HEIGHT: f64 = 1.42;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("unknown profile `{0}` (built-ins: rsrs, default)")]
    UnknownProfile(String),
    #[error("line {line}: expected `key=value`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Maximum detection distance of the line-of-sight sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensorRange {
    /// Bounded only by the arena.
    Unlimited,
    Limited(f64),
}

impl SensorRange {
    pub fn reaches(self, distance: f64) -> bool {
        match self {
            SensorRange::Unlimited => true,
            SensorRange::Limited(range) => distance <= range,
        }
    }
}

impl fmt::Display for SensorRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensorRange::Unlimited => f.write_str("unlimited"),
            SensorRange::Limited(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimProfile {
    pub name: String,
    /// Linear speed cap, m/s.
    pub v_max: f64,
    /// Angular speed cap, rad/s.
    pub w_max: f64,
    pub sensor_range: SensorRange,
    /// Radius of the robot's collision disc (bump shield included), m.
    pub body_radius: f64,
    /// Tangential friction at contacts: 0 slides freely, 1 stops sliding.
    pub friction_mu: f64,
    pub arena_width: f64,
    pub arena_height: f64,
    /// Walls are lower than the sensor; must stay `false`.
    pub wall_height_blocks_sensing: bool,
    pub dt: f64,
    pub episode_steps: u32,
    pub n_agents: usize,
}

const FIELDS: [&str; 12] = [
    "name",
    "v_max",
    "w_max",
    "sensor_range",
    "body_radius",
    "friction_mu",
    "arena_width",
    "arena_height",
    "wall_height_blocks_sensing",
    "dt",
    "episode_steps",
    "n_agents",
];

impl SimProfile {
    /// Calibrated profile: measured speed caps, 2 m sensing, contact friction.
    pub fn rsrs() -> Self {
        Self {
            name: "rsrs".into(),
            v_max: 0.09,
            w_max: 1.6,
            sensor_range: SensorRange::Limited(2.0),
            body_radius: 0.07,
            friction_mu: 0.8,
            arena_width: ARENA_WIDTH,
            arena_height: ARENA_HEIGHT,
            wall_height_blocks_sensing: false,
            dt: 0.1,
            episode_steps: 600,
            n_agents: 8,
        }
    }

    /// Uncalibrated profile: raw hardware caps, no friction, no shield.
    pub fn default_sim() -> Self {
        Self {
            name: "default".into(),
            v_max: 0.20,
            w_max: 3.0,
            sensor_range: SensorRange::Unlimited,
            body_radius: 0.05,
            friction_mu: 0.0,
            ..Self::rsrs()
        }
    }

    pub fn builtin(name: &str) -> Result<Self, ProfileError> {
        match name {
            "rsrs" => Ok(Self::rsrs()),
            "default" => Ok(Self::default_sim()),
            other => Err(ProfileError::UnknownProfile(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let positive = [
            ("v_max", self.v_max),
            ("w_max", self.w_max),
            ("body_radius", self.body_radius),
            ("dt", self.dt),
            ("arena_width", self.arena_width),
            ("arena_height", self.arena_height),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ProfileError::Invalid(format!("{key} must be positive, got {value}")));
            }
        }
        if let SensorRange::Limited(r) = self.sensor_range {
            if !(r.is_finite() && r > 0.0) {
                return Err(ProfileError::Invalid(format!("sensor_range must be positive, got {r}")));
            }
        }
        if !(0.0..=1.0).contains(&self.friction_mu) {
            return Err(ProfileError::Invalid(format!(
                "friction_mu must lie in [0, 1], got {}",
                self.friction_mu
            )));
        }
        if self.wall_height_blocks_sensing {
            return Err(ProfileError::Invalid(
                "wall_height_blocks_sensing must be false: walls are below the sensor".into(),
            ));
        }
        if self.episode_steps < 1 {
            return Err(ProfileError::Invalid("episode_steps must be at least 1".into()));
        }
        if 2.0 * self.body_radius >= self.arena_width.min(self.arena_height) {
            return Err(ProfileError::Invalid("arena too small for one robot".into()));
        }
        Ok(())
    }

    /// Half the arena diagonal; the length scale used to normalise metrics.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.arena_width.hypot(self.arena_height)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProfileError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ProfileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut profile = Self::parse(&text)?;
        if profile.name.is_empty() {
            profile.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(profile)
    }

    /// Parses profile text. Every field except `name` is required; blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut profile = Self::rsrs();
        profile.name.clear();
        let mut seen = [false; FIELDS.len()];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ProfileError::Malformed {
                line,
                text: trimmed.to_string(),
            })?;
            let key = key.trim();
            let slot = FIELDS.iter().position(|f| *f == key).ok_or_else(|| ProfileError::UnknownKey {
                line,
                key: key.to_string(),
            })?;
            if seen[slot] {
                return Err(ProfileError::DuplicateKey { line, key: key.to_string() });
            }
            seen[slot] = true;
            profile.set(key, value.trim())?;
        }
        for (slot, field) in FIELDS.iter().enumerate().skip(1) {
            if !seen[slot] {
                return Err(ProfileError::MissingKey(field));
            }
        }
        profile.validate()?;
        Ok(profile)
    }

    /// Overrides one field by its key. Does not re-validate.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ProfileError> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ProfileError> {
            value.parse().map_err(|_| ProfileError::InvalidValue {
                key: key.to_string(),
                value: value.to_string(),
            })
        }
        match key {
            "name" => self.name = value.to_string(),
            "v_max" => self.v_max = num(key, value)?,
            "w_max" => self.w_max = num(key, value)?,
            "sensor_range" => {
                self.sensor_range = if value.eq_ignore_ascii_case("unlimited") {
                    SensorRange::Unlimited
                } else {
                    SensorRange::Limited(num(key, value)?)
                }
            }
            "body_radius" => self.body_radius = num(key, value)?,
            "friction_mu" => self.friction_mu = num(key, value)?,
            "arena_width" => self.arena_width = num(key, value)?,
            "arena_height" => self.arena_height = num(key, value)?,
            "wall_height_blocks_sensing" => self.wall_height_blocks_sensing = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "episode_steps" => self.episode_steps = num(key, value)?,
            "n_agents" => self.n_agents = num(key, value)?,
            other => {
                return Err(ProfileError::UnknownKey { line: 0, key: other.to_string() });
            }
        }
        Ok(())
    }

    /// Renders the profile in the same `key=value` form [`SimProfile::parse`]
    /// accepts. Floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        format!(
            "name={}\nv_max={}\nw_max={}\nsensor_range={}\nbody_radius={}\nfriction_mu={}\n\
             arena_width={}\narena_height={}\nwall_height_blocks_sensing={}\ndt={}\n\
             episode_steps={}\nn_agents={}\n",
            self.name,
            self.v_max,
            self.w_max,
            self.sensor_range,
            self.body_radius,
            self.friction_mu,
            self.arena_width,
            self.arena_height,
            self.wall_height_blocks_sensing,
            self.dt,
            self.episode_steps,
            self.n_agents,
        )
    }
}
