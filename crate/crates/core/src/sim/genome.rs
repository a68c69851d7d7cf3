use std::fmt;

use rand::Rng;
use thiserror::Error;

use super::profile::SimProfile;

/// Names of the four genes in storage order.
pub const GENE_NAMES: [&str; 4] = ["u_v0", "u_w0", "u_v1", "u_w1"];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("gene {gene} = {value} outside [-{bound}, {bound}]")]
pub struct GenomeError {
    pub gene: &'static str,
    pub value: f64,
    pub bound: f64,
}

/// Reactive two-case controller shared by every robot in the swarm.
///
/// A robot whose sensor reads 0 drives with `(u_v0, u_w0)`, otherwise with
/// `(u_v1, u_w1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerGenome {
    pub u_v0: f64,
    pub u_w0: f64,
    pub u_v1: f64,
    pub u_w1: f64,
}

impl ControllerGenome {
    pub const fn new(u_v0: f64, u_w0: f64, u_v1: f64, u_w1: f64) -> Self {
        Self { u_v0, u_w0, u_v1, u_w1 }
    }

    pub fn from_array(genes: [f64; 4]) -> Self {
        Self::new(genes[0], genes[1], genes[2], genes[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.u_v0, self.u_w0, self.u_v1, self.u_w1]
    }

    /// `(v, omega)` for a sensor reading.
    pub fn command(&self, sensor: bool) -> (f64, f64) {
        if sensor {
            (self.u_v1, self.u_w1)
        } else {
            (self.u_v0, self.u_w0)
        }
    }

    /// Symmetric per-gene bounds `[v_max, w_max, v_max, w_max]`.
    pub fn bounds(profile: &SimProfile) -> [f64; 4] {
        [profile.v_max, profile.w_max, profile.v_max, profile.w_max]
    }

    pub fn validate(&self, profile: &SimProfile) -> Result<(), GenomeError> {
        let bounds = Self::bounds(profile);
        for ((value, bound), gene) in self.to_array().into_iter().zip(bounds).zip(GENE_NAMES) {
            if !(value.is_finite() && value.abs() <= bound) {
                return Err(GenomeError { gene, value, bound });
            }
        }
        Ok(())
    }

    /// Uniform sample over the bounded controller space.
    pub fn sample_uniform<R: Rng + ?Sized>(profile: &SimProfile, rng: &mut R) -> Self {
        let bounds = Self::bounds(profile);
        Self::from_array(bounds.map(|b| rng.random_range(-b..=b)))
    }

    /// Rounds every gene to single precision, toward zero, so the genome can be
    /// stored in 32-bit file fields without loss and never leaves its bounds.
    pub fn to_single_precision(self) -> Self {
        Self::from_array(self.to_array().map(f32_toward_zero))
    }

    pub fn to_f32(self) -> [f32; 4] {
        self.to_array().map(|g| g as f32)
    }

    pub fn from_f32(genes: [f32; 4]) -> Self {
        Self::from_array(genes.map(f64::from))
    }
}

fn f32_toward_zero(value: f64) -> f64 {
    let mut single = value as f32;
    if f64::from(single).abs() > value.abs() {
        single = f32::from_bits(single.to_bits() - 1);
    }
    f64::from(single)
}

impl fmt::Display for ControllerGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.u_v0, self.u_w0, self.u_v1, self.u_w1)
    }
}

impl std::str::FromStr for ControllerGenome {
    type Err = String;

    /// Parses `v0,w0,v1,w1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let genes: Vec<f64> = s
            .split(',')
            .map(|g| g.trim().parse::<f64>().map_err(|e| format!("bad gene `{g}`: {e}")))
            .collect::<Result<_, _>>()?;
        let genes: [f64; 4] = genes
            .try_into()
            .map_err(|v: Vec<f64>| format!("expected 4 genes, found {}", v.len()))?;
        Ok(Self::from_array(genes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn command_switches_on_sensor() {
        let g = ControllerGenome::new(0.1, 0.2, 0.3, 0.4);
        assert_eq!(g.command(false), (0.1, 0.2));
        assert_eq!(g.command(true), (0.3, 0.4));
    }

    #[test]
    fn validation_names_offending_gene() {
        let p = SimProfile::rsrs();
        let err = ControllerGenome::new(0.0, 0.0, 0.0, 1.7).validate(&p).unwrap_err();
        assert_eq!(err.gene, "u_w1");
        let err = ControllerGenome::new(-0.1, 0.0, 0.0, 0.0).validate(&p).unwrap_err();
        assert_eq!(err.gene, "u_v0");
        assert!(ControllerGenome::new(0.09, -1.6, -0.09, 1.6).validate(&p).is_ok());
        assert!(ControllerGenome::new(f64::NAN, 0.0, 0.0, 0.0).validate(&p).is_err());
    }

    #[test]
    fn single_precision_stays_in_bounds() {
        let p = SimProfile::rsrs();
        let g = ControllerGenome::new(0.09, -1.6, -0.09, 1.6).to_single_precision();
        g.validate(&p).unwrap();
        assert_eq!(ControllerGenome::from_f32(g.to_f32()), g);
        assert!(g.u_v0 < 0.09 && g.u_v0 > 0.0899999);
    }

    #[test]
    fn uniform_samples_are_in_bounds() {
        let p = SimProfile::default_sim();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            ControllerGenome::sample_uniform(&p, &mut rng).validate(&p).unwrap();
        }
    }

    #[test]
    fn parse_display_round_trip() {
        let g = ControllerGenome::new(0.05, -1.25, 0.0, 0.75);
        assert_eq!(g.to_string().parse::<ControllerGenome>().unwrap(), g);
        assert!("1,2,3".parse::<ControllerGenome>().is_err());
    }
}
