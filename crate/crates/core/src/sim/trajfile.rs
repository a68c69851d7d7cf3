//! Trajectory files (`SWTR`, version 1).
//!
//! Layout, little-endian: magic `SWTR`; u16 version; u32 profile-text length
//! and the profile in `key=value` form; 4 x f64 genome; u64 seed; u32 agents;
//! u32 snapshots; then per snapshot and agent: f64 x, y, heading, vx, vy,
//! omega and a u8 sensor reading.

use std::io::{Read, Write};

use crate::binio::{FormatError, LeReader, LeWriter};

use super::{AgentState, ControllerGenome, SimProfile, Trajectory, Vec2};

pub const MAGIC: [u8; 4] = *b"SWTR";
pub const VERSION: u16 = 1;

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> std::io::Result<()> {
    let mut w = LeWriter::new(out);
    w.bytes(&MAGIC)?;
    w.u16(VERSION)?;
    let profile = traj.profile.to_text();
    w.u32(profile.len() as u32)?;
    w.bytes(profile.as_bytes())?;
    for g in traj.genome.to_array() {
        w.f64(g)?;
    }
    w.u64(traj.seed)?;
    w.u32(traj.n_agents() as u32)?;
    w.u32(traj.snapshots.len() as u32)?;
    for snap in &traj.snapshots {
        for a in snap {
            for v in [
                a.position.x,
                a.position.y,
                a.heading,
                a.velocity.x,
                a.velocity.y,
                a.angular_velocity,
            ] {
                w.f64(v)?;
            }
            w.u8(a.last_sensor as u8)?;
        }
    }
    w.flush()
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory, FormatError> {
    let mut r = LeReader::new(input);
    r.magic(MAGIC)?;
    r.version(VERSION)?;
    let len = r.u32("profile length")? as usize;
    let offset = r.offset();
    let text = r.bytes(len, "profile")?;
    let text = String::from_utf8(text).map_err(|_| FormatError::Invalid {
        offset,
        reason: "profile is not UTF-8".into(),
    })?;
    let profile = SimProfile::parse(&text).map_err(|e| FormatError::Invalid {
        offset,
        reason: e.to_string(),
    })?;
    let mut genes = [0.0; 4];
    for g in &mut genes {
        *g = r.f64("genome")?;
    }
    let seed = r.u64("seed")?;
    let n_agents = r.u32("agent count")? as usize;
    let n_snapshots = r.u32("snapshot count")? as usize;
    let mut snapshots = Vec::with_capacity(n_snapshots.min(1 << 20));
    for s in 0..n_snapshots {
        let context = format!("snapshot {s}");
        let mut snap = Vec::with_capacity(n_agents);
        for _ in 0..n_agents {
            let mut v = [0.0; 6];
            for x in &mut v {
                *x = r.f64(&context)?;
            }
            let sensor = r.u8(&context)?;
            snap.push(AgentState {
                position: Vec2::new(v[0], v[1]),
                heading: v[2],
                last_sensor: sensor != 0,
                velocity: Vec2::new(v[3], v[4]),
                angular_velocity: v[5],
            });
        }
        snapshots.push(snap);
    }
    Ok(Trajectory {
        profile,
        genome: ControllerGenome::from_array(genes),
        seed,
        snapshots,
    })
}
