use crate::sim::Trajectory;

use super::raster::{rasterize, Frame};
use super::CaptureError;

pub const STACK_CHANNELS: usize = 3;

/// Three greyscale frames from the second half of an episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameStack {
    pub channels: [Frame; STACK_CHANNELS],
    /// Snapshot index each channel was drawn from.
    pub steps: [usize; STACK_CHANNELS],
}

impl FrameStack {
    pub fn width(&self) -> usize {
        self.channels[0].width
    }

    pub fn height(&self) -> usize {
        self.channels[0].height
    }

    /// Channel-major bytes, `channels * height * width`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.channels.iter().flat_map(|f| f.pixels.iter().copied()).collect()
    }

    pub fn from_bytes(bytes: &[u8], height: usize, width: usize) -> Option<Self> {
        let plane = height * width;
        if bytes.len() != STACK_CHANNELS * plane {
            return None;
        }
        let frame = |c: usize| Frame {
            width,
            height,
            pixels: bytes[c * plane..(c + 1) * plane].to_vec(),
        };
        Some(Self {
            channels: [frame(0), frame(1), frame(2)],
            steps: [0; STACK_CHANNELS],
        })
    }
}

/// Snapshot indices `floor(T/2)`, `floor(3T/4)`, `T - 1`, each clamped to `T - 1`.
pub fn stack_indices(episode_steps: usize) -> Result<[usize; STACK_CHANNELS], CaptureError> {
    if episode_steps < 2 {
        return Err(CaptureError::EpisodeTooShort(episode_steps));
    }
    let last = episode_steps - 1;
    Ok([
        (episode_steps / 2).min(last),
        (3 * episode_steps / 4).min(last),
        last,
    ])
}

pub fn subsample(traj: &Trajectory, width: usize, height: usize) -> Result<FrameStack, CaptureError> {
    let steps = stack_indices(traj.steps())?;
    let draw = |i: usize| rasterize(&traj.snapshots[steps[i]], width, height, &traj.profile);
    Ok(FrameStack {
        channels: [draw(0)?, draw(1)?, draw(2)?],
        steps,
    })
}
