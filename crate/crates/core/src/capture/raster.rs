use crate::sim::{AgentState, SimProfile};

use super::CaptureError;

/// Supersampling factor per axis.
pub const SUPERSAMPLE: usize = 2;

/// Row-major 8-bit greyscale image. Row 0 is the top (far) wall.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn total_intensity(&self) -> u64 {
        self.pixels.iter().map(|&p| u64::from(p)).sum()
    }
}

/// Draws every robot as a filled disc, mapping the arena onto the whole frame.
/// Each pixel takes `SUPERSAMPLE^2` samples; intensity is covered fraction x 255.
pub fn rasterize(
    agents: &[AgentState],
    width: usize,
    height: usize,
    profile: &SimProfile,
) -> Result<Frame, CaptureError> {
    if width < 8 || height < 8 {
        return Err(CaptureError::FrameTooSmall { width, height });
    }
    let ss = SUPERSAMPLE;
    let (sw, sh) = (width * ss, height * ss);
    // arena metres per sample
    let step_x = profile.arena_width / sw as f64;
    let step_y = profile.arena_height / sh as f64;
    let r = profile.body_radius;
    let r_sq = r * r;

    let mut covered = vec![false; sw * sh];
    for agent in agents {
        let (cx, cy) = (agent.position.x, agent.position.y);
        // sample (sx, sy) sits at x = (sx + 0.5) * step_x, y = H - (sy + 0.5) * step_y
        let col_range = sample_span(cx - r, cx + r, step_x, sw);
        let top = profile.arena_height - cy;
        let row_range = sample_span(top - r, top + r, step_y, sh);
        for sy in row_range.clone() {
            let y = profile.arena_height - (sy as f64 + 0.5) * step_y;
            let dy = y - cy;
            for sx in col_range.clone() {
                let dx = (sx as f64 + 0.5) * step_x - cx;
                if dx * dx + dy * dy <= r_sq {
                    covered[sy * sw + sx] = true;
                }
            }
        }
    }

    let full = (ss * ss) as u32;
    let mut frame = Frame::blank(width, height);
    for row in 0..height {
        for col in 0..width {
            let mut count = 0u32;
            for sy in row * ss..(row + 1) * ss {
                for sx in col * ss..(col + 1) * ss {
                    count += covered[sy * sw + sx] as u32;
                }
            }
            frame.pixels[row * width + col] = ((255 * count + full / 2) / full) as u8;
        }
    }
    Ok(frame)
}

/// Sample indices whose centres may fall in `[lo, hi]`.
fn sample_span(lo: f64, hi: f64, step: f64, count: usize) -> std::ops::Range<usize> {
    let first = ((lo / step) - 0.5).floor().max(0.0) as usize;
    let last = (((hi / step) - 0.5).ceil() + 1.0).max(0.0) as usize;
    first.min(count)..last.min(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Vec2;

    #[test]
    fn empty_scene_is_black() {
        let f = rasterize(&[], 64, 64, &SimProfile::rsrs()).unwrap();
        assert!(f.pixels.iter().all(|&p| p == 0));
        assert_eq!(f.pixels.len(), 64 * 64);
    }

    #[test]
    fn rejects_tiny_frames() {
        assert!(rasterize(&[], 7, 64, &SimProfile::rsrs()).is_err());
    }

    #[test]
    fn centred_disc_is_symmetric() {
        let p = SimProfile::rsrs();
        let agent = AgentState::at(Vec2::new(0.85, 0.71), 0.0);
        let f = rasterize(&[agent], 64, 64, &p).unwrap();
        for row in 0..64 {
            for col in 0..64 {
                assert_eq!(f.get(col, row), f.get(63 - col, row));
                assert_eq!(f.get(col, row), f.get(col, 63 - row));
            }
        }
        // centre lands on the corner shared by pixels 31 and 32
        assert_eq!(f.get(31, 31), 255);
        assert_eq!(f.get(32, 32), 255);
        assert_eq!(f.get(0, 0), 0);
        assert!(f.pixels.iter().all(|&p| [0, 64, 128, 191, 255].contains(&p)));
    }

    #[test]
    fn top_row_is_far_wall() {
        let p = SimProfile::rsrs();
        let agent = AgentState::at(Vec2::new(0.85, p.arena_height - p.body_radius), 0.0);
        let f = rasterize(&[agent], 64, 64, &p).unwrap();
        assert!(f.get(32, 0) > 0);
        assert_eq!(f.get(32, 63), 0);
    }
}
