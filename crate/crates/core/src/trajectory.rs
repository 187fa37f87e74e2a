//! Crop-window trajectories across a source image.
//!
//! A label `(x, y)` moves the `L x L` crop window by
//! `D = ((W - L) x / K, (H - L) y / K)` pixels from the first frame to the
//! last. The start corner is drawn uniformly from the area that keeps both
//! the first and the last crop inside the source, and the `N` window corners
//! are spaced evenly between start and end, each rounded independently
//! (half away from zero) so the endpoint is exact and drift stays below one
//! pixel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label_space::MotionLabel;

/// Top-left corner of a crop, in source pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Position {
    pub x: i64,
    pub y: i64,
}

impl Position {
    pub fn new(x: i64, y: i64) -> Self {
        Position { x, y }
    }
}

impl From<[i64; 2]> for Position {
    fn from([x, y]: [i64; 2]) -> Self {
        Position { x, y }
    }
}

impl From<Position> for [i64; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

/// Real-valued window displacement from the first to the last frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Displacement {
    pub dx: f64,
    pub dy: f64,
}

impl Displacement {
    pub fn new(dx: f64, dy: f64) -> Self {
        Displacement { dx, dy }
    }

    /// Componentwise rounding, half away from zero.
    pub fn rounded(&self) -> (i64, i64) {
        (self.dx.round() as i64, self.dy.round() as i64)
    }
}

impl From<[f64; 2]> for Displacement {
    fn from([dx, dy]: [f64; 2]) -> Self {
        Displacement { dx, dy }
    }
}

impl From<Displacement> for [f64; 2] {
    fn from(d: Displacement) -> Self {
        [d.dx, d.dy]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPlan {
    pub start: Position,
    pub distance: Displacement,
    pub positions: Vec<Position>,
    pub crop: u32,
    pub source_width: u32,
    pub source_height: u32,
}

impl TrajectoryPlan {
    /// Interpolates `frames` positions and checks every crop against the
    /// source bounds.
    pub fn new(
        start: Position,
        distance: Displacement,
        frames: usize,
        crop: u32,
        source_width: u32,
        source_height: u32,
    ) -> Result<Self> {
        let positions = interpolate_positions(start, distance, frames)?;
        let plan = TrajectoryPlan {
            start,
            distance,
            positions,
            crop,
            source_width,
            source_height,
        };
        plan.check_bounds()?;
        Ok(plan)
    }

    pub fn frames(&self) -> usize {
        self.positions.len()
    }

    pub fn check_bounds(&self) -> Result<()> {
        let max_x = self.source_width as i64 - self.crop as i64;
        let max_y = self.source_height as i64 - self.crop as i64;
        for p in &self.positions {
            if p.x < 0 || p.y < 0 || p.x > max_x || p.y > max_y {
                return Err(Error::OutOfBounds {
                    x: p.x,
                    y: p.y,
                    crop: self.crop,
                    width: self.source_width,
                    height: self.source_height,
                });
            }
        }
        Ok(())
    }

    /// Ideal (unrounded) per-step window displacement `D / (N - 1)`.
    pub fn step(&self) -> Displacement {
        let steps = (self.frames().max(2) - 1) as f64;
        Displacement::new(self.distance.dx / steps, self.distance.dy / steps)
    }
}

fn check_fits(width: u32, height: u32, crop: u32) -> Result<()> {
    if crop == 0 || crop > width || crop > height {
        return Err(Error::CropTooLarge {
            crop,
            width,
            height,
        });
    }
    Ok(())
}

/// Total window displacement for `label` in a `width x height` source.
pub fn motion_distance(
    label: MotionLabel,
    width: u32,
    height: u32,
    crop: u32,
    k: u32,
) -> Result<Displacement> {
    check_fits(width, height, crop)?;
    if k < 1 {
        return Err(Error::InvalidGranularity(k as i64));
    }
    if !label.is_valid_for(k) {
        return Err(Error::Config(format!(
            "label {label} is outside the K={k} speed set"
        )));
    }
    let axis = |span: u32, speed: i32| {
        if speed == 0 {
            0.0
        } else {
            (span - crop) as f64 * speed as f64 / k as f64
        }
    };
    Ok(Displacement::new(
        axis(width, label.x),
        axis(height, label.y),
    ))
}

/// Inclusive ranges of valid start corners `(x_lo..=x_hi, y_lo..=y_hi)`.
pub fn start_area(
    distance: Displacement,
    width: u32,
    height: u32,
    crop: u32,
) -> Result<((i64, i64), (i64, i64))> {
    check_fits(width, height, crop)?;
    let (rx, ry) = distance.rounded();
    let span_x = (width - crop) as i64;
    let span_y = (height - crop) as i64;
    let x = ((-rx).max(0), span_x - rx.max(0));
    let y = ((-ry).max(0), span_y - ry.max(0));
    if x.0 > x.1 || y.0 > y.1 {
        return Err(Error::InfeasibleTrajectory {
            dx: distance.dx,
            dy: distance.dy,
            width,
            height,
            crop,
        });
    }
    Ok((x, y))
}

/// Draws a start corner uniformly from the valid start area (x first, then y).
pub fn sample_start<R: Rng + ?Sized>(
    rng: &mut R,
    distance: Displacement,
    width: u32,
    height: u32,
    crop: u32,
) -> Result<Position> {
    let ((x_lo, x_hi), (y_lo, y_hi)) = start_area(distance, width, height, crop)?;
    let x = rng.gen_range(x_lo..=x_hi);
    let y = rng.gen_range(y_lo..=y_hi);
    Ok(Position::new(x, y))
}

/// `positions[i] = start + round(distance * i / (N - 1))`, componentwise,
/// rounding half away from zero so reversed motion mirrors exactly.
pub fn interpolate_positions(
    start: Position,
    distance: Displacement,
    frames: usize,
) -> Result<Vec<Position>> {
    if frames < 2 {
        return Err(Error::InvalidFrameCount(frames));
    }
    let last = (frames - 1) as f64;
    Ok((0..frames)
        .map(|i| {
            let i = i as f64;
            Position::new(
                start.x + (distance.dx * i / last).round() as i64,
                start.y + (distance.dy * i / last).round() as i64,
            )
        })
        .collect())
}

/// Full plan for one label: distance, random start, positions.
pub fn plan_trajectory<R: Rng + ?Sized>(
    rng: &mut R,
    label: MotionLabel,
    k: u32,
    source_size: u32,
    crop: u32,
    frames: usize,
) -> Result<TrajectoryPlan> {
    if frames < 2 {
        return Err(Error::InvalidFrameCount(frames));
    }
    let distance = motion_distance(label, source_size, source_size, crop, k)?;
    let start = sample_start(rng, distance, source_size, source_size, crop)?;
    TrajectoryPlan::new(start, distance, frames, crop, source_size, source_size)
}
