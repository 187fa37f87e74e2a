//! Exhaustive integer-offset block matching with sum of absolute differences.
//!
//! For a pair of consecutive frames the matcher looks for the window offset
//! `o` such that `next(p) == prev(p + o)` for pixels `p` of the region, i.e.
//! `o` is how far the crop window moved between the two frames. Only pixels
//! where both `p` and `p + o` lie inside the region are compared, and the
//! score is SAD normalized by the number of compared pixels, so offsets with
//! different overlaps are comparable. Offsets whose overlap is below a
//! quarter of the region (or 64 pixels) are not considered.
//!
//! The search is exhaustive over `[-r, r]^2`; ties go to the smaller offset
//! magnitude, then to the lexicographically smaller `(dx, dy)`. Candidates are
//! abandoned as soon as their running SAD already exceeds the best normalized
//! score, which never changes the result.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this mean per-step confidence an estimate is treated as unreliable.
pub const LOW_CONFIDENCE: f64 = 0.9;

const MIN_REGION_SIDE: u32 = 8;
const MIN_OVERLAP_PIXELS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Region {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Region {
            x,
            y,
            width,
            height,
        }
    }

    pub fn full(frame: &RgbImage) -> Self {
        Region::new(0, 0, frame.width(), frame.height())
    }

    fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementEstimate {
    pub per_step: Vec<(i32, i32)>,
    pub total: (i64, i64),
    /// Mean over steps of `1 - SAD / max_SAD` at the chosen offset.
    pub confidence: f64,
}

impl DisplacementEstimate {
    pub fn is_low_confidence(&self) -> bool {
        self.confidence < LOW_CONFIDENCE
    }

    pub fn magnitude_sq(&self) -> i64 {
        self.total.0 * self.total.0 + self.total.1 * self.total.1
    }
}

#[derive(Debug, Clone, Copy)]
struct Score {
    dx: i32,
    dy: i32,
    sad: u64,
    pixels: u64,
}

impl Score {
    /// Strict "better than" including the tie-break rules.
    fn beats(&self, other: &Score) -> bool {
        let lhs = self.sad as u128 * other.pixels as u128;
        let rhs = other.sad as u128 * self.pixels as u128;
        if lhs != rhs {
            return lhs < rhs;
        }
        let mag = |s: &Score| s.dx * s.dx + s.dy * s.dy;
        (mag(self), self.dx, self.dy) < (mag(other), other.dx, other.dy)
    }
}

struct PairMatcher<'a> {
    prev: &'a [u8],
    next: &'a [u8],
    stride: usize,
    region: Region,
    min_overlap: u64,
}

impl PairMatcher<'_> {
    /// Overlap rectangle (x0, y0, w, h) in `next` coordinates for offset o.
    fn overlap(&self, dx: i32, dy: i32) -> Option<(usize, usize, usize, usize)> {
        let r = self.region;
        let w = r.width as i64 - dx.unsigned_abs() as i64;
        let h = r.height as i64 - dy.unsigned_abs() as i64;
        if w <= 0 || h <= 0 || (w * h) as u64 * 4 < r.area() || ((w * h) as u64) < self.min_overlap
        {
            return None;
        }
        let x0 = r.x as i64 + (-dx as i64).max(0);
        let y0 = r.y as i64 + (-dy as i64).max(0);
        Some((x0 as usize, y0 as usize, w as usize, h as usize))
    }

    /// SAD for offset `o`, visiting every `row_step`-th row; gives up with
    /// `None` once the running sum makes the candidate strictly worse than
    /// `bound`.
    fn score(&self, dx: i32, dy: i32, row_step: usize, bound: Option<&Score>) -> Option<Score> {
        let (x0, y0, w, h) = self.overlap(dx, dy)?;
        let rows = (0..h).step_by(row_step);
        let pixels = (w * rows.len()) as u64;
        let mut sad = 0u64;
        for row in rows {
            let y = y0 + row;
            let n = (y * self.stride + x0) * 3;
            let p = (((y as i64 + dy as i64) as usize) * self.stride
                + (x0 as i64 + dx as i64) as usize)
                * 3;
            sad += self.next[n..n + w * 3]
                .iter()
                .zip(&self.prev[p..p + w * 3])
                .map(|(&a, &b)| a.abs_diff(b) as u32)
                .sum::<u32>() as u64;
            if let Some(best) = bound {
                if sad as u128 * best.pixels as u128 > best.sad as u128 * pixels as u128 {
                    return None;
                }
            }
        }
        Some(Score {
            dx,
            dy,
            sad,
            pixels,
        })
    }

    fn best(&self, radius: i32, hint: Option<(i32, i32)>) -> Score {
        let offsets =
            || (-radius..=radius).flat_map(move |dy| (-radius..=radius).map(move |dx| (dx, dy)));

        // A cheap decimated pass supplies a starting point when there is no
        // hint; the exact pass below is exhaustive regardless.
        let hint = hint.unwrap_or_else(|| {
            let mut coarse: Option<Score> = None;
            for (dx, dy) in offsets() {
                if let Some(s) = self.score(dx, dy, 4, coarse.as_ref()) {
                    if coarse.as_ref().is_none_or(|c| s.beats(c)) {
                        coarse = Some(s);
                    }
                }
            }
            coarse.map_or((0, 0), |c| (c.dx, c.dy))
        });

        let mut best: Option<Score> = None;
        let consider = |dx: i32, dy: i32, best: &mut Option<Score>| {
            if dx.abs() > radius || dy.abs() > radius {
                return;
            }
            if let Some(s) = self.score(dx, dy, 1, best.as_ref()) {
                if best.as_ref().is_none_or(|b| s.beats(b)) {
                    *best = Some(s);
                }
            }
        };
        for ddy in -1..=1 {
            for ddx in -1..=1 {
                consider(hint.0 + ddx, hint.1 + ddy, &mut best);
            }
        }
        for (dx, dy) in offsets() {
            consider(dx, dy, &mut best);
        }
        // (0, 0) always has full overlap, so something was scored.
        best.expect("zero offset is always a candidate")
    }
}

/// Estimates the per-step window displacement inside `region` for every
/// consecutive frame pair.
pub fn estimate_displacement(
    frames: &[RgbImage],
    region: Region,
    search_radius: u32,
) -> Result<DisplacementEstimate> {
    if region.width < MIN_REGION_SIDE || region.height < MIN_REGION_SIDE {
        return Err(Error::RegionTooSmall {
            width: region.width,
            height: region.height,
        });
    }
    let Some(first) = frames.first() else {
        return Ok(DisplacementEstimate {
            per_step: Vec::new(),
            total: (0, 0),
            confidence: 1.0,
        });
    };
    let (w, h) = first.dimensions();
    if region.x + region.width > w || region.y + region.height > h {
        return Err(Error::Config(format!(
            "matching region {region:?} exceeds the {w}x{h} frame"
        )));
    }
    if frames.iter().any(|f| f.dimensions() != (w, h)) {
        return Err(Error::Config("frames differ in size".into()));
    }

    let radius = search_radius as i32;
    let mut per_step = Vec::with_capacity(frames.len().saturating_sub(1));
    let mut confidence_sum = 0.0;
    let mut hint = None;
    for pair in frames.windows(2) {
        let matcher = PairMatcher {
            prev: pair[0].as_raw(),
            next: pair[1].as_raw(),
            stride: w as usize,
            region,
            min_overlap: MIN_OVERLAP_PIXELS,
        };
        let best = matcher.best(radius, hint);
        hint = Some((best.dx, best.dy));
        per_step.push((best.dx, best.dy));
        confidence_sum += 1.0 - best.sad as f64 / (255.0 * 3.0 * best.pixels as f64);
    }
    let total = per_step.iter().fold((0i64, 0i64), |(x, y), &(dx, dy)| {
        (x + dx as i64, y + dy as i64)
    });
    let confidence = if per_step.is_empty() {
        1.0
    } else {
        confidence_sum / per_step.len() as f64
    };
    Ok(DisplacementEstimate {
        per_step,
        total,
        confidence,
    })
}

/// True when every frame's region is (near-)uniform in every channel, so no
/// displacement can be recovered from it.
pub fn is_flat(frames: &[RgbImage], region: Region, tolerance: u8) -> bool {
    frames.iter().all(|f| {
        let mut lo = [u8::MAX; 3];
        let mut hi = [0u8; 3];
        for y in region.y..region.y + region.height {
            for x in region.x..region.x + region.width {
                let px = f.get_pixel(x, y);
                for c in 0..3 {
                    lo[c] = lo[c].min(px[c]);
                    hi[c] = hi[c].max(px[c]);
                }
            }
        }
        (0..3).all(|c| hi[c] - lo[c] <= tolerance)
    })
}
