//! Static masks: everything outside a square "unmasked" window is frozen to
//! the content of one background frame `q`.

use image::RgbImage;
use rand::Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::Xxh3;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpec {
    /// Left edge of the unmasked square, in frame pixels.
    pub x: u32,
    /// Top edge of the unmasked square.
    pub y: u32,
    pub side: u32,
    /// Background frame index.
    pub q: usize,
}

impl MaskSpec {
    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && px < self.x + self.side && py >= self.y && py < self.y + self.side
    }

    pub fn validate(&self, crop: u32, frames: usize) -> Result<()> {
        if self.side < 1
            || self.x + self.side > crop
            || self.y + self.side > crop
            || self.q >= frames
        {
            return Err(Error::Config(format!(
                "mask {self:?} is invalid for {frames} frames of side {crop}"
            )));
        }
        Ok(())
    }
}

/// Draws side `round(u * L)` with `u ~ U[lo, hi]`, then a uniform placement
/// (x, y), then a uniform background frame.
pub fn sample_mask_spec<R: Rng + ?Sized>(
    rng: &mut R,
    crop: u32,
    frames: usize,
    ratio: (f64, f64),
) -> Result<MaskSpec> {
    let (lo, hi) = ratio;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::Config(format!(
            "mask ratio [{lo}, {hi}] violates 0 < lo <= hi <= 1"
        )));
    }
    if crop < 2 {
        return Err(Error::Config(format!("crop L={crop} too small for a mask")));
    }
    if frames == 0 {
        return Err(Error::InvalidFrameCount(frames));
    }
    let u: f64 = rng.gen_range(lo..=hi);
    let side = ((u * crop as f64).round() as u32).clamp(1, crop);
    let x = rng.gen_range(0..=crop - side);
    let y = rng.gen_range(0..=crop - side);
    let q = rng.gen_range(0..frames);
    Ok(MaskSpec { x, y, side, q })
}

/// Replaces every pixel outside the unmasked square with frame `q`'s pixel.
pub fn apply_static_mask(frames: &mut [RgbImage], mask: &MaskSpec) -> Result<()> {
    let Some(first) = frames.first() else {
        return Ok(());
    };
    let (w, h) = first.dimensions();
    if w != h || frames.iter().any(|f| f.dimensions() != (w, h)) {
        return Err(Error::Config("frames must share one square size".into()));
    }
    mask.validate(w, frames.len())?;
    let background = frames[mask.q].clone();
    let row_bytes = w as usize * 3;
    let (left, right) = (mask.x as usize * 3, (mask.x + mask.side) as usize * 3);
    for (p, frame) in frames.iter_mut().enumerate() {
        if p == mask.q {
            continue;
        }
        let dst: &mut [u8] = frame;
        for (row, (d, s)) in dst
            .chunks_exact_mut(row_bytes)
            .zip(background.as_raw().chunks_exact(row_bytes))
            .enumerate()
        {
            let row = row as u32;
            if row < mask.y || row >= mask.y + mask.side {
                d.copy_from_slice(s);
            } else {
                d[..left].copy_from_slice(&s[..left]);
                d[right..].copy_from_slice(&s[right..]);
            }
        }
    }
    Ok(())
}

/// Number of (frame, pixel) positions in the masked area that differ from
/// frame `q`.
pub fn masked_area_mismatches(frames: &[RgbImage], mask: &MaskSpec) -> usize {
    let Some(background) = frames.get(mask.q) else {
        return usize::MAX;
    };
    frames
        .iter()
        .map(|frame| {
            frame
                .enumerate_pixels()
                .filter(|(x, y, px)| !mask.contains(*x, *y) && *px != background.get_pixel(*x, *y))
                .count()
        })
        .sum()
}

/// XXH3-64 over the masked-area bytes of every frame, in frame then raster
/// order.
pub fn masked_area_checksum(frames: &[RgbImage], mask: &MaskSpec) -> u64 {
    let mut hasher = Xxh3::new();
    for frame in frames {
        for (x, y, px) in frame.enumerate_pixels() {
            if !mask.contains(x, y) {
                hasher.update(&px.0);
            }
        }
    }
    hasher.digest()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn distinct_frames(n: usize, side: u32) -> Vec<RgbImage> {
        (0..n)
            .map(|p| {
                RgbImage::from_fn(side, side, |x, y| {
                    image::Rgb([(x * 3 + p as u32 * 17) as u8, (y * 5) as u8, (p * 40) as u8])
                })
            })
            .collect()
    }

    #[test]
    fn default_ratio_side_range() {
        let mut rng = rng_from_seed(11);
        let mut sides = std::collections::BTreeSet::new();
        for _ in 0..5000 {
            let m = sample_mask_spec(&mut rng, 112, 16, (0.3, 0.5)).unwrap();
            m.validate(112, 16).unwrap();
            sides.insert(m.side);
        }
        assert_eq!(*sides.first().unwrap(), 34);
        assert_eq!(*sides.last().unwrap(), 56);
    }

    #[test]
    fn full_ratio_covers_frame() {
        let m = sample_mask_spec(&mut rng_from_seed(2), 112, 16, (1.0, 1.0)).unwrap();
        assert_eq!((m.x, m.y, m.side), (0, 0, 112));
        let frames = distinct_frames(16, 112);
        let mut masked = frames.clone();
        apply_static_mask(&mut masked, &m).unwrap();
        assert_eq!(masked, frames);
    }

    #[test]
    fn small_ratio_side() {
        let m = sample_mask_spec(&mut rng_from_seed(3), 112, 16, (0.1, 0.1)).unwrap();
        assert_eq!(m.side, 11);
    }

    #[test]
    fn bad_ratio_is_config_error() {
        let mut rng = rng_from_seed(0);
        for r in [(0.0, 0.5), (0.6, 0.5), (0.3, 1.2)] {
            assert!(matches!(
                sample_mask_spec(&mut rng, 112, 16, r),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn four_frame_example_pixelwise() {
        let raw = distinct_frames(4, 64);
        let mask = MaskSpec {
            x: 10,
            y: 10,
            side: 40,
            q: 2,
        };
        let mut out = raw.clone();
        apply_static_mask(&mut out, &mask).unwrap();
        for (p, frame) in out.iter().enumerate() {
            for y in 0..64 {
                for x in 0..64 {
                    let inside = (10..50).contains(&x) && (10..50).contains(&y);
                    let expected = if inside {
                        raw[p].get_pixel(x, y)
                    } else {
                        raw[2].get_pixel(x, y)
                    };
                    assert_eq!(frame.get_pixel(x, y), expected, "frame {p} at ({x},{y})");
                }
            }
        }
        assert_eq!(out[2], raw[2]);
        assert_eq!(masked_area_mismatches(&out, &mask), 0);
        assert!(masked_area_mismatches(&raw, &mask) > 0);
    }
}
