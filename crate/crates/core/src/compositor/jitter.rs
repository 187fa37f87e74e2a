//! Color jitter applied after masking.
//!
//! Each parameter set is applied as brightness, contrast, saturation, hue in
//! that order, clamping to `[0, 255]` after every step and rounding once at
//! the end. Contrast blends toward a gray level computed over the frames the
//! parameter set applies to (the whole clip in per-clip mode), so per-clip
//! jitter is a single pixel-wise map over the clip.

use image::RgbImage;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{JitterConfig, JitterMode};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterParams {
    pub brightness: f32,
    pub contrast: f32,
    pub saturation: f32,
    pub hue: f32,
}

impl JitterParams {
    pub const IDENTITY: JitterParams = JitterParams {
        brightness: 1.0,
        contrast: 1.0,
        saturation: 1.0,
        hue: 0.0,
    };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

/// Drawn jitter: one entry for per-clip mode, one per frame otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterRecord {
    pub mode: JitterMode,
    pub params: Vec<JitterParams>,
}

fn draw<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f32; 2]) -> f32 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn draw_params<R: Rng + ?Sized>(rng: &mut R, cfg: &JitterConfig) -> JitterParams {
    JitterParams {
        brightness: draw(rng, cfg.brightness),
        contrast: draw(rng, cfg.contrast),
        saturation: draw(rng, cfg.saturation),
        hue: draw(rng, cfg.hue),
    }
}

#[inline]
fn luma(r: f32, g: f32, b: f32) -> f32 {
    0.299 * r + 0.587 * g + 0.114 * b
}

fn mean_luma(frames: &[RgbImage]) -> f32 {
    let mut sum = 0f64;
    let mut count = 0u64;
    for f in frames {
        for px in f.pixels() {
            sum += luma(px[0] as f32, px[1] as f32, px[2] as f32) as f64;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64) as f32
    }
}

fn rgb_to_hsv(r: f32, g: f32, b: f32) -> (f32, f32, f32) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> (f32, f32, f32) {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

/// Applies one parameter set to `frame`. `gray_center` is the mean luma of
/// the unjittered frames this parameter set covers.
pub fn apply_params(frame: &mut RgbImage, params: &JitterParams, gray_center: f32) {
    if params.is_identity() {
        return;
    }
    let center = (gray_center * params.brightness).clamp(0.0, 255.0);
    for px in frame.pixels_mut() {
        let mut c = [px[0] as f32, px[1] as f32, px[2] as f32];
        if params.brightness != 1.0 {
            for v in &mut c {
                *v = (*v * params.brightness).clamp(0.0, 255.0);
            }
        }
        if params.contrast != 1.0 {
            for v in &mut c {
                *v = ((*v - center) * params.contrast + center).clamp(0.0, 255.0);
            }
        }
        if params.saturation != 1.0 {
            let gray = luma(c[0], c[1], c[2]);
            for v in &mut c {
                *v = ((*v - gray) * params.saturation + gray).clamp(0.0, 255.0);
            }
        }
        if params.hue != 0.0 {
            let (h, s, v) = rgb_to_hsv(c[0] / 255.0, c[1] / 255.0, c[2] / 255.0);
            let (r, g, b) = hsv_to_rgb(h + params.hue, s, v);
            c = [r * 255.0, g * 255.0, b * 255.0];
        }
        for (dst, v) in px.0.iter_mut().zip(c) {
            *dst = v.round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// Draws jitter parameters (per frame or once per clip) and applies them.
pub fn color_jitter<R: Rng + ?Sized>(
    frames: &mut [RgbImage],
    cfg: &JitterConfig,
    mode: JitterMode,
    rng: &mut R,
) -> Result<JitterRecord> {
    cfg.validate()?;
    let params = match mode {
        JitterMode::PerClip => {
            let p = draw_params(rng, cfg);
            let center = mean_luma(frames);
            for frame in frames.iter_mut() {
                apply_params(frame, &p, center);
            }
            vec![p]
        }
        JitterMode::PerFrame => frames
            .iter_mut()
            .map(|frame| {
                let p = draw_params(rng, cfg);
                let center = mean_luma(std::slice::from_ref(frame));
                apply_params(frame, &p, center);
                p
            })
            .collect(),
    };
    Ok(JitterRecord { mode, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositor::mask::{apply_static_mask, MaskSpec};
    use crate::error::Error;
    use crate::seed::rng_from_seed;

    fn textured(n: usize, seed: u64) -> Vec<RgbImage> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                RgbImage::from_fn(48, 48, |_, _| image::Rgb([rng.gen(), rng.gen(), rng.gen()]))
            })
            .collect()
    }

    #[test]
    fn identity_ranges_leave_frames_untouched() {
        let frames = textured(4, 1);
        for mode in [JitterMode::PerFrame, JitterMode::PerClip] {
            let mut out = frames.clone();
            let rec = color_jitter(
                &mut out,
                &JitterConfig::identity(),
                mode,
                &mut rng_from_seed(2),
            )
            .unwrap();
            assert_eq!(out, frames);
            assert!(rec.params.iter().all(JitterParams::is_identity));
        }
    }

    #[test]
    fn hsv_round_trip_is_exact_after_rounding() {
        for &(r, g, b) in &[
            (0u8, 0u8, 0u8),
            (255, 0, 0),
            (12, 200, 99),
            (77, 77, 78),
            (255, 255, 255),
        ] {
            let (h, s, v) = rgb_to_hsv(r as f32 / 255.0, g as f32 / 255.0, b as f32 / 255.0);
            let (r2, g2, b2) = hsv_to_rgb(h, s, v);
            assert_eq!((r2 * 255.0).round() as u8, r);
            assert_eq!((g2 * 255.0).round() as u8, g);
            assert_eq!((b2 * 255.0).round() as u8, b);
        }
    }

    #[test]
    fn per_clip_keeps_masked_area_identical() {
        let mut frames = textured(6, 3);
        let mask = MaskSpec {
            x: 5,
            y: 9,
            side: 20,
            q: 4,
        };
        apply_static_mask(&mut frames, &mask).unwrap();
        color_jitter(
            &mut frames,
            &JitterConfig::default(),
            JitterMode::PerClip,
            &mut rng_from_seed(4),
        )
        .unwrap();
        assert_eq!(
            crate::compositor::mask::masked_area_mismatches(&frames, &mask),
            0
        );
    }

    #[test]
    fn per_frame_brightness_is_a_global_scale() {
        let base = textured(1, 5).remove(0);
        let mut frames = vec![base.clone(); 8];
        let cfg = JitterConfig {
            brightness: [0.5, 1.5],
            ..JitterConfig::identity()
        };
        let rec = color_jitter(
            &mut frames,
            &cfg,
            JitterMode::PerFrame,
            &mut rng_from_seed(6),
        )
        .unwrap();
        assert_eq!(rec.params.len(), 8);
        let mut factors = Vec::new();
        for frame in &frames {
            // Least-squares scale over unclamped pixels, then check residuals
            // are within quantization.
            let pairs: Vec<(f64, f64)> = base
                .as_raw()
                .iter()
                .zip(frame.as_raw())
                .filter(|(_, &o)| o < 255)
                .map(|(&i, &o)| (i as f64, o as f64))
                .collect();
            let num: f64 = pairs.iter().map(|(i, o)| i * o).sum();
            let den: f64 = pairs.iter().map(|(i, _)| i * i).sum();
            let scale = num / den;
            let worst = pairs
                .iter()
                .map(|(i, o)| (i * scale - o).abs())
                .fold(0.0, f64::max);
            assert!(worst <= 1.0, "residual {worst}");
            factors.push(scale);
        }
        for (scale, p) in factors.iter().zip(&rec.params) {
            assert!((scale - p.brightness as f64).abs() < 0.01);
        }
        assert!(factors.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-3));
    }

    #[test]
    fn out_of_range_params_rejected() {
        let cfg = JitterConfig {
            brightness: [0.5, 2.5],
            ..JitterConfig::default()
        };
        let mut frames = textured(2, 7);
        assert!(matches!(
            color_jitter(
                &mut frames,
                &cfg,
                JitterMode::PerFrame,
                &mut rng_from_seed(0)
            ),
            Err(Error::Config(_))
        ));
    }
}
