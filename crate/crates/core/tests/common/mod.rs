#![allow(dead_code)]

use std::path::Path;

use image::{imageops, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textured image of the given size: coarse random colors upscaled plus
/// grain.
pub fn textured(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = RgbImage::from_fn(width / 8 + 1, height / 8 + 1, |_, _| {
        Rgb([rng.gen(), rng.gen(), rng.gen()])
    });
    let mut img = imageops::resize(&coarse, width, height, imageops::FilterType::Triangle);
    for px in img.pixels_mut() {
        for c in px.0.iter_mut() {
            *c = c.saturating_add(rng.gen_range(0..24));
        }
    }
    img
}

/// Writes `count` PNG sources of assorted sizes into `dir`.
pub fn write_sources(dir: &Path, count: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let (w, h) = [(400, 330), (330, 500), (320, 320), (640, 480)][i % 4];
        textured(w, h, i as u64)
            .save(dir.join(format!("src{i:03}.png")))
            .unwrap();
    }
}
