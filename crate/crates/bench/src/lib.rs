//! Synthetic inputs shared by the benchmarks.

use image::{imageops, Rgb, RgbImage};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic textured square image: coarse random color blobs upscaled
/// with fine grain on top.
pub fn textured_image(side: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse_side = (side / 8).max(2);
    let coarse = RgbImage::from_fn(coarse_side, coarse_side, |_, _| {
        Rgb([rng.gen(), rng.gen(), rng.gen()])
    });
    let mut img = imageops::resize(&coarse, side, side, imageops::FilterType::Triangle);
    for px in img.pixels_mut() {
        for c in px.0.iter_mut() {
            *c = c.saturating_add(rng.gen_range(0..24));
        }
    }
    img
}
