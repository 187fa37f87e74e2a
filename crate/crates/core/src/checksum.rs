//! Frame checksums: XXH3-64 (seed 0) over the raw RGB bytes of every frame,
//! concatenated in frame order. Integrity only, not security.

use image::RgbImage;
use xxhash_rust::xxh3::Xxh3;

pub fn frames_checksum(frames: &[RgbImage]) -> u64 {
    let mut hasher = Xxh3::new();
    for frame in frames {
        hasher.update(frame.as_raw());
    }
    hasher.digest()
}

pub fn bytes_checksum(bytes: &[u8]) -> u64 {
    xxhash_rust::xxh3::xxh3_64(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streaming_matches_one_shot() {
        let a = RgbImage::from_fn(5, 5, |x, y| image::Rgb([x as u8, y as u8, 7]));
        let b = RgbImage::from_fn(5, 5, |x, y| image::Rgb([y as u8, x as u8, 9]));
        let mut joined = a.as_raw().clone();
        joined.extend_from_slice(b.as_raw());
        assert_eq!(frames_checksum(&[a, b]), bytes_checksum(&joined));
    }
}
