use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::RgbImage;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a source image came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceOrigin {
    pub path: PathBuf,
    /// Index into the sorted frame list when the source is a frame directory.
    pub frame_index: Option<u32>,
}

/// A prepared `L_s x L_s` source image.
#[derive(Debug, Clone)]
pub struct SourceImage {
    pub pixels: RgbImage,
    pub origin: SourceOrigin,
    /// Offset of the square crop inside the resized image.
    pub offset: [u32; 2],
}

impl SourceImage {
    pub fn size(&self) -> u32 {
        self.pixels.width()
    }
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(img.to_rgb8())
}

/// Dimensions after scaling the short side to `short_side`, rounding the
/// long side to the nearest pixel.
pub fn resized_dims(width: u32, height: u32, short_side: u32) -> (u32, u32) {
    let scale = |long: u32, short: u32| {
        ((long as f64 * short_side as f64 / short as f64).round() as u32).max(short_side)
    };
    if width <= height {
        (short_side, scale(height, width))
    } else {
        (scale(width, height), short_side)
    }
}

/// Resizes (bilinear) so the short side equals `source_size`, then cuts an
/// `L_s x L_s` square at a uniformly random offset (x drawn first, then y).
pub fn prepare_source<R: Rng + ?Sized>(
    image: &RgbImage,
    origin: SourceOrigin,
    source_size: u32,
    crop: u32,
    rng: &mut R,
) -> Result<SourceImage> {
    if source_size < crop {
        return Err(Error::Config(format!(
            "source size L_s={source_size} is smaller than crop L={crop}"
        )));
    }
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::Decode {
            path: origin.path.clone(),
            reason: format!("degenerate image dimensions {w}x{h}"),
        });
    }
    let (rw, rh) = resized_dims(w, h, source_size);
    let resized;
    let scaled = if (rw, rh) == (w, h) {
        image
    } else {
        resized = imageops::resize(image, rw, rh, FilterType::Triangle);
        &resized
    };
    let ox = rng.gen_range(0..=rw - source_size);
    let oy = rng.gen_range(0..=rh - source_size);
    let pixels = imageops::crop_imm(scaled, ox, oy, source_size, source_size).to_image();
    Ok(SourceImage {
        pixels,
        origin,
        offset: [ox, oy],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn noise(w: u32, h: u32, seed: u64) -> RgbImage {
        let mut rng = rng_from_seed(seed);
        RgbImage::from_fn(w, h, |_, _| image::Rgb([rng.gen(), rng.gen(), rng.gen()]))
    }

    #[test]
    fn landscape_resize_and_offset_range() {
        // 640 * 320 / 480 = 426.67 -> 427, so offsets span 0..=107.
        assert_eq!(resized_dims(640, 480, 320), (427, 320));
        let img = noise(640, 480, 3);
        let mut rng = rng_from_seed(9);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            let s = prepare_source(&img, SourceOrigin::default(), 320, 112, &mut rng).unwrap();
            assert_eq!(s.pixels.dimensions(), (320, 320));
            assert_eq!(s.offset[1], 0);
            seen.insert(s.offset[0]);
        }
        assert_eq!(*seen.first().unwrap(), 0);
        assert_eq!(*seen.last().unwrap(), 107);
    }

    #[test]
    fn exact_fit_is_identity() {
        let img = noise(320, 320, 4);
        let s = prepare_source(
            &img,
            SourceOrigin::default(),
            320,
            112,
            &mut rng_from_seed(1),
        )
        .unwrap();
        assert_eq!(s.offset, [0, 0]);
        assert_eq!(s.pixels, img);
    }

    #[test]
    fn small_input_is_upscaled() {
        let img = noise(100, 100, 5);
        let s = prepare_source(
            &img,
            SourceOrigin::default(),
            320,
            112,
            &mut rng_from_seed(1),
        )
        .unwrap();
        assert_eq!(s.pixels.dimensions(), (320, 320));
        assert_eq!(s.offset, [0, 0]);
    }

    #[test]
    fn source_smaller_than_crop_is_config_error() {
        let img = noise(50, 50, 6);
        let err = prepare_source(
            &img,
            SourceOrigin::default(),
            100,
            112,
            &mut rng_from_seed(1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn empty_image_is_decode_error() {
        let img = RgbImage::new(0, 10);
        let err = prepare_source(
            &img,
            SourceOrigin::default(),
            320,
            112,
            &mut rng_from_seed(1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Decode { .. }));
    }
}
