//! Contact sheets and animated GIF previews.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::gif::{GifEncoder, Repeat};
use image::{Delay, DynamicImage, Frame, Rgb, RgbImage};

use crate::compositor::MaskSpec;
use crate::error::Result;

const GUTTER: u32 = 4;
const GLYPH_W: u32 = 3;
const GLYPH_H: u32 = 5;
const TEXT_SCALE: u32 = 2;
const BACKGROUND: Rgb<u8> = Rgb([24, 24, 24]);
const TEXT: Rgb<u8> = Rgb([235, 235, 235]);
const OUTLINE: Rgb<u8> = Rgb([0, 255, 0]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreviewStyle {
    Sheet,
    Animation,
}

impl std::str::FromStr for PreviewStyle {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sheet" | "contact-sheet" => Ok(PreviewStyle::Sheet),
            "anim" | "animation" | "gif" => Ok(PreviewStyle::Animation),
            other => Err(crate::error::Error::Config(format!(
                "unknown preview style {other:?} (expected sheet or anim)"
            ))),
        }
    }
}

/// 3x5 bitmaps, one row per `u8` (low three bits, MSB on the left).
fn glyph(c: char) -> [u8; 5] {
    match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        '(' => [0b001, 0b010, 0b010, 0b010, 0b001],
        ')' => [0b100, 0b010, 0b010, 0b010, 0b100],
        ',' => [0b000, 0b000, 0b000, 0b010, 0b100],
        '#' => [0b101, 0b111, 0b101, 0b111, 0b101],
        ':' => [0b000, 0b010, 0b000, 0b010, 0b000],
        _ => [0; 5],
    }
}

fn text_band_height() -> u32 {
    GLYPH_H * TEXT_SCALE + 2 * GUTTER
}

fn draw_text(canvas: &mut RgbImage, x0: u32, y0: u32, text: &str) {
    for (i, c) in text.chars().enumerate() {
        let gx = x0 + i as u32 * (GLYPH_W + 1) * TEXT_SCALE;
        for (row, bits) in glyph(c).iter().enumerate() {
            for col in 0..GLYPH_W {
                if bits >> (GLYPH_W - 1 - col) & 1 == 0 {
                    continue;
                }
                for sy in 0..TEXT_SCALE {
                    for sx in 0..TEXT_SCALE {
                        let (x, y) = (
                            gx + col * TEXT_SCALE + sx,
                            y0 + row as u32 * TEXT_SCALE + sy,
                        );
                        if x < canvas.width() && y < canvas.height() {
                            canvas.put_pixel(x, y, TEXT);
                        }
                    }
                }
            }
        }
    }
}

fn outline(frame: &mut RgbImage, mask: &MaskSpec) {
    let (x0, y0) = (mask.x, mask.y);
    let (x1, y1) = (mask.x + mask.side - 1, mask.y + mask.side - 1);
    for x in x0..=x1 {
        frame.put_pixel(x, y0, OUTLINE);
        frame.put_pixel(x, y1, OUTLINE);
    }
    for y in y0..=y1 {
        frame.put_pixel(x0, y, OUTLINE);
        frame.put_pixel(x1, y, OUTLINE);
    }
}

fn strip_size(frames: &[RgbImage]) -> (u32, u32) {
    let side = frames.first().map_or(0, |f| f.width());
    let n = frames.len() as u32;
    (
        n * side + (n + 1) * GUTTER,
        text_band_height() + side + GUTTER,
    )
}

fn draw_strip(
    canvas: &mut RgbImage,
    top: u32,
    frames: &[RgbImage],
    mask: Option<&MaskSpec>,
    caption: &str,
) {
    draw_text(canvas, GUTTER, top + GUTTER, caption);
    let side = frames.first().map_or(0, |f| f.width());
    for (i, frame) in frames.iter().enumerate() {
        let mut tile = frame.clone();
        if let Some(m) = mask {
            outline(&mut tile, m);
        }
        let x = GUTTER + i as u32 * (side + GUTTER);
        image::imageops::replace(canvas, &tile, x as i64, (top + text_band_height()) as i64);
    }
}

/// All frames left to right with gutters, the unmasked square outlined and
/// the caption above.
pub fn render_contact_sheet(
    frames: &[RgbImage],
    mask: Option<&MaskSpec>,
    caption: &str,
) -> RgbImage {
    let (w, h) = strip_size(frames);
    let mut canvas = RgbImage::from_pixel(w, h, BACKGROUND);
    draw_strip(&mut canvas, 0, frames, mask, caption);
    canvas
}

/// One contact-sheet row per sample.
pub fn render_batch_sheet(rows: &[(&[RgbImage], Option<MaskSpec>, String)]) -> RgbImage {
    let (w, row_h) = rows.first().map_or((0, 0), |(f, _, _)| strip_size(f));
    let mut canvas = RgbImage::from_pixel(w, row_h * rows.len() as u32, BACKGROUND);
    for (i, (frames, mask, caption)) in rows.iter().enumerate() {
        draw_strip(
            &mut canvas,
            i as u32 * row_h,
            frames,
            mask.as_ref(),
            caption,
        );
    }
    canvas
}

/// Looping animated GIF of the frames.
pub fn render_animation(
    frames: &[RgbImage],
    mask: Option<&MaskSpec>,
    fps: u32,
    out: &Path,
) -> Result<()> {
    let writer = BufWriter::new(File::create(out)?);
    let mut encoder = GifEncoder::new_with_speed(writer, 10);
    encoder.set_repeat(Repeat::Infinite)?;
    let delay = Delay::from_numer_denom_ms(1000, fps.max(1));
    let gif_frames = frames.iter().map(|f| {
        let mut f = f.clone();
        if let Some(m) = mask {
            outline(&mut f, m);
        }
        Frame::from_parts(DynamicImage::ImageRgb8(f).to_rgba8(), 0, 0, delay)
    });
    encoder.encode_frames(gif_frames)?;
    Ok(())
}
