//! Raw clip files: a 10-byte little-endian header followed by the frames.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MOSC"
//! 4       1     version (1)
//! 5       2     N, frame count
//! 7       2     L, frame side
//! 9       1     channels (3)
//! 10      N*L*L*channels   frame-major, row-major, RGB bytes
//! ```

use image::RgbImage;

use crate::error::{Error, Result};

pub const RAW_MAGIC: &[u8; 4] = b"MOSC";
pub const RAW_VERSION: u8 = 1;
pub const RAW_HEADER_LEN: usize = 10;
pub const CHANNELS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawClipHeader {
    pub frames: u16,
    pub side: u16,
    pub channels: u8,
}

impl RawClipHeader {
    pub fn payload_len(&self) -> usize {
        self.frames as usize * self.side as usize * self.side as usize * self.channels as usize
    }

    pub fn encode(&self) -> [u8; RAW_HEADER_LEN] {
        let mut out = [0u8; RAW_HEADER_LEN];
        out[..4].copy_from_slice(RAW_MAGIC);
        out[4] = RAW_VERSION;
        out[5..7].copy_from_slice(&self.frames.to_le_bytes());
        out[7..9].copy_from_slice(&self.side.to_le_bytes());
        out[9] = self.channels;
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < RAW_HEADER_LEN {
            return Err(Error::Integrity(format!(
                "raw clip header truncated ({} bytes)",
                bytes.len()
            )));
        }
        if &bytes[..4] != RAW_MAGIC {
            return Err(Error::Integrity("raw clip has a bad magic".into()));
        }
        if bytes[4] != RAW_VERSION {
            return Err(Error::Schema(format!(
                "raw clip version {} (expected {RAW_VERSION})",
                bytes[4]
            )));
        }
        Ok(RawClipHeader {
            frames: u16::from_le_bytes([bytes[5], bytes[6]]),
            side: u16::from_le_bytes([bytes[7], bytes[8]]),
            channels: bytes[9],
        })
    }
}

/// Frame bytes concatenated in frame order, without a header.
pub fn frames_payload(frames: &[RgbImage]) -> Vec<u8> {
    let mut out = Vec::with_capacity(frames.iter().map(|f| f.as_raw().len()).sum());
    for f in frames {
        out.extend_from_slice(f.as_raw());
    }
    out
}

pub fn encode_raw_clip(frames: &[RgbImage]) -> Result<Vec<u8>> {
    let side = frames.first().map_or(0, |f| f.width());
    if frames.iter().any(|f| f.dimensions() != (side, side)) {
        return Err(Error::Config(
            "raw clips need square frames of one size".into(),
        ));
    }
    let header = RawClipHeader {
        frames: u16::try_from(frames.len())
            .map_err(|_| Error::Config("too many frames for a raw clip".into()))?,
        side: u16::try_from(side).map_err(|_| Error::Config("frame side too large".into()))?,
        channels: CHANNELS,
    };
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + header.payload_len());
    out.extend_from_slice(&header.encode());
    for f in frames {
        out.extend_from_slice(f.as_raw());
    }
    Ok(out)
}

/// Splits a payload of `N * L * L * 3` bytes into frames.
pub fn payload_to_frames(payload: &[u8], frames: usize, side: u32) -> Result<Vec<RgbImage>> {
    let frame_len = side as usize * side as usize * CHANNELS as usize;
    if payload.len() != frames * frame_len {
        return Err(Error::Integrity(format!(
            "payload is {} bytes, expected {}",
            payload.len(),
            frames * frame_len
        )));
    }
    Ok(payload
        .chunks_exact(frame_len.max(1))
        .take(frames)
        .map(|c| RgbImage::from_raw(side, side, c.to_vec()).expect("chunk length checked"))
        .collect())
}

pub fn decode_raw_clip(bytes: &[u8]) -> Result<(RawClipHeader, Vec<RgbImage>)> {
    let header = RawClipHeader::decode(bytes)?;
    if header.channels != CHANNELS {
        return Err(Error::Integrity(format!(
            "raw clip has {} channels, expected {CHANNELS}",
            header.channels
        )));
    }
    let payload = &bytes[RAW_HEADER_LEN..];
    if payload.len() != header.payload_len() {
        return Err(Error::Integrity(format!(
            "raw clip payload is {} bytes, header promises {}",
            payload.len(),
            header.payload_len()
        )));
    }
    let frames = payload_to_frames(payload, header.frames as usize, header.side as u32)?;
    Ok((header, frames))
}
