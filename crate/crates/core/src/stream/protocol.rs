//! Wire format. All integers are little-endian.
//!
//! ```text
//! server -> HELLO  "MOSI" version:u8
//! client -> REQ    batches:u32 epoch:u32
//! server -> BATCH  0x01 sample_count:u16 N:u16 L:u16 channels:u8
//!                  then per sample: label_index:u8 meta_len:u16 meta payload
//! server -> END    0x02
//! server -> ERR    0x03 code:u8 len:u16 message
//! ```

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MOSI";
pub const PROTOCOL_VERSION: u8 = 1;
pub const HELLO_LEN: usize = 5;
pub const REQUEST_LEN: usize = 8;
/// Upper bound on one clip payload accepted by the decoder.
pub const MAX_PAYLOAD: usize = 1 << 30;

pub const MSG_BATCH: u8 = 1;
pub const MSG_END: u8 = 2;
pub const MSG_ERR: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ErrorCode {
    BadRequest = 1,
    NoData = 2,
    Internal = 3,
    Timeout = 4,
}

impl ErrorCode {
    pub fn from_u8(code: u8) -> Option<Self> {
        Some(match code {
            1 => ErrorCode::BadRequest,
            2 => ErrorCode::NoData,
            3 => ErrorCode::Internal,
            4 => ErrorCode::Timeout,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub batches: u32,
    pub epoch: u32,
}

impl Request {
    pub fn encode(&self) -> [u8; REQUEST_LEN] {
        let mut out = [0; REQUEST_LEN];
        out[..4].copy_from_slice(&self.batches.to_le_bytes());
        out[4..].copy_from_slice(&self.epoch.to_le_bytes());
        out
    }

    pub fn decode(bytes: [u8; REQUEST_LEN]) -> Self {
        Request {
            batches: u32::from_le_bytes(bytes[..4].try_into().unwrap()),
            epoch: u32::from_le_bytes(bytes[4..].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchHeader {
    pub sample_count: u16,
    pub frames: u16,
    pub side: u16,
    pub channels: u8,
}

impl BatchHeader {
    pub const LEN: usize = 7;

    pub fn payload_len(&self) -> usize {
        self.frames as usize * self.side as usize * self.side as usize * self.channels as usize
    }

    pub fn encode(&self) -> [u8; Self::LEN] {
        let mut out = [0; Self::LEN];
        out[0..2].copy_from_slice(&self.sample_count.to_le_bytes());
        out[2..4].copy_from_slice(&self.frames.to_le_bytes());
        out[4..6].copy_from_slice(&self.side.to_le_bytes());
        out[6] = self.channels;
        out
    }

    pub fn decode(bytes: [u8; Self::LEN]) -> Self {
        BatchHeader {
            sample_count: u16::from_le_bytes([bytes[0], bytes[1]]),
            frames: u16::from_le_bytes([bytes[2], bytes[3]]),
            side: u16::from_le_bytes([bytes[4], bytes[5]]),
            channels: bytes[6],
        }
    }
}

/// One sample as carried on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireSample {
    pub label_index: u8,
    /// Manifest record JSON.
    pub meta: Vec<u8>,
    /// `N * L * L * channels` raw bytes, frame-major, row-major RGB.
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Batch {
        header: BatchHeader,
        samples: Vec<WireSample>,
    },
    End,
    Err {
        code: u8,
        message: String,
    },
}

fn truncated(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Protocol("truncated stream".into())
    } else {
        Error::Io(e)
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0; N];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf)
}

fn read_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0; len];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf)
}

pub fn write_hello<W: Write>(w: &mut W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[PROTOCOL_VERSION])
}

/// Reads HELLO and returns the server's protocol version.
pub fn read_hello<R: Read>(r: &mut R) -> Result<u8> {
    let hello: [u8; HELLO_LEN] = read_array(r)?;
    if &hello[..4] != MAGIC {
        return Err(Error::Protocol(format!("bad magic {:?}", &hello[..4])));
    }
    Ok(hello[4])
}

pub fn write_batch<W: Write>(w: &mut W, header: BatchHeader, samples: &[WireSample]) -> Result<()> {
    if samples.len() != header.sample_count as usize {
        return Err(Error::Protocol(format!(
            "header announces {} samples, {} given",
            header.sample_count,
            samples.len()
        )));
    }
    w.write_all(&[MSG_BATCH])?;
    w.write_all(&header.encode())?;
    for s in samples {
        let meta_len = u16::try_from(s.meta.len())
            .map_err(|_| Error::Protocol(format!("metadata of {} bytes too long", s.meta.len())))?;
        if s.payload.len() != header.payload_len() {
            return Err(Error::Protocol(format!(
                "payload of {} bytes, header implies {}",
                s.payload.len(),
                header.payload_len()
            )));
        }
        w.write_all(&[s.label_index])?;
        w.write_all(&meta_len.to_le_bytes())?;
        w.write_all(&s.meta)?;
        w.write_all(&s.payload)?;
    }
    Ok(())
}

pub fn write_end<W: Write>(w: &mut W) -> io::Result<()> {
    w.write_all(&[MSG_END])
}

pub fn write_err<W: Write>(w: &mut W, code: ErrorCode, message: &str) -> io::Result<()> {
    let bytes = message.as_bytes();
    let bytes = &bytes[..bytes.len().min(u16::MAX as usize)];
    w.write_all(&[MSG_ERR, code as u8])?;
    w.write_all(&(bytes.len() as u16).to_le_bytes())?;
    w.write_all(bytes)
}

pub fn read_message<R: Read>(r: &mut R) -> Result<Message> {
    let [tag] = read_array::<1, _>(r)?;
    match tag {
        MSG_BATCH => {
            let header = BatchHeader::decode(read_array(r)?);
            let payload_len = header.payload_len();
            if payload_len == 0 || payload_len > MAX_PAYLOAD {
                return Err(Error::Protocol(format!(
                    "implausible clip size {payload_len} bytes"
                )));
            }
            let mut samples = Vec::with_capacity(header.sample_count as usize);
            for _ in 0..header.sample_count {
                let [label_index] = read_array::<1, _>(r)?;
                let meta_len = u16::from_le_bytes(read_array(r)?) as usize;
                let meta = read_vec(r, meta_len)?;
                let payload = read_vec(r, payload_len)?;
                samples.push(WireSample {
                    label_index,
                    meta,
                    payload,
                });
            }
            Ok(Message::Batch { header, samples })
        }
        MSG_END => Ok(Message::End),
        MSG_ERR => {
            let [code] = read_array::<1, _>(r)?;
            let len = u16::from_le_bytes(read_array(r)?) as usize;
            let message = String::from_utf8_lossy(&read_vec(r, len)?).into_owned();
            Ok(Message::Err { code, message })
        }
        other => Err(Error::Protocol(format!("unexpected message type {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn batch() -> (BatchHeader, Vec<WireSample>) {
        let header = BatchHeader {
            sample_count: 2,
            frames: 2,
            side: 2,
            channels: 3,
        };
        let samples = (0..2)
            .map(|i| WireSample {
                label_index: i,
                meta: format!("{{\"i\":{i}}}").into_bytes(),
                payload: (0..24).map(|b| b as u8 + i).collect(),
            })
            .collect();
        (header, samples)
    }

    #[test]
    fn header_layout() {
        let h = BatchHeader {
            sample_count: 9,
            frames: 16,
            side: 112,
            channels: 3,
        };
        assert_eq!(h.encode(), [9, 0, 16, 0, 112, 0, 3]);
        assert_eq!(BatchHeader::decode(h.encode()), h);
        assert_eq!(h.payload_len(), 602_112);
        let r = Request {
            batches: 10,
            epoch: 258,
        };
        assert_eq!(r.encode(), [10, 0, 0, 0, 2, 1, 0, 0]);
        assert_eq!(Request::decode(r.encode()), r);
    }

    #[test]
    fn message_round_trip() {
        let (header, samples) = batch();
        let mut buf = Vec::new();
        write_hello(&mut buf).unwrap();
        write_batch(&mut buf, header, &samples).unwrap();
        write_err(&mut buf, ErrorCode::NoData, "nothing").unwrap();
        write_end(&mut buf).unwrap();
        let mut r = Cursor::new(buf);
        assert_eq!(read_hello(&mut r).unwrap(), PROTOCOL_VERSION);
        assert_eq!(
            read_message(&mut r).unwrap(),
            Message::Batch { header, samples }
        );
        assert_eq!(
            read_message(&mut r).unwrap(),
            Message::Err {
                code: ErrorCode::NoData as u8,
                message: "nothing".into()
            }
        );
        assert_eq!(read_message(&mut r).unwrap(), Message::End);
    }

    #[test]
    fn every_truncation_is_a_protocol_error() {
        let (header, samples) = batch();
        let mut buf = Vec::new();
        write_batch(&mut buf, header, &samples).unwrap();
        for cut in 0..buf.len() {
            let err = read_message(&mut Cursor::new(&buf[..cut])).unwrap_err();
            assert!(matches!(err, Error::Protocol(_)), "cut at {cut}: {err}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            read_message(&mut Cursor::new([9u8])),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(
            read_hello(&mut Cursor::new(*b"MOSX\x01")),
            Err(Error::Protocol(_))
        ));
        let (header, mut samples) = batch();
        samples[0].payload.pop();
        assert!(write_batch(&mut Vec::new(), header, &samples).is_err());
        let zero = BatchHeader {
            frames: 0,
            ..header
        };
        let mut buf = vec![MSG_BATCH];
        buf.extend_from_slice(&zero.encode());
        assert!(matches!(
            read_message(&mut Cursor::new(buf)),
            Err(Error::Protocol(_))
        ));
    }
}
