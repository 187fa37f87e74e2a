use std::io::{BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use image::RgbImage;

use crate::checksum::bytes_checksum;
use crate::dataset_io::{parse_record, payload_to_frames, ManifestRecord};
use crate::error::{Error, Result};

use super::protocol::{read_hello, read_message, BatchHeader, Message, Request, PROTOCOL_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSample {
    pub label_index: u8,
    pub record: ManifestRecord,
    pub payload: Vec<u8>,
}

impl DecodedSample {
    pub fn frames(&self) -> Result<Vec<RgbImage>> {
        payload_to_frames(&self.payload, self.record.n, self.record.l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedBatch {
    /// Position of the batch in the session, from 0.
    pub sequence: u64,
    pub header: BatchHeader,
    pub samples: Vec<DecodedSample>,
}

/// One protocol session. Several requests can be issued in turn.
pub struct StreamClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    sequence: u64,
    shape: Option<BatchHeader>,
}

impl StreamClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let writer = stream.try_clone()?;
        let mut reader = BufReader::with_capacity(1 << 16, stream);
        let version = read_hello(&mut reader)?;
        if version != PROTOCOL_VERSION {
            return Err(Error::Protocol(format!(
                "server speaks protocol version {version}, client speaks {PROTOCOL_VERSION}"
            )));
        }
        Ok(StreamClient {
            reader,
            writer,
            sequence: 0,
            shape: None,
        })
    }

    /// Requests `batches` batches and hands each to `consume` as it
    /// arrives. Returns once END is read.
    pub fn request_with<F>(&mut self, batches: u32, epoch: u32, mut consume: F) -> Result<()>
    where
        F: FnMut(DecodedBatch) -> Result<()>,
    {
        self.writer
            .write_all(&Request { batches, epoch }.encode())?;
        let mut received = 0u32;
        loop {
            match read_message(&mut self.reader)? {
                Message::Batch { header, samples } => {
                    if received == batches {
                        return Err(Error::Protocol(format!(
                            "server sent more than the {batches} batches requested"
                        )));
                    }
                    let batch = self.decode_batch(header, samples)?;
                    received += 1;
                    consume(batch)?;
                }
                Message::End if received == batches => return Ok(()),
                Message::End => {
                    return Err(Error::Protocol(format!(
                        "END after {received} of {batches} batches"
                    )))
                }
                Message::Err { code, message } => return Err(Error::Remote { code, message }),
            }
        }
    }

    pub fn request(&mut self, batches: u32, epoch: u32) -> Result<Vec<DecodedBatch>> {
        let mut out = Vec::with_capacity(batches as usize);
        self.request_with(batches, epoch, |b| {
            out.push(b);
            Ok(())
        })?;
        Ok(out)
    }

    fn decode_batch(
        &mut self,
        header: BatchHeader,
        samples: Vec<super::protocol::WireSample>,
    ) -> Result<DecodedBatch> {
        match self.shape {
            None => self.shape = Some(header),
            Some(shape) if shape != header => {
                return Err(Error::Protocol(format!(
                    "batch header {header:?} differs from session header {shape:?}"
                )))
            }
            Some(_) => {}
        }
        let samples = samples
            .into_iter()
            .map(|s| {
                let meta = std::str::from_utf8(&s.meta)
                    .map_err(|_| Error::Protocol("metadata is not UTF-8".into()))?;
                let record = parse_record(meta)?;
                if record.label_index != s.label_index as usize {
                    return Err(Error::Protocol(format!(
                        "label index {} disagrees with metadata {}",
                        s.label_index, record.label_index
                    )));
                }
                if (record.n, record.l) != (header.frames as usize, header.side as u32) {
                    return Err(Error::Protocol(format!(
                        "{}: metadata shape differs from batch header",
                        record.sample_id
                    )));
                }
                if bytes_checksum(&s.payload) != record.frames_checksum {
                    return Err(Error::Integrity(format!(
                        "{}: payload checksum mismatch",
                        record.sample_id
                    )));
                }
                Ok(DecodedSample {
                    label_index: s.label_index,
                    record,
                    payload: s.payload,
                })
            })
            .collect::<Result<_>>()?;
        let batch = DecodedBatch {
            sequence: self.sequence,
            header,
            samples,
        };
        self.sequence += 1;
        Ok(batch)
    }
}

/// Connects, fetches `batches` batches for `epoch` and disconnects.
pub fn client_fetch(
    addr: impl ToSocketAddrs,
    batches: u32,
    epoch: u32,
) -> Result<Vec<DecodedBatch>> {
    StreamClient::connect(addr)?.request(batches, epoch)
}
