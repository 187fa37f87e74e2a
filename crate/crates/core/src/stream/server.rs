use std::collections::BTreeMap;
use std::io::{BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::config::{GenConfig, OutputFormat};
use crate::dataset_io::{enumerate_sources, frames_payload, Dataset, SourceDescriptor, CHANNELS};
use crate::error::{Error, Result};
use crate::pipeline::{generate_group, Group};

use super::protocol::{
    write_batch, write_end, write_err, write_hello, BatchHeader, ErrorCode, Request, WireSample,
    REQUEST_LEN,
};

/// Where batches come from.
pub enum StreamSource {
    /// Generate on the fly from a fixed source catalog.
    Live {
        catalog: Vec<SourceDescriptor>,
        config: GenConfig,
    },
    /// Replay a stored dataset, one same-batch group per `(epoch, source)`.
    Replay {
        dataset: Dataset,
        /// Record indices grouped by epoch, then by source index.
        groups: BTreeMap<u32, Vec<Vec<usize>>>,
    },
}

impl StreamSource {
    pub fn live(in_dir: &Path, config: &GenConfig) -> Result<Self> {
        config.validate()?;
        let mut config = config.clone();
        config.format = OutputFormat::Raw;
        let catalog = enumerate_sources(in_dir, config.input_mode, config.epoch, config.seed)?;
        Ok(StreamSource::Live { catalog, config })
    }

    pub fn replay(manifest: &Path) -> Result<Self> {
        let dataset = Dataset::open(manifest)?;
        let mut by_key: BTreeMap<(u32, u64), Vec<usize>> = BTreeMap::new();
        for (i, r) in dataset.records().iter().enumerate() {
            by_key.entry((r.epoch, r.source_index)).or_default().push(i);
        }
        if let Some(first) = dataset.records().first() {
            let shape = (first.n, first.l, first.c);
            if dataset.records().iter().any(|r| (r.n, r.l, r.c) != shape) {
                return Err(Error::Schema(
                    "replay needs one clip shape and label pool across the dataset".into(),
                ));
            }
        }
        let mut groups: BTreeMap<u32, Vec<Vec<usize>>> = BTreeMap::new();
        for ((epoch, _), mut indices) in by_key {
            indices.sort_by_key(|&i| dataset.records()[i].label_index);
            groups.entry(epoch).or_default().push(indices);
        }
        Ok(StreamSource::Replay { dataset, groups })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ServerOptions {
    /// Sessions served at once; further connections wait in the backlog.
    pub concurrency: usize,
    /// How long a client may take to send each request.
    pub request_timeout: Duration,
}

impl Default for ServerOptions {
    fn default() -> Self {
        ServerOptions {
            concurrency: 4,
            request_timeout: Duration::from_secs(30),
        }
    }
}

/// Counting semaphore bounding live sessions.
struct Slots {
    free: Mutex<usize>,
    freed: Condvar,
}

impl Slots {
    fn acquire(&self) {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.freed.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
    }

    fn release(&self) {
        *self.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.freed.notify_one();
    }
}

struct SlotGuard(Arc<Slots>);

impl Drop for SlotGuard {
    fn drop(&mut self) {
        self.0.release();
    }
}

#[derive(Clone)]
pub struct ShutdownHandle {
    flag: Arc<AtomicBool>,
    addr: SocketAddr,
}

impl ShutdownHandle {
    /// Stops accepting connections. Sessions in flight run to completion.
    pub fn shutdown(&self) {
        self.flag.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
    }
}

pub struct Server {
    listener: TcpListener,
    source: Arc<StreamSource>,
    options: ServerOptions,
    shutdown: Arc<AtomicBool>,
}

impl Server {
    pub fn bind(
        addr: impl ToSocketAddrs,
        source: StreamSource,
        options: ServerOptions,
    ) -> Result<Self> {
        if options.concurrency == 0 {
            return Err(Error::Config("concurrency limit must be at least 1".into()));
        }
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            source: Arc::new(source),
            options,
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    pub fn shutdown_handle(&self) -> Result<ShutdownHandle> {
        Ok(ShutdownHandle {
            flag: self.shutdown.clone(),
            addr: self.local_addr()?,
        })
    }

    /// Accepts connections until shut down, one thread per session.
    pub fn serve(self) -> Result<()> {
        let slots = Arc::new(Slots {
            free: Mutex::new(self.options.concurrency),
            freed: Condvar::new(),
        });
        let mut sessions: Vec<JoinHandle<()>> = Vec::new();
        for conn in self.listener.incoming() {
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
            let stream = match conn {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            slots.acquire();
            if self.shutdown.load(Ordering::SeqCst) {
                slots.release();
                break;
            }
            let guard = SlotGuard(slots.clone());
            let source = self.source.clone();
            let options = self.options;
            sessions.retain(|h| !h.is_finished());
            sessions.push(thread::spawn(move || {
                let _guard = guard;
                let peer = stream.peer_addr().ok();
                if let Err(e) = run_session(stream, &source, options) {
                    log::debug!("session {peer:?} ended: {e}");
                }
            }));
        }
        for s in sessions {
            let _ = s.join();
        }
        Ok(())
    }

    /// Runs the server on a background thread.
    pub fn spawn(self) -> Result<RunningServer> {
        let addr = self.local_addr()?;
        let handle = self.shutdown_handle()?;
        let join = thread::spawn(move || self.serve());
        Ok(RunningServer { addr, handle, join })
    }
}

pub struct RunningServer {
    pub addr: SocketAddr,
    handle: ShutdownHandle,
    join: JoinHandle<Result<()>>,
}

impl RunningServer {
    pub fn shutdown(self) -> Result<()> {
        self.handle.shutdown();
        self.join
            .join()
            .map_err(|_| Error::Protocol("server thread panicked".into()))?
    }
}

/// Per-connection state: independent cursors so sessions never share
/// progress.
struct Session<'a> {
    source: &'a StreamSource,
    live_cursor: u64,
    replay_cursors: BTreeMap<u32, usize>,
    shape: Option<(u16, u16, u16, u8)>,
}

fn wire_group(group: Group) -> Result<(BatchHeader, Vec<WireSample>)> {
    let first = group
        .first()
        .ok_or_else(|| Error::Integrity("empty same-batch group".into()))?;
    let header = BatchHeader {
        sample_count: u16::try_from(group.len())
            .map_err(|_| Error::Protocol("group too large".into()))?,
        frames: u16::try_from(first.0.n).map_err(|_| Error::Protocol("N too large".into()))?,
        side: u16::try_from(first.0.l).map_err(|_| Error::Protocol("L too large".into()))?,
        channels: CHANNELS,
    };
    let samples = group
        .into_iter()
        .map(|(record, frames)| {
            Ok(WireSample {
                label_index: u8::try_from(record.label_index)
                    .map_err(|_| Error::Protocol("label index exceeds u8".into()))?,
                meta: record.to_json_line()?.into_bytes(),
                payload: frames_payload(&frames),
            })
        })
        .collect::<Result<_>>()?;
    Ok((header, samples))
}

impl Session<'_> {
    fn next_group(&mut self, epoch: u32) -> Result<Group> {
        match self.source {
            StreamSource::Live { catalog, config } => {
                let cursor = self.live_cursor;
                self.live_cursor += 1;
                let source = &catalog[(cursor % catalog.len() as u64) as usize];
                let config = GenConfig {
                    epoch,
                    ..config.clone()
                };
                generate_group(&source.load()?, source.origin(), cursor, &config)
            }
            StreamSource::Replay { dataset, groups } => {
                let list = groups
                    .get(&epoch)
                    .ok_or_else(|| Error::Config(format!("no stored samples for epoch {epoch}")))?;
                let cursor = self.replay_cursors.entry(epoch).or_default();
                let indices = &list[*cursor % list.len()];
                *cursor += 1;
                indices
                    .iter()
                    .map(|&i| {
                        let record = dataset.records()[i].clone();
                        let frames = dataset.load_frames(&record)?;
                        Ok((record, frames))
                    })
                    .collect()
            }
        }
    }

    fn check_shape(&mut self, header: &BatchHeader) -> Result<()> {
        let shape = (
            header.sample_count,
            header.frames,
            header.side,
            header.channels,
        );
        match self.shape {
            None => self.shape = Some(shape),
            Some(s) if s != shape => {
                return Err(Error::Integrity(format!(
                    "batch shape {shape:?} differs from session shape {s:?}"
                )))
            }
            Some(_) => {}
        }
        Ok(())
    }
}

fn read_request(stream: &mut TcpStream) -> Result<Option<Request>> {
    let mut buf = [0u8; REQUEST_LEN];
    let mut filled = 0;
    while filled < REQUEST_LEN {
        match stream.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("truncated request".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(Request::decode(buf)))
}

fn error_code(e: &Error) -> ErrorCode {
    match e {
        Error::Protocol(_) => ErrorCode::BadRequest,
        Error::Config(_) => ErrorCode::NoData,
        Error::Io(io)
            if matches!(
                io.kind(),
                std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
            ) =>
        {
            ErrorCode::Timeout
        }
        _ => ErrorCode::Internal,
    }
}

fn run_session(mut stream: TcpStream, source: &StreamSource, options: ServerOptions) -> Result<()> {
    stream.set_read_timeout(Some(options.request_timeout))?;
    stream.set_nodelay(true)?;
    let mut out = BufWriter::with_capacity(1 << 16, stream.try_clone()?);
    write_hello(&mut out)?;
    out.flush()?;
    let mut session = Session {
        source,
        live_cursor: 0,
        replay_cursors: BTreeMap::new(),
        shape: None,
    };
    loop {
        let request = match read_request(&mut stream) {
            Ok(None) => return Ok(()),
            Ok(Some(r)) if r.batches > 0 => r,
            Ok(Some(_)) => {
                return fail(&mut out, Error::Protocol("request for zero batches".into()))
            }
            Err(e) => return fail(&mut out, e),
        };
        for _ in 0..request.batches {
            let batch = session
                .next_group(request.epoch)
                .and_then(wire_group)
                .and_then(|(header, samples)| {
                    session.check_shape(&header)?;
                    Ok((header, samples))
                });
            match batch {
                Ok((header, samples)) => {
                    write_batch(&mut out, header, &samples)?;
                    out.flush()?;
                }
                Err(e) => return fail(&mut out, e),
            }
        }
        write_end(&mut out)?;
        out.flush()?;
    }
}

/// Reports `e` to the client as an ERR frame and ends the session.
fn fail<W: Write>(out: &mut W, e: Error) -> Result<()> {
    let _ = write_err(out, error_code(&e), &e.to_string());
    let _ = out.flush();
    Err(e)
}
