//! Dataset serialization: frame stores (PNG directories or raw clips), the
//! JSON-lines manifest, source enumeration and previews.

mod manifest;
mod preview;
mod raw_clip;
mod sources;

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};

use crate::checksum::frames_checksum;
use crate::config::OutputFormat;
use crate::error::{Error, Result};

pub use manifest::{parse_record, ManifestRecord, MANIFEST_FILE, SCHEMA_VERSION};
pub use preview::{render_animation, render_batch_sheet, render_contact_sheet, PreviewStyle};
pub use raw_clip::{
    decode_raw_clip, encode_raw_clip, frames_payload, payload_to_frames, RawClipHeader, CHANNELS,
    RAW_HEADER_LEN, RAW_MAGIC, RAW_VERSION,
};
pub use sources::{enumerate_sources, SourceDescriptor};

/// Location and layout of stored frames. Cheap to clone and safe to share
/// between writer threads.
#[derive(Debug, Clone)]
pub struct FrameStore {
    root: PathBuf,
    format: OutputFormat,
}

impl FrameStore {
    pub fn new(root: impl Into<PathBuf>, format: OutputFormat) -> Self {
        FrameStore {
            root: root.into(),
            format,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sample_dir(&self, sample_id: &str) -> PathBuf {
        self.root.join(sample_id)
    }

    pub fn clip_path(&self, sample_id: &str) -> PathBuf {
        self.root.join(format!("{sample_id}.mosc"))
    }

    pub fn frame_path(&self, sample_id: &str, frame: usize) -> PathBuf {
        self.sample_dir(sample_id).join(format!("{frame}.png"))
    }

    pub fn write(&self, sample_id: &str, frames: &[RgbImage]) -> Result<()> {
        match self.format {
            OutputFormat::Png => {
                fs::create_dir_all(self.sample_dir(sample_id))?;
                for (i, frame) in frames.iter().enumerate() {
                    frame.save_with_format(self.frame_path(sample_id, i), ImageFormat::Png)?;
                }
            }
            OutputFormat::Raw => {
                fs::write(self.clip_path(sample_id), encode_raw_clip(frames)?)?;
            }
        }
        Ok(())
    }

    /// Loads a record's frames and checks size and checksum.
    pub fn load(&self, record: &ManifestRecord) -> Result<Vec<RgbImage>> {
        let frames = match record.format {
            OutputFormat::Png => (0..record.n)
                .map(|i| {
                    let path = self.frame_path(&record.sample_id, i);
                    if !path.is_file() {
                        return Err(Error::Integrity(format!(
                            "missing frame {}",
                            path.display()
                        )));
                    }
                    Ok(image::open(&path)?.to_rgb8())
                })
                .collect::<Result<Vec<_>>>()?,
            OutputFormat::Raw => {
                let path = self.clip_path(&record.sample_id);
                let bytes = fs::read(&path).map_err(|e| {
                    Error::Integrity(format!("cannot read clip {}: {e}", path.display()))
                })?;
                let (header, frames) = decode_raw_clip(&bytes)?;
                if header.frames as usize != record.n || header.side as u32 != record.l {
                    return Err(Error::Integrity(format!(
                        "{}: clip header {:?} disagrees with the manifest",
                        record.sample_id, header
                    )));
                }
                frames
            }
        };
        if frames
            .iter()
            .any(|f| f.dimensions() != (record.l, record.l))
        {
            return Err(Error::Integrity(format!(
                "{}: frame size differs from L={}",
                record.sample_id, record.l
            )));
        }
        let sum = frames_checksum(&frames);
        if sum != record.frames_checksum {
            return Err(Error::Integrity(format!(
                "{}: frames checksum {sum:#018x} != manifest {:#018x}",
                record.sample_id, record.frames_checksum
            )));
        }
        Ok(frames)
    }
}

/// Writes frames and appends manifest lines. Opening a directory that
/// already holds a manifest appends to it, and sample ids stay unique across
/// the whole file.
pub struct DatasetWriter {
    store: FrameStore,
    manifest_path: PathBuf,
    manifest: BufWriter<File>,
    ids: HashSet<String>,
}

impl DatasetWriter {
    pub fn create(root: impl Into<PathBuf>, format: OutputFormat) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let manifest_path = root.join(MANIFEST_FILE);
        let mut ids = HashSet::new();
        if manifest_path.is_file() {
            for line in BufReader::new(File::open(&manifest_path)?).lines() {
                let line = line?;
                if !line.trim().is_empty() {
                    ids.insert(parse_record(&line)?.sample_id);
                }
            }
        }
        let manifest = BufWriter::new(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&manifest_path)?,
        );
        Ok(DatasetWriter {
            store: FrameStore::new(root, format),
            manifest_path,
            manifest,
            ids,
        })
    }

    pub fn store(&self) -> &FrameStore {
        &self.store
    }

    /// Claims a sample id before its frames are written.
    pub fn reserve(&mut self, sample_id: &str) -> Result<()> {
        if !self.ids.insert(sample_id.to_string()) {
            return Err(Error::DuplicateSample(sample_id.to_string()));
        }
        Ok(())
    }

    /// Appends a record whose id was reserved and whose frames are stored.
    pub fn append(&mut self, record: &ManifestRecord) -> Result<()> {
        if !self.ids.contains(&record.sample_id) {
            return Err(Error::Integrity(format!(
                "{} was not reserved before appending",
                record.sample_id
            )));
        }
        writeln!(self.manifest, "{}", record.to_json_line()?)?;
        Ok(())
    }

    pub fn write_sample(&mut self, record: &ManifestRecord, frames: &[RgbImage]) -> Result<()> {
        self.reserve(&record.sample_id)?;
        self.store.write(&record.sample_id, frames)?;
        self.append(record)
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.flush()?;
        Ok(self.manifest_path)
    }
}

/// Writes every `(record, frames)` pair and returns the manifest path.
pub fn write_dataset<I>(samples: I, out_dir: &Path, format: OutputFormat) -> Result<PathBuf>
where
    I: IntoIterator<Item = (ManifestRecord, Vec<RgbImage>)>,
{
    let mut writer = DatasetWriter::create(out_dir, format)?;
    for (mut record, frames) in samples {
        record.format = format;
        record.config.format = format;
        writer.write_sample(&record, &frames)?;
    }
    writer.finish()
}

#[derive(Debug, Clone)]
pub struct StoredSample {
    pub record: ManifestRecord,
    pub frames: Vec<RgbImage>,
}

/// A manifest plus its frame store. Records are parsed eagerly, frames are
/// loaded on demand.
#[derive(Debug, Clone)]
pub struct Dataset {
    manifest_path: PathBuf,
    root: PathBuf,
    records: Vec<ManifestRecord>,
}

impl Dataset {
    pub fn open(manifest_path: impl Into<PathBuf>) -> Result<Self> {
        let manifest_path = manifest_path.into();
        let root = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let file = File::open(&manifest_path).map_err(|e| {
            Error::Integrity(format!(
                "cannot open manifest {}: {e}",
                manifest_path.display()
            ))
        })?;
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record = parse_record(&line)?;
            if !seen.insert(record.sample_id.clone()) {
                return Err(Error::DuplicateSample(record.sample_id));
            }
            records.push(record);
        }
        Ok(Dataset {
            manifest_path,
            root,
            records,
        })
    }

    pub fn manifest_path(&self) -> &Path {
        &self.manifest_path
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, sample_id: &str) -> Option<&ManifestRecord> {
        self.records.iter().find(|r| r.sample_id == sample_id)
    }

    pub fn store_for(&self, record: &ManifestRecord) -> FrameStore {
        FrameStore::new(self.root.clone(), record.format)
    }

    pub fn load_frames(&self, record: &ManifestRecord) -> Result<Vec<RgbImage>> {
        self.store_for(record).load(record)
    }

    pub fn load(&self, record: &ManifestRecord) -> Result<StoredSample> {
        Ok(StoredSample {
            record: record.clone(),
            frames: self.load_frames(record)?,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Result<StoredSample>> + '_ {
        self.records.iter().map(|r| self.load(r))
    }
}

pub fn read_dataset(manifest_path: &Path) -> Result<Dataset> {
    Dataset::open(manifest_path)
}
