//! End-to-end generation: source catalog to stored dataset.

use std::path::{Path, PathBuf};

use image::RgbImage;
use rayon::prelude::*;

use crate::checksum::frames_checksum;
use crate::compositor::{
    generate_sample, load_rgb, prepare_batch_source, sample_id, BatchContext, SeedMaterial,
    SourceOrigin,
};
use crate::config::GenConfig;
use crate::dataset_io::{enumerate_sources, DatasetWriter, ManifestRecord, SourceDescriptor};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// A same-batch group ready to store or stream: one record and clip per
/// pool label, in pool order.
pub type Group = Vec<(ManifestRecord, Vec<RgbImage>)>;

/// Sources processed between two manifest flushes.
const GENERATE_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateSummary {
    pub sources: usize,
    pub samples: usize,
    pub manifest: PathBuf,
}

/// Generates the same-batch group for one source. `source_index` seeds the
/// group; it equals the catalog index for stored datasets and the session
/// cursor for live streams.
pub fn generate_group(
    image: &RgbImage,
    origin: SourceOrigin,
    source_index: u64,
    config: &GenConfig,
) -> Result<Group> {
    let ctx = BatchContext {
        global_seed: config.seed,
        source_index,
        epoch: config.epoch,
    };
    let source = prepare_batch_source(image, origin, config, ctx)?;
    crate::compositor::generate_batch(&source, config, ctx)?
        .into_iter()
        .map(|sample| {
            let record = ManifestRecord::from_sample(&sample, &source, config, config.format)?;
            Ok((record, sample.frames))
        })
        .collect()
}

pub fn generate_source_group(source: &SourceDescriptor, config: &GenConfig) -> Result<Group> {
    let image = source.load()?;
    generate_group(&image, source.origin(), source.index, config)
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Writes one same-batch group per source under `out_dir`. Output bytes and
/// manifest order do not depend on `workers`.
pub fn generate_dataset(
    in_dir: &Path,
    out_dir: &Path,
    config: &GenConfig,
    workers: usize,
) -> Result<GenerateSummary> {
    config.validate()?;
    let classes = config.label_pool()?.len();
    let sources = enumerate_sources(in_dir, config.input_mode, config.epoch, config.seed)?;
    let pool = worker_pool(workers)?;
    let mut writer = DatasetWriter::create(out_dir, config.format)?;
    let mut samples = 0;
    for chunk in sources.chunks(GENERATE_CHUNK) {
        for source in chunk {
            for label_index in 0..classes {
                writer.reserve(&sample_id(source.index, config.epoch, label_index))?;
            }
        }
        let store = writer.store();
        let groups: Vec<Vec<ManifestRecord>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|source| {
                    generate_source_group(source, config)?
                        .into_iter()
                        .map(|(record, frames)| {
                            store.write(&record.sample_id, &frames)?;
                            Ok(record)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for record in groups.iter().flatten() {
            writer.append(record)?;
            samples += 1;
        }
        log::info!("generated {samples} samples");
    }
    Ok(GenerateSummary {
        sources: sources.len(),
        samples,
        manifest: writer.finish()?,
    })
}

/// Rebuilds a sample's frames from its manifest record and source file and
/// checks them against the recorded checksum.
pub fn regenerate_sample(record: &ManifestRecord) -> Result<Vec<RgbImage>> {
    let path = PathBuf::from(&record.source_path);
    let image = load_rgb(&path)?;
    let origin = SourceOrigin {
        path,
        frame_index: record.source_frame_index,
    };
    let ctx = BatchContext {
        global_seed: record.global_seed,
        source_index: record.source_index,
        epoch: record.epoch,
    };
    let source = prepare_batch_source(&image, origin, &record.config, ctx)?;
    if source.offset != record.source_offset {
        return Err(Error::Integrity(format!(
            "{}: source offset {:?} differs from recorded {:?}",
            record.sample_id, source.offset, record.source_offset
        )));
    }
    let seed = SeedMaterial::new(
        record.global_seed,
        record.source_index,
        record.epoch,
        record.label_index,
    );
    if seed.seed != record.seed {
        return Err(Error::Integrity(format!(
            "{}: derived seed does not match the record",
            record.sample_id
        )));
    }
    let sample = generate_sample(
        &source,
        record.label(),
        &record.config,
        &mut rng_from_seed(seed.seed),
    )?;
    if frames_checksum(&sample.frames) != record.frames_checksum {
        return Err(Error::Integrity(format!(
            "{}: regenerated frames differ from the recorded checksum",
            record.sample_id
        )));
    }
    Ok(sample.frames)
}
