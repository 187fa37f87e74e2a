use serde::{Deserialize, Serialize};

use crate::checksum::frames_checksum;
use crate::compositor::{JitterRecord, MaskChecksums, MaskSpec, SequenceSample, SourceImage};
use crate::config::{GenConfig, OutputFormat};
use crate::error::{Error, Result};
use crate::label_space::{build_label_pool, MotionLabel};
use crate::trajectory::{Displacement, Position};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SCHEMA_VERSION: u32 = 1;

/// One JSON-lines manifest entry. Carries everything needed to regenerate
/// the sample from its source file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub schema_version: u32,
    pub sample_id: String,
    pub source_path: String,
    #[serde(default)]
    pub source_frame_index: Option<u32>,
    pub source_index: u64,
    /// Square-crop offset applied when the source was prepared.
    pub source_offset: [u32; 2],
    pub epoch: u32,
    pub label_index: usize,
    pub label_xy: [i32; 2],
    #[serde(rename = "K")]
    pub k: u32,
    #[serde(rename = "C")]
    pub c: u32,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(rename = "L_s")]
    pub l_s: u32,
    pub start: Position,
    pub distance: Displacement,
    pub positions: Vec<Position>,
    #[serde(default)]
    pub mask: Option<MaskSpec>,
    #[serde(default)]
    pub jitter: Option<JitterRecord>,
    #[serde(default)]
    pub mask_checksums: Option<MaskChecksums>,
    pub seed: u64,
    pub global_seed: u64,
    pub frames_checksum: u64,
    pub format: OutputFormat,
    /// Effective generation config, echoed for auditing.
    pub config: GenConfig,
}

const KNOWN_FIELDS: &[&str] = &[
    "schema_version",
    "sample_id",
    "source_path",
    "source_frame_index",
    "source_index",
    "source_offset",
    "epoch",
    "label_index",
    "label_xy",
    "K",
    "C",
    "N",
    "L",
    "L_s",
    "start",
    "distance",
    "positions",
    "mask",
    "jitter",
    "mask_checksums",
    "seed",
    "global_seed",
    "frames_checksum",
    "format",
    "config",
];

impl ManifestRecord {
    pub fn from_sample(
        sample: &SequenceSample,
        source: &SourceImage,
        config: &GenConfig,
        format: OutputFormat,
    ) -> Result<Self> {
        let seed = sample
            .seed
            .ok_or_else(|| Error::Config("sample has no seed material".into()))?;
        let mut config = config.clone();
        config.format = format;
        Ok(ManifestRecord {
            schema_version: SCHEMA_VERSION,
            sample_id: seed.sample_id(),
            source_path: source.origin.path.to_string_lossy().into_owned(),
            source_frame_index: source.origin.frame_index,
            source_index: seed.source_index,
            source_offset: source.offset,
            epoch: seed.epoch,
            label_index: sample.label_index,
            label_xy: [sample.label.x, sample.label.y],
            k: config.granularity()?,
            c: config.speeds,
            n: config.frames,
            l: config.crop,
            l_s: config.source_size,
            start: sample.plan.start,
            distance: sample.plan.distance,
            positions: sample.plan.positions.clone(),
            mask: sample.mask,
            jitter: sample.jitter.clone(),
            mask_checksums: sample.mask_checksums,
            seed: seed.seed,
            global_seed: seed.global_seed,
            frames_checksum: frames_checksum(&sample.frames),
            format,
            config,
        })
    }

    pub fn label(&self) -> MotionLabel {
        MotionLabel::new(self.label_xy[0], self.label_xy[1])
    }

    /// Structural checks that do not need the frames.
    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.n {
            return Err(Error::Schema(format!(
                "{}: {} positions for N={}",
                self.sample_id,
                self.positions.len(),
                self.n
            )));
        }
        let pool = build_label_pool(self.k, self.config.axis)?;
        if pool.index_of(self.label()) != Some(self.label_index) {
            return Err(Error::Schema(format!(
                "{}: label {} does not have class index {}",
                self.sample_id,
                self.label(),
                self.label_index
            )));
        }
        if let Some(mask) = &self.mask {
            mask.validate(self.l, self.n)
                .map_err(|e| Error::Schema(format!("{}: {e}", self.sample_id)))?;
        }
        Ok(())
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Parses one manifest line. Unknown fields are ignored with a warning;
/// missing required fields or another schema version are errors.
pub fn parse_record(line: &str) -> Result<ManifestRecord> {
    let value: serde_json::Value = serde_json::from_str(line)
        .map_err(|e| Error::Schema(format!("malformed manifest line: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Schema("manifest line is not a JSON object".into()))?;
    match obj.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::Schema(format!(
                "schema version {v} is not supported (expected {SCHEMA_VERSION})"
            )))
        }
        None => return Err(Error::Schema("missing field `schema_version`".into())),
    }
    for key in obj.keys().filter(|k| !KNOWN_FIELDS.contains(&k.as_str())) {
        log::warn!("ignoring unknown manifest field {key:?}");
    }
    let record: ManifestRecord =
        serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    record.validate()?;
    Ok(record)
}
