//! Label recovery from pixels.
//!
//! The oracle never looks at the generator's plan: it block-matches
//! consecutive frames, sums the per-step window displacements and maps the
//! total to the pool label whose expected rounded displacement is nearest.
//! White-box mode matches inside the recorded unmasked square; black-box
//! mode splits the frame into a grid and keeps the textured tile with the
//! largest total displacement.

mod block_match;

use std::str::FromStr;

use image::RgbImage;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compositor::{masked_area_checksum, masked_area_mismatches, MaskSpec, SequenceSample};
use crate::config::{GenConfig, JitterMode};
use crate::dataset_io::{Dataset, ManifestRecord};
use crate::error::{Error, Result};
use crate::label_space::LabelPool;
use crate::seed::{derive_seed, rng_from_seed, SeedDomain};
use crate::trajectory::motion_distance;

pub use block_match::{
    estimate_displacement, is_flat, DisplacementEstimate, Region, LOW_CONFIDENCE,
};

/// Tiles per side in black-box mode.
pub const BLACK_BOX_GRID: u32 = 4;
/// Per-channel intensity range at or below which a region counts as flat.
pub const FLAT_TOLERANCE: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    #[default]
    WhiteBox,
    BlackBox,
}

impl FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" | "white-box" => Ok(OracleMode::WhiteBox),
            "black" | "black-box" => Ok(OracleMode::BlackBox),
            other => Err(Error::Config(format!(
                "unknown oracle mode {other:?} (expected white or black)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// `None` when the content carries no usable motion signal.
    pub label_index: Option<usize>,
    pub estimate: Option<DisplacementEstimate>,
    pub region: Option<Region>,
}

impl Classification {
    fn unclassifiable() -> Self {
        Classification {
            label_index: None,
            estimate: None,
            region: None,
        }
    }
}

/// Expected rounded total displacement of every pool label.
pub fn expected_totals(pool: &LabelPool, config: &GenConfig) -> Result<Vec<(i64, i64)>> {
    pool.labels()
        .iter()
        .map(|&l| {
            motion_distance(
                l,
                config.source_size,
                config.source_size,
                config.crop,
                pool.granularity(),
            )
            .map(|d| d.rounded())
        })
        .collect()
}

/// Pool index whose expected displacement is nearest to `total`; ties go to
/// the smaller speed, then to the lower index.
pub fn nearest_label(total: (i64, i64), pool: &LabelPool, config: &GenConfig) -> Result<usize> {
    let expected = expected_totals(pool, config)?;
    expected
        .iter()
        .zip(pool.labels())
        .enumerate()
        .min_by_key(|(i, (e, label))| {
            let (dx, dy) = (total.0 - e.0, total.1 - e.1);
            (dx * dx + dy * dy, label.speed(), *i)
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Config("empty label pool".into()))
}

fn estimate_in(
    frames: &[RgbImage],
    region: Region,
    radius: u32,
) -> Result<Option<DisplacementEstimate>> {
    if is_flat(frames, region, FLAT_TOLERANCE) {
        return Ok(None);
    }
    match estimate_displacement(frames, region, radius) {
        Ok(est) => Ok(Some(est)),
        Err(Error::RegionTooSmall { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn classify_frames(
    frames: &[RgbImage],
    mask: Option<&MaskSpec>,
    config: &GenConfig,
    pool: &LabelPool,
    mode: OracleMode,
) -> Result<Classification> {
    let Some(first) = frames.first() else {
        return Ok(Classification::unclassifiable());
    };
    let radius = config.search_radius();
    let (region, estimate) = match mode {
        OracleMode::WhiteBox => {
            let region = match mask {
                Some(m) => Region::new(m.x, m.y, m.side, m.side),
                None => Region::full(first),
            };
            (region, estimate_in(frames, region, radius)?)
        }
        OracleMode::BlackBox => {
            let tile = first.width() / BLACK_BOX_GRID;
            let mut best: Option<(Region, DisplacementEstimate)> = None;
            for ty in 0..BLACK_BOX_GRID {
                for tx in 0..BLACK_BOX_GRID {
                    let region = Region::new(tx * tile, ty * tile, tile, tile);
                    if region.width < 8 {
                        return Err(Error::RegionTooSmall {
                            width: tile,
                            height: tile,
                        });
                    }
                    if let Some(est) = estimate_in(frames, region, radius)? {
                        if best
                            .as_ref()
                            .is_none_or(|(_, b)| est.magnitude_sq() > b.magnitude_sq())
                        {
                            best = Some((region, est));
                        }
                    }
                }
            }
            match best {
                Some((region, est)) => (region, Some(est)),
                None => return Ok(Classification::unclassifiable()),
            }
        }
    };
    let Some(estimate) = estimate else {
        return Ok(Classification::unclassifiable());
    };
    let label_index = nearest_label(estimate.total, pool, config)?;
    Ok(Classification {
        label_index: Some(label_index),
        estimate: Some(estimate),
        region: Some(region),
    })
}

pub fn classify_sample(
    sample: &SequenceSample,
    config: &GenConfig,
    pool: &LabelPool,
    mode: OracleMode,
) -> Result<Classification> {
    let mask = match mode {
        OracleMode::WhiteBox => sample.mask.as_ref(),
        OracleMode::BlackBox => None,
    };
    classify_frames(&sample.frames, mask, config, pool, mode)
}

/// Result of checking one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub truth: usize,
    pub predicted: Option<usize>,
    pub confidence: Option<f64>,
    /// `Some(ok)` when the mask could be checked for exactness.
    pub mask_exact: Option<bool>,
}

/// Whether the masked area can be compared bytewise: per-frame jitter
/// legitimately changes it.
fn mask_checkable(jitter: Option<JitterMode>) -> bool {
    !matches!(jitter, Some(JitterMode::PerFrame))
}

fn mask_outcome(
    frames: &[RgbImage],
    mask: Option<&MaskSpec>,
    jitter: Option<JitterMode>,
    pre_jitter_checksum: Option<u64>,
) -> Option<bool> {
    let mask = mask?;
    if !mask_checkable(jitter) {
        return None;
    }
    let mut ok = masked_area_mismatches(frames, mask) == 0;
    if jitter.is_none() {
        if let Some(sum) = pre_jitter_checksum {
            ok &= masked_area_checksum(frames, mask) == sum;
        }
    }
    Some(ok)
}

pub fn check_sample(
    sample: &SequenceSample,
    config: &GenConfig,
    pool: &LabelPool,
    mode: OracleMode,
) -> Result<SampleOutcome> {
    let c = classify_sample(sample, config, pool, mode)?;
    Ok(SampleOutcome {
        truth: sample.label_index,
        predicted: c.label_index,
        confidence: c.estimate.map(|e| e.confidence),
        mask_exact: mask_outcome(
            &sample.frames,
            sample.mask.as_ref(),
            sample.jitter.as_ref().map(|j| j.mode),
            sample.mask_checksums.map(|m| m.pre_jitter),
        ),
    })
}

pub fn check_record(
    record: &ManifestRecord,
    frames: &[RgbImage],
    pool: &LabelPool,
    mode: OracleMode,
) -> Result<SampleOutcome> {
    let mask = match mode {
        OracleMode::WhiteBox => record.mask.as_ref(),
        OracleMode::BlackBox => None,
    };
    let c = classify_frames(frames, mask, &record.config, pool, mode)?;
    Ok(SampleOutcome {
        truth: record.label_index,
        predicted: c.label_index,
        confidence: c.estimate.map(|e| e.confidence),
        mask_exact: mask_outcome(
            frames,
            record.mask.as_ref(),
            record.jitter.as_ref().map(|j| j.mode),
            record.mask_checksums.map(|m| m.pre_jitter),
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub mode: OracleMode,
    pub samples_checked: u64,
    pub classified: u64,
    pub unclassifiable: u64,
    /// Fraction of classified samples whose recovered label matches.
    pub label_agreement: f64,
    /// Rows are ground-truth classes, columns are recovered classes.
    pub per_class_confusion: Vec<Vec<u64>>,
    pub mask_checks: u64,
    pub mask_exactness_failures: u64,
    pub mean_confidence: f64,
    pub low_confidence: u64,
    pub empty: bool,
    pub permuted_labels: bool,
    pub min_agreement: Option<f64>,
    pub passed: bool,
}

/// Order-independent accumulator behind [`VerificationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBuilder {
    mode: OracleMode,
    samples: u64,
    unclassifiable: u64,
    confusion: Vec<Vec<u64>>,
    mask_checks: u64,
    mask_failures: u64,
    confidence_sum: f64,
    low_confidence: u64,
}

impl ReportBuilder {
    pub fn new(classes: usize, mode: OracleMode) -> Self {
        ReportBuilder {
            mode,
            samples: 0,
            unclassifiable: 0,
            confusion: vec![vec![0; classes]; classes],
            mask_checks: 0,
            mask_failures: 0,
            confidence_sum: 0.0,
            low_confidence: 0,
        }
    }

    pub fn add(&mut self, outcome: &SampleOutcome) -> Result<()> {
        let classes = self.confusion.len();
        if outcome.truth >= classes || outcome.predicted.is_some_and(|p| p >= classes) {
            return Err(Error::Integrity(format!(
                "class index outside the {classes}-class pool"
            )));
        }
        self.samples += 1;
        match outcome.predicted {
            Some(p) => self.confusion[outcome.truth][p] += 1,
            None => self.unclassifiable += 1,
        }
        if let Some(c) = outcome.confidence {
            self.confidence_sum += c;
            if c < LOW_CONFIDENCE {
                self.low_confidence += 1;
            }
        }
        if let Some(ok) = outcome.mask_exact {
            self.mask_checks += 1;
            if !ok {
                self.mask_failures += 1;
            }
        }
        Ok(())
    }

    pub fn merge(mut self, other: ReportBuilder) -> Self {
        self.samples += other.samples;
        self.unclassifiable += other.unclassifiable;
        for (row, other_row) in self.confusion.iter_mut().zip(other.confusion) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
        self.mask_checks += other.mask_checks;
        self.mask_failures += other.mask_failures;
        self.confidence_sum += other.confidence_sum;
        self.low_confidence += other.low_confidence;
        self
    }

    pub fn finish(self, min_agreement: Option<f64>, permuted_labels: bool) -> VerificationReport {
        let classified = self.samples - self.unclassifiable;
        let trace: u64 = (0..self.confusion.len())
            .map(|i| self.confusion[i][i])
            .sum();
        let agreement = if classified == 0 {
            0.0
        } else {
            trace as f64 / classified as f64
        };
        let empty = self.samples == 0;
        let agreement_ok = match min_agreement {
            Some(min) => classified > 0 && agreement >= min,
            None => true,
        };
        VerificationReport {
            mode: self.mode,
            samples_checked: self.samples,
            classified,
            unclassifiable: self.unclassifiable,
            label_agreement: agreement,
            per_class_confusion: self.confusion,
            mask_checks: self.mask_checks,
            mask_exactness_failures: self.mask_failures,
            mean_confidence: if classified == 0 {
                0.0
            } else {
                self.confidence_sum / classified as f64
            },
            low_confidence: self.low_confidence,
            empty,
            permuted_labels,
            min_agreement,
            passed: agreement_ok && self.mask_failures == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub mode: OracleMode,
    pub min_agreement: Option<f64>,
    /// Shuffle ground-truth labels with this seed (a chance-level control).
    pub permute_seed: Option<u64>,
}

/// Ground-truth label indices, optionally permuted for the control run.
pub fn ground_truth(labels: &[usize], permute_seed: Option<u64>) -> Vec<usize> {
    let mut truth = labels.to_vec();
    if let Some(seed) = permute_seed {
        let mut rng = rng_from_seed(derive_seed(SeedDomain::LabelPermutation, &[seed]));
        truth.shuffle(&mut rng);
    }
    truth
}

const VERIFY_CHUNK: usize = 64;

/// Loads, checks and classifies every sample of a dataset in parallel.
/// Integrity failures (missing frames, checksum mismatch) abort with an
/// error.
pub fn verify_dataset(dataset: &Dataset, opts: &VerifyOptions) -> Result<VerificationReport> {
    let records = dataset.records();
    let Some(first) = records.first() else {
        return Ok(ReportBuilder::new(0, opts.mode)
            .finish(opts.min_agreement, opts.permute_seed.is_some()));
    };
    let pool = first.config.label_pool()?;
    if records
        .iter()
        .any(|r| r.config.speeds != first.config.speeds || r.config.axis != first.config.axis)
    {
        return Err(Error::Schema("dataset mixes different label pools".into()));
    }
    let labels: Vec<usize> = records.iter().map(|r| r.label_index).collect();
    let truth = ground_truth(&labels, opts.permute_seed);

    let mut report = ReportBuilder::new(pool.len(), opts.mode);
    for (chunk, truth) in records.chunks(VERIFY_CHUNK).zip(truth.chunks(VERIFY_CHUNK)) {
        let partial = chunk
            .par_iter()
            .zip(truth.par_iter())
            .map(|(record, &t)| {
                let frames = dataset.load_frames(record)?;
                let mut outcome = check_record(record, &frames, &pool, opts.mode)?;
                outcome.truth = t;
                Ok(outcome)
            })
            .try_fold(
                || ReportBuilder::new(pool.len(), opts.mode),
                |mut acc, outcome: Result<SampleOutcome>| {
                    acc.add(&outcome?)?;
                    Ok::<_, Error>(acc)
                },
            )
            .try_reduce(
                || ReportBuilder::new(pool.len(), opts.mode),
                |a, b| Ok(a.merge(b)),
            )?;
        report = report.merge(partial);
    }
    Ok(report.finish(opts.min_agreement, opts.permute_seed.is_some()))
}
