//! Source preparation, crop-sequence extraction, static masking, color
//! jitter and same-batch grouping.

mod jitter;
mod mask;
mod source;

use image::{imageops, RgbImage};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::GenConfig;
use crate::error::{Error, Result};
use crate::label_space::MotionLabel;
use crate::seed::{rng_from_seed, sample_seed, source_crop_seed};
use crate::trajectory::{plan_trajectory, TrajectoryPlan};

pub use jitter::{apply_params, color_jitter, JitterParams, JitterRecord};
pub use mask::{
    apply_static_mask, masked_area_checksum, masked_area_mismatches, sample_mask_spec, MaskSpec,
};
pub use source::{load_rgb, prepare_source, resized_dims, SourceImage, SourceOrigin};

/// Inputs the per-sample seed was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedMaterial {
    pub global_seed: u64,
    pub source_index: u64,
    pub epoch: u32,
    pub label_index: usize,
    pub seed: u64,
}

impl SeedMaterial {
    pub fn new(global_seed: u64, source_index: u64, epoch: u32, label_index: usize) -> Self {
        SeedMaterial {
            global_seed,
            source_index,
            epoch,
            label_index,
            seed: sample_seed(global_seed, source_index, epoch as u64, label_index as u64),
        }
    }

    pub fn sample_id(&self) -> String {
        sample_id(self.source_index, self.epoch, self.label_index)
    }
}

/// Canonical sample id; lexicographic order equals (source, epoch, class)
/// order for indices below the padding width.
pub fn sample_id(source_index: u64, epoch: u32, label_index: usize) -> String {
    format!("s{source_index:06}-e{epoch:04}-c{label_index:02}")
}

/// Masked-area checksums before and after color jitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskChecksums {
    pub pre_jitter: u64,
    pub post_jitter: u64,
}

#[derive(Debug, Clone)]
pub struct SequenceSample {
    pub frames: Vec<RgbImage>,
    pub label_index: usize,
    pub label: MotionLabel,
    pub plan: TrajectoryPlan,
    pub mask: Option<MaskSpec>,
    pub jitter: Option<JitterRecord>,
    pub mask_checksums: Option<MaskChecksums>,
    pub seed: Option<SeedMaterial>,
}

/// Identifies one same-batch group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchContext {
    pub global_seed: u64,
    pub source_index: u64,
    pub epoch: u32,
}

/// Copies the `L x L` crop at every planned position.
pub fn extract_sequence(source: &RgbImage, plan: &TrajectoryPlan) -> Result<Vec<RgbImage>> {
    if source.dimensions() != (plan.source_width, plan.source_height) {
        return Err(Error::Integrity(format!(
            "plan expects a {}x{} source, got {:?}",
            plan.source_width,
            plan.source_height,
            source.dimensions()
        )));
    }
    plan.check_bounds()?;
    Ok(plan
        .positions
        .iter()
        .map(|p| {
            imageops::crop_imm(source, p.x as u32, p.y as u32, plan.crop, plan.crop).to_image()
        })
        .collect())
}

/// Runs the full pipeline for one label. Random draws happen in a fixed
/// order: start corner, mask (when enabled), jitter (when enabled).
pub fn generate_sample<R: Rng + ?Sized>(
    source: &SourceImage,
    label: MotionLabel,
    config: &GenConfig,
    rng: &mut R,
) -> Result<SequenceSample> {
    config.validate()?;
    let pool = config.label_pool()?;
    let label_index = pool
        .index_of(label)
        .ok_or_else(|| Error::Config(format!("label {label} is not in the configured pool")))?;
    if source.size() != config.source_size || source.pixels.height() != config.source_size {
        return Err(Error::Config(format!(
            "source is {:?}, config expects {}x{}",
            source.pixels.dimensions(),
            config.source_size,
            config.source_size
        )));
    }

    let plan = plan_trajectory(
        rng,
        label,
        pool.granularity(),
        config.source_size,
        config.crop,
        config.frames,
    )?;
    let mut frames = extract_sequence(&source.pixels, &plan)?;

    let mask = if config.mask.enabled {
        let spec = sample_mask_spec(
            rng,
            config.crop,
            config.frames,
            (config.mask.ratio_lo, config.mask.ratio_hi),
        )?;
        apply_static_mask(&mut frames, &spec)?;
        Some(spec)
    } else {
        None
    };
    let pre_jitter = mask.map(|m| masked_area_checksum(&frames, &m));

    let jitter = if config.jitter.enabled {
        Some(color_jitter(
            &mut frames,
            &config.jitter,
            config.jitter.mode,
            rng,
        )?)
    } else {
        None
    };
    let mask_checksums = mask.zip(pre_jitter).map(|(m, pre)| MaskChecksums {
        pre_jitter: pre,
        post_jitter: if jitter.is_some() {
            masked_area_checksum(&frames, &m)
        } else {
            pre
        },
    });

    Ok(SequenceSample {
        frames,
        label_index,
        label,
        plan,
        mask,
        jitter,
        mask_checksums,
        seed: None,
    })
}

/// Prepares the shared source for a same-batch group with the group's crop
/// seed.
pub fn prepare_batch_source(
    image: &RgbImage,
    origin: SourceOrigin,
    config: &GenConfig,
    ctx: BatchContext,
) -> Result<SourceImage> {
    let mut rng = rng_from_seed(source_crop_seed(
        ctx.global_seed,
        ctx.source_index,
        ctx.epoch as u64,
    ));
    prepare_source(image, origin, config.source_size, config.crop, &mut rng)
}

/// One sample per pool label, in canonical pool order, each with its own
/// derived generator.
pub fn generate_batch(
    source: &SourceImage,
    config: &GenConfig,
    ctx: BatchContext,
) -> Result<Vec<SequenceSample>> {
    let pool = config.label_pool()?;
    pool.labels()
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let seed = SeedMaterial::new(ctx.global_seed, ctx.source_index, ctx.epoch, i);
            let mut rng = rng_from_seed(seed.seed);
            let mut sample = generate_sample(source, label, config, &mut rng)?;
            sample.seed = Some(seed);
            Ok(sample)
        })
        .collect()
}
