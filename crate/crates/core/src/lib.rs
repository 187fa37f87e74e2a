//! Pseudo-motion sequence generation from still images.
//!
//! A still image is turned into a short clip by sliding a square crop window
//! along a straight, evenly sampled trajectory. The trajectory direction and
//! speed form the class label, so a classifier trained on the clips has to
//! perceive motion. Optional static masking and color jitter keep the task
//! from being solved by trivial cues.

pub mod checksum;
pub mod compositor;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod label_space;
pub mod oracle;
pub mod pipeline;
pub mod seed;
pub mod stream;
pub mod trajectory;

pub use compositor::{
    generate_batch, generate_sample, BatchContext, MaskSpec, SequenceSample, SourceImage,
    SourceOrigin,
};
pub use config::{GenConfig, JitterConfig, JitterMode, MaskConfig, OutputFormat};
pub use error::{Error, Result};
pub use image::RgbImage;
pub use label_space::{build_label_pool, Axis, LabelPool, MotionLabel};
pub use oracle::{OracleMode, VerificationReport, VerifyOptions};
pub use pipeline::{generate_dataset, regenerate_sample, GenerateSummary};
pub use trajectory::{Displacement, Position, TrajectoryPlan};
