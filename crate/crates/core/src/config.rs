//! Generation settings shared by the generator, the dataset writer, the
//! oracle and the streaming server.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label_space::{build_label_pool, per_axis_speed_count_to_k, Axis, LabelPool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JitterMode {
    /// Independent parameters for every frame.
    #[default]
    PerFrame,
    /// One parameter draw applied to the whole clip.
    PerClip,
}

impl FromStr for JitterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-frame" | "frame" => Ok(JitterMode::PerFrame),
            "per-clip" | "clip" => Ok(JitterMode::PerClip),
            other => Err(Error::Config(format!(
                "unknown jitter mode {other:?} (expected per-frame or per-clip)"
            ))),
        }
    }
}

impl fmt::Display for JitterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JitterMode::PerFrame => "per-frame",
            JitterMode::PerClip => "per-clip",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    pub enabled: bool,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            enabled: true,
            ratio_lo: 0.3,
            ratio_hi: 0.5,
        }
    }
}

/// Sampling ranges for color jitter. Brightness, contrast and saturation are
/// multiplicative factors in `[0, 2]`; hue is a shift in turns in
/// `[-0.5, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JitterConfig {
    pub enabled: bool,
    pub mode: JitterMode,
    pub brightness: [f32; 2],
    pub contrast: [f32; 2],
    pub saturation: [f32; 2],
    pub hue: [f32; 2],
}

impl Default for JitterConfig {
    fn default() -> Self {
        JitterConfig {
            enabled: true,
            mode: JitterMode::PerFrame,
            brightness: [0.6, 1.4],
            contrast: [0.6, 1.4],
            saturation: [0.6, 1.4],
            hue: [-0.1, 0.1],
        }
    }
}

impl JitterConfig {
    pub fn identity() -> Self {
        JitterConfig {
            enabled: true,
            mode: JitterMode::PerFrame,
            brightness: [1.0, 1.0],
            contrast: [1.0, 1.0],
            saturation: [1.0, 1.0],
            hue: [0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let factor = |name: &str, [lo, hi]: [f32; 2]| {
            if !(0.0..=2.0).contains(&lo) || !(0.0..=2.0).contains(&hi) || lo > hi {
                return Err(Error::Config(format!(
                    "jitter {name} range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 2"
                )));
            }
            Ok(())
        };
        factor("brightness", self.brightness)?;
        factor("contrast", self.contrast)?;
        factor("saturation", self.saturation)?;
        let [lo, hi] = self.hue;
        if !(-0.5..=0.5).contains(&lo) || !(-0.5..=0.5).contains(&hi) || lo > hi {
            return Err(Error::Config(format!(
                "jitter hue range [{lo}, {hi}] must satisfy -0.5 <= lo <= hi <= 0.5"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    #[default]
    Images,
    FrameDirs,
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "images" => Ok(InputMode::Images),
            "frame-dirs" | "frames" => Ok(InputMode::FrameDirs),
            other => Err(Error::Config(format!(
                "unknown input mode {other:?} (expected images or frame-dirs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Png,
    Raw,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "png" | "png-frames" => Ok(OutputFormat::Png),
            "raw" | "raw-clips" => Ok(OutputFormat::Raw),
            other => Err(Error::Config(format!(
                "unknown output format {other:?} (expected png or raw)"
            ))),
        }
    }
}

/// Effective generation config. Defaults: `L_s = 320`, `N = 16`, `L = 112`,
/// `C = 5` speeds per axis on both axes, mask side ratio in `[0.3, 0.5]`,
/// frame-wise color jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    /// Per-axis speed count `C = 2K + 1`.
    pub speeds: u32,
    pub axis: Axis,
    pub frames: usize,
    pub crop: u32,
    pub source_size: u32,
    pub mask: MaskConfig,
    pub jitter: JitterConfig,
    pub seed: u64,
    pub epoch: u32,
    pub input_mode: InputMode,
    pub format: OutputFormat,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            speeds: 5,
            axis: Axis::Both,
            frames: 16,
            crop: 112,
            source_size: 320,
            mask: MaskConfig::default(),
            jitter: JitterConfig::default(),
            seed: 0,
            epoch: 0,
            input_mode: InputMode::Images,
            format: OutputFormat::Png,
        }
    }
}

impl GenConfig {
    /// Speed granularity `K`.
    pub fn granularity(&self) -> Result<u32> {
        per_axis_speed_count_to_k(self.speeds)
    }

    pub fn label_pool(&self) -> Result<LabelPool> {
        build_label_pool(self.granularity()?, self.axis)
    }

    /// Default block-matching search radius: the largest per-step window
    /// displacement plus two pixels of slack.
    pub fn search_radius(&self) -> u32 {
        let span = self.source_size.saturating_sub(self.crop) as f64;
        (span / (self.frames.max(2) - 1) as f64).ceil() as u32 + 2
    }

    pub fn validate(&self) -> Result<()> {
        self.granularity()?;
        if self.frames < 2 {
            return Err(Error::Config(format!(
                "frames N={} violates N >= 2",
                self.frames
            )));
        }
        if self.frames > u16::MAX as usize {
            return Err(Error::Config(format!(
                "frames N={} is too large",
                self.frames
            )));
        }
        if self.crop < 8 {
            return Err(Error::Config(format!(
                "crop L={} violates L >= 8",
                self.crop
            )));
        }
        if self.crop > self.source_size {
            return Err(Error::Config(format!(
                "crop L={} violates L <= L_s={}",
                self.crop, self.source_size
            )));
        }
        if self.crop > u16::MAX as u32 {
            return Err(Error::Config(format!("crop L={} is too large", self.crop)));
        }
        let MaskConfig {
            ratio_lo, ratio_hi, ..
        } = self.mask;
        if !(ratio_lo > 0.0 && ratio_lo <= ratio_hi && ratio_hi <= 1.0) {
            return Err(Error::Config(format!(
                "mask ratio [{ratio_lo}, {ratio_hi}] violates 0 < lo <= hi <= 1"
            )));
        }
        self.jitter.validate()?;
        Ok(())
    }
}
