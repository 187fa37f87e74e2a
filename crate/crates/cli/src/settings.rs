//! Config resolution: flags over environment over config file over
//! defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::Args;

use pseudomotion::config::InputMode;
use pseudomotion::{Axis, Error, GenConfig, JitterMode, OutputFormat};

/// `LO:HI` mask side ratio range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskRatio(pub f64, pub f64);

impl FromStr for MaskRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Config(format!("mask ratio {s:?} is not LO:HI"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        Ok(MaskRatio(lo, hi))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct GenArgs {
    /// TOML file with generation settings.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Frames per clip (N).
    #[arg(long, value_name = "N")]
    pub frames: Option<usize>,
    /// Crop side (L).
    #[arg(long, value_name = "L")]
    pub crop: Option<u32>,
    /// Prepared source side (L_s).
    #[arg(long, value_name = "LS")]
    pub source_size: Option<u32>,
    /// Speeds per axis (C, odd).
    #[arg(long, value_name = "C")]
    pub speeds: Option<u32>,
    #[arg(long, value_name = "both|x|y")]
    pub axis: Option<Axis>,
    #[arg(long, value_name = "LO:HI")]
    pub mask_ratio: Option<MaskRatio>,
    #[arg(long)]
    pub no_mask: bool,
    #[arg(long)]
    pub no_jitter: bool,
    #[arg(long, value_name = "per-frame|per-clip")]
    pub jitter_mode: Option<JitterMode>,
    #[arg(long, value_name = "E")]
    pub epoch: Option<u32>,
    #[arg(long, value_name = "S", env = "MOSI_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "png|raw")]
    pub format: Option<OutputFormat>,
    #[arg(long, value_name = "images|frame-dirs")]
    pub input_mode: Option<InputMode>,
}

/// Dotted key paths of every known config field.
fn known_keys(value: &toml::Value, prefix: &str, out: &mut Vec<String>) {
    if let toml::Value::Table(t) = value {
        for (k, v) in t {
            let key = format!("{prefix}{k}");
            known_keys(v, &format!("{key}."), out);
            out.push(key);
        }
    }
}

/// Reads a TOML config file. Missing keys keep their defaults; unknown keys
/// are rejected.
pub fn load_config_file(path: &Path) -> anyhow::Result<GenConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let value: toml::Value =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut known = Vec::new();
    known_keys(
        &toml::Value::try_from(GenConfig::default())?,
        "",
        &mut known,
    );
    let mut given = Vec::new();
    known_keys(&value, "", &mut given);
    if let Some(unknown) = given.iter().find(|k| !known.contains(k)) {
        return Err(Error::Config(format!("{}: unknown key {unknown:?}", path.display())).into());
    }
    let config: GenConfig = value
        .try_into()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(config)
}

impl GenArgs {
    /// Effective validated config.
    pub fn resolve(&self) -> anyhow::Result<GenConfig> {
        let mut c = match &self.config {
            Some(path) => load_config_file(path)?,
            None => GenConfig::default(),
        };
        if let Some(v) = self.frames {
            c.frames = v;
        }
        if let Some(v) = self.crop {
            c.crop = v;
        }
        if let Some(v) = self.source_size {
            c.source_size = v;
        }
        if let Some(v) = self.speeds {
            c.speeds = v;
        }
        if let Some(v) = self.axis {
            c.axis = v;
        }
        if let Some(MaskRatio(lo, hi)) = self.mask_ratio {
            c.mask.ratio_lo = lo;
            c.mask.ratio_hi = hi;
        }
        if self.no_mask {
            c.mask.enabled = false;
        }
        if self.no_jitter {
            c.jitter.enabled = false;
        }
        if let Some(v) = self.jitter_mode {
            c.jitter.mode = v;
        }
        if let Some(v) = self.epoch {
            c.epoch = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.format {
            c.format = v;
        }
        if let Some(v) = self.input_mode {
            c.input_mode = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gen.toml");
        std::fs::write(
            &path,
            "frames = 8\ncrop = 64\n[mask]\nratio_lo = 0.2\n[jitter]\nmode = \"per-clip\"\n",
        )
        .unwrap();
        let args = GenArgs {
            config: Some(path),
            crop: Some(96),
            ..GenArgs::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.frames, 8);
        assert_eq!(c.crop, 96);
        assert_eq!(c.mask.ratio_lo, 0.2);
        assert_eq!(c.mask.ratio_hi, 0.5);
        assert_eq!(c.jitter.mode, JitterMode::PerClip);
        assert_eq!(c.source_size, 320);
    }

    #[test]
    fn unknown_and_invalid_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gen.toml");
        std::fs::write(&path, "frame = 8\n").unwrap();
        let err = load_config_file(&path).unwrap_err().to_string();
        assert!(err.contains("unknown key \"frame\""), "{err}");
        std::fs::write(&path, "[mask]\nratio = 1\n").unwrap();
        assert!(load_config_file(&path).is_err());
        std::fs::write(&path, "speeds = 4\n").unwrap();
        let args = GenArgs {
            config: Some(path),
            ..GenArgs::default()
        };
        assert!(args.resolve().is_err());
    }

    #[test]
    fn mask_ratio_parsing() {
        assert_eq!("0.3:0.5".parse::<MaskRatio>().unwrap(), MaskRatio(0.3, 0.5));
        assert!("0.3".parse::<MaskRatio>().is_err());
        assert!("a:b".parse::<MaskRatio>().is_err());
    }
}
