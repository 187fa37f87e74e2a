use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};
use rand::Rng;

use crate::compositor::{load_rgb, SourceOrigin};
use crate::config::InputMode;
use crate::error::{Error, Result};
use crate::seed::{frame_select_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDescriptor {
    /// Position in the sorted source catalog.
    pub index: u64,
    pub path: PathBuf,
    /// Selected frame for frame-directory sources.
    pub frame_index: Option<u32>,
}

impl SourceDescriptor {
    pub fn origin(&self) -> SourceOrigin {
        SourceOrigin {
            path: self.path.clone(),
            frame_index: self.frame_index,
        }
    }

    pub fn load(&self) -> Result<RgbImage> {
        load_rgb(&self.path)
    }
}

fn is_image_file(path: &Path) -> bool {
    path.is_file() && ImageFormat::from_path(path).is_ok_and(|f| f.reading_enabled())
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

/// Lists sources in deterministic order.
///
/// `Images`: every readable image file directly inside `dir`, sorted by path.
/// `FrameDirs`: every immediate subdirectory is one video; one of its frames
/// (sorted by path) is chosen with a seed derived from
/// `(global_seed, source index, epoch)`.
pub fn enumerate_sources(
    dir: &Path,
    mode: InputMode,
    epoch: u32,
    global_seed: u64,
) -> Result<Vec<SourceDescriptor>> {
    if !dir.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("input directory {} does not exist", dir.display()),
        )));
    }
    let sources: Vec<SourceDescriptor> = match mode {
        InputMode::Images => sorted_entries(dir)?
            .into_iter()
            .filter(|p| is_image_file(p))
            .enumerate()
            .map(|(i, path)| SourceDescriptor {
                index: i as u64,
                path,
                frame_index: None,
            })
            .collect(),
        InputMode::FrameDirs => {
            let mut out = Vec::new();
            let video_dirs = sorted_entries(dir)?.into_iter().filter(|p| p.is_dir());
            for video in video_dirs {
                let frames: Vec<PathBuf> = sorted_entries(&video)?
                    .into_iter()
                    .filter(|p| is_image_file(p))
                    .collect();
                if frames.is_empty() {
                    log::warn!("skipping {}: no frames", video.display());
                    continue;
                }
                let index = out.len() as u64;
                let mut rng = rng_from_seed(frame_select_seed(global_seed, index, epoch as u64));
                let pick = rng.gen_range(0..frames.len());
                out.push(SourceDescriptor {
                    index,
                    path: frames[pick].clone(),
                    frame_index: Some(pick as u32),
                });
            }
            out
        }
    };
    if sources.is_empty() {
        return Err(Error::EmptySource(dir.to_path_buf()));
    }
    Ok(sources)
}
