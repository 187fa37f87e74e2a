//! Throughput measurement: generate same-batch groups in memory for a fixed
//! wall-clock duration.

use std::time::{Duration, Instant};

use anyhow::bail;
use rayon::prelude::*;
use serde_json::json;

use pseudomotion::dataset_io::enumerate_sources;
use pseudomotion::pipeline::generate_group;
use pseudomotion::Error;

use crate::{BenchArgs, Outcome};

pub fn run(args: BenchArgs) -> anyhow::Result<Outcome> {
    if !(args.duration.is_finite() && args.duration > 0.0) {
        bail!(Error::Config(format!(
            "duration {} must be a positive number of seconds",
            args.duration
        )));
    }
    let config = args.gen.resolve()?;
    let workers = args.workers.count();
    let sources = enumerate_sources(&args.input, config.input_mode, config.epoch, config.seed)?;
    // Decode up front so the timed loop measures generation only.
    let images = sources
        .iter()
        .map(|s| Ok((s.load()?, s.origin())))
        .collect::<Result<Vec<_>, Error>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;

    let budget = Duration::from_secs_f64(args.duration);
    let start = Instant::now();
    let (mut batches, mut samples, mut bytes, mut cursor) = (0u64, 0u64, 0u64, 0u64);
    while start.elapsed() < budget {
        let round: Vec<u64> = (cursor..cursor + workers as u64).collect();
        cursor += workers as u64;
        let sizes = pool.install(|| {
            round
                .par_iter()
                .map(|&c| {
                    let (image, origin) = &images[(c % images.len() as u64) as usize];
                    let group = generate_group(image, origin.clone(), c, &config)?;
                    let payload: usize = group
                        .iter()
                        .flat_map(|(_, frames)| frames.iter().map(|f| f.as_raw().len()))
                        .sum();
                    Ok((group.len() as u64, payload as u64))
                })
                .collect::<Result<Vec<_>, Error>>()
        })?;
        for (n, b) in sizes {
            batches += 1;
            samples += n;
            bytes += b;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(Outcome::ok(json!({
        "requested_duration_s": args.duration,
        "elapsed_s": elapsed,
        "workers": workers,
        "sources": images.len(),
        "batches": batches,
        "samples": samples,
        "bytes": bytes,
        "batches_per_s": batches as f64 / elapsed,
        "samples_per_s": samples as f64 / elapsed,
        "mb_per_s": bytes as f64 / elapsed / 1e6,
        "config": config,
    })))
}
