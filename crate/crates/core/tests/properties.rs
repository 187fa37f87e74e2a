mod common;

use std::path::{Path, PathBuf};

use proptest::prelude::*;

use pseudomotion::compositor::{
    generate_batch, generate_sample, load_rgb, prepare_batch_source, SeedMaterial, SourceOrigin,
};
use pseudomotion::oracle::{classify_frames, estimate_displacement, OracleMode, Region};
use pseudomotion::seed::rng_from_seed;
use pseudomotion::{Axis, BatchContext, GenConfig, RgbImage, SourceImage};

fn photos() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata/photos");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "jpg"))
        .collect();
    v.sort();
    v
}

fn source(path: &Path, config: &GenConfig, index: u64) -> SourceImage {
    let ctx = BatchContext {
        global_seed: 3,
        source_index: index,
        epoch: 0,
    };
    let origin = SourceOrigin {
        path: path.to_path_buf(),
        frame_index: None,
    };
    prepare_batch_source(&load_rgb(path).unwrap(), origin, config, ctx).unwrap()
}

fn plain() -> GenConfig {
    let mut c = GenConfig::default();
    c.mask.enabled = false;
    c.jitter.enabled = false;
    c
}

#[test]
fn block_matching_recovers_every_step_on_photos() {
    let cfg = plain();
    let ctx = BatchContext {
        global_seed: 3,
        source_index: 0,
        epoch: 0,
    };
    for (i, path) in photos().iter().step_by(6).enumerate() {
        let src = source(path, &cfg, i as u64);
        for sample in generate_batch(
            &src,
            &cfg,
            BatchContext {
                source_index: i as u64,
                ..ctx
            },
        )
        .unwrap()
        {
            let est = estimate_displacement(
                &sample.frames,
                Region::full(&sample.frames[0]),
                cfg.search_radius(),
            )
            .unwrap();
            let step = sample.plan.step();
            for &(dx, dy) in &est.per_step {
                assert!(
                    (dx as f64 - step.dx).abs() <= 1.0 && (dy as f64 - step.dy).abs() <= 1.0,
                    "{}: {} step ({dx}, {dy}) vs {step:?}",
                    path.display(),
                    sample.label
                );
            }
        }
    }
}

#[test]
fn white_box_beats_black_box_on_masked_data() {
    let mut cfg = plain();
    cfg.mask.enabled = true;
    let pool = cfg.label_pool().unwrap();
    let (mut white, mut black, mut total) = (0, 0, 0);
    for (i, path) in photos().iter().step_by(4).enumerate() {
        let src = source(path, &cfg, i as u64);
        let ctx = BatchContext {
            global_seed: 3,
            source_index: i as u64,
            epoch: 0,
        };
        for s in generate_batch(&src, &cfg, ctx).unwrap() {
            total += 1;
            let w = classify_frames(
                &s.frames,
                s.mask.as_ref(),
                &cfg,
                &pool,
                OracleMode::WhiteBox,
            )
            .unwrap();
            let b = classify_frames(&s.frames, None, &cfg, &pool, OracleMode::BlackBox).unwrap();
            white += (w.label_index == Some(s.label_index)) as u32;
            black += (b.label_index == Some(s.label_index)) as u32;
        }
    }
    assert!(white >= black, "white {white} < black {black} of {total}");
    assert!(
        white as f64 >= 0.95 * total as f64,
        "white {white} of {total}"
    );
}

#[test]
fn sample_does_not_depend_on_generation_order() {
    let mut cfg = GenConfig::default();
    cfg.jitter.mode = pseudomotion::JitterMode::PerClip;
    let path = &photos()[7];
    let src = source(path, &cfg, 0);
    let ctx = BatchContext {
        global_seed: 3,
        source_index: 0,
        epoch: 2,
    };
    let batch = generate_batch(&src, &cfg, ctx).unwrap();
    let pool = cfg.label_pool().unwrap();
    for (i, &label) in pool.labels().iter().enumerate().rev() {
        let seed = SeedMaterial::new(3, 0, 2, i);
        let single = generate_sample(&src, label, &cfg, &mut rng_from_seed(seed.seed)).unwrap();
        assert_eq!(single.frames, batch[i].frames);
        assert_eq!(single.mask, batch[i].mask);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classification_stays_in_pool(
        seed in any::<u64>(),
        speeds in prop::sample::select(vec![3u32, 5, 7]),
        axis in prop::sample::select(vec![Axis::Both, Axis::X, Axis::Y]),
        frames in 2usize..6,
        noise in any::<bool>(),
    ) {
        let cfg = GenConfig {
            speeds,
            axis,
            frames,
            crop: 32,
            source_size: 64,
            ..plain()
        };
        let pool = cfg.label_pool().unwrap();
        let clip: Vec<RgbImage> = if noise {
            (0..frames as u64).map(|i| common::textured(32, 32, seed ^ i)).collect()
        } else {
            let src = SourceImage {
                pixels: common::textured(64, 64, seed),
                origin: SourceOrigin::default(),
                offset: [0, 0],
            };
            let label = pool.labels()[(seed % pool.len() as u64) as usize];
            generate_sample(&src, label, &cfg, &mut rng_from_seed(seed)).unwrap().frames
        };
        for mode in [OracleMode::WhiteBox, OracleMode::BlackBox] {
            let c = classify_frames(&clip, None, &cfg, &pool, mode).unwrap();
            if let Some(i) = c.label_index {
                prop_assert!(i < pool.len());
            }
        }
    }
}
