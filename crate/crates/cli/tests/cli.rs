use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pseudomotion"));
    c.env_remove("MOSI_SEED").env_remove("MOSI_WORKERS");
    c
}

fn photos(dir: &Path, n: usize) -> PathBuf {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata/photos");
    let mut all: Vec<PathBuf> = std::fs::read_dir(src)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "jpg"))
        .collect();
    all.sort();
    let out = dir.join("in");
    std::fs::create_dir_all(&out).unwrap();
    for p in all.into_iter().take(n) {
        std::fs::copy(&p, out.join(p.file_name().unwrap())).unwrap();
    }
    out
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr {text:?}: {e}"))
}

fn manifest_records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_then_verify_plain_data() {
    let tmp = tempfile::tempdir().unwrap();
    let input = photos(tmp.path(), 2);
    let out = tmp.path().join("out");
    let report = stdout_json(
        &bin()
            .args([
                "generate",
                "--in",
                p(&input),
                "--out",
                p(&out),
                "--no-mask",
                "--no-jitter",
                "--format",
                "raw",
            ])
            .output()
            .unwrap(),
    );
    assert_eq!(report["samples"], 18);
    let manifest = out.join("manifest.jsonl");
    for mode in ["white", "black"] {
        let v = stdout_json(
            &bin()
                .args([
                    "verify",
                    "--manifest",
                    p(&manifest),
                    "--mode",
                    mode,
                    "--min-agreement",
                    "0.99",
                ])
                .output()
                .unwrap(),
        );
        assert_eq!(v["passed"], true);
        assert_eq!(v["samples_checked"], 18);
    }

    // Shuffled labels cannot reach the threshold: exit status 3.
    let out = bin()
        .args([
            "verify",
            "--manifest",
            p(&manifest),
            "--min-agreement",
            "0.99",
            "--permute-labels",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["permuted_labels"], true);
}

#[test]
fn effective_config_is_echoed_with_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let input = photos(tmp.path(), 1);
    let cfg = tmp.path().join("gen.toml");
    std::fs::write(
        &cfg,
        "frames = 8\nspeeds = 7\nseed = 5\n[mask]\nratio_lo = 0.25\nratio_hi = 0.4\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    stdout_json(
        &bin()
            .args([
                "generate",
                "--in",
                p(&input),
                "--out",
                p(&out),
                "--config",
                p(&cfg),
                "--speeds",
                "3",
            ])
            .env("MOSI_SEED", "99")
            .output()
            .unwrap(),
    );
    let records = manifest_records(&out.join("manifest.jsonl"));
    assert_eq!(records.len(), 5);
    for r in &records {
        assert_eq!(r["N"], 8);
        assert_eq!(r["C"], 3);
        assert_eq!(r["K"], 1);
        assert_eq!(r["global_seed"], 99);
        let c = &r["config"];
        assert_eq!(
            (
                c["frames"].as_u64(),
                c["speeds"].as_u64(),
                c["seed"].as_u64()
            ),
            (Some(8), Some(3), Some(99))
        );
        assert_eq!(
            (
                c["mask"]["ratio_lo"].as_f64(),
                c["mask"]["ratio_hi"].as_f64()
            ),
            (Some(0.25), Some(0.4))
        );
        assert_eq!(c["crop"], 112);
    }

    // An explicit flag beats the environment.
    let out2 = tmp.path().join("out2");
    stdout_json(
        &bin()
            .args([
                "generate",
                "--in",
                p(&input),
                "--out",
                p(&out2),
                "--seed",
                "1",
            ])
            .env("MOSI_SEED", "99")
            .output()
            .unwrap(),
    );
    assert_eq!(
        manifest_records(&out2.join("manifest.jsonl"))[0]["global_seed"],
        1
    );
}

#[test]
fn axis_restricted_pool() {
    let tmp = tempfile::tempdir().unwrap();
    let input = photos(tmp.path(), 1);
    let out = tmp.path().join("out");
    let report = stdout_json(
        &bin()
            .args([
                "generate",
                "--in",
                p(&input),
                "--out",
                p(&out),
                "--axis",
                "x",
                "--speeds",
                "7",
                "--format",
                "raw",
            ])
            .output()
            .unwrap(),
    );
    assert_eq!(report["samples"], 7);
    for r in manifest_records(&out.join("manifest.jsonl")) {
        assert_eq!(r["label_xy"][1], 0);
    }
}

#[test]
fn config_errors_name_the_constraint_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let input = photos(tmp.path(), 1);
    let out = tmp.path().join("out");
    let cases: [(&[&str], &str, &str); 4] = [
        (&["--crop", "400"], "config", "L <= L_s"),
        (&["--frames", "1"], "config", "N >= 2"),
        (&["--mask-ratio", "0.6:0.2"], "config", "lo <= hi"),
        (&["--speeds", "4"], "invalid-class-count", "odd"),
    ];
    for (flags, kind, needle) in cases {
        let output = bin()
            .args(["generate", "--in", p(&input), "--out", p(&out)])
            .args(flags)
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(1), "{flags:?}");
        let err = stderr_json(&output);
        assert_eq!(err["error"], kind, "{flags:?}: {err}");
        assert!(err["message"].as_str().unwrap().contains(needle), "{err}");
        assert!(!out.exists());
    }
}

#[test]
fn usage_and_missing_inputs() {
    let out = bin().args(["generate", "--out", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = bin()
        .args(["verify", "--manifest", "/nonexistent/manifest.jsonl"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "integrity");

    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = bin()
        .args([
            "generate",
            "--in",
            p(&empty),
            "--out",
            p(&tmp.path().join("o")),
        ])
        .output()
        .unwrap();
    assert_eq!(stderr_json(&out)["error"], "empty-source");

    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
}

#[test]
fn preview_sheet_and_animation() {
    let tmp = tempfile::tempdir().unwrap();
    let input = photos(tmp.path(), 1);
    let out = tmp.path().join("out");
    stdout_json(
        &bin()
            .args(["generate", "--in", p(&input), "--out", p(&out)])
            .output()
            .unwrap(),
    );
    let manifest = out.join("manifest.jsonl");
    let sheet = tmp.path().join("sheet.png");
    let gif = tmp.path().join("clip.gif");
    stdout_json(
        &bin()
            .args([
                "preview",
                "--manifest",
                p(&manifest),
                "--sample",
                "s000000-e0000-c07",
                "--out",
                p(&sheet),
            ])
            .output()
            .unwrap(),
    );
    stdout_json(
        &bin()
            .args([
                "preview",
                "--manifest",
                p(&manifest),
                "--sample",
                "s000000-e0000-c07",
                "--style",
                "anim",
                "--out",
                p(&gif),
            ])
            .output()
            .unwrap(),
    );
    assert!(std::fs::read(&sheet).unwrap().starts_with(b"\x89PNG"));
    assert!(std::fs::read(&gif).unwrap().starts_with(b"GIF89a"));

    let missing = bin()
        .args([
            "preview",
            "--manifest",
            p(&manifest),
            "--sample",
            "nope",
            "--out",
            p(&sheet),
        ])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn serve_replay_from_cli() {
    use std::io::{BufRead, BufReader};

    let tmp = tempfile::tempdir().unwrap();
    let input = photos(tmp.path(), 1);
    let out = tmp.path().join("out");
    stdout_json(
        &bin()
            .args([
                "generate",
                "--in",
                p(&input),
                "--out",
                p(&out),
                "--format",
                "raw",
            ])
            .output()
            .unwrap(),
    );
    let mut child = bin()
        .args([
            "serve",
            "--bind",
            "127.0.0.1:0",
            "--replay",
            p(&out.join("manifest.jsonl")),
        ])
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let hello: Value = serde_json::from_str(&line).unwrap();
    let addr = hello["listening"].as_str().unwrap().to_string();
    let batches = pseudomotion::stream::client_fetch(addr.as_str(), 2, 0);
    child.kill().unwrap();
    child.wait().unwrap();
    let batches = batches.unwrap();
    assert_eq!(batches.len(), 2);
    assert_eq!(batches[0].samples.len(), 9);
    // The single stored group is replayed again on the second request.
    assert!(batches[0].samples == batches[1].samples);
}

#[test]
fn serve_requires_a_source() {
    let out = bin()
        .args(["serve", "--bind", "127.0.0.1:0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "config");
    let out = bin()
        .args(["serve", "--bind", "127.0.0.1:0", "--live"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_rejects_bad_duration() {
    let tmp = tempfile::tempdir().unwrap();
    let input = photos(tmp.path(), 1);
    let out = bin()
        .args(["bench", "--in", p(&input), "--duration", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "config");
}
