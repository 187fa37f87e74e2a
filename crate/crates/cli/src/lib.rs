//! Command-line front end. Every subcommand prints a JSON report on stdout;
//! failures print `{"error": kind, "message": ...}` on stderr.

mod bench;
mod settings;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pseudomotion::dataset_io::{render_animation, render_contact_sheet, Dataset, PreviewStyle};
use pseudomotion::generate_dataset;
use pseudomotion::oracle::{verify_dataset, OracleMode, VerifyOptions};
use pseudomotion::stream::{Server, ServerOptions, StreamSource};

pub use settings::{load_config_file, GenArgs, MaskRatio};

/// Exit status when verification runs but misses its thresholds.
pub const EXIT_VERIFY_FAILED: i32 = 3;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "pseudomotion", version, about = "Pseudo-motion clip generator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset from a directory of images.
    Generate(GenerateArgs),
    /// Recover labels from stored pixels and report agreement.
    Verify(VerifyArgs),
    /// Render a contact sheet or animation of one sample.
    Preview(PreviewArgs),
    /// Stream same-batch groups over TCP.
    Serve(ServeArgs),
    /// Measure generation throughput.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct Workers {
    /// Worker threads (defaults to available cores).
    #[arg(long, env = "MOSI_WORKERS")]
    pub workers: Option<usize>,
}

impl Workers {
    pub fn count(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(self.count())
            .build()?)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub gen: GenArgs,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// `white` uses the recorded mask, `black` ignores it.
    #[arg(long, default_value = "white")]
    pub mode: OracleMode,
    /// Exit nonzero when agreement falls below this fraction.
    #[arg(long, value_name = "F")]
    pub min_agreement: Option<f64>,
    /// Shuffle ground-truth labels with this seed (chance-level control).
    #[arg(long, value_name = "SEED")]
    pub permute_labels: Option<u64>,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct PreviewArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    #[arg(long, value_name = "ID")]
    pub sample: String,
    #[arg(long, default_value = "sheet")]
    pub style: PreviewStyle,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Frame rate of the animation.
    #[arg(long, default_value_t = 8)]
    pub fps: u32,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "ADDR")]
    pub bind: String,
    /// Replay a stored dataset.
    #[arg(long, value_name = "MANIFEST", conflicts_with_all = ["live", "input"])]
    pub replay: Option<PathBuf>,
    /// Generate on the fly from `--in`.
    #[arg(long, requires = "input")]
    pub live: bool,
    #[arg(long = "in", value_name = "DIR")]
    pub input: Option<PathBuf>,
    /// Sessions served at once.
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    #[command(flatten)]
    pub gen: GenArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Seconds to keep generating.
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    #[command(flatten)]
    pub gen: GenArgs,
    #[command(flatten)]
    pub workers: Workers,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            report_error("usage", &e.to_string());
            return EXIT_USAGE;
        }
    };
    match execute(cli) {
        Ok(Outcome { report, status }) => {
            let mut out = std::io::stdout().lock();
            let _ = serde_json::to_writer_pretty(&mut out, &report);
            let _ = writeln!(out);
            status
        }
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<pseudomotion::Error>())
                .map_or("error", |core| core.kind());
            report_error(kind, &format!("{e:#}"));
            EXIT_ERROR
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let body = json!({ "error": kind, "message": message.trim_end() });
    eprintln!("{body}");
}

pub struct Outcome {
    pub report: Value,
    pub status: i32,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, status: 0 }
    }
}

pub fn execute(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Verify(args) => verify(args),
        Command::Preview(args) => preview(args),
        Command::Serve(args) => serve(args),
        Command::Bench(args) => bench::run(args),
    }
}

fn generate(args: GenerateArgs) -> anyhow::Result<Outcome> {
    let config = args.gen.resolve()?;
    let summary = generate_dataset(&args.input, &args.out, &config, args.workers.count())?;
    Ok(Outcome::ok(json!({
        "sources": summary.sources,
        "samples": summary.samples,
        "manifest": summary.manifest,
        "config": config,
    })))
}

fn verify(args: VerifyArgs) -> anyhow::Result<Outcome> {
    if let Some(f) = args.min_agreement {
        if !(0.0..=1.0).contains(&f) {
            bail!(pseudomotion::Error::Config(format!(
                "min agreement {f} is outside [0, 1]"
            )));
        }
    }
    let dataset = Dataset::open(&args.manifest)
        .with_context(|| format!("opening {}", args.manifest.display()))?;
    let opts = VerifyOptions {
        mode: args.mode,
        min_agreement: args.min_agreement,
        permute_seed: args.permute_labels,
    };
    let report = args
        .workers
        .pool()?
        .install(|| verify_dataset(&dataset, &opts))?;
    let status = if report.passed { 0 } else { EXIT_VERIFY_FAILED };
    Ok(Outcome {
        report: serde_json::to_value(&report)?,
        status,
    })
}

fn preview(args: PreviewArgs) -> anyhow::Result<Outcome> {
    let dataset = Dataset::open(&args.manifest)?;
    let record = dataset.record(&args.sample).with_context(|| {
        format!(
            "sample {} not found in {}",
            args.sample,
            args.manifest.display()
        )
    })?;
    let frames = dataset.load_frames(record)?;
    let caption = format!(
        "#{}-{}-{} {}",
        record.source_index,
        record.epoch,
        record.label_index,
        record.label()
    );
    let style = match args.style {
        PreviewStyle::Sheet => "sheet",
        PreviewStyle::Animation => "anim",
    };
    match args.style {
        PreviewStyle::Sheet => render_contact_sheet(&frames, record.mask.as_ref(), &caption)
            .save(&args.out)
            .map_err(pseudomotion::Error::from)?,
        PreviewStyle::Animation => {
            render_animation(&frames, record.mask.as_ref(), args.fps, &args.out)?
        }
    }
    Ok(Outcome::ok(json!({
        "sample_id": record.sample_id,
        "style": style,
        "out": args.out,
    })))
}

fn serve(args: ServeArgs) -> anyhow::Result<Outcome> {
    let source = match (&args.replay, &args.input) {
        (Some(manifest), _) => StreamSource::replay(manifest)?,
        (None, Some(dir)) => StreamSource::live(dir, &args.gen.resolve()?)?,
        (None, None) => bail!(pseudomotion::Error::Config(
            "serve needs --replay MANIFEST or --live --in DIR".into()
        )),
    };
    let server = Server::bind(
        args.bind.as_str(),
        source,
        ServerOptions {
            concurrency: args.concurrency,
            ..ServerOptions::default()
        },
    )?;
    let addr = server.local_addr()?;
    let mode = if args.replay.is_some() {
        "replay"
    } else {
        "live"
    };
    println!("{}", json!({ "listening": addr.to_string(), "mode": mode }));
    std::io::stdout().flush()?;
    server.serve()?;
    Ok(Outcome::ok(json!({ "stopped": addr.to_string() })))
}
