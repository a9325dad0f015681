//! `fractal`: synthesize test signals, measure fractal dimensions of audio and
//! point sets, run the validation matrix and batch-analyze a corpus.
//!
//! Exit status: 0 on success, 1 when an analysis or validation fails, 2 for
//! usage and I/O errors.

mod validate;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use fractal_core::boxcount::{
    box_dimension, default_box_sizes, gen_filled_square, gen_julia_boundary, gen_koch, gen_segment,
    gen_sierpinski_carpet, JuliaParams, PointSet2D,
};
use fractal_core::pipeline::{
    aggregate_by_tag, analyze_file, emit_aggregate, emit_report, load_manifest, plot_points,
    run_manifest, AnalysisSettings, PipelineError, ReportFormat, TrackEntry, TrackRecord,
};
use fractal_core::signal::{
    gen_ramp, gen_sine, gen_square, gen_triangle, gen_weierstrass, gen_white_noise,
};
use fractal_core::wav::{write_wav, AudioClip, SampleFormat, WindowPlan};
use fractal_core::{DimensionEstimate, HiguchiConfig, WeierstrassParams};

#[derive(Parser)]
#[command(
    name = "fractal",
    version,
    about = "Fractal dimension of audio and planar point sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a test signal to a WAV file.
    Synth(SynthArgs),
    /// Windowed Higuchi dimension of one WAV file.
    Analyze(AnalyzeArgs),
    /// Box-counting dimension of a generated fractal or a point file.
    Boxdim(BoxdimArgs),
    /// Run the built-in validation matrix.
    Validate(ValidateArgs),
    /// Analyze every track in a manifest and write reports.
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalKind {
    Sine,
    Square,
    Triangle,
    Weierstrass,
    Noise,
    Ramp,
}

#[derive(Clone, Copy, ValueEnum)]
enum WavFormat {
    U8,
    I16,
    I24,
    I32,
    F32,
}

impl From<WavFormat> for SampleFormat {
    fn from(f: WavFormat) -> Self {
        match f {
            WavFormat::U8 => SampleFormat::U8,
            WavFormat::I16 => SampleFormat::I16,
            WavFormat::I24 => SampleFormat::I24,
            WavFormat::I32 => SampleFormat::I32,
            WavFormat::F32 => SampleFormat::F32,
        }
    }
}

#[derive(clap::Args)]
struct SynthArgs {
    kind: SignalKind,
    /// Output WAV path.
    #[arg(short, long, default_value = "synth.wav")]
    out: PathBuf,
    #[arg(long, default_value_t = 44100)]
    sample_rate: u32,
    /// Length in seconds.
    #[arg(long, default_value_t = 2.0)]
    duration: f64,
    /// Tone frequency in Hz (sine, square, triangle).
    #[arg(long, default_value_t = 440.0)]
    freq: f64,
    /// Peak amplitude.
    #[arg(long, default_value_t = 0.8)]
    amp: f64,
    /// Weierstrass amplitude ratio, 0 < a < 1.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Weierstrass frequency ratio; a*b must exceed 1.
    #[arg(long, default_value_t = 3.0)]
    b: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "i16")]
    format: WavFormat,
}

#[derive(clap::Args)]
struct HiguchiArgs {
    /// Largest Higuchi step [default: min(16, (N-1)/2)].
    #[arg(long)]
    k_max: Option<usize>,
    /// Window length in seconds.
    #[arg(long, default_value_t = 2.0)]
    window: f64,
    /// Hop between window starts in seconds.
    #[arg(long, default_value_t = 1.0)]
    hop: f64,
}

impl HiguchiArgs {
    fn settings(&self) -> anyhow::Result<AnalysisSettings> {
        let plan = WindowPlan::new(self.window, self.hop)?;
        if self.k_max == Some(0) {
            bail!("--k-max must be positive");
        }
        Ok(AnalysisSettings {
            plan,
            higuchi: HiguchiConfig {
                k_max: self.k_max,
                k_schedule: None,
            },
        })
    }
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    path: PathBuf,
    #[command(flatten)]
    higuchi: HiguchiArgs,
    /// Write ln k / ln L(k) points of the peak window here.
    #[arg(long)]
    plotdata: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Koch,
    Carpet,
    Rabbit,
    Circle,
    Square,
    Segment,
}

#[derive(clap::Args)]
#[command(group(ArgGroup::new("source").required(true).args(["generator", "points"])))]
struct BoxdimArgs {
    generator: Option<Generator>,
    /// Text file with one `x,y` point per line.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Construction depth [default: 6 for koch, 5 for carpet].
    #[arg(long)]
    level: Option<u32>,
    /// Escape-time grid side [default: 1024 for rabbit, 512 for circle].
    #[arg(long)]
    grid: Option<usize>,
    /// Escape-time iteration cap.
    #[arg(long, default_value_t = JuliaParams::DEFAULT_MAX_ITER)]
    max_iter: u32,
    /// Number of box sizes in the geometric sweep for Julia sets and point files.
    #[arg(long, default_value_t = 12)]
    steps: usize,
    /// Write ln(box size) / ln(count) points here.
    #[arg(long)]
    plotdata: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// Override the Higuchi step cap for every signal row.
    #[arg(long)]
    k_max: Option<usize>,
    /// Escape-time grid side for the rabbit row.
    #[arg(long, default_value_t = 1024)]
    grid: usize,
}

#[derive(clap::Args)]
struct CorpusArgs {
    manifest: PathBuf,
    /// Directory for report.csv, report.json and aggregate tables.
    #[arg(short, long, default_value = "reports")]
    out: PathBuf,
    /// Worker threads [default: available parallelism].
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write the per-value maximum table for this tag.
    #[arg(long)]
    aggregate: Option<String>,
    #[command(flatten)]
    higuchi: HiguchiArgs,
}

/// Failure whose exit status is 1 rather than 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct AnalysisFailure(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => synth(&args),
        Command::Analyze(args) => analyze(&args),
        Command::Boxdim(args) => boxdim(&args),
        Command::Validate(args) => validate::run(args.k_max, args.grid),
        Command::Corpus(args) => corpus(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<AnalysisFailure>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn synth(args: &SynthArgs) -> anyhow::Result<ExitCode> {
    let sr = f64::from(args.sample_rate);
    let (series, theory) = match args.kind {
        SignalKind::Sine => (gen_sine(args.freq, sr, args.duration, args.amp)?, Some(1.0)),
        SignalKind::Square => (
            gen_square(args.freq, sr, args.duration, args.amp)?,
            Some(1.0),
        ),
        SignalKind::Triangle => (
            gen_triangle(args.freq, sr, args.duration, args.amp)?,
            Some(1.0),
        ),
        SignalKind::Weierstrass => {
            let params = WeierstrassParams::new(args.a, args.b)?;
            let raw = gen_weierstrass(&params, sr, args.duration)?;
            let peak = raw.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scaled = raw.affine(args.amp / peak, 0.0)?;
            (scaled, Some(params.theoretical_dimension()))
        }
        SignalKind::Noise => (
            gen_white_noise(args.seed, sr, args.duration, args.amp)?,
            Some(2.0),
        ),
        SignalKind::Ramp => {
            let n = (args.duration * sr).round() as usize;
            let ramp = gen_ramp(n)?;
            let unit = ramp.affine(2.0 / (n - 1) as f64, -1.0)?;
            let scaled = unit.affine(args.amp, 0.0)?;
            (
                fractal_core::TimeSeries::new(scaled.into_samples(), sr)?,
                Some(1.0),
            )
        }
    };
    let clip = AudioClip::from_series(&series, args.format.into())?;
    let encoded = write_wav(&clip, args.format.into())?;
    write_file(&args.out, &encoded.bytes)?;
    if encoded.clipped_samples > 0 {
        eprintln!("warning: {} samples clipped", encoded.clipped_samples);
    }
    println!("wrote {} ({} samples)", args.out.display(), series.len());
    if let Some(d) = theory {
        println!("theoretical_dimension={d:.4}");
    }
    Ok(ExitCode::SUCCESS)
}

fn analyze(args: &AnalyzeArgs) -> anyhow::Result<ExitCode> {
    let settings = args.higuchi.settings()?;
    let analysis = analyze_file(&args.path, &settings).map_err(|e| match e {
        PipelineError::Io { .. } | PipelineError::Wav(_) => anyhow::Error::new(e),
        other => AnalysisFailure(format!("{}: {other}", args.path.display())).into(),
    })?;

    let mut out = String::new();
    out.push_str(&format!("# file={}\n", args.path.display()));
    out.push_str(&format!(
        "# config_fingerprint={}\n",
        analysis.config_fingerprint
    ));
    out.push_str("offset_s\tdimension\tr_squared\n");
    for w in &analysis.window_estimates {
        match &w.estimate {
            Some(e) => out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\n",
                w.offset_seconds, e.dimension, e.r_squared
            )),
            None => out.push_str(&format!(
                "{}\tfailed\t{}\n",
                w.offset_seconds,
                w.error.as_deref().unwrap_or("")
            )),
        }
    }
    out.push_str(&format!("summary_max={:.6}\n", analysis.summary_max));
    out.push_str(&format!("summary_mean={:.6}\n", analysis.summary_mean));
    out.push_str(&format!("classification={}\n", analysis.classification));
    std::io::stdout().write_all(out.as_bytes())?;

    if let Some(plot) = &args.plotdata {
        let record = TrackRecord {
            entry: TrackEntry::new(args.path.clone()),
            analysis,
        };
        write_file(plot, &emit_report(&[record], ReportFormat::PlotData)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn triadic_sizes(level: u32) -> Vec<f64> {
    (1..=level as i32).map(|m| 3f64.powi(-m)).collect()
}

fn julia(params: JuliaParams, max_iter: u32) -> anyhow::Result<PointSet2D> {
    Ok(gen_julia_boundary(&JuliaParams { max_iter, ..params })?)
}

fn boxdim(args: &BoxdimArgs) -> anyhow::Result<ExitCode> {
    if args.steps < 2 {
        bail!("--steps must be at least 2");
    }
    let sweep = |set: &PointSet2D| {
        fractal_core::boxcount::geometric_box_sizes(set.bounds().extent(), 4.0, 512.0, args.steps)
    };
    let (label, set, sizes) = match (args.generator, &args.points) {
        (_, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let set = PointSet2D::from_text(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let sizes = sweep(&set);
            (path.display().to_string(), set, sizes)
        }
        (Some(Generator::Koch), None) => {
            let level = args.level.unwrap_or(6);
            if level == 0 {
                bail!("--level must be at least 1");
            }
            (
                format!("koch level {level}"),
                gen_koch(level)?,
                triadic_sizes(level),
            )
        }
        (Some(Generator::Carpet), None) => {
            let level = args.level.unwrap_or(5);
            if level == 0 {
                bail!("--level must be at least 1");
            }
            (
                format!("carpet level {level}"),
                gen_sierpinski_carpet(level)?,
                triadic_sizes(level),
            )
        }
        (Some(Generator::Rabbit), None) => {
            let grid = args.grid.unwrap_or(1024);
            let set = julia(JuliaParams::douady_rabbit(grid), args.max_iter)?;
            let sizes = sweep(&set);
            (format!("rabbit grid {grid}"), set, sizes)
        }
        (Some(Generator::Circle), None) => {
            let grid = args.grid.unwrap_or(512);
            let set = julia(JuliaParams::circle(grid), args.max_iter)?;
            let sizes = sweep(&set);
            (format!("circle grid {grid}"), set, sizes)
        }
        (Some(Generator::Square), None) => {
            let set = gen_filled_square(512)?;
            (
                "filled square".to_string(),
                set,
                (1..=6).map(|m| 0.5f64.powi(m)).collect(),
            )
        }
        (Some(Generator::Segment), None) => {
            let set = gen_segment(1000)?;
            let sizes = default_box_sizes(&set);
            ("segment".to_string(), set, sizes)
        }
        (None, None) => unreachable!("clap requires a source"),
    };

    let estimate =
        box_dimension(&set, &sizes).map_err(|e| AnalysisFailure(format!("{label}: {e}")))?;
    print_estimate(&label, set.len(), &estimate);
    if let Some(plot) = &args.plotdata {
        let text = format!("# {label}\n{}", plot_points(&estimate));
        write_file(plot, text.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_estimate(label: &str, point_count: usize, e: &DimensionEstimate) {
    println!("# source={label}");
    println!("points={point_count}");
    println!("dimension={:.6}", e.dimension);
    println!("slope={:.6}", e.slope);
    println!("intercept={:.6}", e.intercept);
    println!("r_squared={:.6}", e.r_squared);
    println!("fit_points={}", e.points.len());
    println!("excluded={}", e.excluded_count);
}

fn corpus(args: &CorpusArgs) -> anyhow::Result<ExitCode> {
    let settings = args.higuchi.settings()?;
    let jobs = match args.jobs {
        Some(0) => bail!("--jobs must be positive"),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let entries = load_manifest(&args.manifest)?;
    let run = run_manifest(&entries, &settings, jobs)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_file(
        &args.out.join("report.csv"),
        &emit_report(&run.records, ReportFormat::Csv)?,
    )?;
    write_file(
        &args.out.join("report.json"),
        &emit_report(&run.records, ReportFormat::Json)?,
    )?;
    if let Some(tag) = &args.aggregate {
        let groups = aggregate_by_tag(&run.records, tag)?;
        write_file(
            &args.out.join(format!("aggregate_{tag}.csv")),
            &emit_aggregate(&groups, tag)?,
        )?;
    }

    println!("# config_fingerprint={}", settings.fingerprint());
    for r in &run.records {
        println!(
            "{}\t{:.6}\t{}",
            r.entry.title, r.analysis.summary_max, r.analysis.classification
        );
    }
    for f in &run.failures {
        eprintln!("failed: {}: {}", f.entry.title, f.error);
    }
    if run.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(AnalysisFailure(format!(
            "{} of {} tracks failed",
            run.failures.len(),
            entries.len()
        ))
        .into())
    }
}
