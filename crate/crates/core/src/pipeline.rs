//! Batch corpus analysis.
//!
//! Each track is mixed to mono, cut into windows and measured window by
//! window with the Higuchi estimator. The per-track maximum drives the
//! fractality class and the per-tag aggregation; the mean is kept for
//! context.
//!
//! # Manifest format
//!
//! One track per line, fields separated by tabs: the audio path first, then
//! any number of `key=value` tags. Blank lines and lines starting with `#`
//! are ignored. Relative paths resolve against the manifest's directory. The
//! `title` tag, when present, names the track; otherwise the file stem does.
//!
//! ```text
//! audio/track01.wav<TAB>title=Track One<TAB>origin=Senegal<TAB>expected_fractal=yes
//! ```
//!
//! # Report formats (schema version 1)
//!
//! * `csv`: header `title,path,tags,summary_max,summary_mean,classification,window_count,failed_windows,config_fingerprint`;
//!   tags are written as `key=value` pairs joined by `;` in key order.
//! * `json`: an array of track records including every window's fit points.
//! * `plotdata`: one block per track, headed by `# <title>` and separated by a
//!   blank line, listing `ln k ln L(k)` for the window with the highest dimension.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::FractalError;
use crate::estimation::DimensionEstimate;
use crate::higuchi::{higuchi_dimension, HiguchiConfig};
use crate::wav::{parse_wav, segment, to_mono, AudioClip, WavError, WindowPlan};

/// Bumped whenever the report layout or the analysis semantics change.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Tag value used for records that lack the aggregation key.
pub const UNTAGGED: &str = "untagged";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Analysis(#[from] FractalError),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("no window could be analyzed ({failed} failed): {first_error}")]
    NoSuccessfulWindows { failed: usize, first_error: String },
    #[error("unknown report format {0:?} (expected csv, json or plotdata)")]
    UnknownFormat(String),
    #[error("no records to report")]
    EmptyRecords,
    #[error("report encoding failed: {0}")]
    Encoding(String),
}

pub type PipelineResult<T> = std::result::Result<T, PipelineError>;

/// Fractality band of a dimension reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    LeastFractal,
    ModeratelyFractal,
    HighlyFractal,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::LeastFractal => "LeastFractal",
            Classification::ModeratelyFractal => "ModeratelyFractal",
            Classification::HighlyFractal => "HighlyFractal",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rounds to hundredths, half away from zero for positive readings.
///
/// The `1e-9` nudge makes decimal ties such as `1.025` (stored as
/// `1.02499999...`) round up as written.
pub fn hundredths(dimension: f64) -> i64 {
    (dimension * 100.0 + 0.5 + 1e-9).floor() as i64
}

/// Bands after rounding to two decimals: `<= 1.02` least, `1.03..=1.08`
/// moderate, `>= 1.09` high.
pub fn classify(dimension: f64) -> Result<Classification, FractalError> {
    if !dimension.is_finite() {
        return Err(FractalError::invalid(format!(
            "cannot classify non-finite dimension {dimension}"
        )));
    }
    Ok(match hundredths(dimension) {
        ..=102 => Classification::LeastFractal,
        103..=108 => Classification::ModeratelyFractal,
        _ => Classification::HighlyFractal,
    })
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackEntry {
    pub path: PathBuf,
    pub title: String,
    pub tags: BTreeMap<String, String>,
}

impl TrackEntry {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let title = default_title(&path);
        TrackEntry {
            path,
            title,
            tags: BTreeMap::new(),
        }
    }

    pub fn with_tag(mut self, key: &str, value: &str) -> Self {
        if key == "title" {
            self.title = value.to_string();
        }
        self.tags.insert(key.to_string(), value.to_string());
        self
    }
}

fn default_title(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Parses manifest text; relative paths are joined onto `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> PipelineResult<Vec<TrackEntry>> {
    let mut entries: Vec<TrackEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let path_field = fields.next().unwrap_or_default().trim();
        if path_field.is_empty() {
            return Err(PipelineError::Manifest {
                line,
                message: "empty path".into(),
            });
        }
        let path = Path::new(path_field);
        let path = if path.is_absolute() {
            path.to_path_buf()
        } else {
            base_dir.join(path)
        };
        let mut entry = TrackEntry::new(path);
        for field in fields {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| PipelineError::Manifest {
                    line,
                    message: format!("tag {field:?} is not key=value"),
                })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(PipelineError::Manifest {
                    line,
                    message: format!("tag {field:?} has an empty key"),
                });
            }
            entry = entry.with_tag(key, value.trim());
        }
        if entries.iter().any(|e| e.path == entry.path) {
            return Err(PipelineError::Manifest {
                line,
                message: format!("duplicate path {}", entry.path.display()),
            });
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Reads and parses a manifest file.
pub fn load_manifest(path: &Path) -> PipelineResult<Vec<TrackEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Everything that influences a track's numbers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub plan: WindowPlan,
    pub higuchi: HiguchiConfig,
}

impl AnalysisSettings {
    /// First 16 hex digits of SHA-256 over the schema version and the
    /// settings' JSON form.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("settings serialize");
        let mut hasher = Sha256::new();
        hasher.update(format!("fractal-report-v{REPORT_SCHEMA_VERSION}\n"));
        hasher.update(canonical.as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }
}

/// Outcome of one analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub offset_seconds: f64,
    pub estimate: Option<DimensionEstimate>,
    pub error: Option<String>,
}

/// Per-track results without manifest metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackAnalysis {
    pub window_estimates: Vec<WindowResult>,
    pub summary_max: f64,
    pub summary_mean: f64,
    pub classification: Classification,
    pub config_fingerprint: String,
}

impl TrackAnalysis {
    pub fn failed_windows(&self) -> usize {
        self.window_estimates
            .iter()
            .filter(|w| w.estimate.is_none())
            .count()
    }

    /// The successful window with the largest dimension (first on ties).
    pub fn peak_window(&self) -> Option<&WindowResult> {
        self.window_estimates
            .iter()
            .filter(|w| w.estimate.is_some())
            .fold(None, |best: Option<&WindowResult>, w| match best {
                Some(b) if dim(b) >= dim(w) => Some(b),
                _ => Some(w),
            })
    }
}

fn dim(w: &WindowResult) -> f64 {
    w.estimate
        .as_ref()
        .map_or(f64::NEG_INFINITY, |e| e.dimension)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub entry: TrackEntry,
    #[serde(flatten)]
    pub analysis: TrackAnalysis,
}

/// Mono mixdown, windowing and a Higuchi fit per window.
///
/// Windows that cannot be measured (silence, for instance) are kept as
/// failures and left out of the summaries. A track with no measurable window
/// is an error.
pub fn analyze_track(
    clip: &AudioClip,
    settings: &AnalysisSettings,
) -> PipelineResult<TrackAnalysis> {
    let mono = to_mono(clip)?;
    let windows = segment(&mono, &settings.plan)?;
    let window_estimates: Vec<WindowResult> = windows
        .iter()
        .map(|w| match higuchi_dimension(&w.series, &settings.higuchi) {
            Ok(est) => WindowResult {
                offset_seconds: w.offset_seconds,
                estimate: Some(est),
                error: None,
            },
            Err(e) => WindowResult {
                offset_seconds: w.offset_seconds,
                estimate: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let dims: Vec<f64> = window_estimates
        .iter()
        .filter_map(|w| w.estimate.as_ref().map(|e| e.dimension))
        .collect();
    if dims.is_empty() {
        return Err(PipelineError::NoSuccessfulWindows {
            failed: window_estimates.len(),
            first_error: window_estimates
                .first()
                .and_then(|w| w.error.clone())
                .unwrap_or_default(),
        });
    }
    let summary_max = dims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let summary_mean = dims.iter().sum::<f64>() / dims.len() as f64;
    Ok(TrackAnalysis {
        window_estimates,
        summary_max,
        summary_mean,
        classification: classify(summary_max)?,
        config_fingerprint: settings.fingerprint(),
    })
}

/// Reads, decodes and analyzes one file.
pub fn analyze_file(path: &Path, settings: &AnalysisSettings) -> PipelineResult<TrackAnalysis> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    analyze_track(&parse_wav(&bytes)?, settings)
}

/// A track that could not be analyzed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFailure {
    pub entry: TrackEntry,
    pub error: String,
}

/// Records and failures, each in manifest order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusRun {
    pub records: Vec<TrackRecord>,
    pub failures: Vec<TrackFailure>,
}

/// Analyzes every entry on a pool of `jobs` workers (at least one).
///
/// A failing track never aborts the batch. Output order follows the
/// manifest regardless of `jobs`.
pub fn run_manifest(
    entries: &[TrackEntry],
    settings: &AnalysisSettings,
    jobs: usize,
) -> PipelineResult<CorpusRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Io {
            path: PathBuf::from("<worker pool>"),
            message: e.to_string(),
        })?;
    let outcomes: Vec<PipelineResult<TrackAnalysis>> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| analyze_file(&entry.path, settings))
            .collect()
    });

    let mut run = CorpusRun::default();
    for (entry, outcome) in entries.iter().zip(outcomes) {
        match outcome {
            Ok(analysis) => run.records.push(TrackRecord {
                entry: entry.clone(),
                analysis,
            }),
            Err(e) => run.failures.push(TrackFailure {
                entry: entry.clone(),
                error: e.to_string(),
            }),
        }
    }
    Ok(run)
}

/// Largest `summary_max` within one tag value and the track that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagMaximum {
    pub max_dimension: f64,
    pub title: String,
    pub track_count: usize,
}

/// Groups records by the value of `tag_key` and keeps each group's maximum.
/// Records without the key fall under [`UNTAGGED`]; ties keep the earlier record.
pub fn aggregate_by_tag(
    records: &[TrackRecord],
    tag_key: &str,
) -> PipelineResult<BTreeMap<String, TagMaximum>> {
    if records.is_empty() {
        return Err(PipelineError::EmptyRecords);
    }
    if !records.iter().any(|r| r.entry.tags.contains_key(tag_key)) {
        return Err(FractalError::invalid(format!("no record carries the tag {tag_key:?}")).into());
    }
    let mut groups: BTreeMap<String, TagMaximum> = BTreeMap::new();
    for r in records {
        let value = r
            .entry
            .tags
            .get(tag_key)
            .map_or(UNTAGGED, String::as_str)
            .to_string();
        let reading = r.analysis.summary_max;
        groups
            .entry(value)
            .and_modify(|g| {
                g.track_count += 1;
                if reading > g.max_dimension {
                    g.max_dimension = reading;
                    g.title = r.entry.title.clone();
                }
            })
            .or_insert_with(|| TagMaximum {
                max_dimension: reading,
                title: r.entry.title.clone(),
                track_count: 1,
            });
    }
    Ok(groups)
}

/// CSV table `<tag_key>,max_dimension,classification,title,track_count`.
pub fn emit_aggregate(
    groups: &BTreeMap<String, TagMaximum>,
    tag_key: &str,
) -> PipelineResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let encode = |e: csv::Error| PipelineError::Encoding(e.to_string());
    w.write_record([
        tag_key,
        "max_dimension",
        "classification",
        "title",
        "track_count",
    ])
    .map_err(encode)?;
    for (value, g) in groups {
        w.write_record([
            value.as_str(),
            &g.max_dimension.to_string(),
            classify(g.max_dimension)?.as_str(),
            &g.title,
            &g.track_count.to_string(),
        ])
        .map_err(encode)?;
    }
    w.into_inner()
        .map_err(|e| PipelineError::Encoding(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    PlotData,
}

impl FromStr for ReportFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> PipelineResult<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "plotdata" => Ok(ReportFormat::PlotData),
            other => Err(PipelineError::UnknownFormat(other.to_string())),
        }
    }
}

pub const CSV_COLUMNS: [&str; 9] = [
    "title",
    "path",
    "tags",
    "summary_max",
    "summary_mean",
    "classification",
    "window_count",
    "failed_windows",
    "config_fingerprint",
];

fn format_tags(tags: &BTreeMap<String, String>) -> String {
    tags.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Renders records in the requested format.
pub fn emit_report(records: &[TrackRecord], format: ReportFormat) -> PipelineResult<Vec<u8>> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let encode = |e: csv::Error| PipelineError::Encoding(e.to_string());
            w.write_record(CSV_COLUMNS).map_err(encode)?;
            for r in records {
                let a = &r.analysis;
                w.write_record([
                    r.entry.title.clone(),
                    r.entry.path.display().to_string(),
                    format_tags(&r.entry.tags),
                    a.summary_max.to_string(),
                    a.summary_mean.to_string(),
                    a.classification.to_string(),
                    a.window_estimates.len().to_string(),
                    a.failed_windows().to_string(),
                    a.config_fingerprint.clone(),
                ])
                .map_err(encode)?;
            }
            w.into_inner()
                .map_err(|e| PipelineError::Encoding(e.to_string()))
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(records)
                .map_err(|e| PipelineError::Encoding(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::PlotData => {
            if records.is_empty() {
                return Err(PipelineError::EmptyRecords);
            }
            let mut out = String::new();
            for (i, r) in records.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "# {}", r.entry.title);
                if let Some(w) = r.analysis.peak_window() {
                    let est = w.estimate.as_ref().expect("peak window has an estimate");
                    let _ = writeln!(
                        out,
                        "# window_offset={} dimension={}",
                        w.offset_seconds, est.dimension
                    );
                    out.push_str(&plot_points(est));
                }
            }
            Ok(out.into_bytes())
        }
    }
}

/// `ln scale ln measure` lines for one fit.
pub fn plot_points(est: &DimensionEstimate) -> String {
    let mut out = String::new();
    for p in &est.points {
        let _ = writeln!(out, "{} {}", p.ln_scale(), p.ln_measure());
    }
    out
}

/// Parses a JSON report back into records.
pub fn parse_json_report(bytes: &[u8]) -> PipelineResult<Vec<TrackRecord>> {
    serde_json::from_slice(bytes).map_err(|e| PipelineError::Encoding(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_ramp, gen_sine, gen_white_noise};
    use crate::wav::SampleFormat;

    fn record(title: &str, tags: &[(&str, &str)], max: f64) -> TrackRecord {
        let mut entry = TrackEntry::new(format!("{title}.wav")).with_tag("title", title);
        for (k, v) in tags {
            entry = entry.with_tag(k, v);
        }
        TrackRecord {
            entry,
            analysis: TrackAnalysis {
                window_estimates: vec![],
                summary_max: max,
                summary_mean: max,
                classification: classify(max).unwrap(),
                config_fingerprint: "test".into(),
            },
        }
    }

    #[test]
    fn band_edges() {
        use Classification::*;
        assert_eq!(classify(1.02).unwrap(), LeastFractal);
        assert_eq!(classify(0.95).unwrap(), LeastFractal);
        assert_eq!(classify(1.024).unwrap(), LeastFractal);
        assert_eq!(classify(1.025).unwrap(), ModeratelyFractal);
        assert_eq!(classify(1.03).unwrap(), ModeratelyFractal);
        assert_eq!(classify(1.05).unwrap(), ModeratelyFractal);
        assert_eq!(classify(1.07).unwrap(), ModeratelyFractal);
        assert_eq!(classify(1.08).unwrap(), ModeratelyFractal);
        assert_eq!(classify(1.0849).unwrap(), ModeratelyFractal);
        assert_eq!(classify(1.085).unwrap(), HighlyFractal);
        assert_eq!(classify(1.09).unwrap(), HighlyFractal);
        assert_eq!(classify(1.13).unwrap(), HighlyFractal);
        assert_eq!(classify(2.0).unwrap(), HighlyFractal);
        assert!(classify(f64::NAN).is_err());
        assert!(classify(f64::INFINITY).is_err());
    }

    #[test]
    fn manifest_parsing() {
        let text = "# corpus\n\
                    a.wav\ttitle=Alpha\torigin=Senegal\n\
                    \n\
                    /abs/b.wav\torigin=Congo\texpected_fractal=yes\r\n";
        let entries = parse_manifest(text, Path::new("/data")).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].path, PathBuf::from("/data/a.wav"));
        assert_eq!(entries[0].title, "Alpha");
        assert_eq!(entries[0].tags["origin"], "Senegal");
        assert_eq!(entries[1].path, PathBuf::from("/abs/b.wav"));
        assert_eq!(entries[1].title, "b");
        assert_eq!(entries[1].tags["expected_fractal"], "yes");
    }

    #[test]
    fn manifest_errors() {
        let dup = parse_manifest("a.wav\na.wav\n", Path::new("/d")).unwrap_err();
        assert!(matches!(dup, PipelineError::Manifest { line: 2, .. }));
        let bad_tag = parse_manifest("a.wav\torigin\n", Path::new("/d")).unwrap_err();
        assert!(matches!(bad_tag, PipelineError::Manifest { line: 1, .. }));
        let empty_key = parse_manifest("a.wav\t=x\n", Path::new("/d")).unwrap_err();
        assert!(matches!(empty_key, PipelineError::Manifest { .. }));
        let no_path = parse_manifest("\tk=v\n", Path::new("/d")).unwrap_err();
        assert!(matches!(no_path, PipelineError::Manifest { .. }));
        assert!(parse_manifest("", Path::new("/d")).unwrap().is_empty());
    }

    #[test]
    fn sine_track_is_least_fractal() {
        let sine = gen_sine(440.0, 44100.0, 10.0, 0.8).unwrap();
        let clip = AudioClip::from_series(&sine, SampleFormat::I16).unwrap();
        let a = analyze_track(&clip, &AnalysisSettings::default()).unwrap();
        assert_eq!(a.window_estimates.len(), 9);
        assert_eq!(a.failed_windows(), 0);
        assert!(a.summary_max <= 1.03, "{}", a.summary_max);
        assert!(a.summary_mean <= a.summary_max);
        assert_eq!(a.classification, Classification::LeastFractal);
    }

    #[test]
    fn silence_is_an_error() {
        let clip = AudioClip::new(8000, SampleFormat::I16, vec![vec![0.0; 80_000]]).unwrap();
        let err = analyze_track(&clip, &AnalysisSettings::default()).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::NoSuccessfulWindows { failed: 9, .. }
        ));
    }

    #[test]
    fn partially_silent_track_skips_silent_windows() {
        let mut samples = gen_white_noise(3, 8000.0, 4.0, 0.5).unwrap().into_samples();
        samples.extend(std::iter::repeat_n(0.0, 16_000));
        let clip = AudioClip::new(8000, SampleFormat::F32, vec![samples]).unwrap();
        let a = analyze_track(&clip, &AnalysisSettings::default()).unwrap();
        assert_eq!(a.window_estimates.len(), 5);
        assert_eq!(a.failed_windows(), 1);
        assert!(a.window_estimates[4].error.is_some());
        assert_eq!(a.classification, Classification::HighlyFractal);
    }

    #[test]
    fn short_track_is_an_error() {
        let clip = AudioClip::new(8000, SampleFormat::I16, vec![vec![0.1; 100]]).unwrap();
        assert!(matches!(
            analyze_track(&clip, &AnalysisSettings::default()),
            Err(PipelineError::Analysis(_))
        ));
    }

    #[test]
    fn aggregation() {
        let one = vec![record("DJamil", &[("origin", "Senegal")], 1.13)];
        let g = aggregate_by_tag(&one, "origin").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g["Senegal"].max_dimension, 1.13);
        assert_eq!(g["Senegal"].title, "DJamil");

        let two = vec![
            record("a", &[("origin", "Senegal")], 1.10),
            record("b", &[("origin", "Senegal")], 1.45),
            record("c", &[], 1.9),
        ];
        let g = aggregate_by_tag(&two, "origin").unwrap();
        assert_eq!(g["Senegal"].max_dimension, 1.45);
        assert_eq!(g["Senegal"].title, "b");
        assert_eq!(g["Senegal"].track_count, 2);
        assert_eq!(g[UNTAGGED].max_dimension, 1.9);

        assert!(matches!(
            aggregate_by_tag(&[], "origin"),
            Err(PipelineError::EmptyRecords)
        ));
        assert!(aggregate_by_tag(&two, "album").is_err());
    }

    #[test]
    fn aggregate_table() {
        let recs = vec![
            record("a", &[("origin", "Senegal")], 1.10),
            record("b", &[("origin", "Congo")], 1.45),
        ];
        let table = emit_aggregate(&aggregate_by_tag(&recs, "origin").unwrap(), "origin").unwrap();
        assert_eq!(
            String::from_utf8(table).unwrap(),
            "origin,max_dimension,classification,title,track_count\n\
             Congo,1.45,HighlyFractal,b,1\n\
             Senegal,1.1,HighlyFractal,a,1\n"
        );
    }

    #[test]
    fn csv_schema() {
        let recs = vec![record(
            "Gainde",
            &[("origin", "Senegal"), ("album", "x,y")],
            1.09,
        )];
        let out = String::from_utf8(emit_report(&recs, ReportFormat::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(
            lines[1],
            "Gainde,Gainde.wav,\"album=x,y;origin=Senegal;title=Gainde\",1.09,1.09,HighlyFractal,0,0,test"
        );
    }

    #[test]
    fn json_round_trip_with_windows() {
        let ramp = gen_ramp(64).unwrap().affine(1.0 / 64.0, 0.0).unwrap();
        let clip = AudioClip::new(16, SampleFormat::F32, vec![ramp.into_samples()]).unwrap();
        let a = analyze_track(&clip, &AnalysisSettings::default()).unwrap();
        let recs = vec![TrackRecord {
            entry: TrackEntry::new("ramp.wav"),
            analysis: a,
        }];
        let json = emit_report(&recs, ReportFormat::Json).unwrap();
        assert_eq!(parse_json_report(&json).unwrap(), recs);
    }

    #[test]
    fn plotdata_of_ramp_has_slope_minus_one() {
        let ramp = gen_ramp(400).unwrap().affine(1.0 / 400.0, -0.5).unwrap();
        let clip = AudioClip::new(100, SampleFormat::F32, vec![ramp.into_samples()]).unwrap();
        let a = analyze_track(&clip, &AnalysisSettings::default()).unwrap();
        let recs = vec![TrackRecord {
            entry: TrackEntry::new("ramp.wav").with_tag("title", "Ramp"),
            analysis: a,
        }];
        let text = String::from_utf8(emit_report(&recs, ReportFormat::PlotData).unwrap()).unwrap();
        assert!(text.starts_with("# Ramp\n"));
        let pts: Vec<(f64, f64)> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| {
                let mut it = l.split(' ').map(|v| v.parse::<f64>().unwrap());
                (it.next().unwrap(), it.next().unwrap())
            })
            .collect();
        assert!(pts.len() >= 2);
        for w in pts.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            assert!((slope + 1.0).abs() < 1e-9, "slope {slope}");
        }
        assert!(matches!(
            emit_report(&[], ReportFormat::PlotData),
            Err(PipelineError::EmptyRecords)
        ));
    }

    #[test]
    fn report_format_tokens() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!(
            "plotdata".parse::<ReportFormat>().unwrap(),
            ReportFormat::PlotData
        );
        assert!(matches!(
            "xml".parse::<ReportFormat>(),
            Err(PipelineError::UnknownFormat(_))
        ));
    }

    #[test]
    fn fingerprint_tracks_settings() {
        let base = AnalysisSettings::default();
        assert_eq!(
            base.fingerprint(),
            AnalysisSettings::default().fingerprint()
        );
        assert_eq!(base.fingerprint().len(), 16);
        let other = AnalysisSettings {
            higuchi: HiguchiConfig::with_k_max(8),
            ..AnalysisSettings::default()
        };
        assert_ne!(base.fingerprint(), other.fingerprint());
    }
}
