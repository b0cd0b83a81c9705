//! Command-line front end: `eval`, `doc-eval` and `mine`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::{evaluate_corpus, CorpusError, Dialect, MatchThresholds, ReviewItem};
use crate::pipeline::{summarize, EvalConfig, EvalError, EvalRecord, Evaluator, Sample, Summary};
use crate::render::Engine;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cdm",
    version,
    about = "Image-level scoring of formula recognition output"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score formula pairs from a JSONL file.
    Eval(EvalArgs),
    /// Extract and score displayed formulas from whole documents.
    DocEval(DocEvalArgs),
    /// Select samples scoring below a threshold from a report.
    Mine(MineArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RendererArg {
    Tex,
    Stub,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Cdm,
    Baselines,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DialectArg {
    Latex,
    Markdown,
    Bracket,
}

impl From<DialectArg> for Dialect {
    fn from(d: DialectArg) -> Dialect {
        match d {
            DialectArg::Latex => Dialect::LatexSource,
            DialectArg::Markdown => Dialect::MarkdownOutput,
            DialectArg::Bracket => Dialect::BracketOutput,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub renderer: Option<RendererArg>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub w_token: Option<f64>,
    #[arg(long)]
    pub w_pos: Option<f64>,
    #[arg(long)]
    pub w_order: Option<f64>,
    /// Metric families to compute.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricArg>>,
    /// Write renders, overlays and element dumps per sample here.
    #[arg(long)]
    pub dump_debug: Option<PathBuf>,
    /// Render cache directory (default: $CDM_CACHE_DIR, else none).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Also write the summary as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL with one {"id", "gt", "pred"} object per line.
    #[arg(long, short)]
    pub input: PathBuf,
    /// JSON report path.
    #[arg(long, short)]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DocEvalArgs {
    /// Directory of GT `.tex` sources or one-formula-per-line `.txt` files.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory of model outputs named after the GT files.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    pub dialect: DialectArg,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long)]
    pub round1: Option<f64>,
    #[arg(long)]
    pub round2: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Report written by `eval` or `doc-eval`.
    #[arg(long)]
    pub report: PathBuf,
    /// JSONL of selected samples.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Keep samples whose CDM is below this value.
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Input(_) => EXIT_INPUT,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> CliError {
        match e {
            EvalError::Config(m) => CliError::Config(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Contents of `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    #[serde(flatten)]
    pub eval: EvalConfig,
    pub doc: MatchThresholds,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn build_config(common: &CommonArgs) -> Result<FileConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let e = &mut cfg.eval;
    if let Some(r) = common.renderer {
        e.render.engine = match r {
            RendererArg::Tex => Engine::Tex,
            RendererArg::Stub => Engine::Stub,
        };
    }
    if let Some(j) = common.jobs {
        e.jobs = j;
    }
    if let Some(w) = common.w_token {
        e.weights.w_t = w;
    }
    if let Some(w) = common.w_pos {
        e.weights.w_p = w;
    }
    if let Some(w) = common.w_order {
        e.weights.w_o = w;
    }
    if let Some(m) = &common.metrics {
        e.metrics.cdm = m.contains(&MetricArg::Cdm);
        e.metrics.baselines = m.contains(&MetricArg::Baselines);
    }
    if common.dump_debug.is_some() {
        e.dump_debug.clone_from(&common.dump_debug);
    }
    if common.cache_dir.is_some() {
        e.cache_dir.clone_from(&common.cache_dir);
    }
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summary: Summary,
    pub records: Vec<EvalRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched_review: Vec<ReviewItem>,
}

impl Report {
    pub fn new(records: Vec<EvalRecord>) -> Result<Report, EvalError> {
        Ok(Report {
            summary: summarize(&records)?,
            records,
            unmatched_review: Vec::new(),
        })
    }

    /// Loads a report and checks that its summary matches its records.
    pub fn load(path: &Path) -> Result<Report, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let report: Report = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let again = summarize(&report.records).map_err(CliError::from)?;
        if again != report.summary {
            return Err(CliError::Input(format!(
                "{}: summary does not match its records",
                path.display()
            )));
        }
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        write_file(path, json.as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `metric,value` rows.
pub fn summary_csv(s: &Summary) -> String {
    let mut out = String::from("metric,value\n");
    let rows = [
        ("samples", s.samples.to_string()),
        ("mean_cdm", fmt_opt(s.mean_cdm)),
        ("exprate_at_cdm", fmt_opt(s.exprate_at_cdm)),
        ("mean_bleu", fmt_opt(s.mean_bleu)),
        ("mean_edit_distance", fmt_opt(s.mean_edit_distance)),
        ("exprate", fmt_opt(s.exprate)),
        ("render_success_rate", fmt_opt(s.render_success_rate)),
        ("gt_render_failures", s.gt_render_failures.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

fn print_summary(s: &Summary) {
    let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    println!("samples             {}", s.samples);
    println!("CDM                 {}", show(s.mean_cdm));
    println!("ExpRate@CDM         {}", show(s.exprate_at_cdm));
    println!("BLEU                {}", show(s.mean_bleu));
    println!("edit distance       {}", show(s.mean_edit_distance));
    println!("ExpRate             {}", show(s.exprate));
    println!("render success rate {}", show(s.render_success_rate));
}

/// Parses JSONL samples; blank lines are skipped.
pub fn read_samples(path: &Path) -> Result<Vec<Sample>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line =
            line.map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample = serde_json::from_str(&line)
            .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        samples.push(s);
    }
    Ok(samples)
}

pub fn write_samples(path: &Path, samples: &[Sample]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    for s in samples {
        serde_json::to_writer(&mut buf, s).expect("sample serializes");
        buf.write_all(b"\n").expect("write to vec");
    }
    write_file(path, &buf)
}

fn finish(report: &Report, output: &Path, csv: Option<&Path>) -> Result<(), CliError> {
    report.save(output)?;
    if let Some(csv) = csv {
        write_file(csv, summary_csv(&report.summary).as_bytes())?;
    }
    print_summary(&report.summary);
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Report, CliError> {
    let cfg = build_config(&args.common)?;
    let ev = Evaluator::new(cfg.eval)?;
    let samples = read_samples(&args.input)?;
    let (records, summary) = ev.evaluate_batch(&samples)?;
    let report = Report {
        summary,
        records,
        unmatched_review: Vec::new(),
    };
    finish(&report, &args.output, args.common.csv.as_deref())?;
    Ok(report)
}

pub fn cmd_doc_eval(args: &DocEvalArgs) -> Result<Report, CliError> {
    let mut cfg = build_config(&args.common)?;
    if let Some(r) = args.round1 {
        cfg.doc.round1 = r;
    }
    if let Some(r) = args.round2 {
        cfg.doc.round2 = r;
    }
    cfg.doc.validate().map_err(CliError::Config)?;
    let ev = Evaluator::new(cfg.eval)?;
    let result = evaluate_corpus(&ev, &args.gt, &args.pred, args.dialect.into(), &cfg.doc)
        .map_err(|e| match e {
            CorpusError::Eval(e) => CliError::from(e),
            io => CliError::Input(io.to_string()),
        })?;
    let report = Report {
        summary: result.summary.clone(),
        records: result.records().cloned().collect(),
        unmatched_review: result
            .documents
            .iter()
            .flat_map(|d| d.unmatched_review.iter().cloned())
            .collect(),
    };
    finish(&report, &args.output, args.common.csv.as_deref())?;
    Ok(report)
}

/// Samples whose CDM lies below `threshold`, in report order.
pub fn mine_report(
    report_json: &serde_json::Value,
    threshold: f64,
) -> Result<Vec<Sample>, CliError> {
    let records = report_json
        .get("records")
        .and_then(|r| r.as_array())
        .ok_or_else(|| CliError::Input("report has no records array".into()))?;
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let text = |key: &str| {
            r.get(key)
                .and_then(|v| v.as_str())
                .map(String::from)
                .ok_or_else(|| {
                    CliError::Input(format!("missing artifacts: record {} lacks `{key}`", i + 1))
                })
        };
        let f1 = r
            .get("cdm")
            .and_then(|c| c.get("f1"))
            .and_then(|v| v.as_f64())
            .ok_or_else(|| {
                CliError::Input(format!(
                    "missing artifacts: record {} has no CDM score",
                    i + 1
                ))
            })?;
        if f1 < threshold {
            out.push(Sample {
                id: text("id")?,
                gt: text("gt")?,
                pred: text("pred")?,
            });
        }
    }
    Ok(out)
}

pub fn cmd_mine(args: &MineArgs) -> Result<Vec<Sample>, CliError> {
    let text = std::fs::read_to_string(&args.report)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.report.display())))?;
    let json: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.report.display())))?;
    let mined = mine_report(&json, args.threshold)?;
    write_samples(&args.output, &mined)?;
    println!("{} sample(s) below {}", mined.len(), args.threshold);
    Ok(mined)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Eval(a) => cmd_eval(a).map(drop),
        Command::DocEval(a) => cmd_doc_eval(a).map(drop),
        Command::Mine(a) => cmd_mine(a).map(drop),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("cdm: {e}");
            e.exit_code()
        }
    }
}
