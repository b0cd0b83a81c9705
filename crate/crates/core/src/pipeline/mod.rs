//! End-to-end scoring of formula pairs and batch aggregation.

mod debug;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use debug::{draw_overlay, dump_debug};

use crate::latex::{tokenize_with, EquivTable};
use crate::localize::{localize_with, ElementSet, LocalizeOptions, DEFAULT_MIN_PIXELS};
use crate::matcher::{assign, CostWeights, MatchSet};
use crate::metrics::{
    baseline_scores, cdm_score, BaselineScores, CdmScore, Failure, FailureReason, Side,
};
use crate::render::{
    assign_colors, render_cached, ColoredSource, Engine, FailureKind, Palette, RasterImage,
    RenderCache, RenderConfig, RenderError,
};
use crate::validator::{ransac_filter, token_filter, RansacParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricToggles {
    pub cdm: bool,
    pub baselines: bool,
    pub bleu_smoothing: bool,
}

impl Default for MetricToggles {
    fn default() -> Self {
        MetricToggles {
            cdm: true,
            baselines: true,
            bleu_smoothing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub render: RenderConfig,
    pub weights: CostWeights,
    pub ransac: RansacParams,
    /// Extra equivalence classes merged over the built-in table.
    pub equiv_table: Option<PathBuf>,
    pub tolerance: u8,
    pub min_pixels: usize,
    pub metrics: MetricToggles,
    /// Falls back to `CDM_CACHE_DIR`.
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; 0 means one per logical core.
    pub jobs: usize,
    pub dump_debug: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            render: RenderConfig::default(),
            weights: CostWeights::default(),
            ransac: RansacParams::default(),
            equiv_table: None,
            tolerance: crate::localize::DEFAULT_TOLERANCE,
            min_pixels: DEFAULT_MIN_PIXELS,
            metrics: MetricToggles::default(),
            cache_dir: None,
            jobs: 0,
            dump_debug: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("no samples to evaluate")]
    EmptyInput,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub gt: String,
    pub pred: String,
}

impl Sample {
    pub fn new(id: impl Into<String>, gt: impl Into<String>, pred: impl Into<String>) -> Sample {
        Sample {
            id: id.into(),
            gt: gt.into(),
            pred: pred.into(),
        }
    }
}

/// Milliseconds per stage, summed over both sides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub tokenize_ms: f64,
    pub render_ms: f64,
    pub localize_ms: f64,
    pub match_ms: f64,
    pub validate_ms: f64,
    pub total_ms: f64,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub gt: String,
    pub pred: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdm: Option<CdmScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BaselineScores>,
    #[serde(default)]
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<PathBuf>,
}

impl EvalRecord {
    pub fn f1(&self) -> Option<f64> {
        self.cdm.as_ref().map(|c| c.f1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub samples: usize,
    pub mean_cdm: Option<f64>,
    pub exprate_at_cdm: Option<f64>,
    pub mean_bleu: Option<f64>,
    pub mean_edit_distance: Option<f64>,
    pub exprate: Option<f64>,
    /// Successful renders over records that had both formulas present.
    pub render_success_rate: Option<f64>,
    pub gt_render_failures: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Aggregates records in the given order.
pub fn summarize(records: &[EvalRecord]) -> Result<Summary, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let cdm: Vec<&CdmScore> = records.iter().filter_map(|r| r.cdm.as_ref()).collect();
    let base: Vec<&BaselineScores> = records
        .iter()
        .filter_map(|r| r.baselines.as_ref())
        .collect();
    let present: Vec<&&CdmScore> = cdm
        .iter()
        .filter(|c| {
            c.failure
                .as_ref()
                .is_none_or(|f| f.reason.is_render_failure())
        })
        .collect();
    Ok(Summary {
        samples: records.len(),
        mean_cdm: mean(cdm.iter().map(|c| c.f1)),
        exprate_at_cdm: mean(cdm.iter().map(|c| if c.is_perfect() { 1.0 } else { 0.0 })),
        mean_bleu: mean(base.iter().map(|b| b.bleu)),
        mean_edit_distance: mean(base.iter().map(|b| b.edit_distance)),
        exprate: mean(base.iter().map(|b| if b.exact_match { 1.0 } else { 0.0 })),
        render_success_rate: mean(present.iter().map(|c| if c.render_ok { 1.0 } else { 0.0 })),
        gt_render_failures: cdm
            .iter()
            .filter(|c| {
                c.failure
                    .as_ref()
                    .is_some_and(|f| f.side == Side::Gt && f.reason.is_render_failure())
            })
            .count(),
    })
}

/// One side after rendering and localization.
#[derive(Clone, Debug)]
pub struct RenderedSide {
    pub colored: ColoredSource,
    pub image: RasterImage,
    pub elements: ElementSet,
}

/// Every intermediate product of scoring one pair.
#[derive(Clone, Debug)]
pub struct PairAnalysis {
    pub gt: RenderedSide,
    pub pred: RenderedSide,
    pub matched: MatchSet,
    pub validated: MatchSet,
    pub cdm: CdmScore,
}

struct Inner {
    cfg: EvalConfig,
    table: EquivTable,
    palette: Palette,
    cache: Option<RenderCache>,
}

fn render_failure(side: Side, e: RenderError) -> Failure {
    let reason = match &e {
        RenderError::PaletteExhausted { .. } => FailureReason::PaletteExhausted,
        RenderError::Failed { kind, .. } => match kind {
            FailureKind::CompileError => FailureReason::CompileError,
            FailureKind::Timeout => FailureReason::Timeout,
            FailureKind::RasterError => FailureReason::RasterError,
        },
    };
    Failure {
        side,
        reason,
        detail: e.to_string(),
    }
}

impl Inner {
    fn prepare(&self, source: &str, side: Side, t: &mut Timings) -> Result<RenderedSide, Failure> {
        let start = Instant::now();
        let seq = tokenize_with(source, &self.table).map_err(|e| Failure {
            side,
            reason: FailureReason::CompileError,
            detail: e.to_string(),
        })?;
        let colored = assign_colors(&seq, &self.palette).map_err(|e| render_failure(side, e))?;
        t.tokenize_ms += ms(start);

        let start = Instant::now();
        let image = render_cached(&colored, &self.cfg.render, self.cache.as_ref())
            .map_err(|e| render_failure(side, e))?;
        t.render_ms += ms(start);

        let start = Instant::now();
        let opts = LocalizeOptions {
            tolerance: self.cfg.tolerance,
            min_pixels: self.cfg.min_pixels,
        };
        let elements = localize_with(&image, &colored, opts).map_err(|e| Failure {
            side,
            reason: FailureReason::LocalizationAnomaly,
            detail: e.to_string(),
        })?;
        if !elements.omitted.is_empty() {
            log::info!(
                "{} {:?} token(s) produced no pixels and are not scored",
                elements.omitted.len(),
                side
            );
        }
        t.localize_ms += ms(start);
        Ok(RenderedSide {
            colored,
            image,
            elements,
        })
    }

    fn analyze(&self, gt: &str, pred: &str) -> (Result<PairAnalysis, Failure>, Timings) {
        let mut t = Timings::default();
        let result = (|| {
            let gt = self.prepare(gt, Side::Gt, &mut t)?;
            let pred = self.prepare(pred, Side::Pred, &mut t)?;
            let start = Instant::now();
            let matched = assign(
                &gt.elements.elements,
                &pred.elements.elements,
                &self.cfg.weights,
                &self.table,
            );
            t.match_ms += ms(start);
            let start = Instant::now();
            let validated =
                ransac_filter(token_filter(matched.clone(), &self.table), &self.cfg.ransac);
            t.validate_ms += ms(start);
            let cdm = cdm_score(&validated, true);
            Ok(PairAnalysis {
                gt,
                pred,
                matched,
                validated,
                cdm,
            })
        })();
        (result, t)
    }
}

/// A configured scorer with its equivalence table, cache and worker pool.
pub struct Evaluator {
    inner: Arc<Inner>,
    pool: rayon::ThreadPool,
}

impl Evaluator {
    pub fn new(cfg: EvalConfig) -> Result<Evaluator, EvalError> {
        cfg.render.validate().map_err(EvalError::Config)?;
        cfg.weights.validate().map_err(EvalError::Config)?;
        cfg.ransac.validate().map_err(EvalError::Config)?;
        if cfg.tolerance > 7 {
            return Err(EvalError::Config(format!(
                "tolerance must be at most 7, got {}",
                cfg.tolerance
            )));
        }
        let mut table = EquivTable::builtin().clone();
        if let Some(path) = &cfg.equiv_table {
            let extra = EquivTable::load(path).map_err(|e| {
                EvalError::Config(format!(
                    "cannot read equivalence table {}: {e}",
                    path.display()
                ))
            })?;
            table.extend(&extra);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| EvalError::Config(e.to_string()))?;
        let cache = RenderCache::resolve(cfg.cache_dir.as_deref());
        Ok(Evaluator {
            inner: Arc::new(Inner {
                cfg,
                table,
                palette: Palette::standard(),
                cache,
            }),
            pool,
        })
    }

    pub fn config(&self) -> &EvalConfig {
        &self.inner.cfg
    }

    pub fn table(&self) -> &EquivTable {
        &self.inner.table
    }

    /// Runs `f` on this evaluator's worker pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// Wall-clock allowance for one pair under an external renderer.
    pub fn budget(&self) -> Duration {
        Duration::from_secs_f64(self.inner.cfg.render.timeout_secs * 2.0 + 5.0)
    }

    /// Runs every stage and keeps the intermediate products.
    pub fn analyze(&self, gt: &str, pred: &str) -> Result<PairAnalysis, Failure> {
        self.inner.analyze(gt, pred).0
    }

    fn analyze_within_budget(
        &self,
        gt: &str,
        pred: &str,
    ) -> (Result<PairAnalysis, Failure>, Timings) {
        if self.inner.cfg.render.engine == Engine::Stub {
            return self.inner.analyze(gt, pred);
        }
        let inner = Arc::clone(&self.inner);
        let (g, p) = (gt.to_string(), pred.to_string());
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let _ = tx.send(inner.analyze(&g, &p));
        });
        let budget = self.budget();
        rx.recv_timeout(budget).unwrap_or_else(|_| {
            let failure = Failure {
                side: Side::Pred,
                reason: FailureReason::Timeout,
                detail: format!("pair exceeded {:.1}s budget", budget.as_secs_f64()),
            };
            (Err(failure), Timings::default())
        })
    }

    /// Scores one pair; failures are recorded, never returned.
    pub fn evaluate_pair(&self, id: &str, gt: &str, pred: &str) -> EvalRecord {
        let start = Instant::now();
        let cfg = &self.inner.cfg;
        let mut record = EvalRecord {
            id: id.to_string(),
            gt: gt.to_string(),
            pred: pred.to_string(),
            cdm: None,
            baselines: None,
            timings: Timings::default(),
            artifacts: Vec::new(),
        };
        if cfg.metrics.cdm {
            let (result, timings) = self.analyze_within_budget(gt, pred);
            record.timings = timings;
            record.cdm = Some(match &result {
                Ok(a) => a.cdm.clone(),
                Err(f) => {
                    if f.side == Side::Gt {
                        log::warn!("sample {id}: ground truth failed to render: {}", f.detail);
                    }
                    CdmScore::failed(f.clone())
                }
            });
            if let (Some(dir), Ok(a)) = (&cfg.dump_debug, &result) {
                match dump_debug(dir, id, a) {
                    Ok(paths) => record.artifacts = paths,
                    Err(e) => log::warn!("sample {id}: debug dump failed: {e}"),
                }
            }
        }
        if cfg.metrics.baselines {
            record.baselines = Some(baseline_scores(gt, pred, cfg.metrics.bleu_smoothing));
        }
        record.timings.total_ms = ms(start);
        record
    }

    /// Scores all samples on the worker pool; output order follows input.
    pub fn evaluate_batch(
        &self,
        samples: &[Sample],
    ) -> Result<(Vec<EvalRecord>, Summary), EvalError> {
        if samples.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        let mut seen = HashSet::new();
        for s in samples {
            if !seen.insert(s.id.as_str()) {
                return Err(EvalError::DuplicateId(s.id.clone()));
            }
        }
        let records: Vec<EvalRecord> = self.pool.install(|| {
            samples
                .par_iter()
                .map(|s| self.evaluate_pair(&s.id, &s.gt, &s.pred))
                .collect()
        });
        let summary = summarize(&records)?;
        Ok((records, summary))
    }
}

pub fn evaluate_pair(gt: &str, pred: &str, cfg: &EvalConfig) -> Result<EvalRecord, EvalError> {
    Ok(Evaluator::new(cfg.clone())?.evaluate_pair("pair", gt, pred))
}

pub fn evaluate_batch(
    samples: &[Sample],
    cfg: &EvalConfig,
) -> Result<(Vec<EvalRecord>, Summary), EvalError> {
    Evaluator::new(cfg.clone())?.evaluate_batch(samples)
}

/// Directory-safe form of a sample id.
pub fn sanitize_id(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        "_".into()
    } else {
        s
    }
}

pub(crate) fn ensure_dir(path: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(path)
}
