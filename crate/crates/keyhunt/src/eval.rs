//! Metrics and the benchmark harness: per-slice classifier metrics,
//! per-key-length retrieval counts, and wall-clock comparison of the
//! brute-force and classifier-assisted extraction paths.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::bruteforce::{find_in_slices, find_iv_and_key, SearchOptions, SearchSpace};
use crate::cipher::lookup_cipher;
use crate::dataset::DatasetEntry;
use crate::error::Result;
use crate::forest::{load_model, StackedModel};
use crate::packet::ValidationPacket;
use crate::preprocess::{page_filter, slices_for_heap, PreprocessConfig};

/// Per-slice prediction outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: bool, label: bool) {
        match (predicted, label) {
            (true, true) => self.true_positives += 1,
            (true, false) => self.false_positives += 1,
            (false, false) => self.true_negatives += 1,
            (false, true) => self.false_negatives += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Standard classification metrics as fractions in [0, 1]. Ratios with a
/// zero denominator are reported as absent rather than zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn compute_metrics(counts: &ConfusionCounts) -> Metrics {
    let tp = counts.true_positives as f64;
    let fp = counts.false_positives as f64;
    let fn_ = counts.false_negatives as f64;
    let total = counts.total() as f64;
    let accuracy = if total == 0.0 {
        0.0
    } else {
        (tp + counts.true_negatives as f64) / total
    };
    let precision = (counts.true_positives + counts.false_positives > 0).then(|| tp / (tp + fp));
    let recall = (counts.true_positives + counts.false_negatives > 0).then(|| tp / (tp + fn_));
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Metrics {
        accuracy,
        precision,
        recall,
        f1,
    }
}

/// "93.17"-style rendering; absent values print as "-".
pub fn percent(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.2}", v * 100.0),
        None => "-".to_string(),
    }
}

/// Which classifier predicted a slice positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelKind {
    HighPrecision,
    HighRecall,
    Stacked,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::HighPrecision,
        ModelKind::HighRecall,
        ModelKind::Stacked,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::HighPrecision => "high-precision",
            ModelKind::HighRecall => "high-recall",
            ModelKind::Stacked => "stacked",
        }
    }
}

/// Per-slice confusion counts for all three classifiers over labeled
/// entries.
pub fn evaluate_models(
    entries: &[DatasetEntry],
    model: &StackedModel,
    config: &PreprocessConfig,
) -> Result<BTreeMap<ModelKind, ConfusionCounts>> {
    let mut counts: BTreeMap<ModelKind, ConfusionCounts> = ModelKind::ALL
        .iter()
        .map(|&k| (k, ConfusionCounts::default()))
        .collect();
    for entry in entries {
        let slices = slices_for_heap(&entry.heap, Some(&entry.annotations), config)?;
        for slice in &slices {
            let (p_hp, p_hr, p_meta) = model.predict_all(&slice.data)?;
            counts
                .get_mut(&ModelKind::HighPrecision)
                .unwrap()
                .record(p_hp >= 0.5, slice.label);
            counts
                .get_mut(&ModelKind::HighRecall)
                .unwrap()
                .record(p_hr >= 0.5, slice.label);
            counts
                .get_mut(&ModelKind::Stacked)
                .unwrap()
                .record(p_meta >= model.decision_threshold, slice.label);
        }
    }
    Ok(counts)
}

/// Retrieval counts for one key length.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RetrievalCell {
    pub total_keys: u64,
    pub high_recall: u64,
    pub high_precision: u64,
    pub stacked: u64,
}

/// Keys retrieved per key length: a key counts as retrieved when at least
/// one predicted-positive slice overlaps its byte range.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetrievalReport {
    pub per_length: BTreeMap<usize, RetrievalCell>,
}

pub fn retrieval_by_key_length(
    entries: &[DatasetEntry],
    model: &StackedModel,
    config: &PreprocessConfig,
) -> Result<RetrievalReport> {
    retrieval_at_threshold(entries, model, config, model.decision_threshold)
}

/// Same as [`retrieval_by_key_length`] with an explicit stacked threshold
/// (the base classifiers always decide at 0.5).
pub fn retrieval_at_threshold(
    entries: &[DatasetEntry],
    model: &StackedModel,
    config: &PreprocessConfig,
    stacked_threshold: f64,
) -> Result<RetrievalReport> {
    let mut report = RetrievalReport::default();
    for entry in entries {
        let slices = slices_for_heap(&entry.heap, Some(&entry.annotations), config)?;
        let predictions: Vec<(std::ops::Range<usize>, f64, f64, f64)> = slices
            .iter()
            .map(|s| {
                let (p_hp, p_hr, p_meta) = model.predict_all(&s.data)?;
                Ok((s.range(), p_hp, p_hr, p_meta))
            })
            .collect::<Result<_>>()?;
        for annotation in &entry.annotations {
            let cell = report.per_length.entry(annotation.len()).or_default();
            cell.total_keys += 1;
            let range = annotation.range();
            let overlaps = |window: &std::ops::Range<usize>| {
                window.start < range.end && range.start < window.end
            };
            if predictions
                .iter()
                .any(|(w, p, _, _)| *p >= 0.5 && overlaps(w))
            {
                cell.high_precision += 1;
            }
            if predictions
                .iter()
                .any(|(w, _, p, _)| *p >= 0.5 && overlaps(w))
            {
                cell.high_recall += 1;
            }
            if predictions
                .iter()
                .any(|(w, _, _, p)| *p >= stacked_threshold && overlaps(w))
            {
                cell.stacked += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    BruteForce,
    Ml,
}

impl BenchMethod {
    pub fn label(self) -> &'static str {
        match self {
            BenchMethod::BruteForce => "brute-force",
            BenchMethod::Ml => "ml",
        }
    }
}

/// One timed method on one entry.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub method: BenchMethod,
    pub entry: String,
    pub heap_kb: f64,
    /// Clean-heap KB for brute force, predicted-slice KB for the ML path.
    pub reduced_kb: f64,
    pub mean_seconds: f64,
    pub stddev_seconds: f64,
    pub runs: usize,
    pub found: bool,
}

/// Benchmark knobs. Methods run one worker each so the comparison measures
/// the algorithms, not the core count; timings include the full path (for
/// ML: model load from disk, slicing, classification, localized search).
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub runs: usize,
    pub workers: Option<usize>,
    pub preprocess: PreprocessConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            runs: 5,
            workers: Some(1),
            preprocess: PreprocessConfig::default(),
        }
    }
}

/// Time both extraction paths on each entry: one discarded warm-up run, then
/// `runs` measured runs per method, sequentially to avoid interference.
pub fn benchmark(
    entries: &[(DatasetEntry, ValidationPacket)],
    model_path: &Path,
    methods: &[BenchMethod],
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>> {
    assert!(config.runs >= 3, "BenchRecord wants at least 3 runs");
    let options = SearchOptions {
        workers: config.workers,
        ..Default::default()
    };
    let mut records = Vec::new();
    for (entry, packet) in entries {
        let spec = lookup_cipher(&packet.cipher_name)?;
        let name = entry
            .json_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("entry")
            .to_string();
        for &method in methods {
            let mut seconds = Vec::with_capacity(config.runs);
            let mut reduced_kb = 0.0;
            let mut found = false;
            for run in 0..=config.runs {
                let started = Instant::now();
                match method {
                    BenchMethod::BruteForce => {
                        let regions = page_filter(
                            &entry.heap,
                            config.preprocess.page_len,
                            config.preprocess.page_threshold,
                        );
                        reduced_kb = regions.iter().map(|r| r.len).sum::<usize>() as f64 / 1024.0;
                        let space = SearchSpace::from_regions(regions);
                        let outcome = find_iv_and_key(packet, &space, &entry.heap, spec, &options)?;
                        found = outcome.found().is_some();
                    }
                    BenchMethod::Ml => {
                        let model = load_model(model_path)?;
                        let slices = slices_for_heap(&entry.heap, None, &config.preprocess)?;
                        let mut predicted = Vec::new();
                        for slice in slices {
                            if model.predict_probability(&slice.data)? >= model.decision_threshold {
                                predicted.push(slice);
                            }
                        }
                        reduced_kb =
                            predicted.iter().map(|s| s.data.len()).sum::<usize>() as f64 / 1024.0;
                        let outcome =
                            find_in_slices(packet, &predicted, &entry.heap, spec, &options)?;
                        found = outcome.found().is_some();
                    }
                }
                if run > 0 {
                    // run 0 is the cache warm-up
                    seconds.push(started.elapsed().as_secs_f64());
                }
            }
            let mean = seconds.iter().sum::<f64>() / seconds.len() as f64;
            let variance = seconds.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
                / (seconds.len() - 1) as f64;
            records.push(BenchRecord {
                method,
                entry: name.clone(),
                heap_kb: entry.heap.len() as f64 / 1024.0,
                reduced_kb,
                mean_seconds: mean,
                stddev_seconds: variance.sqrt(),
                runs: config.runs,
                found,
            });
        }
    }
    Ok(records)
}

/// CSV schema: `method,entry,heap_kb,reduced_kb,mean_seconds,stddev_seconds,runs,found`.
/// The two `*_seconds` columns are the only non-reproducible fields.
pub fn bench_csv(records: &[BenchRecord]) -> String {
    let mut out =
        String::from("method,entry,heap_kb,reduced_kb,mean_seconds,stddev_seconds,runs,found\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:.2},{:.2},{:.6},{:.6},{},{}",
            r.method.label(),
            r.entry,
            r.heap_kb,
            r.reduced_kb,
            r.mean_seconds,
            r.stddev_seconds,
            r.runs,
            r.found
        );
    }
    out
}

/// Human-readable benchmark table, one row per (entry, method).
pub fn bench_table(records: &[BenchRecord], hardware: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# extraction benchmark ({hardware})");
    let _ = writeln!(
        out,
        "{:<24} {:<12} {:>9} {:>11} {:>11} {:>10} {:>6}",
        "entry", "method", "heap KB", "reduced KB", "mean s", "stddev s", "found"
    );
    for r in records {
        let _ = writeln!(
            out,
            "{:<24} {:<12} {:>9.1} {:>11.2} {:>11.4} {:>10.4} {:>6}",
            r.entry,
            r.method.label(),
            r.heap_kb,
            r.reduced_kb,
            r.mean_seconds,
            r.stddev_seconds,
            r.found
        );
    }
    out
}

/// CSV schema: `classifier,accuracy,precision,recall,f1,tp,fp,tn,fn`
/// (metric columns are percentages, "-" when undefined).
pub fn metrics_csv(counts: &BTreeMap<ModelKind, ConfusionCounts>) -> String {
    let mut out = String::from("classifier,accuracy,precision,recall,f1,tp,fp,tn,fn\n");
    for (kind, c) in counts {
        let m = compute_metrics(c);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            kind.label(),
            percent(Some(m.accuracy)),
            percent(m.precision),
            percent(m.recall),
            percent(m.f1),
            c.true_positives,
            c.false_positives,
            c.true_negatives,
            c.false_negatives
        );
    }
    out
}

/// Table-style view of the classifier metrics.
pub fn metrics_table(counts: &BTreeMap<ModelKind, ConfusionCounts>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>9} {:>10} {:>8} {:>9}",
        "classifier", "accuracy", "precision", "recall", "f1"
    );
    for (kind, c) in counts {
        let m = compute_metrics(c);
        let _ = writeln!(
            out,
            "{:<16} {:>9} {:>10} {:>8} {:>9}",
            kind.label(),
            percent(Some(m.accuracy)),
            percent(m.precision),
            percent(m.recall),
            percent(m.f1)
        );
    }
    out
}

/// CSV schema: `key_len,total,high_recall,high_precision,stacked`.
pub fn retrieval_csv(report: &RetrievalReport) -> String {
    let mut out = String::from("key_len,total,high_recall,high_precision,stacked\n");
    for (len, cell) in &report.per_length {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            len, cell.total_keys, cell.high_recall, cell.high_precision, cell.stacked
        );
    }
    out
}

pub fn retrieval_table(report: &RetrievalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7} {:>10} {:>12} {:>15} {:>9}",
        "key len", "total", "high recall", "high precision", "stacked"
    );
    for (len, cell) in &report.per_length {
        let _ = writeln!(
            out,
            "{:>7} {:>10} {:>12} {:>15} {:>9}",
            len, cell.total_keys, cell.high_recall, cell.high_precision, cell.stacked
        );
    }
    out
}

/// One-line description of the machine, recorded in report headers since
/// absolute timings are not portable.
pub fn hardware_summary() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string());
    format!(
        "{cpu}, {} workers available",
        std::thread::available_parallelism().map_or(1, |n| n.get())
    )
}
