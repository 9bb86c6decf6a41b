//! Scoring predicted heatmaps against labels.
//!
//! Errors are computed per sample (mean over the valid pixels of every
//! channel of a parameter) and then aggregated to mean and standard
//! deviation; the pooled variant aggregates all pixels at once instead.

mod metrics;
mod ssim;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::ParamKind;
use crate::grid::Grid;
use crate::heatmap::{masked_l1_loss, AcousticHeatmap, ParamNormalizer};
use crate::{Error, Result};

pub use metrics::{
    jnd_pass_rate, jnd_threshold, pixelwise_error, PixelErrors, DECAY_TARGET_GUARD_S, JND_DECAY_FRACTION,
    JND_ENERGY_RATIO_DB,
};
pub use ssim::{ssim_masked, SSIM_DATA_RANGE, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};

/// Report column order.
pub const REPORT_PARAMS: [ParamKind; 4] = [ParamKind::C50, ParamKind::T30, ParamKind::Drr, ParamKind::Edt];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Aggregate all pixels together instead of per-sample means.
    pub pooled: bool,
    pub ssim_data_range: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { pooled: false, ssim_data_range: SSIM_DATA_RANGE }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN, count: 0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt(), count: values.len() }
    }

    fn from_sums(sum: f64, sum_sq: f64, count: usize) -> Self {
        if count == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, count: 0 };
        }
        let n = count as f64;
        let mean = sum / n;
        Self { mean, std: (sum_sq / n - mean * mean).max(0.0).sqrt(), count }
    }
}

/// Per-sample results; kept small so that large sets can be streamed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub key: String,
    /// Mean error per parameter over all of its channels' valid pixels.
    pub errors: BTreeMap<ParamKind, f64>,
    /// Per parameter: (sum, sum of squares, count) of pixel errors.
    pub pixel_sums: BTreeMap<ParamKind, (f64, f64, usize)>,
    /// Per parameter: (pixels under the JND, pixels).
    pub jnd: BTreeMap<ParamKind, (usize, usize)>,
    pub loss: f64,
    pub ssim: Option<f64>,
    pub guarded_pixels: usize,
    pub missing_pixels: usize,
}

/// Scores one prediction. Loss and SSIM use normalized maps when a
/// normalizer is given.
pub fn evaluate_sample(
    key: &str,
    pred: &AcousticHeatmap,
    target: &AcousticHeatmap,
    normalizer: Option<&ParamNormalizer>,
    config: &EvalConfig,
) -> Result<SampleMetrics> {
    if pred.layout != target.layout {
        return Err(Error::ShapeMismatch(format!("sample {key}: prediction and label layouts differ")));
    }
    let mut per_param: BTreeMap<ParamKind, Vec<f64>> = BTreeMap::new();
    let (mut guarded, mut missing) = (0, 0);
    let mut any = false;
    for (k, key_ch) in target.layout.iter().enumerate() {
        if !target.channel_valid[k] {
            continue;
        }
        match pixelwise_error(&pred.values[k], &target.values[k], &target.mask, key_ch.param) {
            Ok(e) => {
                any = true;
                guarded += e.guarded;
                missing += e.missing_prediction;
                per_param.entry(key_ch.param).or_default().extend(e.errors);
            }
            Err(Error::EmptyMask) => {}
            Err(e) => return Err(e),
        }
    }
    if !any {
        return Err(Error::EmptyMask);
    }

    // loss and SSIM run where the label is valid and every channel is predicted
    let eval_mask = Grid::from_fn(target.mask.height(), target.mask.width(), |r, c| {
        *target.mask.get(r, c)
            && pred
                .values
                .iter()
                .zip(&target.channel_valid)
                .all(|(g, &valid)| !valid || g.get(r, c).is_finite())
    });
    let (p, t) = match normalizer {
        Some(n) => (n.normalize_heatmap(pred)?, n.normalize_heatmap(target)?),
        None => (pred.clone(), target.clone()),
    };
    let loss = if eval_mask.count() > 0 { masked_l1_loss(&p.values, &t.values, &eval_mask)? } else { f64::NAN };
    let ssims: Vec<f64> = (0..t.values.len())
        .filter(|&k| t.channel_valid[k])
        .filter_map(|k| ssim_masked(&p.values[k], &t.values[k], &eval_mask, config.ssim_data_range).ok())
        .collect();
    let ssim = (!ssims.is_empty()).then(|| ssims.iter().sum::<f64>() / ssims.len() as f64);

    let mut out = SampleMetrics {
        key: key.to_string(),
        errors: BTreeMap::new(),
        pixel_sums: BTreeMap::new(),
        jnd: BTreeMap::new(),
        loss,
        ssim,
        guarded_pixels: guarded,
        missing_pixels: missing,
    };
    for (kind, errs) in per_param {
        if errs.is_empty() {
            continue;
        }
        let n = errs.len();
        let sum: f64 = errs.iter().sum();
        out.errors.insert(kind, sum / n as f64);
        out.pixel_sums.insert(kind, (sum, errs.iter().map(|e| e * e).sum(), n));
        let limit = jnd_threshold(kind);
        out.jnd.insert(kind, (errs.iter().filter(|&&e| e < limit).count(), n));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Free-form grouping keys such as model, dataset and fold.
    pub grouping: BTreeMap<String, String>,
    pub pooled: bool,
    pub samples: usize,
    /// Samples without a single valid label pixel.
    pub excluded_samples: usize,
    pub guarded_pixels: usize,
    pub missing_pixels: usize,
    /// Errors per parameter: dB for C50/DRR, fraction for T30/EDT.
    pub errors: BTreeMap<ParamKind, Stat>,
    pub jnd_pass_rate: BTreeMap<ParamKind, f64>,
    pub loss: Stat,
    pub ssim: Stat,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Streams samples into a report; results do not depend on insertion order.
#[derive(Debug, Clone, Default)]
pub struct ReportBuilder {
    samples: Vec<SampleMetrics>,
    excluded: usize,
}

impl ReportBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        key: &str,
        pred: &AcousticHeatmap,
        target: &AcousticHeatmap,
        normalizer: Option<&ParamNormalizer>,
        config: &EvalConfig,
    ) -> Result<()> {
        match evaluate_sample(key, pred, target, normalizer, config) {
            Ok(m) => self.samples.push(m),
            Err(Error::EmptyMask) => self.excluded += 1,
            Err(e) => return Err(e),
        }
        Ok(())
    }

    pub fn add_metrics(&mut self, metrics: SampleMetrics) {
        self.samples.push(metrics);
    }

    pub fn add_excluded(&mut self) {
        self.excluded += 1;
    }

    pub fn finish(mut self, grouping: BTreeMap<String, String>, config: &EvalConfig) -> EvaluationReport {
        self.samples.sort_by(|a, b| a.key.cmp(&b.key));
        let s = &self.samples;
        let mut errors = BTreeMap::new();
        let mut jnd = BTreeMap::new();
        for kind in REPORT_PARAMS {
            let stat = if config.pooled {
                let (sum, sq, n) = s.iter().filter_map(|m| m.pixel_sums.get(&kind)).fold((0.0, 0.0, 0), |acc, v| {
                    (acc.0 + v.0, acc.1 + v.1, acc.2 + v.2)
                });
                Stat::from_sums(sum, sq, n)
            } else {
                Stat::of(&s.iter().filter_map(|m| m.errors.get(&kind).copied()).collect::<Vec<_>>())
            };
            if stat.count == 0 {
                continue;
            }
            errors.insert(kind, stat);
            let (pass, n) = s.iter().filter_map(|m| m.jnd.get(&kind)).fold((0, 0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
            if n > 0 {
                jnd.insert(kind, pass as f64 / n as f64);
            }
        }
        EvaluationReport {
            grouping,
            pooled: config.pooled,
            samples: s.len(),
            excluded_samples: self.excluded,
            guarded_pixels: s.iter().map(|m| m.guarded_pixels).sum(),
            missing_pixels: s.iter().map(|m| m.missing_pixels).sum(),
            errors,
            jnd_pass_rate: jnd,
            loss: Stat::of(&s.iter().map(|m| m.loss).filter(|v| v.is_finite()).collect::<Vec<_>>()),
            ssim: Stat::of(&s.iter().filter_map(|m| m.ssim).collect::<Vec<_>>()),
        }
    }
}

/// Keys present in only one of the two sets, prefixed with where they are
/// missing.
pub fn missing_keys<'a>(predictions: impl IntoIterator<Item = &'a String>, labels: impl IntoIterator<Item = &'a String>) -> Vec<String> {
    let p: BTreeSet<&String> = predictions.into_iter().collect();
    let l: BTreeSet<&String> = labels.into_iter().collect();
    l.difference(&p)
        .map(|k| format!("prediction:{k}"))
        .chain(p.difference(&l).map(|k| format!("label:{k}")))
        .collect()
}

/// Evaluates aligned prediction and label sets.
pub fn evaluation_report(
    predictions: &BTreeMap<String, AcousticHeatmap>,
    labels: &BTreeMap<String, AcousticHeatmap>,
    normalizer: Option<&ParamNormalizer>,
    grouping: BTreeMap<String, String>,
    config: &EvalConfig,
) -> Result<EvaluationReport> {
    let missing = missing_keys(predictions.keys(), labels.keys());
    if !missing.is_empty() {
        return Err(Error::MissingKeys(missing));
    }
    let mut builder = ReportBuilder::new();
    for (key, target) in labels {
        builder.add(key, &predictions[key], target, normalizer, config)?;
    }
    Ok(builder.finish(grouping, config))
}

fn cell(stat: Option<&Stat>, percent: bool) -> String {
    match stat {
        Some(s) if percent => format!("{:.2}±{:.2}%", 100.0 * s.mean, 100.0 * s.std),
        Some(s) => format!("{:.2}±{:.2}", s.mean, s.std),
        None => "-".into(),
    }
}

/// Fixed-width table, one row per report: model, C50, T30, DRR, EDT, loss,
/// SSIM. Decay errors are shown in percent.
pub fn report_table(reports: &[EvaluationReport]) -> String {
    let header = ["model", "C50 [dB]", "T30", "DRR [dB]", "EDT", "loss", "SSIM"];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let name = r.grouping.get("model").cloned().unwrap_or_else(|| "-".into());
            let mut row = vec![name];
            for kind in REPORT_PARAMS {
                row.push(cell(r.errors.get(&kind), !kind.is_energy_ratio()));
            }
            row.push(cell(Some(&r.loss), false));
            row.push(cell(Some(&r.ssim), false));
            row
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].chars().count()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    line(widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect(), &mut out);
    for row in &rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}
