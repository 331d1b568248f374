//! Inference-time proposal decoding: class selection, threshold merging,
//! outer-inner-contrast scoring and greedy NMS.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::eval::tiou;
use crate::losses::video_level_scores;
use crate::math;
use crate::signal::{ClassId, Interval, ProbabilitySignal};
use crate::{Error, Result};

/// Scored interval at level-1 resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub video_id: String,
    pub start: usize,
    pub end: usize,
    pub class_id: ClassId,
    pub score: f64,
}

impl Proposal {
    pub fn interval(&self) -> Interval {
        Interval {
            start: self.start,
            end: self.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub thresholds: Vec<f64>,
    /// Width of each outer flank as a fraction of the segment length.
    pub oic_inflation: f64,
    pub nms_tiou: f64,
    pub class_score_threshold: f64,
    /// Video-level scores average the top `length / topk_divisor` snippets.
    pub topk_divisor: usize,
    pub downsample_ratio: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            thresholds: (1..=9).map(|i| i as f64 / 10.0).collect(),
            oic_inflation: 0.25,
            nms_tiou: 0.45,
            class_score_threshold: 0.5,
            topk_divisor: 8,
            downsample_ratio: 2,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::invalid("decoder needs at least one threshold"));
        }
        if self.thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::invalid("decoder thresholds must lie in (0, 1)"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("decoder thresholds must be ascending"));
        }
        if !(self.oic_inflation > 0.0 && self.oic_inflation.is_finite()) {
            return Err(Error::invalid("oic_inflation must be > 0"));
        }
        if !(self.nms_tiou > 0.0 && self.nms_tiou < 1.0) {
            return Err(Error::invalid("nms_tiou must lie in (0, 1)"));
        }
        if self.topk_divisor == 0 || self.downsample_ratio == 0 {
            return Err(Error::invalid(
                "topk_divisor and downsample_ratio must be >= 1",
            ));
        }
        Ok(())
    }
}

/// Classes scoring above `threshold`, or the single best class when none do.
pub fn select_classes(video_scores: &[f64], threshold: f64) -> Vec<ClassId> {
    let picked: Vec<ClassId> = video_scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold)
        .map(|(c, _)| c as ClassId + 1)
        .collect();
    if !picked.is_empty() || video_scores.is_empty() {
        return picked;
    }
    let mut best = 0;
    for (c, s) in video_scores.iter().enumerate() {
        if *s > video_scores[best] {
            best = c;
        }
    }
    alloc::vec![best as ClassId + 1]
}

/// Maximal runs of consecutive snippets with `column[t] > threshold`.
pub fn threshold_merge(column: &[f64], threshold: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut run: Option<usize> = None;
    for (t, &v) in column.iter().enumerate() {
        match (v > threshold, run) {
            (true, None) => run = Some(t),
            (false, Some(s)) => {
                out.push(Interval {
                    start: s,
                    end: t - 1,
                });
                run = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run {
        out.push(Interval {
            start: s,
            end: column.len() - 1,
        });
    }
    out
}

/// Inner mean minus the mean of the two flanking windows, each
/// `max(1, round(inflation * len))` snippets wide and clipped to the video.
/// An empty outer region contributes 0.
pub fn oic_score(column: &[f64], segment: Interval, inflation: f64) -> f64 {
    let inner = &column[segment.start..=segment.end];
    let inner_mean = inner.iter().sum::<f64>() / inner.len() as f64;
    let flank = (math::round(inflation * segment.len() as f64) as usize).max(1);
    let left = segment.start.saturating_sub(flank)..segment.start;
    let right = (segment.end + 1).min(column.len())..(segment.end + 1 + flank).min(column.len());
    let count = left.len() + right.len();
    if count == 0 {
        return inner_mean;
    }
    let outer: f64 = column[left].iter().sum::<f64>() + column[right].iter().sum::<f64>();
    inner_mean - outer / count as f64
}

fn proposal_order(a: &Proposal, b: &Proposal) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.start.cmp(&b.start))
        .then(a.end.cmp(&b.end))
        .then(a.class_id.cmp(&b.class_id))
}

/// Greedy per-class suppression: keep the best remaining proposal, drop
/// same-class proposals overlapping it with tIoU above `tiou_threshold`.
pub fn nms(proposals: &[Proposal], tiou_threshold: f64) -> Vec<Proposal> {
    let mut sorted: Vec<&Proposal> = proposals.iter().collect();
    sorted.sort_by(|a, b| proposal_order(a, b));
    let mut kept: Vec<Proposal> = Vec::new();
    for p in sorted {
        let suppressed = kept
            .iter()
            .any(|k| k.class_id == p.class_id && tiou(k.interval(), p.interval()) > tiou_threshold);
        if !suppressed {
            kept.push(p.clone());
        }
    }
    kept
}

/// Decodes proposals from a fused pyramid of one video.
///
/// Segments found at level `l` are mapped to level-1 indices by scaling with
/// `theta^(l-1)` (a level-`l` snippet covers `theta^(l-1)` level-1 snippets).
pub fn decode(signals: &[ProbabilitySignal], config: &DecoderConfig) -> Result<Vec<Proposal>> {
    config.validate()?;
    let Some(first) = signals.first() else {
        return Ok(Vec::new());
    };
    let video_id = first.video_id();
    if signals.iter().any(|s| s.video_id() != video_id) {
        return Err(Error::invalid("decode expects signals from a single video"));
    }
    if signals
        .iter()
        .any(|s| s.num_classes() != first.num_classes())
    {
        return Err(Error::invalid("pyramid levels disagree on num_classes"));
    }
    let signals: Vec<&ProbabilitySignal> = signals.iter().filter(|s| !s.is_empty()).collect();
    if signals.is_empty() {
        return Ok(Vec::new());
    }

    let scale_of = |s: &ProbabilitySignal| config.downsample_ratio.pow(s.level() - 1);
    let full_length = signals
        .iter()
        .find(|s| s.level() == 1)
        .map(|s| s.len())
        .unwrap_or_else(|| {
            signals
                .iter()
                .map(|s| s.len() * scale_of(s))
                .max()
                .unwrap_or(0)
        });

    let mut video_scores = alloc::vec![0.0; first.num_classes()];
    for s in &signals {
        let k = (s.len() / config.topk_divisor).max(1);
        for (acc, v) in video_scores.iter_mut().zip(video_level_scores(s, k)?) {
            *acc += v / signals.len() as f64;
        }
    }
    let classes = select_classes(&video_scores, config.class_score_threshold);

    let mut pool = Vec::new();
    for &class_id in &classes {
        for s in &signals {
            let column = s.class_column(class_id)?;
            let scale = scale_of(s);
            for &thr in &config.thresholds {
                for seg in threshold_merge(&column, thr) {
                    let score = oic_score(&column, seg, config.oic_inflation);
                    let start = (seg.start * scale).min(full_length - 1);
                    let end = ((seg.end + 1) * scale - 1).min(full_length - 1);
                    pool.push(Proposal {
                        video_id: String::from(video_id),
                        start,
                        end,
                        class_id,
                        score,
                    });
                }
            }
        }
    }
    Ok(nms(&pool, config.nms_tiou))
}
