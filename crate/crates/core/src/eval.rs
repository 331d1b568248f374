//! Temporal IoU, average precision and mAP over tIoU thresholds, plus
//! pseudo-label quality summaries.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::decoder::Proposal;
use crate::signal::{ClassId, Interval};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthInstance {
    pub video_id: String,
    pub start: usize,
    pub end: usize,
    pub class_id: ClassId,
}

impl GroundTruthInstance {
    pub fn interval(&self) -> Interval {
        Interval {
            start: self.start,
            end: self.end,
        }
    }
}

/// Intersection over union of two inclusive intervals, counted in snippets.
pub fn tiou(a: Interval, b: Interval) -> f64 {
    let lo = a.start.max(b.start);
    let hi = a.end.min(b.end);
    if lo > hi {
        return 0.0;
    }
    let inter = (hi - lo + 1) as f64;
    let union = (a.len() + b.len()) as f64 - inter;
    inter / union
}

/// The THUMOS'14 threshold range `0.1, 0.2, ..., 0.7`.
pub fn thumos_thresholds() -> Vec<f64> {
    (1..=7).map(|i| i as f64 / 10.0).collect()
}

/// Average precision of one class at one tIoU threshold.
///
/// Proposals are visited by descending score (ties by start, end, input
/// order); each takes the unmatched ground truth of the same video with the
/// highest tIoU if it reaches `tiou_threshold`. AP integrates the
/// monotone precision envelope over recall. Returns `None` without ground
/// truth.
pub fn average_precision(
    proposals: &[Proposal],
    gt: &[GroundTruthInstance],
    tiou_threshold: f64,
) -> Option<f64> {
    if gt.is_empty() {
        return None;
    }
    let mut order: Vec<usize> = (0..proposals.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&proposals[i], &proposals[j]);
        b.score
            .total_cmp(&a.score)
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
            .then(i.cmp(&j))
    });

    let mut matched = vec![false; gt.len()];
    let mut hits = Vec::with_capacity(order.len());
    for &i in &order {
        let p = &proposals[i];
        let mut best: Option<(usize, f64)> = None;
        for (g, inst) in gt.iter().enumerate() {
            if matched[g] || inst.video_id != p.video_id {
                continue;
            }
            let iou = tiou(p.interval(), inst.interval());
            if iou >= tiou_threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        match best {
            Some((g, _)) => {
                matched[g] = true;
                hits.push(true);
            }
            None => hits.push(false),
        }
    }

    let n_gt = gt.len() as f64;
    let mut precision = Vec::with_capacity(hits.len());
    let mut recall = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (k, &hit) in hits.iter().enumerate() {
        if hit {
            tp += 1;
        }
        precision.push(tp as f64 / (k + 1) as f64);
        recall.push(tp as f64 / n_gt);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        if precision[k + 1] > precision[k] {
            precision[k] = precision[k + 1];
        }
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        if *r > prev_recall {
            ap += (r - prev_recall) * p;
            prev_recall = *r;
        }
    }
    Some(ap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub thresholds: Vec<f64>,
    /// Classes with at least one ground-truth instance, ascending.
    pub classes: Vec<ClassId>,
    /// `ap[i][j]`: AP of `classes[j]` at `thresholds[i]`.
    pub ap: Vec<Vec<f64>>,
    pub map_at: Vec<f64>,
    pub average_map: f64,
}

impl EvalReport {
    pub fn ap(&self, class_id: ClassId, threshold_index: usize) -> Option<f64> {
        let j = self.classes.iter().position(|&c| c == class_id)?;
        self.ap.get(threshold_index).map(|row| row[j])
    }
}

/// Per-class AP at each threshold, mAP over classes with ground truth and
/// the mean of mAP across thresholds.
pub fn map_report(
    proposals: &[Proposal],
    gt: &[GroundTruthInstance],
    thresholds: &[f64],
) -> Result<EvalReport> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    if thresholds.is_empty() {
        return Err(Error::invalid("at least one tIoU threshold is required"));
    }
    let classes: Vec<ClassId> = gt
        .iter()
        .map(|g| g.class_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let split: Vec<(Vec<Proposal>, Vec<GroundTruthInstance>)> = classes
        .iter()
        .map(|&c| {
            (
                proposals
                    .iter()
                    .filter(|p| p.class_id == c)
                    .cloned()
                    .collect(),
                gt.iter().filter(|g| g.class_id == c).cloned().collect(),
            )
        })
        .collect();

    let ap: Vec<Vec<f64>> = thresholds
        .iter()
        .map(|&thr| {
            split
                .iter()
                .map(|(p, g)| average_precision(p, g, thr).expect("class has ground truth"))
                .collect()
        })
        .collect();
    let map_at: Vec<f64> = ap
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();
    let average_map = map_at.iter().sum::<f64>() / map_at.len() as f64;
    Ok(EvalReport {
        thresholds: thresholds.to_vec(),
        classes,
        ap,
        map_at,
        average_map,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelQuality {
    /// Pseudo-labels per ground-truth instance.
    pub alpha: f64,
    /// Mean over ground truth of the best same-class, same-video tIoU.
    pub mean_tiou: f64,
    pub eval: EvalReport,
}

/// Mean over `gt` of the best tIoU reached by any same-class interval of the
/// same video (0 when none overlap).
pub fn mean_best_tiou(intervals: &[Proposal], gt: &[GroundTruthInstance]) -> f64 {
    if gt.is_empty() {
        return 0.0;
    }
    gt.iter()
        .map(|g| {
            intervals
                .iter()
                .filter(|p| p.class_id == g.class_id && p.video_id == g.video_id)
                .map(|p| tiou(p.interval(), g.interval()))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / gt.len() as f64
}

/// Summarizes pseudo-labels (given as unit-score proposals) against ground truth.
pub fn pseudo_label_quality(
    pseudo: &[Proposal],
    gt: &[GroundTruthInstance],
    thresholds: &[f64],
) -> Result<PseudoLabelQuality> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let unit: Vec<Proposal> = pseudo
        .iter()
        .map(|p| Proposal {
            score: 1.0,
            ..p.clone()
        })
        .collect();
    Ok(PseudoLabelQuality {
        alpha: pseudo.len() as f64 / gt.len() as f64,
        mean_tiou: mean_best_tiou(pseudo, gt),
        eval: map_report(&unit, gt, thresholds)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(s: usize, e: usize) -> Interval {
        Interval { start: s, end: e }
    }

    fn gti(s: usize, e: usize, c: ClassId) -> GroundTruthInstance {
        GroundTruthInstance {
            video_id: "v".into(),
            start: s,
            end: e,
            class_id: c,
        }
    }

    fn prop(s: usize, e: usize, c: ClassId, score: f64) -> Proposal {
        Proposal {
            video_id: "v".into(),
            start: s,
            end: e,
            class_id: c,
            score,
        }
    }

    #[test]
    fn tiou_examples() {
        assert_eq!(tiou(iv(3, 9), iv(3, 9)), 1.0);
        assert_eq!(tiou(iv(0, 4), iv(5, 9)), 0.0);
        assert!((tiou(iv(0, 9), iv(5, 14)) - 5.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn ap_examples() {
        let gt = [gti(0, 9, 1)];
        assert_eq!(
            average_precision(&[prop(0, 9, 1, 0.5)], &gt, 0.5),
            Some(1.0)
        );
        let p = [prop(50, 60, 1, 0.9), prop(0, 9, 1, 0.5)];
        assert_eq!(average_precision(&p, &gt, 0.5), Some(0.5));
        assert_eq!(average_precision(&p, &[], 0.5), None);
        assert_eq!(average_precision(&[], &gt, 0.5), Some(0.0));
        // a proposal in another video never matches
        let other = Proposal {
            video_id: "w".into(),
            ..prop(0, 9, 1, 0.9)
        };
        assert_eq!(average_precision(&[other], &gt, 0.5), Some(0.0));
    }

    #[test]
    fn report_examples() {
        let gt = [gti(0, 9, 1), gti(20, 29, 2), gti(40, 49, 1)];
        let perfect: Vec<Proposal> = gt
            .iter()
            .map(|g| prop(g.start, g.end, g.class_id, 0.7))
            .collect();
        let ths = thumos_thresholds();
        assert_eq!(ths.len(), 7);
        let r = map_report(&perfect, &gt, &ths).unwrap();
        assert!(r.map_at.iter().all(|m| *m == 1.0));
        assert_eq!(r.average_map, 1.0);
        let r = map_report(&[], &gt, &ths).unwrap();
        assert!(r.map_at.iter().all(|m| *m == 0.0));
        assert_eq!(
            map_report(&perfect, &[], &ths),
            Err(Error::EmptyGroundTruth)
        );

        let swapped: Vec<Proposal> = gt
            .iter()
            .map(|g| prop(g.start, g.end, 3 - g.class_id, 0.7))
            .collect();
        assert_eq!(map_report(&swapped, &gt, &ths).unwrap().average_map, 0.0);
    }

    #[test]
    fn quality_examples() {
        let gt = [gti(0, 9, 1), gti(20, 29, 2)];
        let same: Vec<Proposal> = gt
            .iter()
            .map(|g| prop(g.start, g.end, g.class_id, 0.3))
            .collect();
        let q = pseudo_label_quality(&same, &gt, &[0.5]).unwrap();
        assert_eq!(q.alpha, 1.0);
        assert_eq!(q.mean_tiou, 1.0);
        assert_eq!(q.eval.average_map, 1.0);
        assert!(pseudo_label_quality(&same, &[], &[0.5]).is_err());
    }

    fn arb_case() -> impl Strategy<Value = (Vec<Proposal>, Vec<GroundTruthInstance>)> {
        (
            proptest::collection::vec((0usize..40, 0usize..15, 0.0f64..1.0), 0..10),
            proptest::collection::vec((0usize..40, 0usize..15), 1..5),
        )
            .prop_map(|(p, g)| {
                (
                    p.into_iter()
                        .map(|(s, l, sc)| prop(s, s + l, 1, sc))
                        .collect(),
                    g.into_iter().map(|(s, l)| gti(s, s + l, 1)).collect(),
                )
            })
    }

    proptest! {
        #[test]
        fn ap_in_unit_range_and_monotone_score_invariant((p, g) in arb_case(), thr in 0.1f64..0.9) {
            let ap = average_precision(&p, &g, thr).unwrap();
            prop_assert!((0.0..=1.0).contains(&ap));
            let transformed: Vec<Proposal> = p.iter()
                .map(|x| Proposal { score: (3.0 * x.score).exp() - 7.0, ..x.clone() })
                .collect();
            prop_assert_eq!(average_precision(&transformed, &g, thr).unwrap(), ap);
            let r = map_report(&p, &g, &[thr]).unwrap();
            prop_assert_eq!(r.average_map, ap);
        }
    }
}
