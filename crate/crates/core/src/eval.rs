//! Instance-segmentation AP and grasp-episode metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::cluster::InstanceSet;
use crate::error::{Error, Result};
use crate::pipeline::EpisodeLog;
use crate::score::{ScoredInstance, REJECTED};

/// IoU thresholds averaged into mAP: 0.50, 0.55, ..., 0.95.
pub const MAP_THRESHOLDS: [f64; 10] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

/// Overlap needed for a proposal to count as recognizing an object.
pub const RECOGNITION_IOU: f64 = 0.5;

/// A scored proposal as a set of point ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction {
    pub score: f64,
    pub members: Vec<usize>,
}

fn sorted_unique(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn iou_sorted(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Intersection over union of two point-id sets. Two empty sets give 0.
pub fn point_iou(pred: &[usize], gt: &[usize]) -> f64 {
    iou_sorted(&sorted_unique(pred), &sorted_unique(gt))
}

/// Outcome of greedy matching at one IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Prediction indices in evaluation order (score descending).
    pub order: Vec<usize>,
    /// Per prediction (input order): matched gt and its IoU.
    pub matched: Vec<Option<(usize, f64)>>,
    /// Per gt: whether some prediction matched it.
    pub covered: Vec<bool>,
}

struct Prepared {
    order: Vec<usize>,
    iou: Vec<Vec<f64>>,
}

fn prepare(preds: &[ScoredPrediction], gts: &[Vec<usize>]) -> Prepared {
    let sets: Vec<Vec<usize>> = preds.iter().map(|p| sorted_unique(&p.members)).collect();
    let gt_sets: Vec<Vec<usize>> = gts.iter().map(|g| sorted_unique(g)).collect();
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .score
            .total_cmp(&preds[a].score)
            .then_with(|| sets[a].cmp(&sets[b]))
    });
    let iou = sets
        .iter()
        .map(|p| gt_sets.iter().map(|g| iou_sorted(p, g)).collect())
        .collect();
    Prepared { order, iou }
}

fn greedy(p: &Prepared, n_gts: usize, threshold: f64) -> MatchResult {
    let mut matched = vec![None; p.iou.len()];
    let mut covered = vec![false; n_gts];
    for &k in &p.order {
        let mut best: Option<(usize, f64)> = None;
        for (g, &v) in p.iou[k].iter().enumerate() {
            if !covered[g] && v >= threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            covered[g] = true;
        }
        matched[k] = best;
    }
    MatchResult {
        order: p.order.clone(),
        matched,
        covered,
    }
}

/// Match predictions to ground truth greedily in descending score order.
///
/// Each prediction takes the unmatched gt with the highest IoU at or above
/// `threshold`, ties going to the lower gt index. Equal scores are ordered
/// by their sorted member lists so the result never depends on input order.
pub fn match_predictions(preds: &[ScoredPrediction], gts: &[Vec<usize>], threshold: f64) -> MatchResult {
    greedy(&prepare(preds, gts), gts.len(), threshold)
}

fn ap_from_matches(m: &MatchResult, n_gts: usize) -> f64 {
    if n_gts == 0 {
        return if m.order.is_empty() { 1.0 } else { 0.0 };
    }
    let mut precision = Vec::with_capacity(m.order.len());
    let mut recall = Vec::with_capacity(m.order.len());
    let mut tp = 0usize;
    for (rank, &k) in m.order.iter().enumerate() {
        if m.matched[k].is_some() {
            tp += 1;
        }
        precision.push(tp as f64 / (rank + 1) as f64);
        recall.push(tp as f64 / n_gts as f64);
    }
    // precision envelope from the right
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        if *r > prev_recall {
            ap += (r - prev_recall) * p;
            prev_recall = *r;
        }
    }
    ap
}

/// Area under the all-points interpolated precision-recall curve.
///
/// With no gts the result is 1 when there are also no predictions and 0
/// otherwise.
pub fn average_precision(preds: &[ScoredPrediction], gts: &[Vec<usize>], threshold: f64) -> f64 {
    ap_from_matches(&match_predictions(preds, gts, threshold), gts.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapReport {
    #[serde(rename = "mAP")]
    pub map: f64,
    #[serde(rename = "AP50")]
    pub ap50: f64,
    #[serde(rename = "AP25")]
    pub ap25: f64,
    /// AP per threshold, keyed by the threshold with two decimals.
    pub per_threshold: BTreeMap<String, f64>,
}

impl MapReport {
    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("reports always serialize")
    }

    /// Plain-text table, one row per named report.
    pub fn table(rows: &[(&str, &MapReport)]) -> String {
        let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6}", "method", "mAP", "AP50", "AP25");
        for (name, r) in rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6.1}  {:>6.1}  {:>6.1}",
                name,
                r.map * 100.0,
                r.ap50 * 100.0,
                r.ap25 * 100.0
            );
        }
        out
    }
}

/// mAP over [`MAP_THRESHOLDS`] plus AP at 0.5 and 0.25.
pub fn map_suite(preds: &[ScoredPrediction], gts: &[Vec<usize>]) -> MapReport {
    let prepared = prepare(preds, gts);
    let ap = |t: f64| ap_from_matches(&greedy(&prepared, gts.len(), t), gts.len());
    let per: Vec<f64> = MAP_THRESHOLDS.par_iter().map(|&t| ap(t)).collect();
    MapReport {
        map: per.iter().sum::<f64>() / per.len() as f64,
        ap50: per[0],
        ap25: ap(0.25),
        per_threshold: MAP_THRESHOLDS
            .iter()
            .zip(&per)
            .map(|(t, v)| (format!("{t:.2}"), *v))
            .collect(),
    }
}

/// AP inputs from a scored instance set. Instances scored -1 are dropped.
pub fn predictions_from_scored(instances: &InstanceSet, scored: &[ScoredInstance]) -> Result<Vec<ScoredPrediction>> {
    scored
        .iter()
        .filter(|s| s.sc != REJECTED)
        .map(|s| {
            if s.instance_id >= instances.len() {
                return Err(Error::Mismatch(format!(
                    "score for instance {} but only {} instances",
                    s.instance_id,
                    instances.len()
                )));
            }
            Ok(ScoredPrediction {
                score: s.sc,
                members: instances.members(s.instance_id).to_vec(),
            })
        })
        .collect()
}

/// Ground-truth object member lists of a labelled cloud.
pub fn gt_instances(cloud: &PointCloud) -> Result<Vec<Vec<usize>>> {
    let objects = cloud
        .gt_objects()
        .ok_or_else(|| Error::InvalidCloud("cloud has no ground-truth instance labels".into()))?;
    Ok(objects.into_iter().map(|(_, m)| m).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub recognition_rate: f64,
    pub grasp_rate: f64,
}

/// Recognition rate: the share of gt objects that some candidate not
/// scored -1, in any iteration, overlaps at IoU >= 0.5. Grasp rate: the
/// share of gt objects that some grasped instance overlaps at IoU >= 0.5.
pub fn episode_metrics(log: &EpisodeLog, cloud: &PointCloud) -> Result<EpisodeMetrics> {
    let gts = gt_instances(cloud)?;
    if gts.is_empty() {
        return Err(Error::InvalidCloud("cloud has no ground-truth objects".into()));
    }
    let bound = cloud.len();
    let check = |m: &[usize]| -> Result<()> {
        if m.iter().any(|&i| i >= bound) {
            return Err(Error::Mismatch("episode log refers to points outside the cloud".into()));
        }
        Ok(())
    };
    let candidates: Vec<&[usize]> = log
        .all_candidates()
        .filter(|c| c.sc != REJECTED)
        .map(|c| c.members.as_slice())
        .collect();
    let grasped: Vec<&[usize]> = log.grasps.iter().map(|g| g.members.as_slice()).collect();
    candidates.iter().chain(&grasped).try_for_each(|m| check(m))?;

    let share = |sets: &[&[usize]]| {
        let sets: Vec<Vec<usize>> = sets.iter().map(|s| sorted_unique(s)).collect();
        let hit = gts
            .iter()
            .filter(|g| sets.iter().any(|s| iou_sorted(s, g) >= RECOGNITION_IOU))
            .count();
        hit as f64 / gts.len() as f64
    };
    Ok(EpisodeMetrics {
        recognition_rate: share(&candidates),
        grasp_rate: share(&grasped),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(score: f64, m: std::ops::Range<usize>) -> ScoredPrediction {
        ScoredPrediction {
            score,
            members: m.collect(),
        }
    }

    #[test]
    fn iou_examples() {
        assert_eq!(point_iou(&[1, 2, 3], &[3, 2, 1]), 1.0);
        assert_eq!(point_iou(&[1, 2], &[3, 4]), 0.0);
        assert_eq!(point_iou(&[], &[]), 0.0);
        let a: Vec<usize> = (0..100).collect();
        let b: Vec<usize> = (50..150).collect();
        assert!((point_iou(&a, &b) - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let gts = vec![(0..10).collect(), (10..30).collect::<Vec<_>>()];
        let preds = vec![pred(0.9, 0..10), pred(0.8, 10..30)];
        let r = map_suite(&preds, &gts);
        assert_eq!((r.map, r.ap50, r.ap25), (1.0, 1.0, 1.0));
    }

    #[test]
    fn no_overlap_gives_zero() {
        let gts = vec![(0..10).collect::<Vec<_>>()];
        assert_eq!(average_precision(&[pred(0.9, 20..30)], &gts, 0.5), 0.0);
    }

    #[test]
    fn empty_conventions() {
        assert_eq!(average_precision(&[], &[], 0.5), 1.0);
        assert_eq!(average_precision(&[pred(0.5, 0..3)], &[], 0.5), 0.0);
        assert_eq!(average_precision(&[], &[vec![1]], 0.5), 0.0);
    }

    #[test]
    fn threshold_straddling() {
        // IoU 4/10 against each gt
        let gts = vec![(0..10).collect::<Vec<_>>()];
        let preds = vec![ScoredPrediction {
            score: 0.7,
            members: vec![0, 1, 2, 3],
        }];
        let r = map_suite(&preds, &gts);
        assert_eq!(r.ap50, 0.0);
        assert!(r.ap25 > 0.0);
    }

    #[test]
    fn false_positive_first_halves_precision() {
        let gts = vec![(0..10).collect::<Vec<_>>()];
        let preds = vec![pred(0.9, 50..60), pred(0.8, 0..10)];
        assert!((average_precision(&preds, &gts, 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_prediction_cannot_match_twice() {
        let gts = vec![(0..10).collect::<Vec<_>>()];
        let m = match_predictions(&[pred(0.9, 0..10), pred(0.8, 0..10)], &gts, 0.5);
        assert_eq!(m.matched, vec![Some((0, 1.0)), None]);
        assert_eq!(m.covered, vec![true]);
    }

    #[test]
    fn report_json_keys() {
        let r = map_suite(&[pred(1.0, 0..3)], &[vec![0, 1, 2]]);
        let v: serde_json::Value = serde_json::from_slice(&r.to_json()).unwrap();
        assert_eq!(v["mAP"], 1.0);
        assert_eq!(v["per_threshold"]["0.95"], 1.0);
        assert!(MapReport::table(&[("binary", &r)]).contains("100.0"));
    }
}
