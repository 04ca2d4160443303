//! End-to-end detection and the iterative grasp loop.

use std::borrow::Cow;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::{Point3, PointCloud};
use crate::cluster::{cluster_distance_baseline, geo_cluster, InstanceSet};
use crate::config::{Clusterer, HeightFrame, PipelineConfig};
use crate::error::{Error, Location, ParseErrorKind, Result};
use crate::grasp::{instance_centroid, to_robot_frame, yaw_angle, CalibrationExtrinsics};
use crate::score::{score_all, FeatureSource, ScoredInstance, REJECTED};
use crate::segment::{binarize_scores, heuristic_scores, predict_foreground, ForegroundMask, SemanticScores};
use crate::voxel::{voxel_downsample_with_map, Downsampled};

/// Downsampled working cloud and its foreground mask.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub working: Downsampled,
    pub mask: ForegroundMask,
}

/// Downsample, then label foreground from `semantic` (one row per input
/// point, pooled per voxel) or from the table-plane heuristic.
pub fn prepare(cloud: &PointCloud, cfg: &PipelineConfig, semantic: Option<&SemanticScores>) -> Result<Prepared> {
    cfg.validate()?;
    if cloud.is_empty() {
        return Err(Error::InvalidCloud("cloud has no points".into()));
    }
    let working = voxel_downsample_with_map(cloud, cfg.voxel)?;
    let scores = match semantic {
        Some(s) => {
            if s.len() != cloud.len() {
                return Err(Error::Mismatch(format!(
                    "{} score rows for {} points",
                    s.len(),
                    cloud.len()
                )));
            }
            s.pooled(&working.children())?
        }
        None => heuristic_scores(&working.cloud, cfg.table_margin)?,
    };
    let mask = predict_foreground(&binarize_scores(&scores));
    Ok(Prepared { working, mask })
}

/// Cluster the masked foreground with the configured clusterer. An empty
/// mask yields an empty set.
pub fn cluster_foreground(cloud: &PointCloud, mask: &ForegroundMask, cfg: &PipelineConfig) -> Result<InstanceSet> {
    if mask.count() == 0 {
        return Ok(InstanceSet::empty(cloud.len()));
    }
    match cfg.clusterer {
        Clusterer::Binary => geo_cluster(cloud, mask, &cfg.geo_params()),
        Clusterer::Distance => cluster_distance_baseline(cloud, mask, cfg.r_group, cfg.min_pts),
    }
}

fn height_cloud<'a>(
    cloud: &'a PointCloud,
    cfg: &PipelineConfig,
    calib: &CalibrationExtrinsics,
) -> Result<Cow<'a, PointCloud>> {
    Ok(match cfg.height_frame {
        HeightFrame::Sensor => Cow::Borrowed(cloud),
        HeightFrame::Robot => Cow::Owned(PointCloud::new(
            cloud.positions().iter().map(|&p| to_robot_frame(p, calib)).collect(),
        )?),
    })
}

fn scene_z_range(cloud: &PointCloud, ids: &[usize]) -> (f64, f64) {
    match cloud.z_range(Some(ids)) {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some((lo, _)) => (lo, lo + 1.0),
        None => (0.0, 1.0),
    }
}

/// Result of a single detection pass, indexed over the working cloud.
#[derive(Debug, Clone)]
pub struct Detection {
    pub working: Downsampled,
    pub mask: ForegroundMask,
    pub instances: InstanceSet,
    pub scored: Vec<ScoredInstance>,
}

impl Detection {
    /// Instances expanded back onto the input cloud, same ids.
    pub fn input_instances(&self) -> Result<InstanceSet> {
        let instances = self
            .instances
            .instances()
            .iter()
            .map(|m| self.working.expand(m))
            .collect();
        let unassigned = self.working.expand(self.instances.unassigned());
        InstanceSet::new(self.working.parent.len(), instances, unassigned)
    }
}

/// Segment, cluster and score once. `features` optionally gives one
/// feature score per instance in canonical order.
pub fn detect(
    cloud: &PointCloud,
    cfg: &PipelineConfig,
    semantic: Option<&SemanticScores>,
    features: Option<&[f64]>,
    calib: &CalibrationExtrinsics,
) -> Result<Detection> {
    let Prepared { working, mask } = prepare(cloud, cfg, semantic)?;
    let instances = cluster_foreground(&working.cloud, &mask, cfg)?;
    let source = match features {
        Some(v) => FeatureSource::PerInstance(v.to_vec()),
        None => FeatureSource::Geometric {
            radius: cfg.feature_radius,
        },
    };
    let heights = height_cloud(&working.cloud, cfg, calib)?;
    let all: Vec<usize> = (0..working.cloud.len()).collect();
    let z_range = scene_z_range(&heights, &all);
    let scored = score_all(&heights, &instances, &cfg.score_params(), &source, z_range)?;
    Ok(Detection {
        working,
        mask,
        instances,
        scored,
    })
}

/// Why an episode stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    /// No candidate reached the confidence threshold.
    BelowThreshold,
    Aborted(String),
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::BelowThreshold => f.write_str("below-threshold"),
            Termination::Aborted(why) => write!(f, "aborted: {why}"),
        }
    }
}

impl From<Termination> for String {
    fn from(t: Termination) -> Self {
        t.to_string()
    }
}

impl TryFrom<String> for Termination {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        if s == "below-threshold" {
            Ok(Termination::BelowThreshold)
        } else if let Some(why) = s.strip_prefix("aborted: ") {
            Ok(Termination::Aborted(why.to_string()))
        } else {
            Err(format!("unknown termination reason {s:?}"))
        }
    }
}

/// One proposal seen during an iteration. Members index the input cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    pub instance_id: usize,
    pub n_points: usize,
    pub sc: f64,
    pub members: Vec<usize>,
}

/// One executed grasp and the candidates it was chosen from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspRecord {
    pub iter: usize,
    pub instance_id: usize,
    pub n_points: usize,
    pub s_f: f64,
    pub h_m: f64,
    pub sc: f64,
    pub center_camera: Point3,
    pub center_robot: Point3,
    pub yaw: f64,
    /// Foreground points left in the working cloud after removal.
    pub remaining_foreground: usize,
    /// Input-cloud points of the grasped instance.
    pub members: Vec<usize>,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EpisodeEnd {
    #[serde(with = "termination_str")]
    termination: Termination,
    iterations: usize,
    initial_foreground: usize,
    candidates: Vec<Candidate>,
}

mod termination_str {
    use super::Termination;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Termination, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Termination, D::Error> {
        Termination::try_from(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LogLine {
    Grasp(Box<GraspRecord>),
    End(EpisodeEnd),
}

/// Everything a grasp episode did.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub grasps: Vec<GraspRecord>,
    /// Candidates of the last, grasp-less iteration.
    pub final_candidates: Vec<Candidate>,
    pub termination: Termination,
    /// Loop iterations run, including the final one that did not grasp.
    pub iterations: usize,
    /// Foreground points in the working cloud before the first grasp.
    pub initial_foreground: usize,
}

impl EpisodeLog {
    /// Every candidate from every iteration.
    pub fn all_candidates(&self) -> impl Iterator<Item = &Candidate> {
        self.grasps
            .iter()
            .flat_map(|g| &g.candidates)
            .chain(&self.final_candidates)
    }

    /// One JSON object per grasp, then a closing record with the
    /// termination reason.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for g in &self.grasps {
            serde_json::to_writer(&mut out, g).expect("grasp records always serialize");
            out.push(b'\n');
        }
        let end = EpisodeEnd {
            termination: self.termination.clone(),
            iterations: self.iterations,
            initial_foreground: self.initial_foreground,
            candidates: self.final_candidates.clone(),
        };
        serde_json::to_writer(&mut out, &end).expect("episode end always serializes");
        out.push(b'\n');
        out
    }

    pub fn from_jsonl(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| Error::parse(ParseErrorKind::Syntax, Location::Byte(e.valid_up_to()), "not UTF-8"))?;
        let mut grasps = Vec::new();
        let mut end = None;
        for (k, line) in text.lines().enumerate() {
            let line_no = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            if end.is_some() {
                return Err(Error::parse(
                    ParseErrorKind::Invalid,
                    Location::Line(line_no),
                    "record after the termination record",
                ));
            }
            let parsed: LogLine = serde_json::from_str(line)
                .map_err(|e| Error::parse(ParseErrorKind::Invalid, Location::Line(line_no), e.to_string()))?;
            match parsed {
                LogLine::Grasp(g) => grasps.push(*g),
                LogLine::End(e) => end = Some(e),
            }
        }
        let end = end.ok_or_else(|| {
            Error::parse(
                ParseErrorKind::UnexpectedEof,
                Location::Line(text.lines().count()),
                "missing termination record",
            )
        })?;
        Ok(Self {
            grasps,
            final_candidates: end.candidates,
            termination: end.termination,
            iterations: end.iterations,
            initial_foreground: end.initial_foreground,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_jsonl(&std::fs::read(path)?)
    }
}

/// Run the grasp loop with geometric feature scores.
pub fn run_grasp_loop(
    cloud: &PointCloud,
    cfg: &PipelineConfig,
    semantic: Option<&SemanticScores>,
    calib: &CalibrationExtrinsics,
) -> Result<EpisodeLog> {
    let source = FeatureSource::Geometric {
        radius: cfg.feature_radius,
    };
    run_grasp_loop_with(cloud, cfg, semantic, calib, &source)
}

/// Repeatedly cluster and score the remaining foreground, grasp the most
/// confident instance and delete its points, until no candidate reaches
/// `c_theta`.
///
/// Segmentation runs once on the downsampled cloud; each iteration masks
/// out the points already removed. A failure inside an iteration ends the
/// episode with an `Aborted` reason instead of an error. Errors are
/// returned only for invalid inputs detected before the first iteration.
pub fn run_grasp_loop_with(
    cloud: &PointCloud,
    cfg: &PipelineConfig,
    semantic: Option<&SemanticScores>,
    calib: &CalibrationExtrinsics,
    features: &FeatureSource,
) -> Result<EpisodeLog> {
    if matches!(features, FeatureSource::PerInstance(_)) {
        return Err(Error::Argument(
            "per-instance feature scores cannot follow instances across grasp iterations".into(),
        ));
    }
    let Prepared { working, mask } = prepare(cloud, cfg, semantic)?;
    let heights = height_cloud(&working.cloud, cfg, calib)?;
    let params = cfg.score_params();
    let initial_foreground = mask.count();

    let mut alive = vec![true; working.cloud.len()];
    let mut grasps = Vec::new();
    let mut iterations = 0;
    let expand_candidates = |instances: &InstanceSet, scored: &[ScoredInstance]| -> Vec<Candidate> {
        scored
            .iter()
            .map(|s| Candidate {
                instance_id: s.instance_id,
                n_points: s.n_points,
                sc: s.sc,
                members: working.expand(instances.members(s.instance_id)),
            })
            .collect()
    };

    let (termination, final_candidates) = loop {
        iterations += 1;
        let current = mask.restrict(&alive);
        let fg = current.count();
        if fg == 0 {
            break (Termination::BelowThreshold, Vec::new());
        }
        let instances = match cluster_foreground(&working.cloud, &current, cfg) {
            Ok(s) => s,
            Err(e) => break (Termination::Aborted(e.to_string()), Vec::new()),
        };
        let alive_ids: Vec<usize> = (0..alive.len()).filter(|&i| alive[i]).collect();
        let z_range = scene_z_range(&heights, &alive_ids);
        let scored = match score_all(&heights, &instances, &params, features, z_range) {
            Ok(s) => s,
            Err(e) => break (Termination::Aborted(e.to_string()), Vec::new()),
        };
        let candidates = expand_candidates(&instances, &scored);
        let best = match scored.first() {
            Some(b) if b.sc != REJECTED && b.sc >= params.c_theta => *b,
            _ => break (Termination::BelowThreshold, candidates),
        };
        let members = instances.members(best.instance_id);
        let plan =
            instance_centroid(&working.cloud, members).and_then(|c| Ok((c, yaw_angle(&working.cloud, members)?)));
        let (center, yaw) = match plan {
            Ok(p) => p,
            Err(e) => break (Termination::Aborted(e.to_string()), candidates),
        };
        for &m in members {
            alive[m] = false;
        }
        grasps.push(GraspRecord {
            iter: iterations - 1,
            instance_id: best.instance_id,
            n_points: best.n_points,
            s_f: best.s_f,
            h_m: best.h_m,
            sc: best.sc,
            center_camera: center,
            center_robot: to_robot_frame(center, calib),
            yaw,
            remaining_foreground: fg - members.len(),
            members: working.expand(members),
            candidates,
        });
    };

    Ok(EpisodeLog {
        grasps,
        final_candidates,
        termination,
        iterations,
        initial_foreground,
    })
}
