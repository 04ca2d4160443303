//! Proposal confidence scoring.
//!
//! An instance with fewer than `n_theta` points scores -1 and is never a
//! grasp candidate. Otherwise its score is `alpha * s_f + (1 - alpha) * h_m`,
//! where `s_f` is a feature score in [0, 1] and `h_m` is the instance's mean
//! height normalized over the scene's z range.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::cluster::InstanceSet;
use crate::error::{Error, Location, ParseErrorKind, Result};
use crate::index::SpatialIndex;

pub const REJECTED: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub alpha: f64,
    pub n_theta: usize,
    pub c_theta: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            n_theta: 60,
            c_theta: 0.5,
        }
    }
}

impl ScoreParams {
    pub fn new(alpha: f64, n_theta: usize, c_theta: f64) -> Result<Self> {
        let p = Self {
            alpha,
            n_theta,
            c_theta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Argument(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        if self.n_theta < 1 {
            return Err(Error::Argument("n_theta must be at least 1".into()));
        }
        if !self.c_theta.is_finite() {
            return Err(Error::Argument("c_theta must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub instance_id: usize,
    pub n_points: usize,
    pub s_f: f64,
    pub h_m: f64,
    pub sc: f64,
}

/// Mean member height mapped from `[z_lo, z_hi]` onto `[0, 1]`, clamped.
pub fn mean_height(cloud: &PointCloud, members: &[usize], z_range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = z_range;
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::Argument(format!("empty z range [{lo}, {hi}]")));
    }
    if members.is_empty() {
        return Err(Error::Argument("mean height of an empty instance".into()));
    }
    let mean = members.iter().map(|&i| cloud.position(i)[2]).sum::<f64>() / members.len() as f64;
    Ok(((mean - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Compactness proxy: the fraction of members whose neighbor count within
/// `radius` (among members) is at least the median count. Instances with
/// fewer than four points score 0.
pub fn geometric_feature_score(cloud: &PointCloud, members: &[usize], radius: f64) -> Result<f64> {
    if members.len() < 4 {
        return Ok(0.0);
    }
    let index = SpatialIndex::build_subset(cloud.positions(), members, radius)?;
    let mut density: Vec<usize> = members
        .iter()
        .map(|&i| index.count_within(cloud.position(i), radius) - 1)
        .collect();
    density.sort_unstable();
    let median = density[density.len() / 2];
    let at_least = density.iter().filter(|&&d| d >= median).count();
    Ok((at_least as f64 / members.len() as f64).clamp(0.0, 1.0))
}

/// `-1` below the point-count gate, otherwise the alpha blend.
pub fn score_instance(n_points: usize, s_f: f64, h_m: f64, params: &ScoreParams) -> f64 {
    if n_points < params.n_theta {
        REJECTED
    } else {
        params.alpha * s_f + (1.0 - params.alpha) * h_m
    }
}

/// Where per-instance feature scores come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    /// [`geometric_feature_score`] with the given radius.
    Geometric { radius: f64 },
    /// The same score for every instance.
    Uniform(f64),
    /// One score per instance, in canonical instance order.
    PerInstance(Vec<f64>),
}

impl FeatureSource {
    fn scores(&self, cloud: &PointCloud, instances: &InstanceSet) -> Result<Vec<f64>> {
        match self {
            FeatureSource::Geometric { radius } => instances
                .instances()
                .iter()
                .map(|m| geometric_feature_score(cloud, m, *radius))
                .collect(),
            FeatureSource::Uniform(v) => {
                check_unit(*v)?;
                Ok(vec![*v; instances.len()])
            }
            FeatureSource::PerInstance(v) => {
                if v.len() != instances.len() {
                    return Err(Error::Mismatch(format!(
                        "{} feature scores for {} instances",
                        v.len(),
                        instances.len()
                    )));
                }
                v.iter().try_for_each(|s| check_unit(*s))?;
                Ok(v.clone())
            }
        }
    }
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Argument(format!("feature score {v} outside [0, 1]")))
    }
}

/// Score every instance; output sorted by score descending, ties by id.
pub fn score_all(
    cloud: &PointCloud,
    instances: &InstanceSet,
    params: &ScoreParams,
    source: &FeatureSource,
    z_range: (f64, f64),
) -> Result<Vec<ScoredInstance>> {
    params.validate()?;
    let s_f = source.scores(cloud, instances)?;
    let mut out = instances
        .instances()
        .iter()
        .zip(s_f)
        .enumerate()
        .map(|(id, (members, s_f))| {
            let h_m = mean_height(cloud, members, z_range)?;
            Ok(ScoredInstance {
                instance_id: id,
                n_points: members.len(),
                s_f,
                h_m,
                sc: score_instance(members.len(), s_f, h_m, params),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_scored(&mut out);
    Ok(out)
}

pub fn sort_scored(scored: &mut [ScoredInstance]) {
    scored.sort_by(|a, b| b.sc.total_cmp(&a.sc).then(a.instance_id.cmp(&b.instance_id)));
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDoc {
    s_f: Vec<f64>,
}

/// Parse `{"s_f": [...]}`.
pub fn parse_feature_scores(bytes: &[u8]) -> Result<Vec<f64>> {
    let doc: FeatureDoc = serde_json::from_slice(bytes).map_err(Error::json)?;
    if let Some(v) = doc.s_f.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::parse(
            ParseErrorKind::Invalid,
            Location::Line(1),
            format!("feature score {v} outside [0, 1]"),
        ));
    }
    Ok(doc.s_f)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoredDoc {
    instances: Vec<ScoredInstance>,
}

pub fn scored_to_json(scored: &[ScoredInstance]) -> Vec<u8> {
    serde_json::to_vec_pretty(&ScoredDoc {
        instances: scored.to_vec(),
    })
    .expect("scores always serialize")
}

pub fn parse_scored_json(bytes: &[u8]) -> Result<Vec<ScoredInstance>> {
    let doc: ScoredDoc = serde_json::from_slice(bytes).map_err(Error::json)?;
    Ok(doc.instances)
}
