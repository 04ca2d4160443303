//! Pipeline parameters, loadable from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::GeoClusterParams;
use crate::error::{Error, Result};
use crate::score::ScoreParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Clusterer {
    /// Density split, grouping and voting.
    #[default]
    Binary,
    /// Plain radius-graph components.
    Distance,
}

/// Frame whose z axis measures height for the scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeightFrame {
    #[default]
    Sensor,
    Robot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub voxel: f64,
    pub r_d: f64,
    pub r_group: f64,
    pub r_vote: f64,
    pub d_theta: usize,
    pub vote_passes: usize,
    pub n_theta: usize,
    pub alpha: f64,
    pub c_theta: f64,
    pub clusterer: Clusterer,
    /// Smallest component kept by the distance clusterer.
    pub min_pts: usize,
    /// Neighborhood radius of the geometric feature score.
    pub feature_radius: f64,
    /// Height above the fitted table plane below which points count as
    /// table when no semantic scores are supplied.
    pub table_margin: f64,
    pub height_frame: HeightFrame,
    /// Per-point semantic scores (JSON or CSV). Absent: table-plane heuristic.
    pub scores: Option<PathBuf>,
    /// Per-instance feature scores for `detect`. Absent: geometric score.
    pub s_f: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub profile: String,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let geo = GeoClusterParams::default();
        let score = ScoreParams::default();
        Self {
            voxel: 0.005,
            r_d: geo.r_density,
            r_group: geo.r_group,
            r_vote: geo.r_vote,
            d_theta: geo.d_theta,
            vote_passes: geo.vote_passes,
            n_theta: score.n_theta,
            alpha: score.alpha,
            c_theta: score.c_theta,
            clusterer: Clusterer::Binary,
            min_pts: 50,
            feature_radius: 0.01,
            table_margin: 0.02,
            height_frame: HeightFrame::Sensor,
            scores: None,
            s_f: None,
            calibration: None,
            profile: "ainstec".into(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn parse_json(bytes: &[u8]) -> Result<Self> {
        let cfg: Self = serde_json::from_slice(bytes).map_err(Error::json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_json(&std::fs::read(path)?)
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("config always serializes")
    }

    pub fn geo_params(&self) -> GeoClusterParams {
        GeoClusterParams {
            r_density: self.r_d,
            d_theta: self.d_theta,
            r_group: self.r_group,
            r_vote: self.r_vote,
            vote_passes: self.vote_passes,
        }
    }

    pub fn score_params(&self) -> ScoreParams {
        ScoreParams {
            alpha: self.alpha,
            n_theta: self.n_theta,
            c_theta: self.c_theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("voxel", self.voxel),
            ("r_d", self.r_d),
            ("r_group", self.r_group),
            ("r_vote", self.r_vote),
            ("feature_radius", self.feature_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.table_margin >= 0.0 && self.table_margin.is_finite()) {
            return Err(Error::Argument(format!(
                "table_margin must be >= 0, got {}",
                self.table_margin
            )));
        }
        if self.vote_passes == 0 {
            return Err(Error::Argument("vote_passes must be at least 1".into()));
        }
        self.score_params().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.voxel, 0.005);
        assert_eq!((c.r_d, c.r_group, c.r_vote), (0.01, 0.01, 0.01));
        assert_eq!((c.d_theta, c.n_theta), (2, 60));
        assert_eq!((c.alpha, c.c_theta), (0.3, 0.5));
        assert_eq!(c.clusterer, Clusterer::Binary);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = PipelineConfig::parse_json(br#"{"alpha": 0.5, "clusterer": "distance"}"#).unwrap();
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.clusterer, Clusterer::Distance);
        assert_eq!(c.n_theta, 60);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(PipelineConfig::parse_json(br#"{"alpah": 0.5}"#).is_err());
        assert!(PipelineConfig::parse_json(br#"{"alpha": 2.0}"#).is_err());
        assert!(PipelineConfig::parse_json(br#"{"voxel": 0}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let c = PipelineConfig {
            seed: 9,
            height_frame: HeightFrame::Robot,
            ..Default::default()
        };
        assert_eq!(PipelineConfig::parse_json(&c.to_json()).unwrap(), c);
    }
}
