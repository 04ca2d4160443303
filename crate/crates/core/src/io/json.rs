//! The internal JSON cloud format.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Location, ParseErrorKind, Result};

/// On-disk shape: absent attributes are written as `null`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CloudDoc {
    positions: Vec<[f64; 3]>,
    #[serde(default)]
    colors: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    normals: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    gt_instance: Option<Vec<i32>>,
    #[serde(default)]
    gt_semantic: Option<Vec<i32>>,
}

pub fn parse_cloud_json(text: &[u8]) -> Result<PointCloud> {
    let doc: CloudDoc = serde_json::from_slice(text).map_err(Error::json)?;
    let invalid = |e: Error| match e {
        Error::Mismatch(m) => Error::parse(ParseErrorKind::LengthMismatch, Location::Line(1), m),
        other => Error::parse(ParseErrorKind::Invalid, Location::Line(1), other.to_string()),
    };
    let mut cloud = PointCloud::new(doc.positions).map_err(invalid)?;
    if let Some(c) = doc.colors {
        cloud = cloud.with_colors(c).map_err(invalid)?;
    }
    if let Some(n) = doc.normals {
        cloud = cloud.with_normals(n).map_err(invalid)?;
    }
    if let Some(l) = doc.gt_instance {
        cloud = cloud.with_gt_instance(l).map_err(invalid)?;
    }
    if let Some(l) = doc.gt_semantic {
        cloud = cloud.with_gt_semantic(l).map_err(invalid)?;
    }
    Ok(cloud)
}

pub fn write_cloud_json(cloud: &PointCloud) -> Vec<u8> {
    let doc = CloudDoc {
        positions: cloud.positions().to_vec(),
        colors: cloud.colors().map(<[_]>::to_vec),
        normals: cloud.normals().map(<[_]>::to_vec),
        gt_instance: cloud.gt_instance().map(<[_]>::to_vec),
        gt_semantic: cloud.gt_semantic().map(<[_]>::to_vec),
    };
    serde_json::to_vec(&doc).expect("cloud documents always serialize")
}
