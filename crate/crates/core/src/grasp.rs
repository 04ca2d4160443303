//! Grasp geometry: instance centers, sensor-to-robot transform and yaw.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Location, ParseErrorKind, Result};

const ORTHONORMAL_TOLERANCE: f64 = 1e-6;
const VERTICAL_EPS: f64 = 1e-9;

/// Hand-eye extrinsics in row-vector convention: `p_robot = p_sensor * R + T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationExtrinsics {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl CalibrationExtrinsics {
    pub fn new(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Result<Self> {
        if rotation.iter().flatten().chain(&translation).any(|v| !v.is_finite()) {
            return Err(Error::Calibration("non-finite entry".into()));
        }
        let r = Matrix3::from_fn(|i, j| rotation[i][j]);
        let off = (r * r.transpose() - Matrix3::identity()).abs().max();
        if off > ORTHONORMAL_TOLERANCE {
            return Err(Error::Calibration(format!(
                "rotation is not orthonormal (max |R R^T - I| = {off:e})"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOLERANCE {
            return Err(Error::Calibration(format!(
                "rotation has determinant {det}, expected +1"
            )));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn rotation(&self) -> &[[f64; 3]; 3] {
        &self.rotation
    }

    pub fn translation(&self) -> [f64; 3] {
        self.translation
    }

    /// Robot-frame point back to the sensor frame: `(p - T) * R^T`.
    pub fn to_sensor_frame(&self, p: Point3) -> Point3 {
        let d = [
            p[0] - self.translation[0],
            p[1] - self.translation[1],
            p[2] - self.translation[2],
        ];
        let r = &self.rotation;
        [0, 1, 2].map(|i| d[0] * r[i][0] + d[1] * r[i][1] + d[2] * r[i][2])
    }

    pub fn parse_json(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            rotation: [[f64; 3]; 3],
            translation: [f64; 3],
        }
        let doc: Doc = serde_json::from_slice(bytes).map_err(Error::json)?;
        Self::new(doc.rotation, doc.translation)
            .map_err(|e| Error::parse(ParseErrorKind::Invalid, Location::Line(1), e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse_json(&std::fs::read(path)?)
    }
}

/// Sensor-frame point to the robot frame: `C * R + T`.
pub fn to_robot_frame(center: Point3, calib: &CalibrationExtrinsics) -> Point3 {
    let r = &calib.rotation;
    let t = calib.translation;
    [0, 1, 2].map(|j| center[0] * r[0][j] + center[1] * r[1][j] + center[2] * r[2][j] + t[j])
}

pub fn instance_centroid(cloud: &PointCloud, members: &[usize]) -> Result<Point3> {
    if members.is_empty() {
        return Err(Error::Argument("centroid of an empty instance".into()));
    }
    let mut sum = [0.0; 3];
    for &i in members {
        let p = cloud.position(i);
        for a in 0..3 {
            sum[a] += p[a];
        }
    }
    let n = members.len() as f64;
    Ok(sum.map(|s| s / n))
}

/// Top-down gripper yaw from the instance's planar extremes.
///
/// With `x_min`/`y_min` the instance minima, `y_xmax` the y of the point
/// with the largest x and `x_ymax` the x of the point with the largest y,
/// the yaw is `atan((y_xmax - y_min) / (x_ymax - x_min))`. Ties at a
/// maximum go to the smallest point id. A vanishing denominator gives pi/2.
pub fn yaw_angle(cloud: &PointCloud, members: &[usize]) -> Result<f64> {
    if members.len() < 2 {
        return Err(Error::Degenerate("yaw needs at least two points".into()));
    }
    let mut ids = members.to_vec();
    ids.sort_unstable();
    let p = |i: usize| cloud.position(i);

    let mut x_min = f64::INFINITY;
    let mut y_min = f64::INFINITY;
    let mut x_max_id = ids[0];
    let mut y_max_id = ids[0];
    for &i in &ids {
        let q = p(i);
        x_min = x_min.min(q[0]);
        y_min = y_min.min(q[1]);
        if q[0] > p(x_max_id)[0] {
            x_max_id = i;
        }
        if q[1] > p(y_max_id)[1] {
            y_max_id = i;
        }
    }
    if p(x_max_id)[0] == x_min && p(y_max_id)[1] == y_min {
        return Err(Error::Degenerate("all points coincide in the xy plane".into()));
    }
    let num = p(x_max_id)[1] - y_min;
    let den = p(y_max_id)[0] - x_min;
    if den.abs() < VERTICAL_EPS {
        return Ok(FRAC_PI_2);
    }
    Ok((num / den).atan())
}
