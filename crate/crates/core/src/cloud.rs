//! Point-cloud data model.

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Label used in `gt_instance` for points that belong to no object.
pub const BACKGROUND_INSTANCE: i32 = -1;

const NORMAL_TOLERANCE: f64 = 1e-6;

/// Positions plus optional per-point attributes.
///
/// Every optional attribute, when present, has exactly one entry per
/// position. Construction goes through the `with_*` builders, which check
/// the invariants, so a `PointCloud` in hand is always consistent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    positions: Vec<Point3>,
    colors: Option<Vec<[f64; 3]>>,
    normals: Option<Vec<Point3>>,
    gt_instance: Option<Vec<i32>>,
    gt_semantic: Option<Vec<i32>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Point3>) -> Result<Self> {
        if let Some(i) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidCloud(format!("position {i} is not finite")));
        }
        Ok(Self {
            positions,
            ..Default::default()
        })
    }

    pub fn with_colors(mut self, colors: Vec<[f64; 3]>) -> Result<Self> {
        self.check_len("colors", colors.len())?;
        if let Some(i) = colors.iter().position(|c| c.iter().any(|v| !(0.0..=1.0).contains(v))) {
            return Err(Error::InvalidCloud(format!("color {i} outside [0, 1]")));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_normals(mut self, normals: Vec<Point3>) -> Result<Self> {
        self.check_len("normals", normals.len())?;
        for (i, n) in normals.iter().enumerate() {
            let norm = norm(*n);
            if !norm.is_finite() || (norm - 1.0).abs() > NORMAL_TOLERANCE {
                return Err(Error::InvalidCloud(format!("normal {i} has norm {norm}, expected 1")));
            }
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn with_gt_instance(mut self, labels: Vec<i32>) -> Result<Self> {
        self.check_len("gt_instance", labels.len())?;
        if let Some(i) = labels.iter().position(|&l| l < BACKGROUND_INSTANCE) {
            return Err(Error::InvalidCloud(format!(
                "gt_instance label {} at point {i} is below -1",
                labels[i]
            )));
        }
        self.gt_instance = Some(labels);
        Ok(self)
    }

    pub fn with_gt_semantic(mut self, labels: Vec<i32>) -> Result<Self> {
        self.check_len("gt_semantic", labels.len())?;
        self.gt_semantic = Some(labels);
        Ok(self)
    }

    fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.positions.len() {
            return Err(Error::Mismatch(format!(
                "{what} has {len} entries but the cloud has {} positions",
                self.positions.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> Point3 {
        self.positions[i]
    }

    pub fn colors(&self) -> Option<&[[f64; 3]]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Point3]> {
        self.normals.as_deref()
    }

    pub fn gt_instance(&self) -> Option<&[i32]> {
        self.gt_instance.as_deref()
    }

    pub fn gt_semantic(&self) -> Option<&[i32]> {
        self.gt_semantic.as_deref()
    }

    /// Copy of the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        fn pick<T: Copy>(v: &Option<Vec<T>>, idx: &[usize]) -> Option<Vec<T>> {
            v.as_ref().map(|v| idx.iter().map(|&i| v[i]).collect())
        }
        PointCloud {
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            colors: pick(&self.colors, indices),
            normals: pick(&self.normals, indices),
            gt_instance: pick(&self.gt_instance, indices),
            gt_semantic: pick(&self.gt_semantic, indices),
        }
    }

    /// Ground-truth objects as sorted member lists, ordered by label.
    pub fn gt_objects(&self) -> Option<Vec<(i32, Vec<usize>)>> {
        let labels = self.gt_instance.as_ref()?;
        let mut groups: std::collections::BTreeMap<i32, Vec<usize>> = Default::default();
        for (i, &l) in labels.iter().enumerate() {
            if l >= 0 {
                groups.entry(l).or_default().push(i);
            }
        }
        Some(groups.into_iter().collect())
    }

    /// Minimum and maximum z over the given points, or over the whole cloud.
    pub fn z_range(&self, indices: Option<&[usize]>) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |p: &Point3| {
            lo = lo.min(p[2]);
            hi = hi.max(p[2]);
        };
        match indices {
            Some(idx) => idx.iter().for_each(|&i| visit(&self.positions[i])),
            None => self.positions.iter().for_each(&mut visit),
        }
        (lo <= hi).then_some((lo, hi))
    }
}

pub(crate) fn norm(v: Point3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dist2(a: Point3, b: Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}
