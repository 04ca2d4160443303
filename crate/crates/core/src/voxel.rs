//! Voxel-grid downsampling.

use std::collections::HashMap;

use crate::cloud::{norm, Point3, PointCloud};
use crate::error::{Error, Result};

/// Result of downsampling: the reduced cloud plus, for every input point,
/// the index of the output point its voxel became.
#[derive(Debug, Clone)]
pub struct Downsampled {
    pub cloud: PointCloud,
    pub parent: Vec<usize>,
}

impl Downsampled {
    /// Input-cloud indices that map into each output point.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cloud.len()];
        for (i, &p) in self.parent.iter().enumerate() {
            out[p].push(i);
        }
        out
    }

    /// Expand a set of output indices to the input points they cover, sorted.
    pub fn expand(&self, members: &[usize]) -> Vec<usize> {
        let mut keep = vec![false; self.cloud.len()];
        for &m in members {
            keep[m] = true;
        }
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| keep[p].then_some(i))
            .collect()
    }
}

/// One point per occupied voxel at the centroid of its members.
///
/// A point with coordinate `c` falls in cell `floor(c / voxel)` on each
/// axis, so a point exactly on a cell boundary belongs to the upper cell.
/// Output points appear in order of first occurrence of their cell.
/// Colors are averaged, normals averaged then renormalized, and ground
/// truth labels take the majority within the cell with ties going to the
/// smaller label.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> Result<PointCloud> {
    Ok(voxel_downsample_with_map(cloud, voxel)?.cloud)
}

pub fn voxel_downsample_with_map(cloud: &PointCloud, voxel: f64) -> Result<Downsampled> {
    if !(voxel > 0.0 && voxel.is_finite()) {
        return Err(Error::Argument(format!("voxel size must be positive, got {voxel}")));
    }
    let mut slot: HashMap<[i64; 3], usize> = HashMap::new();
    let mut parent = Vec::with_capacity(cloud.len());
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, p) in cloud.positions().iter().enumerate() {
        let key = [
            (p[0] / voxel).floor() as i64,
            (p[1] / voxel).floor() as i64,
            (p[2] / voxel).floor() as i64,
        ];
        let next = members.len();
        let s = *slot.entry(key).or_insert(next);
        if s == next {
            members.push(Vec::new());
        }
        members[s].push(i);
        parent.push(s);
    }

    let positions: Vec<Point3> = members.iter().map(|m| mean(cloud.positions(), m)).collect();
    let mut out = PointCloud::new(positions)?;
    if let Some(colors) = cloud.colors() {
        let avg = members
            .iter()
            .map(|m| {
                let c = mean(colors, m);
                c.map(|v| v.clamp(0.0, 1.0))
            })
            .collect();
        out = out.with_colors(avg)?;
    }
    if let Some(normals) = cloud.normals() {
        let avg = members
            .iter()
            .map(|m| {
                let n = mean(normals, m);
                let len = norm(n);
                if len > 1e-12 {
                    n.map(|v| v / len)
                } else {
                    normals[m[0]]
                }
            })
            .collect();
        out = out.with_normals(avg)?;
    }
    if let Some(labels) = cloud.gt_instance() {
        out = out.with_gt_instance(members.iter().map(|m| majority(labels, m)).collect())?;
    }
    if let Some(labels) = cloud.gt_semantic() {
        out = out.with_gt_semantic(members.iter().map(|m| majority(labels, m)).collect())?;
    }
    Ok(Downsampled { cloud: out, parent })
}

fn mean(values: &[[f64; 3]], members: &[usize]) -> [f64; 3] {
    let mut sum = [0.0; 3];
    for &i in members {
        for a in 0..3 {
            sum[a] += values[i][a];
        }
    }
    let n = members.len() as f64;
    sum.map(|s| s / n)
}

fn majority(labels: &[i32], members: &[usize]) -> i32 {
    let mut counts: Vec<(i32, usize)> = Vec::new();
    for &i in members {
        match counts.iter_mut().find(|(l, _)| *l == labels[i]) {
            Some((_, c)) => *c += 1,
            None => counts.push((labels[i], 1)),
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(l, _)| l)
        .unwrap_or(-1)
}
