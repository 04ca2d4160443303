//! Geometric clustering of foreground points in sensor coordinates.
//!
//! The density-split clusterer counts foreground neighbors within `r_d` for
//! every foreground point, groups the points whose count exceeds `d_theta`
//! into radius-graph connected components, then lets each remaining point
//! join the instance most common among its grouped neighbors.
//! The distance baseline skips the density split and takes connected
//! components over all foreground points.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Location, ParseErrorKind, Result};
use crate::index::SpatialIndex;
use crate::segment::ForegroundMask;

/// Neighbor counts among foreground points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityField {
    /// Foreground point ids, ascending.
    pub ids: Vec<usize>,
    /// `density[k]` belongs to `ids[k]`.
    pub density: Vec<usize>,
}

/// Disjoint proposals over a cloud's foreground.
///
/// Instance ids are positions in `instances`. Member lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstanceSet {
    cloud_len: usize,
    instances: Vec<Vec<usize>>,
    unassigned: Vec<usize>,
}

impl InstanceSet {
    pub fn new(cloud_len: usize, instances: Vec<Vec<usize>>, unassigned: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; cloud_len];
        for (k, members) in instances.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Argument(format!("instance {k} is empty")));
            }
            for &m in members {
                if m >= cloud_len || std::mem::replace(&mut seen[m], true) {
                    return Err(Error::Argument(format!("point {m} is out of range or assigned twice")));
                }
            }
        }
        for &u in &unassigned {
            if u >= cloud_len || std::mem::replace(&mut seen[u], true) {
                return Err(Error::Argument(format!(
                    "unassigned point {u} is out of range or repeated"
                )));
            }
        }
        let mut instances = instances;
        instances.iter_mut().for_each(|m| m.sort_unstable());
        let mut unassigned = unassigned;
        unassigned.sort_unstable();
        Ok(Self {
            cloud_len,
            instances,
            unassigned,
        })
    }

    pub fn empty(cloud_len: usize) -> Self {
        Self {
            cloud_len,
            ..Default::default()
        }
    }

    pub fn cloud_len(&self) -> usize {
        self.cloud_len
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Vec<usize>] {
        &self.instances
    }

    pub fn members(&self, id: usize) -> &[usize] {
        &self.instances[id]
    }

    pub fn unassigned(&self) -> &[usize] {
        &self.unassigned
    }

    /// Per-point instance id, -1 for background and unassigned points.
    pub fn assignments(&self) -> Vec<i32> {
        let mut out = vec![-1; self.cloud_len];
        for (k, members) in self.instances.iter().enumerate() {
            for &m in members {
                out[m] = k as i32;
            }
        }
        out
    }

    /// Rebuild from per-point assignments. Points labelled -1 are treated as
    /// background; ids must be dense from 0.
    pub fn from_assignments(assignments: &[i32]) -> Result<Self> {
        let mut instances: Vec<Vec<usize>> = Vec::new();
        for (i, &a) in assignments.iter().enumerate() {
            if a < -1 {
                return Err(Error::Argument(format!("assignment {a} at point {i} is below -1")));
            }
            if a >= 0 {
                let a = a as usize;
                if a >= instances.len() {
                    if a > assignments.len() {
                        return Err(Error::Argument(format!("instance id {a} exceeds the point count")));
                    }
                    instances.resize_with(a + 1, Vec::new);
                }
                instances[a].push(i);
            }
        }
        if let Some(k) = instances.iter().position(Vec::is_empty) {
            return Err(Error::Argument(format!("instance id {k} has no points")));
        }
        Ok(Self {
            cloud_len: assignments.len(),
            instances,
            unassigned: Vec::new(),
        })
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(&AssignmentsDoc {
            assignments: self.assignments(),
        })
        .expect("assignments always serialize")
    }

    pub fn parse_json(bytes: &[u8]) -> Result<Self> {
        let doc: AssignmentsDoc = serde_json::from_slice(bytes).map_err(Error::json)?;
        Self::from_assignments(&doc.assignments)
            .map_err(|e| Error::parse(ParseErrorKind::Invalid, Location::Line(1), e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentsDoc {
    assignments: Vec<i32>,
}

/// Parameters of the density-split clusterer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoClusterParams {
    pub r_density: f64,
    pub d_theta: usize,
    pub r_group: f64,
    pub r_vote: f64,
    pub vote_passes: usize,
}

impl Default for GeoClusterParams {
    fn default() -> Self {
        Self {
            r_density: 0.01,
            d_theta: 2,
            r_group: 0.01,
            r_vote: 0.01,
            vote_passes: 1,
        }
    }
}

fn check_radius(name: &str, r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} must be positive, got {r}")))
    }
}

pub fn compute_density(cloud: &PointCloud, mask: &ForegroundMask, r_d: f64) -> Result<DensityField> {
    check_radius("r_d", r_d)?;
    check_mask(cloud, mask)?;
    let ids = mask.foreground();
    if ids.is_empty() {
        return Err(Error::EmptyForeground);
    }
    let index = SpatialIndex::build_subset(cloud.positions(), &ids, r_d)?;
    let density = ids
        .par_iter()
        .map(|&i| index.count_within(cloud.position(i), r_d) - 1)
        .collect();
    Ok(DensityField { ids, density })
}

fn check_mask(cloud: &PointCloud, mask: &ForegroundMask) -> Result<()> {
    if mask.len() != cloud.len() {
        return Err(Error::Mismatch(format!(
            "mask has {} labels for {} points",
            mask.len(),
            cloud.len()
        )));
    }
    Ok(())
}

/// `(high, low)`: points with density strictly above `d_theta`, and the rest.
pub fn split_by_density(field: &DensityField, d_theta: usize) -> (Vec<usize>, Vec<usize>) {
    let mut high = Vec::new();
    let mut low = Vec::new();
    for (&i, &d) in field.ids.iter().zip(&field.density) {
        if d > d_theta {
            high.push(i);
        } else {
            low.push(i);
        }
    }
    (high, low)
}

/// Connected components of the `r` radius graph over `ids`, in canonical
/// order: larger components first, ties by smallest member id.
pub fn radius_components(cloud: &PointCloud, ids: &[usize], r: f64) -> Result<Vec<Vec<usize>>> {
    check_radius("radius", r)?;
    if ids.is_empty() {
        return Ok(Vec::new());
    }
    let index = SpatialIndex::build_subset(cloud.positions(), ids, r)?;
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut label = std::collections::HashMap::with_capacity(sorted.len());
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for &seed in &sorted {
        if label.contains_key(&seed) {
            continue;
        }
        let k = components.len();
        label.insert(seed, k);
        queue.push_back(seed);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            index.for_each_within(cloud.position(i), r, |j, _| {
                if let std::collections::hash_map::Entry::Vacant(e) = label.entry(j) {
                    e.insert(k);
                    queue.push_back(j);
                }
            });
        }
        members.sort_unstable();
        components.push(members);
    }
    sort_canonical(&mut components);
    Ok(components)
}

fn sort_canonical(components: &mut [Vec<usize>]) {
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
}

/// Group the high-density points into instances.
pub fn group_high_density(cloud: &PointCloud, high: &[usize], r_group: f64) -> Result<InstanceSet> {
    let components = radius_components(cloud, high, r_group)?;
    Ok(InstanceSet {
        cloud_len: cloud.len(),
        instances: components,
        unassigned: Vec::new(),
    })
}

/// Assign low-density points by majority vote of their grouped neighbors.
///
/// Only points already assigned in `instances` vote, so the outcome does
/// not depend on the order of `low`. A tie between instances goes to the
/// one owning the nearest voting neighbor, then to the smaller id. Points
/// with no assigned neighbor within `r_vote` stay unassigned.
pub fn vote_low_density(
    cloud: &PointCloud,
    instances: &InstanceSet,
    low: &[usize],
    r_vote: f64,
) -> Result<InstanceSet> {
    check_radius("r_vote", r_vote)?;
    let assignment = instances.assignments();
    let assigned: Vec<usize> = instances.instances.iter().flatten().copied().collect();
    let index = SpatialIndex::build_subset(cloud.positions(), &assigned, r_vote)?;

    let votes: Vec<Option<usize>> = low
        .par_iter()
        .map(|&p| {
            // (instance, count, nearest squared distance)
            let mut tally: Vec<(usize, usize, f64)> = Vec::new();
            index.for_each_within(cloud.position(p), r_vote, |j, d2| {
                if j == p {
                    return;
                }
                let inst = assignment[j] as usize;
                match tally.iter_mut().find(|t| t.0 == inst) {
                    Some(t) => {
                        t.1 += 1;
                        t.2 = t.2.min(d2);
                    }
                    None => tally.push((inst, 1, d2)),
                }
            });
            tally
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.2.total_cmp(&a.2)).then(b.0.cmp(&a.0)))
                .map(|t| t.0)
        })
        .collect();

    let mut out = instances.clone();
    let mut unassigned = Vec::new();
    for (&p, v) in low.iter().zip(votes) {
        match v {
            Some(k) => out.instances[k].push(p),
            None => unassigned.push(p),
        }
    }
    out.instances.iter_mut().for_each(|m| m.sort_unstable());
    out.unassigned = unassigned;
    out.unassigned.sort_unstable();
    Ok(out)
}

/// Full density-split clustering of the masked foreground.
pub fn geo_cluster(cloud: &PointCloud, mask: &ForegroundMask, params: &GeoClusterParams) -> Result<InstanceSet> {
    let field = compute_density(cloud, mask, params.r_density)?;
    let (high, low) = split_by_density(&field, params.d_theta);
    let mut set = group_high_density(cloud, &high, params.r_group)?;
    let mut pending = low;
    for pass in 0..params.vote_passes.max(1) {
        set = vote_low_density(cloud, &set, &pending, params.r_vote)?;
        if pass + 1 < params.vote_passes {
            pending = set.unassigned.clone();
            if pending.is_empty() {
                break;
            }
            set.unassigned.clear();
        }
    }
    Ok(set)
}

/// Radius-graph components over all foreground points; components smaller
/// than `min_pts` are left unassigned.
pub fn cluster_distance_baseline(
    cloud: &PointCloud,
    mask: &ForegroundMask,
    r_group: f64,
    min_pts: usize,
) -> Result<InstanceSet> {
    check_mask(cloud, mask)?;
    let fg = mask.foreground();
    let components = radius_components(cloud, &fg, r_group)?;
    let (kept, dropped): (Vec<_>, Vec<_>) = components.into_iter().partition(|c| c.len() >= min_pts);
    let mut unassigned: Vec<usize> = dropped.into_iter().flatten().collect();
    unassigned.sort_unstable();
    Ok(InstanceSet {
        cloud_len: cloud.len(),
        instances: kept,
        unassigned,
    })
}
