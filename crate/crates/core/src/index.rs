//! Exact fixed-radius neighbor search over a uniform hash grid.
//!
//! Queries are exact: every candidate found through the grid is checked
//! against the squared radius, so results agree with a brute-force scan.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cloud::{dist2, Point3};
use crate::error::{Error, Result};

type CellKey = [i64; 3];

/// Grid-bucketed index over a set of points.
///
/// Points are addressed by external ids: for an index over a whole cloud
/// these are the cloud indices, for a subset index they are the ids that
/// were passed in at construction.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell: f64,
    points: Vec<Point3>,
    ids: Vec<usize>,
    cells: HashMap<CellKey, (usize, usize)>,
    slot_of: HashMap<usize, usize>,
}

impl SpatialIndex {
    /// Index every point; external ids are `0..points.len()`.
    pub fn build(points: &[Point3], cell: f64) -> Result<Self> {
        let ids: Vec<usize> = (0..points.len()).collect();
        Self::build_subset(points, &ids, cell)
    }

    /// Index only `points[id]` for each `id` in `ids`.
    pub fn build_subset(points: &[Point3], ids: &[usize], cell: f64) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::Argument(format!("cell size must be positive, got {cell}")));
        }
        let mut keyed: Vec<(CellKey, usize)> = ids.iter().map(|&id| (cell_key(points[id], cell), id)).collect();
        keyed.sort_unstable();

        let mut cells = HashMap::with_capacity(keyed.len());
        let mut start = 0;
        for k in 1..=keyed.len() {
            if k == keyed.len() || keyed[k].0 != keyed[start].0 {
                cells.insert(keyed[start].0, (start, k));
                start = k;
            }
        }
        let ids: Vec<usize> = keyed.iter().map(|&(_, id)| id).collect();
        let slot_of = ids.iter().enumerate().map(|(s, &id)| (id, s)).collect();
        Ok(Self {
            cell,
            points: ids.iter().map(|&id| points[id]).collect(),
            ids,
            cells,
            slot_of,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.slot_of.contains_key(&id)
    }

    /// Position stored for an indexed id.
    pub fn point(&self, id: usize) -> Option<Point3> {
        self.slot_of.get(&id).map(|&s| self.points[s])
    }

    /// Ids `j != i` with `|p_i - p_j| <= r`, ascending.
    pub fn radius_neighbors(&self, i: usize, r: f64) -> Result<Vec<usize>> {
        check_radius(r)?;
        let p = self
            .point(i)
            .ok_or_else(|| Error::Argument(format!("point id {i} is not in the index")))?;
        let mut out = Vec::new();
        self.for_each_within(p, r, |j, _| {
            if j != i {
                out.push(j);
            }
        });
        out.sort_unstable();
        Ok(out)
    }

    /// Neighbor lists for every indexed id, in ascending id order.
    pub fn all_radius_neighbors(&self, r: f64) -> Result<Vec<(usize, Vec<usize>)>> {
        check_radius(r)?;
        let mut order = self.ids.clone();
        order.sort_unstable();
        Ok(order
            .into_par_iter()
            .map(|i| {
                let p = self.points[self.slot_of[&i]];
                let mut out = Vec::new();
                self.for_each_within(p, r, |j, _| {
                    if j != i {
                        out.push(j);
                    }
                });
                out.sort_unstable();
                (i, out)
            })
            .collect())
    }

    /// Number of indexed points within `r` of `p` (a point at `p` counts).
    pub fn count_within(&self, p: Point3, r: f64) -> usize {
        let mut n = 0;
        self.for_each_within(p, r, |_, _| n += 1);
        n
    }

    /// Visit `(id, squared distance)` for every indexed point within `r` of
    /// `p`. Visit order is unspecified.
    pub fn for_each_within(&self, p: Point3, r: f64, mut visit: impl FnMut(usize, f64)) {
        if self.ids.is_empty() || r.is_nan() || r < 0.0 {
            return;
        }
        let r2 = r * r;
        let pad = r * (1.0 + 1e-9) + 1e-12;
        let lo = cell_key([p[0] - pad, p[1] - pad, p[2] - pad], self.cell);
        let hi = cell_key([p[0] + pad, p[1] + pad, p[2] + pad], self.cell);
        let span: i128 = (0..3).map(|a| (hi[a] - lo[a] + 1) as i128).product();

        let mut scan = |range: &(usize, usize)| {
            for s in range.0..range.1 {
                let d2 = dist2(p, self.points[s]);
                if d2 <= r2 {
                    visit(self.ids[s], d2);
                }
            }
        };

        if span > self.cells.len() as i128 {
            for (key, range) in &self.cells {
                if (0..3).all(|a| key[a] >= lo[a] && key[a] <= hi[a]) {
                    scan(range);
                }
            }
            return;
        }
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    if let Some(range) = self.cells.get(&[x, y, z]) {
                        scan(range);
                    }
                }
            }
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("radius must be positive, got {r}")))
    }
}

fn cell_key(p: Point3, cell: f64) -> CellKey {
    [
        (p[0] / cell).floor() as i64,
        (p[1] / cell).floor() as i64,
        (p[2] / cell).floor() as i64,
    ]
}
