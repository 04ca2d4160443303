//! Synthetic tabletop scenes seen by an overhead depth camera.
//!
//! The table top is the plane z = 0, z points up and the camera looks down
//! from `camera_height`. Rendering is orthographic: one jittered sample per
//! cell of a grid whose spacing follows the device density, each taking the
//! highest surface above it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Depth jumps larger than this may produce mixed pixels.
pub const MIXED_PIXEL_JUMP: f64 = 0.01;
/// Noise samples are redrawn until they fall within this many sigmas.
pub const NOISE_TRUNCATION: f64 = 4.0;

pub const TABLE_SEMANTIC: i32 = 1;
pub const OBJECT_SEMANTIC: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    pub name: String,
    pub points_per_m2: f64,
    /// Depth noise sigma as a fraction of the camera-to-surface distance.
    pub depth_noise_frac: f64,
    pub dropout_frac: f64,
    /// Constant bias added to every height.
    pub z_offset: f64,
    /// Probability that a depth jump emits a point at an intermediate depth.
    pub mixed_pixel_frac: f64,
}

impl DeviceProfile {
    /// Structured-light camera: dense and accurate.
    pub fn ainstec() -> Self {
        Self {
            name: "ainstec".into(),
            points_per_m2: 200_000.0,
            depth_noise_frac: 0.001,
            dropout_frac: 0.0,
            z_offset: 0.0,
            mixed_pixel_frac: 0.0,
        }
    }

    /// Active stereo camera: sparser, noisier, biased, with flying pixels.
    pub fn d455() -> Self {
        Self {
            name: "d455".into(),
            points_per_m2: 50_000.0,
            depth_noise_frac: 0.02,
            dropout_frac: 0.02,
            z_offset: 0.004,
            mixed_pixel_frac: 1.0,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "ainstec" => Ok(Self::ainstec()),
            "d455" => Ok(Self::d455()),
            other => Err(Error::Argument(format!(
                "unknown device profile {other:?} (expected ainstec or d455)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.points_per_m2 > 0.0 && self.points_per_m2.is_finite()) {
            return Err(Error::Argument(format!(
                "points_per_m2 must be positive, got {}",
                self.points_per_m2
            )));
        }
        if !(0.0..1.0).contains(&self.depth_noise_frac) {
            return Err(Error::Argument(format!(
                "depth_noise_frac must be in [0, 1), got {}",
                self.depth_noise_frac
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_frac) {
            return Err(Error::Argument(format!(
                "dropout_frac must be in [0, 1), got {}",
                self.dropout_frac
            )));
        }
        if !(0.0..=1.0).contains(&self.mixed_pixel_frac) {
            return Err(Error::Argument(format!(
                "mixed_pixel_frac must be in [0, 1], got {}",
                self.mixed_pixel_frac
            )));
        }
        if !self.z_offset.is_finite() {
            return Err(Error::Argument("z_offset must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    Box {
        size: [f64; 3],
    },
    Cylinder {
        radius: f64,
        height: f64,
    },
    Sphere {
        radius: f64,
    },
    /// A box of `size` with a `notch` (x, y extent) cut from its +x/+y
    /// corner through the full height.
    LBlock {
        size: [f64; 3],
        notch: [f64; 2],
    },
}

impl Shape {
    fn height(&self) -> f64 {
        match *self {
            Shape::Box { size } | Shape::LBlock { size, .. } => size[2],
            Shape::Cylinder { height, .. } => height,
            Shape::Sphere { radius } => 2.0 * radius,
        }
    }

    fn has_flat_top(&self) -> bool {
        !matches!(self, Shape::Sphere { .. })
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let dims: Vec<f64> = match *self {
            Shape::Box { size } => size.to_vec(),
            Shape::Cylinder { radius, height } => vec![radius, height],
            Shape::Sphere { radius } => vec![radius],
            Shape::LBlock { size, notch } => {
                if !(notch[0] < size[0] && notch[1] < size[1]) {
                    return Err("l-block notch must be smaller than the block".into());
                }
                size.iter().chain(&notch).copied().collect()
            }
        };
        if dims.iter().all(|d| *d > 0.0 && d.is_finite()) {
            Ok(())
        } else {
            Err("dimensions must be positive".into())
        }
    }

    /// Top surface height above the object's base at local (x, y), if the
    /// point lies on the footprint.
    fn top_at(&self, lx: f64, ly: f64) -> Option<f64> {
        match *self {
            Shape::Box { size } => (lx.abs() <= size[0] / 2.0 && ly.abs() <= size[1] / 2.0).then_some(size[2]),
            Shape::Cylinder { radius, height } => (lx * lx + ly * ly <= radius * radius).then_some(height),
            Shape::Sphere { radius } => {
                let rho2 = lx * lx + ly * ly;
                (rho2 <= radius * radius).then(|| radius + (radius * radius - rho2).sqrt())
            }
            Shape::LBlock { size, notch } => {
                let inside = lx.abs() <= size[0] / 2.0 && ly.abs() <= size[1] / 2.0;
                let in_notch = lx > size[0] / 2.0 - notch[0] && ly > size[1] / 2.0 - notch[1];
                (inside && !in_notch).then_some(size[2])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    fn to_local(self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (x - self.x, y - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    fn to_world(self, lx: f64, ly: f64) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        [self.x + c * lx - s * ly, self.y + s * lx + c * ly]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub shape: Shape,
    pub pose: Pose,
    /// Index of the object this one rests on; `None` rests on the table.
    #[serde(default)]
    pub stack_on: Option<usize>,
}

fn default_camera_height() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    /// Table size along x and y, centered on the origin.
    pub table: [f64; 2],
    /// Camera height above the table top.
    #[serde(default = "default_camera_height")]
    pub camera_height: f64,
    pub objects: Vec<SceneObject>,
}

impl SceneSpec {
    pub fn parse_json(bytes: &[u8]) -> Result<Self> {
        let spec: Self = serde_json::from_slice(bytes).map_err(Error::json)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("scene specs always serialize")
    }

    /// True when `upper` sits on `lower`, directly or through other objects.
    /// Call only on specs whose stacks are acyclic.
    fn rests_on(&self, upper: usize, lower: usize) -> bool {
        let mut cur = self.objects[upper].stack_on;
        while let Some(s) = cur {
            if s == lower {
                return true;
            }
            cur = self.objects[s].stack_on;
        }
        false
    }

    /// Base height of every object, resolving stacks.
    fn base_heights(&self) -> Result<Vec<f64>> {
        let n = self.objects.len();
        let mut base: Vec<Option<f64>> = vec![None; n];
        for start in 0..n {
            // walk down to a resolved support or the table, then fill back up
            let mut chain = Vec::new();
            let mut cur = start;
            let mut below = loop {
                if let Some(b) = base[cur] {
                    break b + self.objects[cur].shape.height();
                }
                if chain.contains(&cur) {
                    return Err(Error::Spec(format!("stacking cycle through object {cur}")));
                }
                chain.push(cur);
                match self.objects[cur].stack_on {
                    None => break 0.0,
                    Some(s) if s >= n || s == cur => {
                        return Err(Error::Spec(format!("object {cur} stacks on invalid index {s}")));
                    }
                    Some(s) => cur = s,
                }
            };
            while let Some(k) = chain.pop() {
                if base[k].is_none() {
                    base[k] = Some(below);
                }
                below = base[k].expect("just set") + self.objects[k].shape.height();
            }
        }
        Ok(base.into_iter().map(|b| b.expect("all bases resolved")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.table.iter().all(|t| *t > 0.0 && t.is_finite())) {
            return Err(Error::Spec("table extent must be positive".into()));
        }
        if !(self.camera_height > 0.0 && self.camera_height.is_finite()) {
            return Err(Error::Spec("camera height must be positive".into()));
        }
        for (i, o) in self.objects.iter().enumerate() {
            o.shape
                .validate()
                .map_err(|e| Error::Spec(format!("object {i}: {e}")))?;
            if ![o.pose.x, o.pose.y, o.pose.yaw].iter().all(|v| v.is_finite()) {
                return Err(Error::Spec(format!("object {i}: pose must be finite")));
            }
            if let Some(s) = o.stack_on {
                let support = self
                    .objects
                    .get(s)
                    .ok_or_else(|| Error::Spec(format!("object {i} stacks on missing object {s}")))?;
                if !support.shape.has_flat_top() {
                    return Err(Error::Spec(format!(
                        "object {i} stacks on object {s}, which has no flat top"
                    )));
                }
                if !footprint(support, 0.0).iter().any(|p| p.contains([o.pose.x, o.pose.y])) {
                    return Err(Error::Spec(format!("object {i} is not centered over its support {s}")));
                }
            }
            let half = [self.table[0] / 2.0, self.table[1] / 2.0];
            if !footprint(o, 0.0).iter().all(|p| p.within(half)) {
                return Err(Error::Spec(format!("object {i} extends past the table")));
            }
        }
        let bases = self.base_heights()?;
        for (i, a) in self.objects.iter().enumerate() {
            let top = bases[i] + a.shape.height();
            if top >= self.camera_height {
                return Err(Error::Spec(format!("object {i} reaches the camera")));
            }
            for (j, b) in self.objects.iter().enumerate().skip(i + 1) {
                if self.rests_on(i, j) || self.rests_on(j, i) {
                    continue;
                }
                if footprints_overlap(a, b, 0.0) {
                    return Err(Error::Spec(format!(
                        "objects {i} and {j} overlap without a stack relation"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Convex piece of an object's footprint in world xy.
#[derive(Debug, Clone)]
enum Piece {
    Poly(Vec<[f64; 2]>),
    Disc([f64; 2], f64),
}

const OVERLAP_EPS: f64 = 1e-12;

impl Piece {
    fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Piece::Disc(c, r) => (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= r * r,
            Piece::Poly(v) => (0..v.len()).all(|k| {
                let a = v[k];
                let b = v[(k + 1) % v.len()];
                (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -OVERLAP_EPS
            }),
        }
    }

    fn within(&self, half: [f64; 2]) -> bool {
        match self {
            Piece::Disc(c, r) => c[0].abs() + r <= half[0] && c[1].abs() + r <= half[1],
            Piece::Poly(v) => v.iter().all(|p| p[0].abs() <= half[0] && p[1].abs() <= half[1]),
        }
    }

    fn project(&self, axis: [f64; 2]) -> (f64, f64) {
        match self {
            Piece::Disc(c, r) => {
                let m = c[0] * axis[0] + c[1] * axis[1];
                (m - r, m + r)
            }
            Piece::Poly(v) => v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let d = p[0] * axis[0] + p[1] * axis[1];
                (lo.min(d), hi.max(d))
            }),
        }
    }

    fn edge_normals(&self) -> Vec<[f64; 2]> {
        match self {
            Piece::Disc(..) => Vec::new(),
            Piece::Poly(v) => (0..v.len())
                .map(|k| {
                    let a = v[k];
                    let b = v[(k + 1) % v.len()];
                    unit([a[1] - b[1], b[0] - a[0]])
                })
                .collect(),
        }
    }
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    if n > 0.0 {
        [v[0] / n, v[1] / n]
    } else {
        [1.0, 0.0]
    }
}

/// Separating axis test; touching pieces do not overlap.
fn pieces_overlap(a: &Piece, b: &Piece) -> bool {
    let mut axes = a.edge_normals();
    axes.extend(b.edge_normals());
    match (a, b) {
        (Piece::Disc(ca, _), Piece::Disc(cb, _)) => axes.push(unit([cb[0] - ca[0], cb[1] - ca[1]])),
        (Piece::Disc(c, _), Piece::Poly(v)) | (Piece::Poly(v), Piece::Disc(c, _)) => {
            let nearest = v
                .iter()
                .min_by(|p, q| {
                    let dp = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                    let dq = (q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2);
                    dp.total_cmp(&dq)
                })
                .expect("polygons have vertices");
            axes.push(unit([nearest[0] - c[0], nearest[1] - c[1]]));
        }
        _ => {}
    }
    axes.iter().all(|&axis| {
        let (alo, ahi) = a.project(axis);
        let (blo, bhi) = b.project(axis);
        ahi > blo + OVERLAP_EPS && bhi > alo + OVERLAP_EPS
    })
}

/// Footprint pieces grown by `pad` on every side.
fn footprint(o: &SceneObject, pad: f64) -> Vec<Piece> {
    let rect = |x0: f64, x1: f64, y0: f64, y1: f64| {
        let (x0, x1, y0, y1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);
        Piece::Poly(vec![
            o.pose.to_world(x0, y0),
            o.pose.to_world(x1, y0),
            o.pose.to_world(x1, y1),
            o.pose.to_world(x0, y1),
        ])
    };
    match o.shape {
        Shape::Box { size } => vec![rect(-size[0] / 2.0, size[0] / 2.0, -size[1] / 2.0, size[1] / 2.0)],
        Shape::Cylinder { radius, .. } | Shape::Sphere { radius } => {
            vec![Piece::Disc([o.pose.x, o.pose.y], radius + pad)]
        }
        Shape::LBlock { size, notch } => {
            let (hx, hy) = (size[0] / 2.0, size[1] / 2.0);
            vec![
                rect(-hx, hx, -hy, hy - notch[1]),
                rect(-hx, hx - notch[0], hy - notch[1], hy),
            ]
        }
    }
}

fn footprints_overlap(a: &SceneObject, b: &SceneObject, gap: f64) -> bool {
    let pa = footprint(a, gap / 2.0);
    let pb = footprint(b, gap / 2.0);
    pa.iter().any(|x| pb.iter().any(|y| pieces_overlap(x, y)))
}

const TABLE_COLOR: [f64; 3] = [0.6, 0.6, 0.6];
const PALETTE: [[f64; 3]; 6] = [
    [0.85, 0.25, 0.2],
    [0.2, 0.55, 0.85],
    [0.95, 0.75, 0.2],
    [0.3, 0.7, 0.35],
    [0.6, 0.35, 0.75],
    [0.9, 0.5, 0.15],
];

struct Sample {
    x: f64,
    y: f64,
    z: f64,
    owner: i32,
}

/// Render `spec` as seen by `profile`. The output is a pure function of
/// the scene description (including its seed) and the profile.
pub fn generate_scene(spec: &SceneSpec, profile: &DeviceProfile) -> Result<PointCloud> {
    spec.validate()?;
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bases = spec.base_heights()?;

    let spacing = 1.0 / profile.points_per_m2.sqrt();
    let nx = ((spec.table[0] / spacing).round() as usize).max(1);
    let ny = ((spec.table[1] / spacing).round() as usize).max(1);
    let (sx, sy) = (spec.table[0] / nx as f64, spec.table[1] / ny as f64);
    let (x0, y0) = (-spec.table[0] / 2.0, -spec.table[1] / 2.0);

    let surface = |x: f64, y: f64| -> (f64, i32) {
        let mut best = (0.0, -1);
        for (k, o) in spec.objects.iter().enumerate() {
            let (lx, ly) = o.pose.to_local(x, y);
            if let Some(h) = o.shape.top_at(lx, ly) {
                let z = bases[k] + h;
                if z > best.0 {
                    best = (z, k as i32);
                }
            }
        }
        best
    };

    let mut grid = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = x0 + (i as f64 + rng.random::<f64>()) * sx;
            let y = y0 + (j as f64 + rng.random::<f64>()) * sy;
            let (z, owner) = surface(x, y);
            grid.push(Sample { x, y, z, owner });
        }
    }

    let mut mixed = Vec::new();
    if profile.mixed_pixel_frac > 0.0 {
        for j in 0..ny {
            for i in 0..nx {
                let a = &grid[j * nx + i];
                let right = (i + 1 < nx).then(|| &grid[j * nx + i + 1]);
                let up = (j + 1 < ny).then(|| &grid[(j + 1) * nx + i]);
                for b in [right, up].into_iter().flatten() {
                    if (a.z - b.z).abs() > MIXED_PIXEL_JUMP && rng.random::<f64>() < profile.mixed_pixel_frac {
                        let t: f64 = rng.random();
                        let (lo, hi) = (a.z.min(b.z), a.z.max(b.z));
                        mixed.push(Sample {
                            x: (a.x + b.x) / 2.0,
                            y: (a.y + b.y) / 2.0,
                            z: lo + t * (hi - lo),
                            owner: -1,
                        });
                    }
                }
            }
        }
    }

    let mut positions = Vec::with_capacity(grid.len() + mixed.len());
    let mut colors = Vec::with_capacity(positions.capacity());
    let mut gt_instance = Vec::with_capacity(positions.capacity());
    let mut gt_semantic = Vec::with_capacity(positions.capacity());
    let unit_normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let is_mixed = std::iter::repeat_n(false, grid.len()).chain(std::iter::repeat(true));
    for (s, mixed) in grid.iter().chain(&mixed).zip(is_mixed) {
        let sigma = profile.depth_noise_frac * (spec.camera_height - s.z);
        let noise = loop {
            let e: f64 = unit_normal.sample(&mut rng);
            if e.abs() <= NOISE_TRUNCATION {
                break e * sigma;
            }
        };
        if profile.dropout_frac > 0.0 && rng.random::<f64>() < profile.dropout_frac {
            continue;
        }
        positions.push([s.x, s.y, s.z + noise + profile.z_offset]);
        let object = !mixed && s.owner >= 0;
        colors.push(if object {
            PALETTE[s.owner as usize % PALETTE.len()]
        } else {
            TABLE_COLOR
        });
        gt_instance.push(if object { s.owner } else { -1 });
        gt_semantic.push(if object { OBJECT_SEMANTIC } else { TABLE_SEMANTIC });
    }
    PointCloud::new(positions)?
        .with_colors(colors)?
        .with_gt_instance(gt_instance)?
        .with_gt_semantic(gt_semantic)
}

pub const PRESETS: [&str; 5] = ["scenario1", "scenario2", "scenario3", "scenario4", "scenario5"];

const TABLE: [f64; 2] = [0.6, 0.45];
const GAP: f64 = 0.03;
const EDGE_MARGIN: f64 = 0.02;
const PLACEMENT_TRIES: usize = 2000;

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn random_box(rng: &mut ChaCha8Rng, side: (f64, f64), height: (f64, f64)) -> Shape {
    Shape::Box {
        size: [
            uniform(rng, side.0, side.1),
            uniform(rng, side.0, side.1),
            uniform(rng, height.0, height.1),
        ],
    }
}

fn random_l_block(rng: &mut ChaCha8Rng) -> Shape {
    let size = [
        uniform(rng, 0.08, 0.1),
        uniform(rng, 0.08, 0.1),
        uniform(rng, 0.04, 0.06),
    ];
    Shape::LBlock {
        size,
        notch: [size[0] * uniform(rng, 0.35, 0.5), size[1] * uniform(rng, 0.35, 0.5)],
    }
}

/// Place `shape` on the table at a random pose keeping `GAP` clearance.
fn place_on_table(rng: &mut ChaCha8Rng, placed: &[SceneObject], shape: Shape) -> Option<SceneObject> {
    let half = [TABLE[0] / 2.0 - EDGE_MARGIN, TABLE[1] / 2.0 - EDGE_MARGIN];
    for _ in 0..PLACEMENT_TRIES {
        let o = SceneObject {
            shape,
            pose: Pose {
                x: uniform(rng, -half[0], half[0]),
                y: uniform(rng, -half[1], half[1]),
                yaw: uniform(rng, 0.0, PI),
            },
            stack_on: None,
        };
        if !footprint(&o, 0.0).iter().all(|p| p.within(half)) {
            continue;
        }
        if placed
            .iter()
            .filter(|p| p.stack_on.is_none())
            .all(|p| !footprints_overlap(p, &o, GAP))
        {
            return Some(o);
        }
    }
    None
}

/// Rest `shape` on `support`, aligned with it and offset toward a random
/// corner while staying inside its top face.
fn stack(rng: &mut ChaCha8Rng, objects: &[SceneObject], support: usize, shape: Shape) -> SceneObject {
    let base = objects[support];
    let (ux, uy) = match shape {
        Shape::Box { size } | Shape::LBlock { size, .. } => (size[0] / 2.0, size[1] / 2.0),
        Shape::Cylinder { radius, .. } | Shape::Sphere { radius } => (radius, radius),
    };
    let (lx, ly) = match base.shape {
        Shape::Box { size } => {
            let room = ((size[0] / 2.0 - ux).max(0.0), (size[1] / 2.0 - uy).max(0.0));
            (
                pick_sign(rng) * room.0 * uniform(rng, 0.5, 1.0),
                pick_sign(rng) * room.1 * uniform(rng, 0.5, 1.0),
            )
        }
        Shape::Cylinder { radius, .. } => {
            let room = (radius - ux.hypot(uy)).max(0.0);
            let a = uniform(rng, 0.0, 2.0 * PI);
            let r = room * uniform(rng, 0.5, 1.0);
            (r * a.cos(), r * a.sin())
        }
        _ => (0.0, 0.0),
    };
    let [x, y] = base.pose.to_world(lx, ly);
    SceneObject {
        shape,
        pose: Pose {
            x,
            y,
            yaw: base.pose.yaw,
        },
        stack_on: Some(support),
    }
}

fn pick_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Table-level shapes, then `(support, shape)` pairs to stack.
type Layout = (Vec<Shape>, Vec<(usize, Shape)>);

fn layout(name: &str, rng: &mut ChaCha8Rng) -> Result<Layout> {
    let cylinder = |rng: &mut ChaCha8Rng, r: (f64, f64), h: (f64, f64)| Shape::Cylinder {
        radius: uniform(rng, r.0, r.1),
        height: uniform(rng, h.0, h.1),
    };
    let sphere = |rng: &mut ChaCha8Rng| Shape::Sphere {
        radius: uniform(rng, 0.03, 0.04),
    };
    Ok(match name {
        "scenario1" => (
            (0..5).map(|_| random_box(rng, (0.06, 0.1), (0.04, 0.08))).collect(),
            vec![],
        ),
        "scenario2" => {
            let table = vec![
                random_box(rng, (0.1, 0.12), (0.04, 0.06)),
                random_box(rng, (0.1, 0.12), (0.04, 0.06)),
                random_l_block(rng),
            ];
            let upper = vec![
                (0, random_box(rng, (0.05, 0.06), (0.04, 0.06))),
                (1, random_box(rng, (0.05, 0.06), (0.04, 0.06))),
            ];
            (table, upper)
        }
        "scenario3" => {
            let table = vec![
                cylinder(rng, (0.03, 0.045), (0.06, 0.12)),
                cylinder(rng, (0.03, 0.045), (0.06, 0.12)),
                sphere(rng),
                sphere(rng),
                random_box(rng, (0.06, 0.1), (0.04, 0.08)),
            ];
            (table, vec![])
        }
        "scenario4" => {
            let table = vec![
                random_box(rng, (0.06, 0.08), (0.04, 0.08)),
                random_box(rng, (0.06, 0.08), (0.04, 0.08)),
                random_box(rng, (0.06, 0.08), (0.04, 0.08)),
                cylinder(rng, (0.03, 0.04), (0.06, 0.1)),
                cylinder(rng, (0.03, 0.04), (0.06, 0.1)),
                sphere(rng),
                sphere(rng),
                random_l_block(rng),
                random_l_block(rng),
            ];
            (table, vec![])
        }
        "scenario5" => {
            let table = vec![
                random_box(rng, (0.1, 0.12), (0.04, 0.06)),
                random_box(rng, (0.1, 0.12), (0.04, 0.06)),
                cylinder(rng, (0.055, 0.065), (0.04, 0.06)),
                sphere(rng),
                random_l_block(rng),
            ];
            let upper = vec![
                (0, cylinder(rng, (0.025, 0.03), (0.04, 0.06))),
                (1, random_box(rng, (0.05, 0.06), (0.04, 0.06))),
                (2, random_box(rng, (0.04, 0.045), (0.04, 0.05))),
            ];
            (table, upper)
        }
        other => {
            return Err(Error::Argument(format!(
                "unknown preset {other:?} (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    })
}

/// Deterministic scene for a named preset.
///
/// * `scenario1`: five boxes, none stacked.
/// * `scenario2`: blocks, two of them stacked on larger ones.
/// * `scenario3`: five household-like shapes (cylinders, spheres, a box).
/// * `scenario4`: nine mixed shapes, none stacked.
/// * `scenario5`: mixed shapes with three stacks.
pub fn scenario_presets(name: &str, seed: u64) -> Result<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce9_e5ee_d000_0000);
    loop {
        let (table, upper) = layout(name, &mut rng)?;
        let mut objects: Vec<SceneObject> = Vec::new();
        let mut ok = true;
        for shape in table {
            match place_on_table(&mut rng, &objects, shape) {
                Some(o) => objects.push(o),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        for (support, shape) in upper {
            let o = stack(&mut rng, &objects, support, shape);
            objects.push(o);
        }
        let spec = SceneSpec {
            seed,
            table: TABLE,
            camera_height: default_camera_height(),
            objects,
        };
        if spec.validate().is_ok() {
            return Ok(spec);
        }
    }
}
