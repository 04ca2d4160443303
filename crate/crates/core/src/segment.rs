//! Foreground/background segmentation from per-point class scores.
//!
//! Class indices are zero-based in this API. Column 0 is the background
//! class (the first class of the semantic head); every other column is a
//! foreground class.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Location, ParseErrorKind, Result};

pub const BACKGROUND_CLASS: usize = 0;

const ROW_SUM_TOLERANCE: f64 = 1e-5;
const FILE_ROW_SUM_TOLERANCE: f64 = 1e-3;

/// Row-stochastic N x M class-score matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticScores {
    values: Vec<f64>,
    class_count: usize,
}

impl SemanticScores {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let class_count = rows.first().map(Vec::len).unwrap_or(2);
        let mut values = Vec::with_capacity(rows.len() * class_count);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != class_count {
                return Err(Error::Mismatch(format!(
                    "row {i} has {} classes, expected {class_count}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(values, class_count)
    }

    pub fn from_flat(values: Vec<f64>, class_count: usize) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::Argument(format!("need at least 2 classes, got {class_count}")));
        }
        if !values.len().is_multiple_of(class_count) {
            return Err(Error::Mismatch(format!(
                "{} values do not form rows of {class_count}",
                values.len()
            )));
        }
        for (i, row) in values.chunks(class_count).enumerate() {
            check_row(row, ROW_SUM_TOLERANCE).map_err(|m| Error::Argument(format!("row {i}: {m}")))?;
        }
        Ok(Self { values, class_count })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.class_count
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.class_count..(i + 1) * self.class_count]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.class_count)
    }

    /// Average rows over groups of input points (e.g. voxel cells).
    pub fn pooled(&self, groups: &[Vec<usize>]) -> Result<Self> {
        let m = self.class_count;
        let mut values = Vec::with_capacity(groups.len() * m);
        for g in groups {
            let mut acc = vec![0.0; m];
            for &i in g {
                for (a, v) in acc.iter_mut().zip(self.row(i)) {
                    *a += v;
                }
            }
            let sum: f64 = acc.iter().sum();
            values.extend(acc.iter().map(|a| a / sum));
        }
        Self::from_flat(values, m)
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let values = indices.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Self {
            values,
            class_count: self.class_count,
        }
    }
}

fn check_row(row: &[f64], tol: f64) -> std::result::Result<(), String> {
    if row.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0 + tol) {
        return Err(format!("values must lie in [0, 1], got {row:?}"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(format!("row sums to {sum}"));
    }
    Ok(())
}

/// Per-point `[background, foreground]` scores.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryScores {
    pub pairs: Vec<[f64; 2]>,
}

/// Per-point labels, 0 = background, 1 = foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    labels: Vec<u8>,
}

impl ForegroundMask {
    pub fn from_labels(labels: Vec<u8>) -> Result<Self> {
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Argument("mask labels must be 0 or 1".into()));
        }
        Ok(Self { labels })
    }

    pub fn from_indices(len: usize, foreground: &[usize]) -> Self {
        let mut labels = vec![0; len];
        for &i in foreground {
            labels[i] = 1;
        }
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn is_foreground(&self, i: usize) -> bool {
        self.labels[i] == 1
    }

    pub fn foreground(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == 1).collect()
    }

    pub fn count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Clear every point for which `keep` is false.
    pub fn restrict(&self, keep: &[bool]) -> Self {
        Self {
            labels: self
                .labels
                .iter()
                .zip(keep)
                .map(|(&l, &k)| if k { l } else { 0 })
                .collect(),
        }
    }
}

/// Collapse M-class scores into `[background, max over foreground classes]`.
pub fn binarize_scores(scores: &SemanticScores) -> BinaryScores {
    let pairs = scores
        .rows()
        .map(|row| {
            let fg = row[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            [row[BACKGROUND_CLASS], fg]
        })
        .collect();
    BinaryScores { pairs }
}

/// Argmax over each binary pair. A tie is labelled foreground.
pub fn predict_foreground(binary: &BinaryScores) -> ForegroundMask {
    ForegroundMask {
        labels: binary.pairs.iter().map(|[bg, fg]| u8::from(bg <= fg)).collect(),
    }
}

/// Two-class scores from a table-plane fit, for use when no learned
/// semantic model is available.
///
/// Fits `z = a x + b y + c` by least squares over the lowest quarter of the
/// points by height. Points within `table_margin` of that plane score
/// `[0.9, 0.1]`; all others score `[0.1, 0.9]`.
pub fn heuristic_scores(cloud: &PointCloud, table_margin: f64) -> Result<SemanticScores> {
    if cloud.len() < 3 {
        return Err(Error::Degenerate(format!(
            "a plane needs at least 3 points, got {}",
            cloud.len()
        )));
    }
    if table_margin.is_nan() || table_margin < 0.0 {
        return Err(Error::Argument(format!(
            "table margin must be >= 0, got {table_margin}"
        )));
    }
    let plane = fit_table_plane(cloud)?;
    let mut values = Vec::with_capacity(cloud.len() * 2);
    for p in cloud.positions() {
        if plane.distance(*p) <= table_margin {
            values.extend([0.9, 0.1]);
        } else {
            values.extend([0.1, 0.9]);
        }
    }
    SemanticScores::from_flat(values, 2)
}

/// Plane `z = a x + b y + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Plane {
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        (p[2] - (self.a * p[0] + self.b * p[1] + self.c)).abs() / (1.0 + self.a * self.a + self.b * self.b).sqrt()
    }
}

pub fn fit_table_plane(cloud: &PointCloud) -> Result<Plane> {
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by(|&i, &j| cloud.position(i)[2].total_cmp(&cloud.position(j)[2]).then(i.cmp(&j)));
    let take = cloud.len().div_ceil(4).max(3);
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for &i in &order[..take] {
        let p = cloud.position(i);
        let row = Vector3::new(p[0], p[1], 1.0);
        ata += row * row.transpose();
        atb += row * p[2];
    }
    let sol = ata
        .lu()
        .solve(&atb)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Degenerate("lowest points do not span a plane".into()))?;
    Ok(Plane {
        a: sol[0],
        b: sol[1],
        c: sol[2],
    })
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ScoresDoc {
    scores: Vec<Vec<f64>>,
}

/// Parse a score matrix from CSV (one row per point) or `{"scores": [...]}`.
///
/// Rows within 1e-3 of summing to one are renormalized; anything further
/// off is rejected.
pub fn parse_scores(bytes: &[u8], n_expected: usize) -> Result<SemanticScores> {
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace()).copied();
    let rows: Vec<(usize, Vec<f64>)> = if first == Some(b'{') {
        let doc: ScoresDoc = serde_json::from_slice(bytes).map_err(Error::json)?;
        doc.scores.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect()
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(bytes);
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::parse(ParseErrorKind::Syntax, Location::Line(line), e.to_string())
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        Error::parse(
                            ParseErrorKind::Syntax,
                            Location::Line(line),
                            format!("cannot parse '{f}'"),
                        )
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push((line, row));
        }
        rows
    };

    if rows.len() != n_expected {
        return Err(Error::Mismatch(format!(
            "score file has {} rows, expected {n_expected}",
            rows.len()
        )));
    }
    let class_count = rows.first().map(|r| r.1.len()).unwrap_or(2);
    let mut values = Vec::with_capacity(rows.len() * class_count);
    for (line, mut row) in rows {
        let at = Location::Line(line);
        if row.len() != class_count {
            return Err(Error::parse(
                ParseErrorKind::LengthMismatch,
                at,
                format!("row has {} classes, expected {class_count}", row.len()),
            ));
        }
        check_row(&row, FILE_ROW_SUM_TOLERANCE).map_err(|m| Error::parse(ParseErrorKind::Invalid, at, m))?;
        let sum: f64 = row.iter().sum();
        for v in &mut row {
            *v = (*v / sum).min(1.0);
        }
        values.extend(row);
    }
    SemanticScores::from_flat(values, class_count).map_err(|e| match e {
        Error::Argument(m) => Error::parse(ParseErrorKind::Invalid, Location::Line(1), m),
        other => other,
    })
}

pub fn load_scores(path: impl AsRef<Path>, n_expected: usize) -> Result<SemanticScores> {
    parse_scores(&std::fs::read(path)?, n_expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(rows: &[&[f64]]) -> SemanticScores {
        SemanticScores::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn binarize_examples() {
        let b = binarize_scores(&scores(&[&[0.7, 0.2, 0.1], &[0.1, 0.3, 0.6]]));
        assert_eq!(b.pairs, vec![[0.7, 0.2], [0.1, 0.6]]);
    }

    #[test]
    fn predict_examples_and_tie() {
        let mask = predict_foreground(&BinaryScores {
            pairs: vec![[0.7, 0.2], [0.1, 0.6], [0.5, 0.5]],
        });
        assert_eq!(mask.labels(), &[0, 1, 1]);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(
            SemanticScores::from_flat(vec![1.0], 1),
            Err(Error::Argument(_))
        ));
        assert!(SemanticScores::new(vec![vec![0.5, 0.6]]).is_err());
    }

    #[test]
    fn heuristic_flat_plane_is_background() {
        let pts: Vec<[f64; 3]> = (0..100)
            .map(|i| [(i % 10) as f64 * 0.01, (i / 10) as f64 * 0.01, 0.0])
            .collect();
        let s = heuristic_scores(&PointCloud::new(pts).unwrap(), 0.01).unwrap();
        assert!(s.rows().all(|r| r == [0.9, 0.1]));
    }

    #[test]
    fn heuristic_marks_raised_point() {
        let mut pts: Vec<[f64; 3]> = (0..100)
            .map(|i| [(i % 10) as f64 * 0.01, (i / 10) as f64 * 0.01, 0.0])
            .collect();
        pts.push([0.05, 0.05, 0.1]);
        let s = heuristic_scores(&PointCloud::new(pts).unwrap(), 0.01).unwrap();
        assert_eq!(s.row(100), &[0.1, 0.9]);
        assert_eq!(s.row(0), &[0.9, 0.1]);
    }

    #[test]
    fn heuristic_needs_three_points() {
        let cloud = PointCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(heuristic_scores(&cloud, 0.01), Err(Error::Degenerate(_))));
    }

    #[test]
    fn csv_scores() {
        let s = parse_scores(b"0.7,0.3\n0.2,0.8\n", 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), &[0.2, 0.8]);
        assert!(matches!(
            parse_scores(b"0.7,0.3\n0.2,0.8\n", 3),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn json_scores() {
        let s = parse_scores(br#"{"scores": [[0.1, 0.2, 0.7]]}"#, 1).unwrap();
        assert_eq!(s.class_count(), 3);
    }

    #[test]
    fn near_stochastic_rows_are_renormalized() {
        let s = parse_scores(b"0.5005,0.5\n", 1).unwrap();
        let sum: f64 = s.row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert!((s.row(0)[0] - 0.5005 / 1.0005).abs() < 1e-15);
        assert!(parse_scores(b"0.6,0.5\n", 1).is_err());
    }

    #[test]
    fn ragged_csv_is_a_length_mismatch() {
        let err = parse_scores(b"0.5,0.5\n0.2,0.3,0.5\n", 2).unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                kind: ParseErrorKind::LengthMismatch,
                location: Location::Line(2),
                ..
            }
        ));
    }

    #[test]
    fn pooled_rows_stay_stochastic() {
        let s = scores(&[&[0.2, 0.8], &[0.6, 0.4], &[1.0, 0.0]]);
        let p = s.pooled(&[vec![0, 1], vec![2]]).unwrap();
        assert!((p.row(0)[0] - 0.4).abs() < 1e-12 && (p.row(0)[1] - 0.6).abs() < 1e-12);
        assert_eq!(p.row(1), &[1.0, 0.0]);
    }
}
