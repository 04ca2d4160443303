use proptest::collection::vec;
use proptest::prelude::*;

use xgrasp::cluster::{cluster_distance_baseline, compute_density, geo_cluster, GeoClusterParams, InstanceSet};
use xgrasp::eval::{average_precision, ScoredPrediction, MAP_THRESHOLDS};
use xgrasp::index::SpatialIndex;
use xgrasp::io::{decode_cloud, encode_cloud, CloudFormat};
use xgrasp::score::{score_instance, ScoreParams, REJECTED};
use xgrasp::segment::{binarize_scores, predict_foreground, ForegroundMask, SemanticScores};
use xgrasp::voxel::voxel_downsample_with_map;
use xgrasp::PointCloud;

fn coord() -> impl Strategy<Value = f64> {
    // f32-representable so PLY round trips are exact
    (-2000i32..2000).prop_map(|v| (v as f64 * 0.0005) as f32 as f64)
}

fn points(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    vec([coord(), coord(), coord()], 1..max)
}

fn labelled_cloud() -> impl Strategy<Value = PointCloud> {
    points(60).prop_flat_map(|pts| {
        let n = pts.len();
        (
            Just(pts),
            proptest::option::of(vec([0u8..=255, 0u8..=255, 0u8..=255], n)),
            proptest::option::of(vec(-1i32..5, n)),
            proptest::option::of(vec(0i32..3, n)),
        )
            .prop_map(|(pts, colors, inst, sem)| {
                let mut c = PointCloud::new(pts).unwrap();
                if let Some(colors) = colors {
                    let colors = colors.iter().map(|rgb| rgb.map(|v| v as f64 / 255.0)).collect();
                    c = c.with_colors(colors).unwrap();
                }
                if let Some(l) = inst {
                    c = c.with_gt_instance(l).unwrap();
                }
                if let Some(l) = sem {
                    c = c.with_gt_semantic(l).unwrap();
                }
                c
            })
    })
}

/// Tight clusters so that neighborhoods are non-trivial at centimeter radii.
fn clustered(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    vec(((0i32..6), (-40i32..40), (-40i32..40), (-20i32..20)), 2..max).prop_map(|raw| {
        raw.into_iter()
            .map(|(c, dx, dy, dz)| {
                let base = c as f64 * 0.08;
                [base + dx as f64 * 0.0005, dy as f64 * 0.0005, dz as f64 * 0.0005]
            })
            .collect()
    })
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

fn as_partition(set: &InstanceSet) -> Vec<Vec<usize>> {
    let mut v = set.instances().to_vec();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cloud_formats_round_trip(cloud in labelled_cloud()) {
        for format in [CloudFormat::PlyAscii, CloudFormat::PlyBinaryLe, CloudFormat::Json] {
            let bytes = encode_cloud(&cloud, format);
            let back = decode_cloud(&bytes, format).unwrap();
            prop_assert_eq!(back.positions(), cloud.positions());
            prop_assert_eq!(back.gt_instance(), cloud.gt_instance());
            prop_assert_eq!(back.gt_semantic(), cloud.gt_semantic());
            prop_assert_eq!(back.colors().is_some(), cloud.colors().is_some());
            prop_assert_eq!(encode_cloud(&back, format), bytes);
        }
    }

    #[test]
    fn instance_assignments_round_trip(labels in vec(-1i32..6, 0..80)) {
        // compact the labels so every id in 0..k is used
        let mut seen: Vec<i32> = labels.iter().copied().filter(|&l| l >= 0).collect();
        seen.sort();
        seen.dedup();
        let compact: Vec<i32> = labels
            .iter()
            .map(|&l| if l < 0 { -1 } else { seen.binary_search(&l).unwrap() as i32 })
            .collect();
        let set = InstanceSet::from_assignments(&compact).unwrap();
        let back = InstanceSet::parse_json(&set.to_json()).unwrap();
        prop_assert_eq!(&back, &set);
        prop_assert_eq!(back.assignments(), compact);
    }

    #[test]
    fn neighbors_match_brute_force_and_are_symmetric(pts in clustered(150), r in 0.001f64..0.03) {
        let index = SpatialIndex::build(&pts, r).unwrap();
        let all = index.all_radius_neighbors(r).unwrap();
        for (i, neigh) in &all {
            let want: Vec<usize> = (0..pts.len())
                .filter(|&j| j != *i && dist2(pts[*i], pts[j]) <= r * r)
                .collect();
            prop_assert_eq!(neigh, &want);
            for &j in neigh {
                prop_assert!(all[j].1.binary_search(i).is_ok());
            }
        }
    }

    #[test]
    fn binarize_matches_row_maximum(raw in vec(vec(0.001f64..1.0, 3), 1..50)) {
        let rows: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|v| v / s).collect()
            })
            .collect();
        let scores = SemanticScores::new(rows.clone()).unwrap();
        let binary = binarize_scores(&scores);
        let mask = predict_foreground(&binary);
        for (i, row) in rows.iter().enumerate() {
            let fg = row[1].max(row[2]);
            prop_assert_eq!(binary.pairs[i], [row[0], fg]);
            prop_assert_eq!(mask.is_foreground(i), fg >= row[0]);
        }
    }

    #[test]
    fn density_grows_with_radius(pts in clustered(120), r in 0.001f64..0.02, grow in 1.0f64..3.0) {
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let mask = ForegroundMask::from_labels(vec![1; pts.len()]).unwrap();
        let small = compute_density(&cloud, &mask, r).unwrap();
        let large = compute_density(&cloud, &mask, r * grow).unwrap();
        for (a, b) in small.density.iter().zip(&large.density) {
            prop_assert!(a <= b);
        }
        for (k, &i) in small.ids.iter().enumerate() {
            let brute = (0..pts.len()).filter(|&j| j != i && dist2(pts[i], pts[j]) <= r * r).count();
            prop_assert_eq!(small.density[k], brute);
        }
    }

    #[test]
    fn geo_cluster_partitions_foreground(
        pts in clustered(200),
        keep in vec(any::<bool>(), 200),
        d_theta in 0usize..5,
    ) {
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let labels: Vec<u8> = (0..pts.len()).map(|i| u8::from(keep[i] || i == 0)).collect();
        let mask = ForegroundMask::from_labels(labels).unwrap();
        let params = GeoClusterParams { d_theta, ..Default::default() };
        let set = geo_cluster(&cloud, &mask, &params).unwrap();

        let mut covered: Vec<usize> = set.instances().iter().flatten().copied().collect();
        covered.extend_from_slice(set.unassigned());
        covered.sort();
        prop_assert_eq!(covered, mask.foreground());
        let high_set = {
            let field = compute_density(&cloud, &mask, params.r_density).unwrap();
            let (high, _) = xgrasp::cluster::split_by_density(&field, d_theta);
            xgrasp::cluster::group_high_density(&cloud, &high, params.r_group).unwrap()
        };
        for w in high_set.instances().windows(2) {
            prop_assert!(w[0].len() > w[1].len() || (w[0].len() == w[1].len() && w[0][0] < w[1][0]));
        }
        // voting only adds points to the grouped instances
        prop_assert_eq!(set.len(), high_set.len());
        for (grown, seed) in set.instances().iter().zip(high_set.instances()) {
            prop_assert!(seed.iter().all(|i| grown.binary_search(i).is_ok()));
        }

        // relabelling the input points permutes but does not change the result
        let n = pts.len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let shuffled = PointCloud::new(perm.iter().map(|&i| pts[i]).collect()).unwrap();
        let shuffled_mask = ForegroundMask::from_labels(perm.iter().map(|&i| mask.labels()[i]).collect()).unwrap();
        let other = geo_cluster(&shuffled, &shuffled_mask, &params).unwrap();
        let mapped: Vec<Vec<usize>> = other
            .instances()
            .iter()
            .map(|m| {
                let mut v: Vec<usize> = m.iter().map(|&k| perm[k]).collect();
                v.sort();
                v
            })
            .collect();
        let mut mapped_sorted = mapped;
        mapped_sorted.sort();
        prop_assert_eq!(mapped_sorted, as_partition(&set));
    }

    #[test]
    fn baseline_components_are_at_least_min_pts(pts in clustered(200), min_pts in 1usize..30) {
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let mask = ForegroundMask::from_labels(vec![1; pts.len()]).unwrap();
        let set = cluster_distance_baseline(&cloud, &mask, 0.01, min_pts).unwrap();
        prop_assert!(set.instances().iter().all(|m| m.len() >= min_pts));
        let total = set.instances().iter().map(Vec::len).sum::<usize>() + set.unassigned().len();
        prop_assert_eq!(total, pts.len());
    }

    #[test]
    fn voxel_children_partition_the_input(pts in points(200), voxel in 0.0005f64..0.05) {
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let d = voxel_downsample_with_map(&cloud, voxel).unwrap();
        let mut all: Vec<usize> = d.children().into_iter().flatten().collect();
        all.sort();
        prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
        prop_assert!(d.cloud.len() <= pts.len());
    }

    #[test]
    fn score_is_gated_or_in_unit_interval(
        n in 0usize..200,
        n_theta in 1usize..150,
        alpha in 0.0f64..=1.0,
        s_f in 0.0f64..=1.0,
        h_m in 0.0f64..=1.0,
    ) {
        let p = ScoreParams::new(alpha, n_theta, 0.5).unwrap();
        let sc = score_instance(n, s_f, h_m, &p);
        if n < n_theta {
            prop_assert_eq!(sc, REJECTED);
        } else {
            prop_assert!((0.0..=1.0).contains(&sc));
            prop_assert!(sc >= s_f.min(h_m) - 1e-12 && sc <= s_f.max(h_m) + 1e-12);
        }
    }
}

fn ap_case() -> impl Strategy<Value = (Vec<ScoredPrediction>, Vec<Vec<usize>>)> {
    (vec(0usize..6, 40), vec((0.0f64..1.0, vec(0usize..40, 1..20)), 0..10)).prop_map(|(owner, raw)| {
        let gts: Vec<Vec<usize>> = (0..5)
            .map(|g| (0..40).filter(|&i| owner[i] == g).collect::<Vec<_>>())
            .filter(|g| !g.is_empty())
            .collect();
        let preds = raw
            .into_iter()
            .map(|(score, members)| ScoredPrediction { score, members })
            .collect();
        (preds, gts)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ap_is_a_probability_and_ignores_input_order((preds, gts) in ap_case(), rot in 0usize..10) {
        for &t in MAP_THRESHOLDS.iter().chain(&[0.25]) {
            let ap = average_precision(&preds, &gts, t);
            prop_assert!((0.0..=1.0).contains(&ap));
            let mut rotated = preds.clone();
            if !rotated.is_empty() {
                let k = rot % rotated.len();
                rotated.rotate_left(k);
            }
            prop_assert_eq!(average_precision(&rotated, &gts, t), ap);
        }
    }

    #[test]
    fn ap_does_not_rise_with_threshold((preds, gts) in ap_case()) {
        let mut prev = average_precision(&preds, &gts, 0.0);
        for t in [0.1, 0.25, 0.5, 0.6, 0.75, 0.9, 1.0] {
            let ap = average_precision(&preds, &gts, t);
            prop_assert!(ap <= prev + 1e-12, "AP rose from {} to {} at {}", prev, ap, t);
            prev = ap;
        }
    }

    #[test]
    fn trailing_false_positive_leaves_ap_unchanged((preds, gts) in ap_case()) {
        let mut extended = preds.clone();
        // scored below everything and disjoint from every gt
        extended.push(ScoredPrediction { score: -1.0, members: vec![1000, 1001] });
        for t in [0.25, 0.5, 0.75] {
            prop_assert_eq!(average_precision(&extended, &gts, t), average_precision(&preds, &gts, t));
        }
    }
}
