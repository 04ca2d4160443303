use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn xgrasp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xgrasp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, preset: &str, profile: &str, seed: u64) {
    let seed = seed.to_string();
    let out = xgrasp(&[
        "generate",
        "--preset",
        preset,
        "--profile",
        profile,
        "--seed",
        &seed,
        "--out",
        path(dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn instance_count(dir: &Path) -> usize {
    let doc = json(&dir.join("instances.json"));
    let max = doc["assignments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_i64().unwrap())
        .max();
    max.map_or(0, |m| (m + 1).max(0) as usize)
}

#[test]
fn generate_writes_cloud_and_scene() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario1", "ainstec", 7);
    assert!(tmp.path().join("cloud.ply").is_file());
    let scene = json(&tmp.path().join("scene.json"));
    assert_eq!(scene["seed"], 7);
    assert_eq!(scene["objects"].as_array().unwrap().len(), 5);
}

#[test]
fn generate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    generate(&a, "scenario3", "d455", 11);
    generate(&b, "scenario3", "d455", 11);
    for f in ["cloud.ply", "scene.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn generate_from_spec_and_formats() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario1", "ainstec", 2);
    let spec = tmp.path().join("scene.json");
    for (fmt, name) in [("ply-binary", "cloud.ply"), ("json", "cloud.json")] {
        let dir = tmp.path().join(fmt);
        let out = xgrasp(&["generate", "--spec", path(&spec), "--format", fmt, "--out", path(&dir)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let cloud = xgrasp::io::load_cloud_auto(dir.join(name)).unwrap();
        let reference = xgrasp::io::load_cloud_auto(tmp.path().join("cloud.ply")).unwrap();
        assert_eq!(cloud.len(), reference.len());
        assert_eq!(cloud.gt_instance(), reference.gt_instance());
    }
}

#[test]
fn unknown_profile_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = xgrasp(&[
        "generate",
        "--preset",
        "scenario1",
        "--profile",
        "unknown",
        "--out",
        path(tmp.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown"));
}

#[test]
fn invalid_spec_is_input_error() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("bad.json");
    std::fs::write(
        &spec,
        r#"{"seed": 0, "table": [0.6, 0.45], "objects": [{"shape": {"type": "box", "size": [0.1, 0.1, -1]}, "pose": {"x": 0, "y": 0, "yaw": 0}}]}"#,
    )
    .unwrap();
    let out = xgrasp(&["generate", "--spec", path(&spec), "--out", path(tmp.path())]);
    assert_eq!(code(&out), 3);
}

#[test]
fn detect_finds_every_preset_object() {
    let tmp = TempDir::new().unwrap();
    for seed in [0, 7] {
        let scene = tmp.path().join(format!("s{seed}"));
        generate(&scene, "scenario1", "ainstec", seed);
        let det = tmp.path().join(format!("d{seed}"));
        let out = xgrasp(&["detect", "--cloud", path(&scene.join("cloud.ply")), "--out", path(&det)]);
        assert_eq!(code(&out), 0);
        let objects = json(&scene.join("scene.json"))["objects"].as_array().unwrap().len();
        assert_eq!(instance_count(&det), objects);
        assert!(det.join("scores.json").is_file());
    }
}

#[test]
fn detect_on_table_only_succeeds_with_no_instances() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("empty.json");
    std::fs::write(&spec, r#"{"seed": 3, "table": [0.3, 0.3], "objects": []}"#).unwrap();
    let scene = tmp.path().join("scene");
    assert_eq!(
        code(&xgrasp(&["generate", "--spec", path(&spec), "--out", path(&scene)])),
        0
    );
    let det = tmp.path().join("det");
    let out = xgrasp(&["detect", "--cloud", path(&scene.join("cloud.ply")), "--out", path(&det)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(instance_count(&det), 0);
    assert_eq!(json(&det.join("scores.json"))["instances"].as_array().unwrap().len(), 0);
}

#[test]
fn clusterer_flag_routes_to_distance_baseline() {
    // This seed stacks objects so the baseline merges them.
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario5", "d455", 8);
    let cloud = tmp.path().join("cloud.ply");
    let run = |name: &str, extra: &[&str]| {
        let dir = tmp.path().join(name);
        let mut args = vec!["detect", "--cloud", path(&cloud), "--out", path(&dir)];
        args.extend_from_slice(extra);
        assert_eq!(code(&xgrasp(&args)), 0);
        instance_count(&dir)
    };
    let binary = run("binary", &[]);
    let distance = run("distance", &["--clusterer", "distance"]);
    assert!(distance < binary, "distance {distance}, binary {binary}");

    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"clusterer": "distance"}"#).unwrap();
    assert_eq!(run("from_config", &["--config", path(&cfg)]), distance);
    assert_eq!(
        run("flag_wins", &["--config", path(&cfg), "--clusterer", "binary"]),
        binary
    );
}

#[test]
fn grasp_clears_a_plain_scene() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario1", "ainstec", 4);
    let log = tmp.path().join("episode.jsonl");
    let out = xgrasp(&[
        "grasp",
        "--cloud",
        path(&tmp.path().join("cloud.ply")),
        "--out",
        path(&log),
    ]);
    assert_eq!(code(&out), 0);
    let episode = xgrasp::pipeline::EpisodeLog::load(&log).unwrap();
    assert_eq!(episode.grasps.len(), 5);
    assert_eq!(episode.termination.to_string(), "below-threshold");

    let eval = xgrasp(&[
        "eval",
        "--gt",
        path(&tmp.path().join("cloud.ply")),
        "--episode",
        path(&log),
        "--out",
        path(&tmp.path().join("m.json")),
    ]);
    assert_eq!(code(&eval), 0);
    let m = json(&tmp.path().join("m.json"));
    assert_eq!(m["grasp_rate"], 1.0);
    assert_eq!(m["recognition_rate"], 1.0);
}

#[test]
fn unreachable_threshold_yields_no_grasps() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario1", "ainstec", 0);
    let log = tmp.path().join("episode.jsonl");
    let out = xgrasp(&[
        "grasp",
        "--cloud",
        path(&tmp.path().join("cloud.ply")),
        "--c-theta",
        "1.1",
        "--out",
        path(&log),
    ]);
    assert_eq!(code(&out), 4);
    let episode = xgrasp::pipeline::EpisodeLog::load(&log).unwrap();
    assert!(episode.grasps.is_empty());
}

#[test]
fn config_threshold_is_overridden_by_flag() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario1", "ainstec", 0);
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"c_theta": 1.1}"#).unwrap();
    let cloud = tmp.path().join("cloud.ply");
    let log = tmp.path().join("e.jsonl");
    assert_eq!(
        code(&xgrasp(&[
            "grasp",
            "--cloud",
            path(&cloud),
            "--config",
            path(&cfg),
            "--out",
            path(&log)
        ])),
        4
    );
    assert_eq!(
        code(&xgrasp(&[
            "grasp",
            "--cloud",
            path(&cloud),
            "--config",
            path(&cfg),
            "--c-theta",
            "0.5",
            "--out",
            path(&log)
        ])),
        0
    );
}

#[test]
fn calibration_is_applied_and_required_when_named() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario1", "ainstec", 1);
    let cloud = tmp.path().join("cloud.ply");
    let log = tmp.path().join("e.jsonl");
    let missing = tmp.path().join("missing.json");
    let out = xgrasp(&[
        "grasp",
        "--cloud",
        path(&cloud),
        "--calibration",
        path(&missing),
        "--out",
        path(&log),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let calib = tmp.path().join("calib.json");
    std::fs::write(
        &calib,
        r#"{"rotation": [[1,0,0],[0,1,0],[0,0,1]], "translation": [0.5, -0.25, 1.0]}"#,
    )
    .unwrap();
    assert_eq!(
        code(&xgrasp(&[
            "grasp",
            "--cloud",
            path(&cloud),
            "--calibration",
            path(&calib),
            "--out",
            path(&log)
        ])),
        0
    );
    let episode = xgrasp::pipeline::EpisodeLog::load(&log).unwrap();
    for g in &episode.grasps {
        let d = [0, 1, 2].map(|k| g.center_robot[k] - g.center_camera[k]);
        for (got, want) in d.iter().zip([0.5, -0.25, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"rotation": [[2,0,0],[0,1,0],[0,0,1]], "translation": [0, 0, 0]}"#,
    )
    .unwrap();
    assert_eq!(
        code(&xgrasp(&[
            "grasp",
            "--cloud",
            path(&cloud),
            "--calibration",
            path(&bad),
            "--out",
            path(&log)
        ])),
        3
    );
}

#[test]
fn eval_of_ground_truth_is_perfect() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario4", "ainstec", 5);
    let cloud_path = tmp.path().join("cloud.ply");
    let cloud = xgrasp::io::load_cloud_auto(&cloud_path).unwrap();
    let gts = xgrasp::eval::gt_instances(&cloud).unwrap();
    let unassigned: Vec<usize> = {
        let mut covered = vec![false; cloud.len()];
        gts.iter().flatten().for_each(|&i| covered[i] = true);
        (0..cloud.len()).filter(|&i| !covered[i]).collect()
    };
    let set = xgrasp::cluster::InstanceSet::new(cloud.len(), gts.clone(), unassigned).unwrap();
    std::fs::write(tmp.path().join("inst.json"), set.to_json()).unwrap();
    let scored: Vec<_> = gts
        .iter()
        .enumerate()
        .map(|(id, m)| xgrasp::score::ScoredInstance {
            instance_id: id,
            n_points: m.len(),
            s_f: 1.0,
            h_m: 1.0,
            sc: 1.0,
        })
        .collect();
    std::fs::write(tmp.path().join("scored.json"), xgrasp::score::scored_to_json(&scored)).unwrap();
    let report = tmp.path().join("report.json");
    let out = xgrasp(&[
        "eval",
        "--gt",
        path(&cloud_path),
        "--instances",
        path(&tmp.path().join("inst.json")),
        "--scored",
        path(&tmp.path().join("scored.json")),
        "--out",
        path(&report),
    ]);
    assert_eq!(code(&out), 0);
    let r = json(&report);
    assert_eq!(
        (r["mAP"].as_f64(), r["AP50"].as_f64(), r["AP25"].as_f64()),
        (Some(1.0), Some(1.0), Some(1.0))
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("100.0"));
}

#[test]
fn eval_rejects_malformed_predictions() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario1", "ainstec", 0);
    let cloud = tmp.path().join("cloud.ply");
    let det = tmp.path().join("det");
    assert_eq!(
        code(&xgrasp(&["detect", "--cloud", path(&cloud), "--out", path(&det)])),
        0
    );
    std::fs::write(tmp.path().join("broken.json"), b"{\"assignments\": [0, 1,").unwrap();
    let out = xgrasp(&[
        "eval",
        "--gt",
        path(&cloud),
        "--instances",
        path(&tmp.path().join("broken.json")),
        "--scored",
        path(&det.join("scores.json")),
    ]);
    assert_eq!(code(&out), 3);
    assert!(!out.stderr.is_empty());
}

#[test]
fn compare_clustering_on_stacked_preset() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("cmp.json");
    let out = xgrasp(&[
        "compare-clustering",
        "--preset",
        "scenario5",
        "--profile",
        "d455",
        "--out",
        path(&report),
    ]);
    assert_eq!(code(&out), 0);
    let r = json(&report);
    assert_eq!(r["scenes"].as_array().unwrap().len(), 10);
    assert!(r["mean_map_binary"].as_f64() >= r["mean_map_distance"].as_f64());
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(code(&xgrasp(&["detect"])), 2);
    assert_eq!(code(&xgrasp(&["frobnicate"])), 2);
    assert_eq!(
        code(&xgrasp(&["grasp", "--cloud", "x.ply", "--out", "y", "--alpha", "nope"])),
        2
    );
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), "scenario1", "ainstec", 0);
    let out = xgrasp(&[
        "detect",
        "--cloud",
        path(&tmp.path().join("cloud.ply")),
        "--alpha",
        "1.5",
        "--out",
        path(tmp.path()),
    ]);
    assert_eq!(code(&out), 2);
}
