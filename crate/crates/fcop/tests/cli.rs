//! End-to-end tests of the `fcop` binary: exit codes, output schemas, and
//! byte-level determinism under fixed seeds.

use std::path::Path;
use std::process::{Command, Output};

use fcop::ingest::render_scene_to_files;
use fcop::synth::{generate_scene, SceneConfig};

fn fcop_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn render_dataset(dir: &Path, frames: usize) -> std::path::PathBuf {
    let scenes: Vec<_> = (0..frames)
        .map(|i| {
            generate_scene(&SceneConfig {
                focal_range: (450.0, 750.0),
                translation_ball_radius: 0.8,
                points_per_object: 400,
                seed: 9_000 + i as u64,
                ..SceneConfig::default()
            })
            .unwrap()
        })
        .collect();
    render_scene_to_files(&scenes, 640, 480, dir, Some("synthetic")).unwrap();
    dir.join("manifest.json")
}

#[test]
fn stability_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for (out, threads) in [(&out_a, "1"), (&out_b, "3")] {
        let result = fcop_cmd(&[
            "stability",
            "--trials",
            "300",
            "--seed",
            "7",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same seed must produce byte-identical CSV across --threads");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("metric,min,q25,median,q75,max"));
    assert!(text.contains("focal_pct,"));
}

#[test]
fn stability_rejects_zero_trials_with_usage_error() {
    let result = fcop_cmd(&["stability", "--trials", "0", "--out", "/dev/null"]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("trials"), "stderr: {stderr}");
}

#[test]
fn noise_sweep_depth_axis_writes_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let result = fcop_cmd(&[
        "noise-sweep",
        "--axis",
        "depth",
        "--levels",
        "0,0.005,0.01",
        "--trials",
        "40",
        "--samples-T",
        "50",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "depth_bound_m,noc_bound,trials,median_focal_pct,q25_focal_pct,q75_focal_pct"
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn noise_sweep_rejects_unknown_axis_and_bad_levels() {
    let unknown_axis = fcop_cmd(&[
        "noise-sweep",
        "--axis",
        "curvature",
        "--levels",
        "0,1",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(unknown_axis.status.code(), Some(2));

    let unsorted = fcop_cmd(&[
        "noise-sweep",
        "--axis",
        "depth",
        "--levels",
        "0.02,0.01",
        "--trials",
        "5",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(unsorted.status.code(), Some(2));
}

#[test]
fn estimate_reports_frame_focal_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = render_dataset(dir.path(), 1);
    let result = fcop_cmd(&[
        "estimate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--frame",
        "000000",
        "--samples-T",
        "100",
        "--seed",
        "5",
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let json: serde_json::Value = serde_json::from_slice(&result.stdout).unwrap();
    assert_eq!(json["frame_id"], "000000");
    assert_eq!(json["config"]["method"], "is");
    let focal = json["focal"].as_f64().unwrap();
    let gt: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    let gt_focal = gt["frames"][0]["gt_focal"].as_f64().unwrap();
    assert!(
        (focal - gt_focal).abs() / gt_focal < 0.01,
        "estimated {focal} vs ground truth {gt_focal}"
    );
    assert!(!json["objects"].as_array().unwrap().is_empty());
    assert!(!json["objects"][0]["candidates"].as_array().unwrap().is_empty());
}

#[test]
fn estimate_supports_the_ransac_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = render_dataset(dir.path(), 1);
    let result = fcop_cmd(&[
        "estimate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--frame",
        "000000",
        "--robust",
        "ransac",
        "--threshold",
        "0.02",
        "--samples-T",
        "100",
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let json: serde_json::Value = serde_json::from_slice(&result.stdout).unwrap();
    assert_eq!(json["config"]["method"], "ransac");
    assert_eq!(json["config"]["threshold_m"], 0.02);
    assert!(json["focal"].as_f64().unwrap() > 0.0);
}

#[test]
fn estimate_fails_cleanly_on_missing_manifest() {
    let result = fcop_cmd(&[
        "estimate",
        "--manifest",
        "/nonexistent/manifest.json",
        "--frame",
        "0",
    ]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn evaluate_writes_reports_and_is_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = render_dataset(dir.path(), 3);
    let out_single = dir.path().join("report_single");
    let out_multi = dir.path().join("report_multi");
    for (out, threads) in [(&out_single, "1"), (&out_multi, "4")] {
        let result = fcop_cmd(&[
            "evaluate",
            "--manifest",
            manifest.to_str().unwrap(),
            "--samples-T",
            "100",
            "--seed",
            "11",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    }
    for suffix in [".json", ".frames.csv", ".scenes.csv"] {
        let single =
            std::fs::read(format!("{}{suffix}", out_single.display())).unwrap();
        let multi = std::fs::read(format!("{}{suffix}", out_multi.display())).unwrap();
        assert!(!single.is_empty());
        assert_eq!(single, multi, "{suffix} differs across --threads");
    }

    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(format!("{}.json", out_single.display())).unwrap(),
    )
    .unwrap();
    let overall = json["report"]["overall_median_focal_error_pct"].as_f64().unwrap();
    assert!(overall < 0.5, "overall median {overall}%");
    assert_eq!(json["report"]["frames"].as_array().unwrap().len(), 3);
}

#[test]
fn evaluate_continues_past_corrupt_frames() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = render_dataset(dir.path(), 2);
    // Corrupt one frame's depth map path.
    let mut manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    manifest["frames"][0]["depth_map"] = "missing.png".into();
    std::fs::write(&manifest_path, serde_json::to_string(&manifest).unwrap()).unwrap();

    let out = dir.path().join("report");
    let result = fcop_cmd(&[
        "evaluate",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--samples-T",
        "60",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(format!("{}.json", out.display())).unwrap(),
    )
    .unwrap();
    assert_eq!(json["report"]["frames"].as_array().unwrap().len(), 1);
    assert_eq!(json["report"]["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn evaluate_empty_manifest_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, r#"{"format_version": 1, "frames": []}"#).unwrap();
    let out = dir.path().join("report");
    let result = fcop_cmd(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(format!("{}.json", out.display())).unwrap(),
    )
    .unwrap();
    assert_eq!(json["report"]["frames"].as_array().unwrap().len(), 0);
}
