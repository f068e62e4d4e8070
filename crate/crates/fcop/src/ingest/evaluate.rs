//! Dataset-level focal estimation and reporting.

use rayon::prelude::*;
use serde::Serialize;
use std::io::{self, Write};

use super::{DatasetManifest, ObjectRecord};
use crate::robust::{estimate_frame_focal, RobustConfig};
use crate::seeding::stream_rng;
use crate::synth::quantile_sorted;

/// Default cap on correspondences fed to the estimator per object.
pub const DEFAULT_MAX_POINTS_PER_OBJECT: usize = 1000;

const SUBSAMPLE_STREAM: u64 = 0x7375_6273;

/// Uniform random subsample without replacement, deterministic per seed.
///
/// Objects at or below `max_points` are returned unchanged. Selected points
/// keep their original (row-major) order so the mask stays aligned with the
/// correspondences.
pub fn subsample_object(obj: &ObjectRecord, max_points: usize, seed: u64) -> ObjectRecord {
    assert!(max_points >= 3, "max_points must be at least 3");
    let n = obj.correspondences.len();
    if n <= max_points {
        return obj.clone();
    }
    let mut rng = stream_rng(seed, SUBSAMPLE_STREAM, 0);
    let mut selected = rand::seq::index::sample(&mut rng, n, max_points).into_vec();
    selected.sort_unstable();

    let all_indices: Vec<u32> = obj.mask.indices().collect();
    let indices: Vec<u32> = selected.iter().map(|&i| all_indices[i]).collect();
    let correspondences = selected.iter().map(|&i| obj.correspondences[i]).collect();
    ObjectRecord {
        category: obj.category.clone(),
        mask: super::RunLengthMask::from_sorted_indices(&indices),
        correspondences,
    }
}

/// Estimation result for one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub frame_id: String,
    pub scene: String,
    pub focal: f64,
    pub support: usize,
    pub num_objects_used: usize,
    pub gt_focal: Option<f64>,
    /// `|f̂ − f_gt| / f_gt × 100`, when ground truth is available.
    pub focal_error_pct: Option<f64>,
}

/// A frame that could not be evaluated; the run continues without it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameFailure {
    pub frame_id: String,
    pub error: String,
}

/// Median focal error per scene label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneSummary {
    pub scene: String,
    pub frames: usize,
    pub median_focal_error_pct: f64,
}

/// Full evaluation output: per-frame rows in manifest order, per-scene and
/// overall medians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub frames: Vec<FrameReport>,
    pub failures: Vec<FrameFailure>,
    pub scenes: Vec<SceneSummary>,
    pub overall_median_focal_error_pct: Option<f64>,
}

impl DatasetReport {
    pub fn write_frames_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "frame_id,scene,focal,support,num_objects_used,gt_focal,focal_error_pct")?;
        for f in &self.frames {
            writeln!(
                w,
                "{},{},{:e},{},{},{},{}",
                f.frame_id,
                f.scene,
                f.focal,
                f.support,
                f.num_objects_used,
                f.gt_focal.map_or(String::new(), |v| format!("{v:e}")),
                f.focal_error_pct.map_or(String::new(), |v| format!("{v:e}")),
            )?;
        }
        Ok(())
    }

    pub fn write_scenes_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "scene,frames,median_focal_error_pct")?;
        for s in &self.scenes {
            writeln!(w, "{},{},{:e}", s.scene, s.frames, s.median_focal_error_pct)?;
        }
        if let Some(overall) = self.overall_median_focal_error_pct {
            writeln!(w, "overall,{},{overall:e}", self.frames.len())?;
        }
        Ok(())
    }
}

/// Estimate a focal length for every frame of the manifest and aggregate the
/// errors per scene and overall.
///
/// Frames evaluate independently (and in parallel); a frame that fails to
/// load or estimate is logged and recorded under `failures` without aborting
/// the run. An empty manifest yields an empty report.
pub fn evaluate_dataset(
    manifest: &DatasetManifest,
    cfg: &RobustConfig,
    max_points: usize,
) -> DatasetReport {
    let outcomes: Vec<Result<FrameReport, FrameFailure>> = (0..manifest.frames.len())
        .into_par_iter()
        .map(|index| evaluate_frame(manifest, index, cfg, max_points))
        .collect();

    let mut frames = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(report) => frames.push(report),
            Err(failure) => {
                log::warn!("frame {} failed: {}", failure.frame_id, failure.error);
                failures.push(failure);
            }
        }
    }

    let mut by_scene: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    let mut all_errors = Vec::new();
    for f in &frames {
        if let Some(e) = f.focal_error_pct {
            by_scene.entry(f.scene.clone()).or_default().push(e);
            all_errors.push(e);
        }
    }
    let scenes = by_scene
        .into_iter()
        .map(|(scene, mut errors)| {
            errors.sort_by(f64::total_cmp);
            SceneSummary {
                scene,
                frames: errors.len(),
                median_focal_error_pct: quantile_sorted(&errors, 0.5),
            }
        })
        .collect();
    all_errors.sort_by(f64::total_cmp);
    let overall = (!all_errors.is_empty()).then(|| quantile_sorted(&all_errors, 0.5));

    DatasetReport {
        frames,
        failures,
        scenes,
        overall_median_focal_error_pct: overall,
    }
}

fn evaluate_frame(
    manifest: &DatasetManifest,
    index: usize,
    cfg: &RobustConfig,
    max_points: usize,
) -> Result<FrameReport, FrameFailure> {
    let frame_id = manifest.frames[index].frame_id.clone();
    let fail = |error: String| FrameFailure {
        frame_id: frame_id.clone(),
        error,
    };

    let frame = manifest.load_frame(index).map_err(|e| fail(e.to_string()))?;
    let objects: Vec<Vec<_>> = frame
        .objects
        .iter()
        .enumerate()
        .map(|(i, obj)| {
            let seed = crate::seeding::derive_seed(cfg.seed, SUBSAMPLE_STREAM, i as u64);
            subsample_object(obj, max_points, seed).correspondences
        })
        .collect();
    let estimate = estimate_frame_focal(&objects, cfg).map_err(|e| fail(e.to_string()))?;

    let focal_error_pct = frame
        .gt_focal
        .map(|gt| (estimate.f - gt).abs() / gt * 100.0);
    Ok(FrameReport {
        frame_id,
        scene: manifest.frames[index]
            .scene
            .clone()
            .unwrap_or_else(|| "all".into()),
        focal: estimate.f,
        support: estimate.support,
        num_objects_used: frame.objects.len(),
        gt_focal: frame.gt_focal,
        focal_error_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::render_scene_to_files;
    use crate::synth::{generate_scene, SceneConfig};

    fn rendered_manifest(dir: &std::path::Path, frames: usize) -> DatasetManifest {
        let scenes: Vec<_> = (0..frames)
            .map(|i| {
                generate_scene(&SceneConfig {
                    focal_range: (450.0, 750.0),
                    translation_ball_radius: 0.8,
                    points_per_object: 400,
                    seed: 1000 + i as u64,
                    ..SceneConfig::default()
                })
                .unwrap()
            })
            .collect();
        render_scene_to_files(&scenes, 640, 480, dir, Some("synthetic")).unwrap()
    }

    #[test]
    fn subsample_keeps_small_objects() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = rendered_manifest(dir.path(), 1);
        let frame = manifest.load_frame(0).unwrap();
        let obj = &frame.objects[0];
        let same = subsample_object(obj, obj.correspondences.len() + 10, 0);
        assert_eq!(&same, obj);
    }

    #[test]
    fn subsample_is_deterministic_and_consistent() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = rendered_manifest(dir.path(), 1);
        let frame = manifest.load_frame(0).unwrap();
        let obj = &frame.objects[0];
        let a = subsample_object(obj, 50, 9);
        let b = subsample_object(obj, 50, 9);
        assert_eq!(a, b);
        assert_eq!(a.correspondences.len(), 50);
        assert_eq!(a.mask.num_pixels(), 50);
        // Every selected correspondence came from the original set.
        for c in &a.correspondences {
            assert!(obj.correspondences.contains(c));
        }
    }

    #[test]
    fn evaluate_empty_manifest_is_empty_success() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = DatasetManifest::new(dir.path());
        let report = evaluate_dataset(&manifest, &RobustConfig::default(), 100);
        assert!(report.frames.is_empty());
        assert!(report.failures.is_empty());
        assert!(report.overall_median_focal_error_pct.is_none());
    }

    #[test]
    fn evaluate_recovers_rendered_focals() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = rendered_manifest(dir.path(), 5);
        let cfg = RobustConfig {
            num_samples: 100,
            ..RobustConfig::default()
        };
        let report = evaluate_dataset(&manifest, &cfg, 500);
        assert_eq!(report.frames.len(), 5);
        assert!(report.failures.is_empty());
        let overall = report.overall_median_focal_error_pct.unwrap();
        assert!(overall < 0.5, "median focal error {overall}%");
        assert_eq!(report.scenes.len(), 1);
        assert_eq!(report.scenes[0].scene, "synthetic");
    }

    #[test]
    fn corrupt_frame_does_not_abort_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = rendered_manifest(dir.path(), 3);
        manifest.frames[1].depth_map = "missing.png".into();
        let cfg = RobustConfig {
            num_samples: 50,
            ..RobustConfig::default()
        };
        let report = evaluate_dataset(&manifest, &cfg, 300);
        assert_eq!(report.frames.len(), 2);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].frame_id, "000001");
    }
}
