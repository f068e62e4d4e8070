//! Synthetic scene generation and simulation experiments.
//!
//! Scenes are generated by the exact forward model: canonical points drawn
//! uniformly from the `[−1, 1]³` cube, rotated by a uniform random rotation,
//! scaled, translated inside a ball in front of the camera, and projected
//! with a focal length sampled from the configured range. Depth and canonical
//! coordinates can then be perturbed by bounded noise, and a fraction of the
//! points replaced by outliers displaced in the camera frame.
//!
//! The experiments on top of the generator measure the numerical stability of
//! the triplet solver on noise-free data and the growth of the focal error as
//! a function of the injected noise bounds.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use rayon::prelude::*;
use serde::Serialize;
use std::io::{self, Write};
use thiserror::Error;

use crate::geometry::{solve_triplet, Correspondence, ImagePoint};
use crate::pose::{pose_errors, umeyama, PoseError, SimilarityPose};
use crate::robust::{estimate_object_focal, RobustConfig, RobustError};
use crate::seeding::{derive_seed, stream_rng};

const SCENE_STREAM: u64 = 0x7363_656e;
const STABILITY_STREAM: u64 = 0x7374_6162;
const SWEEP_STREAM: u64 = 0x7377_6570;

/// Bounds of the injected measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NoiseConfig {
    /// Depth noise bound in meters; each depth is perturbed uniformly within
    /// `±depth_bound_m`.
    pub depth_bound_m: f64,
    /// Canonical-coordinate noise bound (unitless); each point is displaced
    /// by a uniformly oriented vector with magnitude uniform in
    /// `[0, noc_bound]`.
    pub noc_bound: f64,
}

/// Parameters of the synthetic scene generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SceneConfig {
    /// Focal length range in pixels.
    pub focal_range: (f64, f64),
    /// Object scale range.
    pub scale_range: (f64, f64),
    /// Radius of the ball in which object centers are placed, in meters.
    pub translation_ball_radius: f64,
    /// Distance of the camera from the ball center along the optical axis.
    pub camera_offset_z: f64,
    /// Number of objects in the scene.
    pub num_objects: usize,
    /// Correspondences generated per object.
    pub points_per_object: usize,
    pub noise: NoiseConfig,
    /// Fraction of each object's points replaced by outliers, in `[0, 1)`.
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            focal_range: (300.0, 1500.0),
            scale_range: (0.2, 1.0),
            translation_ball_radius: 2.0,
            camera_offset_z: 4.0,
            num_objects: 1,
            points_per_object: 100,
            noise: NoiseConfig::default(),
            outlier_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let ranges = [
            ("focal_range", self.focal_range, 0.0),
            ("scale_range", self.scale_range, 0.0),
        ];
        for (name, (lo, hi), min) in ranges {
            if !(lo > min && hi >= lo) {
                return Err(SynthError::InvalidConfig(format!(
                    "{name} must satisfy {min} < lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        if self.translation_ball_radius < 0.0 || !self.translation_ball_radius.is_finite() {
            return Err(SynthError::InvalidConfig(
                "translation ball radius must be finite and non-negative".into(),
            ));
        }
        if self.num_objects == 0 {
            return Err(SynthError::InvalidConfig("num_objects must be at least 1".into()));
        }
        if self.points_per_object < 3 {
            return Err(SynthError::InvalidConfig(
                "points_per_object must be at least 3".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(SynthError::InvalidConfig(format!(
                "outlier_fraction must lie in [0, 1), got {}",
                self.outlier_fraction
            )));
        }
        if self.noise.depth_bound_m < 0.0 || self.noise.noc_bound < 0.0 {
            return Err(SynthError::InvalidConfig("noise bounds must be non-negative".into()));
        }
        Ok(())
    }
}

/// A generated scene with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    /// Ground-truth focal length shared by all objects, in pixels.
    pub focal: f64,
    /// Ground-truth pose of each object.
    pub poses: Vec<SimilarityPose>,
    /// Observed (noisy, possibly contaminated) correspondences per object.
    pub objects: Vec<Vec<Correspondence>>,
    /// The same correspondences before noise injection. Outlier displacement
    /// is already applied here, so noise bounds can be checked point-wise.
    pub clean_objects: Vec<Vec<Correspondence>>,
    /// `true` for inliers, `false` for outlier-displaced points.
    pub inlier_masks: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error(transparent)]
    Pose(#[from] PoseError),
}

fn uniform_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if q.norm() > 1e-6 {
            return UnitQuaternion::new_normalize(q).to_rotation_matrix().into_inner();
        }
    }
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

fn noc_displacement(rng: &mut ChaCha8Rng, bound: f64) -> Vector3<f64> {
    if bound == 0.0 {
        return Vector3::zeros();
    }
    let dir: [f64; 3] = UnitSphere.sample(rng);
    Vector3::from(dir) * rng.random_range(0.0..=bound)
}

/// Generate a scene from the exact forward model plus configured noise.
pub fn generate_scene(cfg: &SceneConfig) -> Result<SyntheticScene, SynthError> {
    cfg.validate()?;

    let mut scene_rng = stream_rng(cfg.seed, SCENE_STREAM, 0);
    let focal = scene_rng.random_range(cfg.focal_range.0..=cfg.focal_range.1);

    let mut poses = Vec::with_capacity(cfg.num_objects);
    let mut objects = Vec::with_capacity(cfg.num_objects);
    let mut clean_objects = Vec::with_capacity(cfg.num_objects);
    let mut inlier_masks = Vec::with_capacity(cfg.num_objects);

    for obj in 0..cfg.num_objects {
        let mut rng = stream_rng(cfg.seed, SCENE_STREAM, 1 + obj as u64);
        let rotation = uniform_rotation(&mut rng);
        let scale = rng.random_range(cfg.scale_range.0..=cfg.scale_range.1);
        let translation = uniform_in_ball(&mut rng, cfg.translation_ball_radius)
            + Vector3::new(0.0, 0.0, cfg.camera_offset_z);
        let pose = SimilarityPose {
            scale,
            rotation,
            translation,
        };

        let n = cfg.points_per_object;
        let num_outliers = (cfg.outlier_fraction * n as f64).floor() as usize;
        let mut is_outlier = vec![false; n];
        for i in rand::seq::index::sample(&mut rng, n, num_outliers).iter() {
            is_outlier[i] = true;
        }
        // Outlier displacements live in a ball matching the object's
        // camera-frame diameter (canonical cube diagonal times scale).
        let outlier_radius = 2.0 * 3.0f64.sqrt() * scale;

        let mut observed = Vec::with_capacity(n);
        let mut clean = Vec::with_capacity(n);
        for &outlier in &is_outlier {
            let mut attempts = 0;
            loop {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(SynthError::InvalidConfig(
                        "cannot sample a positive-depth point; check camera offset and ranges"
                            .into(),
                    ));
                }
                let p = Vector3::new(
                    rng.random_range(-1.0..=1.0),
                    rng.random_range(-1.0..=1.0),
                    rng.random_range(-1.0..=1.0),
                );
                let mut y = pose.apply(&p);
                if outlier {
                    y += uniform_in_ball(&mut rng, outlier_radius);
                }
                let depth = y.z;
                if depth <= 1e-9 {
                    continue;
                }
                let x = ImagePoint::new(focal * y.x / depth, focal * y.y / depth);

                let depth_eps = if cfg.noise.depth_bound_m > 0.0 {
                    rng.random_range(-cfg.noise.depth_bound_m..=cfg.noise.depth_bound_m)
                } else {
                    0.0
                };
                let noisy_depth = depth + depth_eps;
                if noisy_depth <= 1e-9 {
                    continue;
                }
                let noisy_p = p + noc_displacement(&mut rng, cfg.noise.noc_bound);

                clean.push(Correspondence::new(x, depth, p));
                observed.push(Correspondence::new(x, noisy_depth, noisy_p));
                break;
            }
        }

        poses.push(pose);
        objects.push(observed);
        clean_objects.push(clean);
        inlier_masks.push(is_outlier.iter().map(|&o| !o).collect());
    }

    Ok(SyntheticScene {
        focal,
        poses,
        objects,
        clean_objects,
        inlier_masks,
    })
}

/// Number of bins in the log10 error histograms.
pub const LOG10_HIST_BINS: usize = 40;
/// Lower edge of the log10 error histograms.
pub const LOG10_HIST_MIN: f64 = -16.0;
/// Upper edge of the log10 error histograms.
pub const LOG10_HIST_MAX: f64 = 4.0;

/// Quantiles and a log10 histogram of one error metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    /// Counts over [`LOG10_HIST_BINS`] equal bins of `log10(error)` spanning
    /// `[LOG10_HIST_MIN, LOG10_HIST_MAX]`; out-of-range values clamp to the
    /// edge bins.
    pub log10_hist: Vec<u64>,
}

impl MetricSummary {
    fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let mut hist = vec![0u64; LOG10_HIST_BINS];
        let width = (LOG10_HIST_MAX - LOG10_HIST_MIN) / LOG10_HIST_BINS as f64;
        for &v in &samples {
            let log = if v > 0.0 { v.log10() } else { LOG10_HIST_MIN };
            let bin = ((log - LOG10_HIST_MIN) / width)
                .floor()
                .clamp(0.0, (LOG10_HIST_BINS - 1) as f64) as usize;
            hist[bin] += 1;
        }
        Self {
            min: samples[0],
            q25: quantile_sorted(&samples, 0.25),
            median: quantile_sorted(&samples, 0.5),
            q75: quantile_sorted(&samples, 0.75),
            max: *samples.last().unwrap(),
            log10_hist: hist,
        }
    }
}

/// Linear-interpolation quantile of an ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Error distributions of the stability experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorDistribution {
    pub trials: usize,
    pub focal_pct: MetricSummary,
    pub scale_pct: MetricSummary,
    pub translation_pct: MetricSummary,
    pub rotation_deg: MetricSummary,
}

impl ErrorDistribution {
    /// CSV dump: a quantile table followed by the log10 histograms.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "metric,min,q25,median,q75,max")?;
        for (name, m) in self.metrics() {
            writeln!(
                w,
                "{name},{:e},{:e},{:e},{:e},{:e}",
                m.min, m.q25, m.median, m.q75, m.max
            )?;
        }
        writeln!(w, "metric,bin_log10_lo,bin_log10_hi,count")?;
        let width = (LOG10_HIST_MAX - LOG10_HIST_MIN) / LOG10_HIST_BINS as f64;
        for (name, m) in self.metrics() {
            for (i, count) in m.log10_hist.iter().enumerate() {
                let lo = LOG10_HIST_MIN + i as f64 * width;
                writeln!(w, "{name},{lo},{},{count}", lo + width)?;
            }
        }
        Ok(())
    }

    fn metrics(&self) -> [(&'static str, &MetricSummary); 4] {
        [
            ("focal_pct", &self.focal_pct),
            ("scale_pct", &self.scale_pct),
            ("translation_pct", &self.translation_pct),
            ("rotation_deg", &self.rotation_deg),
        ]
    }
}

/// Solve one random valid triplet per noise-free scene and record the focal
/// and Umeyama pose errors over many trials.
pub fn run_stability_experiment(
    trials: usize,
    seed: u64,
) -> Result<ErrorDistribution, SynthError> {
    if trials == 0 {
        return Err(SynthError::InvalidConfig("trials must be at least 1".into()));
    }
    let samples: Vec<[f64; 4]> = (0..trials)
        .into_par_iter()
        .map(|trial| stability_trial(seed, trial))
        .collect::<Result<_, _>>()?;

    let column = |k: usize| samples.iter().map(|s| s[k]).collect::<Vec<_>>();
    Ok(ErrorDistribution {
        trials,
        focal_pct: MetricSummary::from_samples(column(0)),
        scale_pct: MetricSummary::from_samples(column(1)),
        translation_pct: MetricSummary::from_samples(column(2)),
        rotation_deg: MetricSummary::from_samples(column(3)),
    })
}

fn stability_trial(seed: u64, trial: usize) -> Result<[f64; 4], SynthError> {
    let cfg = SceneConfig {
        points_per_object: 12,
        seed: derive_seed(seed, STABILITY_STREAM, trial as u64),
        ..SceneConfig::default()
    };
    let scene = generate_scene(&cfg)?;
    let corrs = &scene.objects[0];

    let mut rng = stream_rng(seed, STABILITY_STREAM ^ 1, trial as u64);
    for _ in 0..100 {
        let idx = rand::seq::index::sample(&mut rng, corrs.len(), 3);
        let Ok(sol) = solve_triplet(&corrs[idx.index(0)], &corrs[idx.index(1)], &corrs[idx.index(2)])
        else {
            continue;
        };
        let src: Vec<Vector3<f64>> = corrs.iter().map(|c| c.p).collect();
        let dst: Vec<Vector3<f64>> = corrs.iter().map(|c| c.x.backproject(c.d, sol.f)).collect();
        let est = umeyama(&src, &dst)?;
        let errors = pose_errors(&est, &scene.poses[0], sol.f, scene.focal);
        return Ok([
            errors.focal_pct,
            errors.scale_pct,
            errors.translation_pct,
            errors.rotation_deg,
        ]);
    }
    Err(SynthError::InvalidConfig(
        "no valid triplet found in 100 attempts".into(),
    ))
}

/// Which noise bound a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoiseAxis {
    Depth,
    Nocs,
    Both,
}

impl std::str::FromStr for NoiseAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "depth" => Ok(Self::Depth),
            "nocs" => Ok(Self::Nocs),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown noise axis `{other}` (expected depth, nocs or both)")),
        }
    }
}

/// One sweep cell: the noise bounds and the focal-error quartiles over its trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub depth_bound_m: f64,
    pub noc_bound: f64,
    pub trials: usize,
    pub median_focal_pct: f64,
    pub q25_focal_pct: f64,
    pub q75_focal_pct: f64,
}

/// Result table of a noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: NoiseAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "depth_bound_m,noc_bound,trials,median_focal_pct,q25_focal_pct,q75_focal_pct"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:e},{:e},{:e}",
                r.depth_bound_m, r.noc_bound, r.trials, r.median_focal_pct, r.q25_focal_pct,
                r.q75_focal_pct
            )?;
        }
        Ok(())
    }
}

/// Median focal error of the robust per-object estimator at each noise level.
///
/// `Depth` and `Nocs` vary one bound with the other at zero; `Both` runs the
/// full `levels × levels` grid.
pub fn run_noise_sweep(
    axis: NoiseAxis,
    levels: &[f64],
    trials_per_level: usize,
    seed: u64,
    robust: &RobustConfig,
) -> Result<SweepTable, SynthError> {
    if levels.is_empty() {
        return Err(SynthError::InvalidConfig("levels must be non-empty".into()));
    }
    if levels.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(SynthError::InvalidConfig("levels must be finite and non-negative".into()));
    }
    if levels.windows(2).any(|w| w[0] > w[1]) {
        return Err(SynthError::InvalidConfig("levels must be sorted ascending".into()));
    }
    if trials_per_level == 0 {
        return Err(SynthError::InvalidConfig("trials_per_level must be at least 1".into()));
    }

    let cells: Vec<(f64, f64)> = match axis {
        NoiseAxis::Depth => levels.iter().map(|&l| (l, 0.0)).collect(),
        NoiseAxis::Nocs => levels.iter().map(|&l| (0.0, l)).collect(),
        NoiseAxis::Both => levels
            .iter()
            .flat_map(|&d| levels.iter().map(move |&p| (d, p)))
            .collect(),
    };

    let rows = cells
        .into_iter()
        .enumerate()
        .map(|(cell, (depth_bound_m, noc_bound))| {
            let cell_seed = derive_seed(seed, SWEEP_STREAM, cell as u64);
            let mut errors: Vec<f64> = (0..trials_per_level)
                .into_par_iter()
                .map(|trial| {
                    sweep_trial(cell_seed, trial, NoiseConfig { depth_bound_m, noc_bound }, robust)
                })
                .collect::<Result<_, SynthError>>()?;
            errors.sort_by(f64::total_cmp);
            Ok(SweepRow {
                depth_bound_m,
                noc_bound,
                trials: trials_per_level,
                median_focal_pct: quantile_sorted(&errors, 0.5),
                q25_focal_pct: quantile_sorted(&errors, 0.25),
                q75_focal_pct: quantile_sorted(&errors, 0.75),
            })
        })
        .collect::<Result<Vec<_>, SynthError>>()?;

    Ok(SweepTable { axis, rows })
}

fn sweep_trial(
    cell_seed: u64,
    trial: usize,
    noise: NoiseConfig,
    robust: &RobustConfig,
) -> Result<f64, SynthError> {
    let cfg = SceneConfig {
        noise,
        seed: derive_seed(cell_seed, 0, trial as u64),
        ..SceneConfig::default()
    };
    let scene = generate_scene(&cfg)?;
    let estimate = estimate_object_focal(
        &scene.objects[0],
        &RobustConfig {
            seed: derive_seed(cell_seed, 1, trial as u64),
            ..*robust
        },
    )?;
    Ok((estimate.f - scene.focal).abs() / scene.focal * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noise_free_scene_satisfies_forward_model() {
        let cfg = SceneConfig {
            num_objects: 2,
            points_per_object: 50,
            seed: 11,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg).unwrap();
        for (obj, pose) in scene.objects.iter().zip(&scene.poses) {
            for c in obj {
                let backprojected = c.x.backproject(c.d, scene.focal);
                let modeled = pose.apply(&c.p);
                assert!((backprojected - modeled).norm() < 1e-10);
            }
        }
        assert_eq!(scene.objects, scene.clean_objects);
    }

    #[test]
    fn outlier_bookkeeping_is_exact() {
        let cfg = SceneConfig {
            points_per_object: 100,
            outlier_fraction: 0.3,
            seed: 12,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg).unwrap();
        let outliers = scene.inlier_masks[0].iter().filter(|&&m| !m).count();
        assert_eq!(outliers, 30);
        // Outliers really violate the forward model.
        for (c, &inlier) in scene.objects[0].iter().zip(&scene.inlier_masks[0]) {
            let residual =
                (c.x.backproject(c.d, scene.focal) - scene.poses[0].apply(&c.p)).norm();
            if inlier {
                assert!(residual < 1e-10);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SceneConfig {
            num_objects: 3,
            points_per_object: 40,
            noise: NoiseConfig {
                depth_bound_m: 0.01,
                noc_bound: 0.005,
            },
            outlier_fraction: 0.2,
            seed: 13,
            ..SceneConfig::default()
        };
        assert_eq!(generate_scene(&cfg).unwrap(), generate_scene(&cfg).unwrap());
    }

    #[test]
    fn noise_respects_configured_bounds() {
        let noise = NoiseConfig {
            depth_bound_m: 0.02,
            noc_bound: 0.01,
        };
        let cfg = SceneConfig {
            points_per_object: 200,
            noise,
            seed: 14,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg).unwrap();
        for (noisy, clean) in scene.objects[0].iter().zip(&scene.clean_objects[0]) {
            assert!((noisy.d - clean.d).abs() <= noise.depth_bound_m);
            assert!((noisy.p - clean.p).norm() <= noise.noc_bound);
            assert_eq!(noisy.x, clean.x);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_range = SceneConfig {
            focal_range: (900.0, 300.0),
            ..SceneConfig::default()
        };
        assert!(matches!(
            generate_scene(&bad_range),
            Err(SynthError::InvalidConfig(_))
        ));
        let bad_outliers = SceneConfig {
            outlier_fraction: 1.0,
            ..SceneConfig::default()
        };
        assert!(matches!(
            generate_scene(&bad_outliers),
            Err(SynthError::InvalidConfig(_))
        ));
    }

    #[test]
    fn stability_single_trial_has_flat_quantiles() {
        let dist = run_stability_experiment(1, 5).unwrap();
        assert_eq!(dist.trials, 1);
        assert_eq!(dist.focal_pct.min, dist.focal_pct.max);
        assert_eq!(dist.focal_pct.median, dist.focal_pct.q75);
    }

    #[test]
    fn stability_is_reproducible() {
        let a = run_stability_experiment(50, 6).unwrap();
        let b = run_stability_experiment(50, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stability_errors_are_tiny_on_noise_free_data() {
        let dist = run_stability_experiment(500, 7).unwrap();
        assert!(
            dist.focal_pct.median <= 1e-6,
            "median focal error {}%",
            dist.focal_pct.median
        );
        assert!(dist.scale_pct.median <= 1e-6);
        assert!(dist.rotation_deg.median <= 1e-6);
    }

    #[test]
    fn sweep_zero_level_matches_stability() {
        let robust = RobustConfig {
            num_samples: 50,
            ..RobustConfig::default()
        };
        let table = run_noise_sweep(NoiseAxis::Depth, &[0.0], 50, 8, &robust).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].median_focal_pct <= 1e-6);
    }

    #[test]
    fn sweep_grid_covers_all_cells() {
        let robust = RobustConfig {
            num_samples: 10,
            ..RobustConfig::default()
        };
        let levels = [0.0, 0.005, 0.01];
        let table = run_noise_sweep(NoiseAxis::Both, &levels, 5, 9, &robust).unwrap();
        assert_eq!(table.rows.len(), levels.len() * levels.len());
    }

    #[test]
    fn sweep_error_grows_with_noise() {
        let robust = RobustConfig {
            num_samples: 60,
            ..RobustConfig::default()
        };
        let levels = [0.0, 0.01, 0.02];
        let table = run_noise_sweep(NoiseAxis::Depth, &levels, 60, 10, &robust).unwrap();
        for pair in table.rows.windows(2) {
            assert!(
                pair[1].median_focal_pct >= pair[0].median_focal_pct * 0.95,
                "medians not monotone: {} then {}",
                pair[0].median_focal_pct,
                pair[1].median_focal_pct
            );
        }
    }

    #[test]
    fn bounded_noise_gives_bounded_shrinking_error() {
        // Halving both noise bounds must not grow the worst-case focal error
        // (checked on the robust estimate over many trials, with sampling
        // slack).
        let robust = RobustConfig {
            num_samples: 50,
            ..RobustConfig::default()
        };
        let max_error_at = |bound: f64| -> f64 {
            (0..1000)
                .into_par_iter()
                .map(|trial| {
                    let scene = generate_scene(&SceneConfig {
                        noise: NoiseConfig {
                            depth_bound_m: bound,
                            noc_bound: bound,
                        },
                        seed: derive_seed(15, trial, 0),
                        ..SceneConfig::default()
                    })
                    .unwrap();
                    let est = estimate_object_focal(
                        &scene.objects[0],
                        &RobustConfig {
                            seed: derive_seed(16, trial, 0),
                            ..robust
                        },
                    )
                    .unwrap();
                    (est.f - scene.focal).abs() / scene.focal
                })
                .reduce(|| 0.0, f64::max)
        };

        let bounds = [0.02, 0.01, 0.005, 0.0025];
        let maxima: Vec<f64> = bounds.iter().map(|&b| max_error_at(b)).collect();
        for (wide, narrow) in maxima.iter().zip(&maxima[1..]) {
            assert!(
                *narrow <= wide * 1.05,
                "halving the noise bound grew the max error: {maxima:?}"
            );
        }
        assert!(maxima[0] < 0.5, "max relative error {} is not bounded sanely", maxima[0]);
    }

    #[test]
    fn sweep_rejects_unsorted_levels() {
        let robust = RobustConfig::default();
        assert!(matches!(
            run_noise_sweep(NoiseAxis::Depth, &[0.02, 0.01], 5, 0, &robust),
            Err(SynthError::InvalidConfig(_))
        ));
    }

    #[test]
    fn quantiles_interpolate() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(quantile_sorted(&sorted, 0.5), 2.5);
        assert_relative_eq!(quantile_sorted(&sorted, 0.0), 1.0);
        assert_relative_eq!(quantile_sorted(&sorted, 1.0), 4.0);
    }
}
