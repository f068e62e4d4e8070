//! Similarity-pose recovery and pose error metrics.
//!
//! With the focal length known, the pose of an object follows from the
//! least-squares similarity transform between its canonical points and their
//! back-projections (Umeyama's closed form), optionally wrapped in RANSAC for
//! contaminated correspondences.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::stream_rng;

const RANSAC_STREAM: u64 = 0x706f_7365;

/// Similarity transform `q = s·R·p + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPose {
    /// Scale, strictly positive.
    pub scale: f64,
    /// Proper rotation (orthonormal, determinant +1).
    pub rotation: Matrix3<f64>,
    /// Translation in meters.
    pub translation: Vector3<f64>,
}

impl SimilarityPose {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }

    /// Check the rotation invariants `RᵀR = I` and `det R = +1`.
    pub fn rotation_defect(&self) -> f64 {
        let ortho = (self.rotation.transpose() * self.rotation - Matrix3::identity()).norm();
        let det = (self.rotation.determinant() - 1.0).abs();
        ortho.max(det)
    }
}

/// Errors between an estimated and a ground-truth pose/focal pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseErrors {
    /// `|f̂ − f_gt| / f_gt × 100`.
    pub focal_pct: f64,
    /// `|ŝ − s_gt| / s_gt × 100`.
    pub scale_pct: f64,
    /// `‖t̂ − t_gt‖ / ‖t_gt‖ × 100`.
    pub translation_pct: f64,
    /// Geodesic rotation distance in degrees.
    pub rotation_deg: f64,
    /// Angle between estimated and ground-truth translation in degrees.
    pub translation_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoseError {
    #[error("source and destination point counts differ ({src} vs {dst})")]
    LengthMismatch { src: usize, dst: usize },
    #[error("at least {required} point pairs are required, got {actual}")]
    InsufficientPairs { required: usize, actual: usize },
    #[error("source points are degenerate (coincident or collinear)")]
    DegenerateConfiguration,
    #[error("no consensus: best inlier count {best_support} is below 3")]
    NoConsensus { best_support: usize },
}

/// Least-squares similarity transform minimizing `Σ‖dst − (s·R·src + t)‖²`.
///
/// The rotation is recovered from the SVD of the cross-covariance with the
/// determinant-sign correction, so a reflection is never returned.
pub fn umeyama(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<SimilarityPose, PoseError> {
    if src.len() != dst.len() {
        return Err(PoseError::LengthMismatch {
            src: src.len(),
            dst: dst.len(),
        });
    }
    if src.len() < 3 {
        return Err(PoseError::InsufficientPairs {
            required: 3,
            actual: src.len(),
        });
    }

    let n = src.len() as f64;
    let mu_src = src.iter().sum::<Vector3<f64>>() / n;
    let mu_dst = dst.iter().sum::<Vector3<f64>>() / n;

    let mut src_var = 0.0;
    let mut cov = Matrix3::<f64>::zeros();
    for (p, q) in src.iter().zip(dst) {
        let pc = p - mu_src;
        let qc = q - mu_dst;
        src_var += pc.norm_squared();
        cov += qc * pc.transpose();
    }
    src_var /= n;
    cov /= n;

    if src_var <= f64::MIN_POSITIVE {
        return Err(PoseError::DegenerateConfiguration);
    }

    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = svd.singular_values;
    // Collinear sources leave the rotation about the line unconstrained.
    if d[1] <= 1e-12 * d[0] {
        return Err(PoseError::DegenerateConfiguration);
    }

    let mut sign = Vector3::new(1.0, 1.0, 1.0);
    if (u.determinant() * v_t.determinant()) < 0.0 {
        sign[2] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&sign) * v_t;
    let scale = d.dot(&sign) / src_var;
    if scale <= 0.0 {
        return Err(PoseError::DegenerateConfiguration);
    }
    let translation = mu_dst - scale * (rotation * mu_src);

    Ok(SimilarityPose {
        scale,
        rotation,
        translation,
    })
}

/// RANSAC-wrapped [`umeyama`]: hypothesize from 3-pair samples, score by 3D
/// residual, refit on the best inlier set. Returns the pose and the inlier
/// mask of the winning consensus set.
pub fn umeyama_ransac(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
    threshold_m: f64,
    iters: usize,
    seed: u64,
) -> Result<(SimilarityPose, Vec<bool>), PoseError> {
    if src.len() != dst.len() {
        return Err(PoseError::LengthMismatch {
            src: src.len(),
            dst: dst.len(),
        });
    }
    if src.len() < 4 {
        return Err(PoseError::InsufficientPairs {
            required: 4,
            actual: src.len(),
        });
    }

    let mut best_support = 0usize;
    let mut best_mask: Option<Vec<bool>> = None;
    for it in 0..iters {
        let mut rng = stream_rng(seed, RANSAC_STREAM, it as u64);
        let idx = rand::seq::index::sample(&mut rng, src.len(), 3);
        let sample_src: Vec<_> = idx.iter().map(|i| src[i]).collect();
        let sample_dst: Vec<_> = idx.iter().map(|i| dst[i]).collect();
        let Ok(pose) = umeyama(&sample_src, &sample_dst) else {
            continue;
        };
        let mask: Vec<bool> = src
            .iter()
            .zip(dst)
            .map(|(p, q)| (q - pose.apply(p)).norm() < threshold_m)
            .collect();
        let support = mask.iter().filter(|&&m| m).count();
        if support > best_support {
            best_support = support;
            best_mask = Some(mask);
        }
    }

    let mask = best_mask.filter(|_| best_support >= 3).ok_or(PoseError::NoConsensus {
        best_support,
    })?;
    let inlier_src: Vec<_> = src
        .iter()
        .zip(&mask)
        .filter_map(|(p, &m)| m.then_some(*p))
        .collect();
    let inlier_dst: Vec<_> = dst
        .iter()
        .zip(&mask)
        .filter_map(|(q, &m)| m.then_some(*q))
        .collect();
    let pose = umeyama(&inlier_src, &inlier_dst)?;
    Ok((pose, mask))
}

fn clamped_acos_deg(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Focal, scale, translation, rotation and angular-translation errors of an
/// estimate against ground truth.
pub fn pose_errors(
    est: &SimilarityPose,
    gt: &SimilarityPose,
    f_est: f64,
    f_gt: f64,
) -> PoseErrors {
    let focal_pct = (f_est - f_gt).abs() / f_gt * 100.0;
    let scale_pct = (est.scale - gt.scale).abs() / gt.scale * 100.0;
    let translation_pct = (est.translation - gt.translation).norm() / gt.translation.norm() * 100.0;
    let rotation_deg =
        clamped_acos_deg(((est.rotation.transpose() * gt.rotation).trace() - 1.0) / 2.0);
    let norms = est.translation.norm() * gt.translation.norm();
    let translation_angle_deg = if norms > 0.0 {
        clamped_acos_deg(est.translation.dot(&gt.translation) / norms)
    } else {
        0.0
    };
    PoseErrors {
        focal_pct,
        scale_pct,
        translation_pct,
        rotation_deg,
        translation_angle_deg,
    }
}
