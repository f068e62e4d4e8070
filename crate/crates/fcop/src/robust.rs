//! Robust focal estimation over contaminated correspondence sets.
//!
//! Each triplet of correspondences votes a candidate focal length. The
//! candidates agree within the noise bound for inlier triplets and scatter
//! arbitrarily for contaminated ones, so the consensus focal is the point
//! stabbing the most intervals `[f_k − ε, f_k + ε]`. Interval stabbing is a
//! 1-D consensus maximization that is globally optimal and runs in
//! `O(n log n)` via an endpoint sweep.
//!
//! A frame with several objects pools all per-object candidates into one set
//! before stabbing, which enforces a single consistent focal length across
//! objects.
//!
//! [`ransac_focal`] is the hypothesize-and-verify alternative that scores
//! inliers by 3D residual in meters. Its threshold unit depends on the
//! hypothesized focal (a larger focal flattens the back-projected object and
//! admits more outliers), which is exactly why the interval-stabbing route is
//! preferred; the RANSAC variant is kept as a comparison baseline.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{solve_triplet, Correspondence, TripletSolution};
use crate::seeding::stream_rng;

const RANSAC_STREAM: u64 = 0x7266_6f63;

/// Sampling and consensus parameters for robust focal estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustConfig {
    /// Triplet samples drawn per object.
    pub num_samples: usize,
    /// Half-width of each focal interval, in pixels.
    pub noise_bound_px: f64,
    /// Master seed for triplet sampling.
    pub seed: u64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            num_samples: 200,
            noise_bound_px: 5.0,
            seed: 0,
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Interval of radius `eps` around a candidate focal.
    pub fn around(center: f64, eps: f64) -> Self {
        Self {
            lo: center - eps,
            hi: center + eps,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Robust focal estimate with its consensus support and candidate set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocalEstimate {
    /// Estimated focal length in pixels.
    pub f: f64,
    /// Number of candidate intervals containing `f` (interval stabbing) or
    /// inliers of the winning hypothesis (RANSAC).
    pub support: usize,
    /// All successfully solved triplet candidates, in sampling order.
    pub candidates: Vec<TripletSolution>,
    /// Triplet samples rejected as degenerate or invalid.
    pub num_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RobustError {
    #[error("candidate focal list is empty")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("at least {required} correspondences are required, got {actual}")]
    InsufficientCorrespondences { required: usize, actual: usize },
    #[error("all {attempts} sampled triplets were degenerate or invalid")]
    NoValidTriplet { attempts: usize },
    #[error("no object has enough valid correspondences")]
    NoEligibleObject,
}

/// Point stabbing the most intervals `[f_k − eps, f_k + eps]`.
///
/// Returns the midpoint of the deepest overlap segment and its depth. Ties
/// are broken toward the lowest-focal deepest segment. Intervals are treated
/// as closed, so a point sitting exactly on an endpoint counts as covered.
pub fn interval_stab(focals: &[f64], eps: f64) -> Result<(f64, usize), RobustError> {
    if focals.is_empty() {
        return Err(RobustError::EmptyInput);
    }
    if eps <= 0.0 || !eps.is_finite() {
        return Err(RobustError::InvalidConfig(format!(
            "noise bound must be positive, got {eps}"
        )));
    }

    // Endpoint sweep: +1 at each interval start, -1 at each end. Opens sort
    // before closes at equal coordinates so touching intervals overlap.
    let mut events: Vec<(f64, bool)> = Vec::with_capacity(2 * focals.len());
    for &f in focals {
        events.push((f - eps, false));
        events.push((f + eps, true));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut depth = 0usize;
    let mut best_depth = 0usize;
    let mut best_lo = 0.0;
    let mut best_hi = 0.0;
    for (i, &(coord, is_close)) in events.iter().enumerate() {
        if is_close {
            depth -= 1;
        } else {
            depth += 1;
            if depth > best_depth {
                best_depth = depth;
                best_lo = coord;
                // Depth stays at this level until the next event; the matching
                // close guarantees a next event exists.
                best_hi = events[i + 1].0;
            }
        }
    }

    Ok(((best_lo + best_hi) / 2.0, best_depth))
}

/// Focal candidates solved from seeded triplet samples of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectCandidates {
    /// Position of the object within its frame; part of the sampling seed.
    pub object_index: usize,
    pub candidates: Vec<TripletSolution>,
    pub num_rejected: usize,
}

/// Draw `cfg.num_samples` triplets from one object and solve each.
///
/// Sampling is uniform over index triples without replacement within each
/// draw, seeded per `(object_index, draw)`, so the candidate list is
/// identical no matter how the draws are scheduled.
pub fn object_candidates(
    corrs: &[Correspondence],
    cfg: &RobustConfig,
    object_index: usize,
) -> Result<ObjectCandidates, RobustError> {
    validate_config(cfg)?;
    if corrs.len() < 3 {
        return Err(RobustError::InsufficientCorrespondences {
            required: 3,
            actual: corrs.len(),
        });
    }

    let solved: Vec<Option<TripletSolution>> = (0..cfg.num_samples)
        .into_par_iter()
        .map(|draw| {
            let mut rng = stream_rng(cfg.seed, object_index as u64, draw as u64);
            let idx = rand::seq::index::sample(&mut rng, corrs.len(), 3);
            solve_triplet(&corrs[idx.index(0)], &corrs[idx.index(1)], &corrs[idx.index(2)]).ok()
        })
        .collect();

    let num_rejected = solved.iter().filter(|s| s.is_none()).count();
    let candidates: Vec<_> = solved.into_iter().flatten().collect();
    Ok(ObjectCandidates {
        object_index,
        candidates,
        num_rejected,
    })
}

fn validate_config(cfg: &RobustConfig) -> Result<(), RobustError> {
    if cfg.num_samples == 0 {
        return Err(RobustError::InvalidConfig(
            "num_samples must be at least 1".into(),
        ));
    }
    if cfg.noise_bound_px <= 0.0 || !cfg.noise_bound_px.is_finite() {
        return Err(RobustError::InvalidConfig(format!(
            "noise bound must be positive, got {}",
            cfg.noise_bound_px
        )));
    }
    Ok(())
}

fn stab_candidates(
    candidates: Vec<TripletSolution>,
    num_rejected: usize,
    attempts: usize,
    eps: f64,
) -> Result<FocalEstimate, RobustError> {
    if candidates.is_empty() {
        return Err(RobustError::NoValidTriplet { attempts });
    }
    let focals: Vec<f64> = candidates.iter().map(|c| c.f).collect();
    let (f, support) = interval_stab(&focals, eps)?;
    Ok(FocalEstimate {
        f,
        support,
        candidates,
        num_rejected,
    })
}

/// Robust focal estimate from a single object's correspondences.
pub fn estimate_object_focal(
    corrs: &[Correspondence],
    cfg: &RobustConfig,
) -> Result<FocalEstimate, RobustError> {
    let obj = object_candidates(corrs, cfg, 0)?;
    stab_candidates(
        obj.candidates,
        obj.num_rejected,
        cfg.num_samples,
        cfg.noise_bound_px,
    )
}

/// One consistent focal estimate for a frame with multiple objects.
///
/// Candidates from every eligible object are pooled into a single set before
/// stabbing. Objects with fewer than three correspondences are skipped with a
/// warning; the frame fails only when no object is eligible.
pub fn estimate_frame_focal(
    objects: &[Vec<Correspondence>],
    cfg: &RobustConfig,
) -> Result<FocalEstimate, RobustError> {
    validate_config(cfg)?;
    let per_object: Vec<Option<ObjectCandidates>> = objects
        .par_iter()
        .enumerate()
        .map(|(i, corrs)| match object_candidates(corrs, cfg, i) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!("object {i} skipped: {e}");
                None
            }
        })
        .collect();

    if per_object.iter().all(Option::is_none) {
        return Err(RobustError::NoEligibleObject);
    }

    let mut candidates = Vec::new();
    let mut num_rejected = 0;
    let mut attempts = 0;
    for obj in per_object.into_iter().flatten() {
        attempts += cfg.num_samples;
        num_rejected += obj.num_rejected;
        candidates.extend(obj.candidates);
    }
    stab_candidates(candidates, num_rejected, attempts, cfg.noise_bound_px)
}

/// Hypothesize-and-verify focal estimation with a metric inlier threshold.
///
/// Each iteration solves a triplet for `(f, s)`, rigidly aligns the scaled
/// canonical points to the back-projections of the same triplet, and counts
/// correspondences whose 3D residual is below `threshold_m` meters. The focal
/// of the best-scoring hypothesis is returned as-is (no refit), so the
/// dependence of the effective threshold on the hypothesized focal remains
/// observable.
pub fn ransac_focal(
    corrs: &[Correspondence],
    threshold_m: f64,
    iters: usize,
    seed: u64,
) -> Result<FocalEstimate, RobustError> {
    if corrs.len() < 4 {
        return Err(RobustError::InsufficientCorrespondences {
            required: 4,
            actual: corrs.len(),
        });
    }
    if threshold_m <= 0.0 || !threshold_m.is_finite() {
        return Err(RobustError::InvalidConfig(format!(
            "inlier threshold must be positive, got {threshold_m}"
        )));
    }
    if iters == 0 {
        return Err(RobustError::InvalidConfig(
            "iteration count must be at least 1".into(),
        ));
    }

    let hypotheses: Vec<Option<(TripletSolution, usize)>> = (0..iters)
        .into_par_iter()
        .map(|it| {
            let mut rng = stream_rng(seed, RANSAC_STREAM, it as u64);
            let idx = rand::seq::index::sample(&mut rng, corrs.len(), 3);
            let triplet = [&corrs[idx.index(0)], &corrs[idx.index(1)], &corrs[idx.index(2)]];
            let sol = solve_triplet(triplet[0], triplet[1], triplet[2]).ok()?;
            let (rotation, translation) = fixed_scale_alignment(&triplet, &sol)?;
            let support = corrs
                .iter()
                .filter(|c| {
                    let q = c.x.backproject(c.d, sol.f);
                    (q - (sol.s * (rotation * c.p) + translation)).norm() < threshold_m
                })
                .count();
            Some((sol, support))
        })
        .collect();

    let mut candidates = Vec::new();
    let mut num_rejected = 0;
    let mut best: Option<(f64, usize)> = None;
    for hyp in hypotheses {
        match hyp {
            Some((sol, support)) => {
                if best.is_none_or(|(_, s)| support > s) {
                    best = Some((sol.f, support));
                }
                candidates.push(sol);
            }
            None => num_rejected += 1,
        }
    }
    let (f, support) = best.ok_or(RobustError::NoValidTriplet { attempts: iters })?;
    Ok(FocalEstimate {
        f,
        support,
        candidates,
        num_rejected,
    })
}

/// Rigid alignment of the scaled canonical triplet onto its back-projections.
fn fixed_scale_alignment(
    triplet: &[&Correspondence; 3],
    sol: &TripletSolution,
) -> Option<(Matrix3<f64>, Vector3<f64>)> {
    let src: Vec<Vector3<f64>> = triplet.iter().map(|c| sol.s * c.p).collect();
    let dst: Vec<Vector3<f64>> = triplet.iter().map(|c| c.x.backproject(c.d, sol.f)).collect();

    let mu_src = (src[0] + src[1] + src[2]) / 3.0;
    let mu_dst = (dst[0] + dst[1] + dst[2]) / 3.0;
    let mut cov = Matrix3::<f64>::zeros();
    for (p, q) in src.iter().zip(&dst) {
        cov += (q - mu_dst) * (p - mu_src).transpose();
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let mut sign = Vector3::new(1.0, 1.0, 1.0);
    if (u.determinant() * v_t.determinant()) < 0.0 {
        sign[2] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&sign) * v_t;
    let translation = mu_dst - rotation * mu_src;
    Some((rotation, translation))
}
