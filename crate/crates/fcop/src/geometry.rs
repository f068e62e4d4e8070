//! Core types and the closed-form focal/scale triplet solver.
//!
//! A correspondence ties a centered image point `x` with metric depth `d` to a
//! point `p` of the object's canonical (normalized object coordinate) model.
//! For two correspondences on the same rigid object, the distance between the
//! back-projected camera-frame points must equal the scaled distance between
//! the canonical points — a relation that is invariant to the object's
//! rotation and translation and linear in the unknowns `s²` and `1/f²`:
//!
//! ```text
//! s²·‖pᵢ − pⱼ‖²  −  ‖dᵢxᵢ − dⱼxⱼ‖²·(1/f²)  =  (dᵢ − dⱼ)²
//! ```
//!
//! Three correspondences give three such pairwise equations, and the
//! least-squares solution of the resulting 3×2 system yields the focal length
//! and object scale in closed form.

use nalgebra::{Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Image point in centered pixel coordinates (raw pixel minus image center).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
}

impl ImagePoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.u, self.v)
    }

    /// Back-project to the camera frame at the given depth: `d·(u/f, v/f, 1)`.
    pub fn backproject(self, depth: f64, focal: f64) -> Vector3<f64> {
        Vector3::new(depth * self.u / focal, depth * self.v / focal, depth)
    }
}

/// One (centered image point, depth, canonical point) triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    /// Centered image point in pixels.
    pub x: ImagePoint,
    /// Depth in meters, strictly positive.
    pub d: f64,
    /// Canonical object coordinates (unitless).
    pub p: Vector3<f64>,
}

impl Correspondence {
    pub fn new(x: ImagePoint, d: f64, p: Vector3<f64>) -> Self {
        Self { x, d, p }
    }

    /// Depth-weighted image point `d·x` in px·m.
    fn weighted_pixel(&self) -> Vector2<f64> {
        self.x.to_vector() * self.d
    }
}

/// Pinhole intrinsics with square pixels and the principal point at the image
/// center, i.e. `K = diag(f, f, 1)` acting on centered coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal length in pixels.
    pub f: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl CameraIntrinsics {
    pub fn new(f: f64, image_width: u32, image_height: u32) -> Self {
        Self {
            f,
            image_width,
            image_height,
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(self.f, self.f, 1.0))
    }

    /// Centered coordinates of a raw pixel index.
    pub fn center_pixel(&self, px: f64, py: f64) -> ImagePoint {
        ImagePoint::new(
            px - f64::from(self.image_width) / 2.0,
            py - f64::from(self.image_height) / 2.0,
        )
    }

    /// Raw pixel index of a centered image point.
    pub fn uncenter_pixel(&self, x: ImagePoint) -> (f64, f64) {
        (
            x.u + f64::from(self.image_width) / 2.0,
            x.v + f64::from(self.image_height) / 2.0,
        )
    }
}

/// Back-project an image point to the camera frame: `d·K⁻¹·(u, v, 1)`.
pub fn backproject(x: ImagePoint, depth: f64, intrinsics: &CameraIntrinsics) -> Vector3<f64> {
    x.backproject(depth, intrinsics.f)
}

/// Candidate focal length and object scale from one minimal solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletSolution {
    /// Focal length in pixels.
    pub f: f64,
    /// Object scale (unitless).
    pub s: f64,
    /// 2-norm of the row residuals of the 3×2 least-squares system.
    pub residual: f64,
}

/// Diagnostics for a triplet of correspondences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyReport {
    /// Whether every pairwise depth gap exceeds the tolerance.
    pub has_distinct_depths: bool,
    /// Minimum pairwise `‖dᵢxᵢ − dⱼxⱼ‖` in px·m.
    pub min_pair_separation: f64,
    /// Condition number of the 3×2 constraint matrix.
    pub condition_number: f64,
}

impl DegeneracyReport {
    /// Verdict used by [`solve_triplet`]: the triplet is solvable when depths
    /// are distinct, no weighted image-point pair coincides, and the system is
    /// not numerically hopeless.
    pub fn is_solvable(&self, tol: &DegeneracyTolerances) -> bool {
        self.has_distinct_depths
            && self.min_pair_separation > tol.pair_separation
            && self.condition_number <= tol.max_condition
    }
}

/// Thresholds for rejecting degenerate triplets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyTolerances {
    /// Minimum pairwise depth gap, relative to the largest depth in the triplet.
    pub depth_gap: f64,
    /// Minimum pairwise `‖dᵢxᵢ − dⱼxⱼ‖` in px·m.
    pub pair_separation: f64,
    /// Maximum accepted condition number of the constraint matrix.
    pub max_condition: f64,
}

impl Default for DegeneracyTolerances {
    fn default() -> Self {
        Self {
            depth_gap: 1e-9,
            pair_separation: 1e-9,
            max_condition: 1e12,
        }
    }
}

/// Why a triplet could not be solved.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DegenerateError {
    #[error("triplet depths are not distinct (min gap {min_gap:.3e} m)")]
    EqualDepths { min_gap: f64 },
    #[error("depth-weighted image points coincide (min separation {separation:.3e} px*m)")]
    CollinearPair { separation: f64 },
    #[error("constraint system is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("solved squared scale is non-positive ({0:.3e})")]
    NonPositiveScale(f64),
    #[error("solved inverse squared focal is non-positive ({0:.3e})")]
    NonPositiveFocal(f64),
    #[error("least-squares solve failed: {0}")]
    SolveFailed(String),
}

/// Coefficients `(a1, a2, b)` of the pairwise constraint
/// `a1·s² + a2·(1/f²) = b` for two correspondences.
///
/// `a1 = ‖pᵢ − pⱼ‖²`, `a2 = −‖dᵢxᵢ − dⱼxⱼ‖²`, `b = (dᵢ − dⱼ)²`.
pub fn pair_constraint_row(ci: &Correspondence, cj: &Correspondence) -> (f64, f64, f64) {
    let a1 = (ci.p - cj.p).norm_squared();
    let a2 = -(ci.weighted_pixel() - cj.weighted_pixel()).norm_squared();
    let b = (ci.d - cj.d).powi(2);
    (a1, a2, b)
}

fn constraint_system(
    ci: &Correspondence,
    cj: &Correspondence,
    ck: &Correspondence,
) -> (Matrix3x2<f64>, Vector3<f64>) {
    let rows = [
        pair_constraint_row(ci, cj),
        pair_constraint_row(cj, ck),
        pair_constraint_row(ci, ck),
    ];
    let a = Matrix3x2::new(
        rows[0].0, rows[0].1, rows[1].0, rows[1].1, rows[2].0, rows[2].1,
    );
    let b = Vector3::new(rows[0].2, rows[1].2, rows[2].2);
    (a, b)
}

/// Diagnose a triplet without solving it.
pub fn check_degeneracy(
    ci: &Correspondence,
    cj: &Correspondence,
    ck: &Correspondence,
    tol: &DegeneracyTolerances,
) -> DegeneracyReport {
    let (min_gap, max_depth) = depth_stats(ci, cj, ck);
    let min_pair_separation = [(ci, cj), (cj, ck), (ci, ck)]
        .iter()
        .map(|(a, b)| (a.weighted_pixel() - b.weighted_pixel()).norm())
        .fold(f64::INFINITY, f64::min);

    let (a, _) = constraint_system(ci, cj, ck);
    let sv = a.singular_values();
    let condition_number = if sv[1] > 0.0 {
        sv[0] / sv[1]
    } else {
        f64::INFINITY
    };

    DegeneracyReport {
        has_distinct_depths: min_gap > tol.depth_gap * max_depth,
        min_pair_separation,
        condition_number,
    }
}

fn depth_stats(ci: &Correspondence, cj: &Correspondence, ck: &Correspondence) -> (f64, f64) {
    let gaps = [
        (ci.d - cj.d).abs(),
        (cj.d - ck.d).abs(),
        (ci.d - ck.d).abs(),
    ];
    let min_gap = gaps.iter().fold(f64::INFINITY, |m, &g| m.min(g));
    let max_depth = ci.d.max(cj.d).max(ck.d);
    (min_gap, max_depth)
}

/// Solve one triplet for `(f, s)` with default degeneracy tolerances.
pub fn solve_triplet(
    ci: &Correspondence,
    cj: &Correspondence,
    ck: &Correspondence,
) -> Result<TripletSolution, DegenerateError> {
    solve_triplet_with(ci, cj, ck, &DegeneracyTolerances::default())
}

/// Solve one triplet for `(f, s)`.
///
/// The three pairwise constraints form a 3×2 linear system in `[s², 1/f²]`,
/// solved in the least-squares sense by SVD after column equilibration (the
/// two columns mix unit scales that differ by many orders of magnitude). On
/// noise-free consistent data the residual vanishes up to floating point.
pub fn solve_triplet_with(
    ci: &Correspondence,
    cj: &Correspondence,
    ck: &Correspondence,
    tol: &DegeneracyTolerances,
) -> Result<TripletSolution, DegenerateError> {
    let report = check_degeneracy(ci, cj, ck, tol);
    if !report.has_distinct_depths {
        let (min_gap, _) = depth_stats(ci, cj, ck);
        return Err(DegenerateError::EqualDepths { min_gap });
    }
    if report.min_pair_separation <= tol.pair_separation {
        return Err(DegenerateError::CollinearPair {
            separation: report.min_pair_separation,
        });
    }
    if report.condition_number > tol.max_condition {
        return Err(DegenerateError::IllConditioned {
            condition: report.condition_number,
        });
    }

    let (a, b) = constraint_system(ci, cj, ck);

    let c0 = a.column(0).norm();
    let c1 = a.column(1).norm();
    let mut scaled = a;
    scaled.column_mut(0).scale_mut(1.0 / c0);
    scaled.column_mut(1).scale_mut(1.0 / c1);

    let svd = scaled.svd(true, true);
    let z_scaled = svd
        .solve(&b, 0.0)
        .map_err(|e| DegenerateError::SolveFailed(e.to_string()))?;
    let s_sq = z_scaled[0] / c0;
    let inv_f_sq = z_scaled[1] / c1;

    if s_sq <= 0.0 {
        return Err(DegenerateError::NonPositiveScale(s_sq));
    }
    if inv_f_sq <= 0.0 {
        return Err(DegenerateError::NonPositiveFocal(inv_f_sq));
    }

    let residual = (a * Vector2::new(s_sq, inv_f_sq) - b).norm();
    Ok(TripletSolution {
        f: 1.0 / inv_f_sq.sqrt(),
        s: s_sq.sqrt(),
        residual,
    })
}
