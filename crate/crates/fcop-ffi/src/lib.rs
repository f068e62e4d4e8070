//! C ABI for the focal-length estimation library.
//!
//! Plain-old-data inputs cross the boundary by value or as caller-owned
//! arrays; estimation results are returned as opaque handles with accessor
//! functions and an explicit `fcop_focal_estimate_free`. Every fallible call
//! returns an [`FcopStatus`] code; out-parameters are written only on
//! `FCOP_STATUS_OK`.
//!
//! The matching header `include/fcop.h` is generated by cbindgen at build
//! time.

use std::ffi::{c_char, CStr};
use std::slice;

use fcop::geometry::{solve_triplet, Correspondence, DegenerateError, ImagePoint};
use fcop::pose::{umeyama, PoseError};
use fcop::robust::{
    estimate_frame_focal, estimate_object_focal, interval_stab, ransac_focal, FocalEstimate,
    RobustConfig, RobustError,
};

/// Result code of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcopStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or otherwise invalid.
    InvalidArgument = 2,
    /// The correspondences are degenerate (equal depths, collinear points,
    /// or a numerically hopeless system).
    Degenerate = 3,
    /// Fewer data points than the operation requires.
    InsufficientData = 4,
    /// Every sampled triplet was rejected.
    NoValidTriplet = 5,
    /// Consensus search ended without a winning hypothesis.
    NoConsensus = 6,
}

/// One (centered image point, depth, canonical point) correspondence.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FcopCorrespondence {
    /// Centered image x-coordinate in pixels.
    pub u: f64,
    /// Centered image y-coordinate in pixels.
    pub v: f64,
    /// Depth in meters, strictly positive.
    pub depth: f64,
    /// Canonical object coordinates.
    pub p: [f64; 3],
}

impl From<&FcopCorrespondence> for Correspondence {
    fn from(c: &FcopCorrespondence) -> Self {
        Correspondence::new(
            ImagePoint::new(c.u, c.v),
            c.depth,
            nalgebra::Vector3::new(c.p[0], c.p[1], c.p[2]),
        )
    }
}

/// Sampling and consensus parameters for the robust estimators.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FcopRobustConfig {
    /// Triplet samples drawn per object.
    pub num_samples: usize,
    /// Half-width of each focal interval, in pixels.
    pub noise_bound_px: f64,
    /// Master seed for triplet sampling.
    pub seed: u64,
}

impl From<&FcopRobustConfig> for RobustConfig {
    fn from(cfg: &FcopRobustConfig) -> Self {
        RobustConfig {
            num_samples: cfg.num_samples,
            noise_bound_px: cfg.noise_bound_px,
            seed: cfg.seed,
        }
    }
}

/// Focal length and object scale solved from one triplet.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FcopTripletSolution {
    /// Focal length in pixels.
    pub focal: f64,
    /// Object scale.
    pub scale: f64,
    /// Least-squares residual of the triplet system.
    pub residual: f64,
}

/// Opaque robust estimation result; free with [`fcop_focal_estimate_free`].
pub struct FcopFocalEstimate {
    inner: FocalEstimate,
}

fn robust_status(e: &RobustError) -> FcopStatus {
    match e {
        RobustError::EmptyInput | RobustError::InvalidConfig(_) => FcopStatus::InvalidArgument,
        RobustError::InsufficientCorrespondences { .. } => FcopStatus::InsufficientData,
        RobustError::NoValidTriplet { .. } | RobustError::NoEligibleObject => {
            FcopStatus::NoValidTriplet
        }
    }
}

fn pose_status(e: &PoseError) -> FcopStatus {
    match e {
        PoseError::LengthMismatch { .. } => FcopStatus::InvalidArgument,
        PoseError::InsufficientPairs { .. } => FcopStatus::InsufficientData,
        PoseError::DegenerateConfiguration => FcopStatus::Degenerate,
        PoseError::NoConsensus { .. } => FcopStatus::NoConsensus,
    }
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Result<&'a [T], FcopStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(FcopStatus::NullPointer);
    }
    Ok(slice::from_raw_parts(ptr, len))
}

fn estimate_out(
    result: Result<FocalEstimate, RobustError>,
    out: *mut *mut FcopFocalEstimate,
) -> FcopStatus {
    match result {
        Ok(inner) => {
            let handle = Box::new(FcopFocalEstimate { inner });
            unsafe { *out = Box::into_raw(handle) };
            FcopStatus::Ok
        }
        Err(e) => robust_status(&e),
    }
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn fcop_version() -> *const c_char {
    const VERSION: &CStr = match CStr::from_bytes_with_nul(
        concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes(),
    ) {
        Ok(v) => v,
        Err(_) => unreachable!(),
    };
    VERSION.as_ptr()
}

/// Human-readable description of a status code; static, do not free.
#[no_mangle]
pub extern "C" fn fcop_status_message(status: FcopStatus) -> *const c_char {
    let msg: &CStr = match status {
        FcopStatus::Ok => c"ok",
        FcopStatus::NullPointer => c"required pointer argument was null",
        FcopStatus::InvalidArgument => c"invalid argument",
        FcopStatus::Degenerate => c"degenerate correspondences",
        FcopStatus::InsufficientData => c"not enough data points",
        FcopStatus::NoValidTriplet => c"no valid triplet could be solved",
        FcopStatus::NoConsensus => c"no consensus reached",
    };
    msg.as_ptr()
}

/// Solve one triplet of correspondences for focal length and object scale.
///
/// # Safety
///
/// `corrs` must point to an array of exactly 3 correspondences and `out`
/// must point to writable memory for one solution.
#[no_mangle]
pub unsafe extern "C" fn fcop_solve_triplet(
    corrs: *const FcopCorrespondence,
    out: *mut FcopTripletSolution,
) -> FcopStatus {
    if corrs.is_null() || out.is_null() {
        return FcopStatus::NullPointer;
    }
    let triplet = slice::from_raw_parts(corrs, 3);
    let (a, b, c) = (
        Correspondence::from(&triplet[0]),
        Correspondence::from(&triplet[1]),
        Correspondence::from(&triplet[2]),
    );
    match solve_triplet(&a, &b, &c) {
        Ok(sol) => {
            *out = FcopTripletSolution {
                focal: sol.f,
                scale: sol.s,
                residual: sol.residual,
            };
            FcopStatus::Ok
        }
        Err(DegenerateError::SolveFailed(_)) => FcopStatus::InvalidArgument,
        Err(_) => FcopStatus::Degenerate,
    }
}

/// Find the point stabbing the most intervals `[focal − eps, focal + eps]`.
///
/// # Safety
///
/// `focals` must point to `len` readable doubles; `focal_out` and
/// `support_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fcop_interval_stab(
    focals: *const f64,
    len: usize,
    eps: f64,
    focal_out: *mut f64,
    support_out: *mut usize,
) -> FcopStatus {
    if focal_out.is_null() || support_out.is_null() {
        return FcopStatus::NullPointer;
    }
    let focals = match slice_arg(focals, len) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match interval_stab(focals, eps) {
        Ok((focal, support)) => {
            *focal_out = focal;
            *support_out = support;
            FcopStatus::Ok
        }
        Err(e) => robust_status(&e),
    }
}

/// Robust focal estimate from one object's correspondences.
///
/// On success `*out` receives a handle owned by the caller; release it with
/// [`fcop_focal_estimate_free`].
///
/// # Safety
///
/// `corrs` must point to `len` readable correspondences, `cfg` to a valid
/// configuration, and `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn fcop_estimate_object_focal(
    corrs: *const FcopCorrespondence,
    len: usize,
    cfg: *const FcopRobustConfig,
    out: *mut *mut FcopFocalEstimate,
) -> FcopStatus {
    if cfg.is_null() || out.is_null() {
        return FcopStatus::NullPointer;
    }
    let corrs = match slice_arg(corrs, len) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let corrs: Vec<Correspondence> = corrs.iter().map(Correspondence::from).collect();
    estimate_out(estimate_object_focal(&corrs, &RobustConfig::from(&*cfg)), out)
}

/// One consistent focal estimate for a frame with several objects.
///
/// `corrs` holds all objects back to back; `object_lens[i]` is the number of
/// correspondences of object `i`, and their sum must equal the total length
/// of `corrs`.
///
/// # Safety
///
/// `corrs` must point to `sum(object_lens)` readable correspondences,
/// `object_lens` to `num_objects` readable lengths, `cfg` to a valid
/// configuration, and `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn fcop_estimate_frame_focal(
    corrs: *const FcopCorrespondence,
    object_lens: *const usize,
    num_objects: usize,
    cfg: *const FcopRobustConfig,
    out: *mut *mut FcopFocalEstimate,
) -> FcopStatus {
    if cfg.is_null() || out.is_null() {
        return FcopStatus::NullPointer;
    }
    let lens = match slice_arg(object_lens, num_objects) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let total: usize = lens.iter().sum();
    let flat = match slice_arg(corrs, total) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let mut objects = Vec::with_capacity(num_objects);
    let mut offset = 0;
    for &len in lens {
        objects.push(
            flat[offset..offset + len]
                .iter()
                .map(Correspondence::from)
                .collect::<Vec<_>>(),
        );
        offset += len;
    }
    estimate_out(estimate_frame_focal(&objects, &RobustConfig::from(&*cfg)), out)
}

/// Hypothesize-and-verify focal estimation with a metric inlier threshold.
///
/// # Safety
///
/// `corrs` must point to `len` readable correspondences and `out` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn fcop_ransac_focal(
    corrs: *const FcopCorrespondence,
    len: usize,
    threshold_m: f64,
    iters: usize,
    seed: u64,
    out: *mut *mut FcopFocalEstimate,
) -> FcopStatus {
    if out.is_null() {
        return FcopStatus::NullPointer;
    }
    let corrs = match slice_arg(corrs, len) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let corrs: Vec<Correspondence> = corrs.iter().map(Correspondence::from).collect();
    estimate_out(ransac_focal(&corrs, threshold_m, iters, seed), out)
}

/// Estimated focal length in pixels, or NaN for a null handle.
///
/// # Safety
///
/// `est` must be a live handle returned by an estimation call, or null.
#[no_mangle]
pub unsafe extern "C" fn fcop_focal_estimate_focal(est: *const FcopFocalEstimate) -> f64 {
    est.as_ref().map_or(f64::NAN, |e| e.inner.f)
}

/// Consensus support of the estimate, or 0 for a null handle.
///
/// # Safety
///
/// `est` must be a live handle returned by an estimation call, or null.
#[no_mangle]
pub unsafe extern "C" fn fcop_focal_estimate_support(est: *const FcopFocalEstimate) -> usize {
    est.as_ref().map_or(0, |e| e.inner.support)
}

/// Number of rejected (degenerate) triplet samples, or 0 for a null handle.
///
/// # Safety
///
/// `est` must be a live handle returned by an estimation call, or null.
#[no_mangle]
pub unsafe extern "C" fn fcop_focal_estimate_num_rejected(
    est: *const FcopFocalEstimate,
) -> usize {
    est.as_ref().map_or(0, |e| e.inner.num_rejected)
}

/// Number of stored candidate solutions, or 0 for a null handle.
///
/// # Safety
///
/// `est` must be a live handle returned by an estimation call, or null.
#[no_mangle]
pub unsafe extern "C" fn fcop_focal_estimate_num_candidates(
    est: *const FcopFocalEstimate,
) -> usize {
    est.as_ref().map_or(0, |e| e.inner.candidates.len())
}

/// Copy candidate `index` into `out`.
///
/// # Safety
///
/// `est` must be a live handle or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fcop_focal_estimate_candidate(
    est: *const FcopFocalEstimate,
    index: usize,
    out: *mut FcopTripletSolution,
) -> FcopStatus {
    if out.is_null() {
        return FcopStatus::NullPointer;
    }
    let Some(est) = est.as_ref() else {
        return FcopStatus::NullPointer;
    };
    let Some(candidate) = est.inner.candidates.get(index) else {
        return FcopStatus::InvalidArgument;
    };
    *out = FcopTripletSolution {
        focal: candidate.f,
        scale: candidate.s,
        residual: candidate.residual,
    };
    FcopStatus::Ok
}

/// Release a handle returned by an estimation call. Null is a no-op.
///
/// # Safety
///
/// `est` must be a handle returned by this library that has not been freed,
/// or null.
#[no_mangle]
pub unsafe extern "C" fn fcop_focal_estimate_free(est: *mut FcopFocalEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Least-squares similarity transform from `src` to `dst` point sets.
///
/// Points are packed `x0,y0,z0,x1,y1,z1,…`; the rotation is written row-major.
///
/// # Safety
///
/// `src` and `dst` must each point to `3 * num_points` readable doubles;
/// `scale_out`, `rotation_out` (9 doubles) and `translation_out` (3 doubles)
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn fcop_umeyama(
    src: *const f64,
    dst: *const f64,
    num_points: usize,
    scale_out: *mut f64,
    rotation_out: *mut f64,
    translation_out: *mut f64,
) -> FcopStatus {
    if scale_out.is_null() || rotation_out.is_null() || translation_out.is_null() {
        return FcopStatus::NullPointer;
    }
    let src = match slice_arg(src, 3 * num_points) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let dst = match slice_arg(dst, 3 * num_points) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let unpack = |flat: &[f64]| {
        flat.chunks_exact(3)
            .map(|c| nalgebra::Vector3::new(c[0], c[1], c[2]))
            .collect::<Vec<_>>()
    };
    match umeyama(&unpack(src), &unpack(dst)) {
        Ok(pose) => {
            *scale_out = pose.scale;
            let rotation = slice::from_raw_parts_mut(rotation_out, 9);
            for row in 0..3 {
                for col in 0..3 {
                    rotation[3 * row + col] = pose.rotation[(row, col)];
                }
            }
            let translation = slice::from_raw_parts_mut(translation_out, 3);
            translation.copy_from_slice(pose.translation.as_slice());
            FcopStatus::Ok
        }
        Err(e) => pose_status(&e),
    }
}
