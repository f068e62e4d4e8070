//! Focal length estimation from monocular depth and category-level canonical
//! object coordinates.
//!
//! For any two points on a rigid object, the distance between their
//! back-projected camera-frame positions equals the scaled distance between
//! their canonical coordinates, independently of the object's pose. With
//! depth and canonical predictions per pixel, a triplet of correspondences
//! therefore determines the focal length and the object scale in closed form,
//! and many sampled triplets combine into a robust per-image estimate.
//!
//! Module map:
//!
//! - [`geometry`] — correspondence types and the closed-form triplet solver
//! - [`robust`] — interval-stabbing consensus, frame-wise fusion, and the
//!   RANSAC comparison baseline
//! - [`pose`] — similarity-pose recovery (Umeyama) and error metrics
//! - [`synth`] — synthetic scene generator and simulation experiments
//! - [`ingest`] — dataset manifest / PNG maps and the dataset evaluator

pub mod geometry;
pub mod ingest;
pub mod pose;
pub mod robust;
mod seeding;
pub mod synth;

pub use geometry::{
    backproject, check_degeneracy, pair_constraint_row, solve_triplet, solve_triplet_with,
    CameraIntrinsics, Correspondence, DegeneracyReport, DegeneracyTolerances, DegenerateError,
    ImagePoint, TripletSolution,
};
pub use pose::{pose_errors, umeyama, umeyama_ransac, PoseError, PoseErrors, SimilarityPose};
pub use robust::{
    estimate_frame_focal, estimate_object_focal, interval_stab, object_candidates, ransac_focal,
    FocalEstimate, Interval, ObjectCandidates, RobustConfig, RobustError,
};
pub use synth::{
    generate_scene, run_noise_sweep, run_stability_experiment, ErrorDistribution, NoiseAxis,
    NoiseConfig, SceneConfig, SweepTable, SynthError, SyntheticScene,
};
