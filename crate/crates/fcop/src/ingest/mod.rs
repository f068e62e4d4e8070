//! Dataset loading and evaluation for precomputed depth / canonical-coordinate
//! predictions.
//!
//! A dataset is a JSON manifest plus three PNG maps per frame:
//!
//! - **Manifest** (`format_version: 1`): frame entries with relative paths to
//!   the three maps, the image size, and optional ground truth (focal length,
//!   per-object poses, a scene label for aggregation).
//! - **Depth map**: 16-bit single-channel PNG. Values are millimeters by
//!   default (`depth_encoding.units_per_meter = 1000`); `0` marks invalid
//!   pixels.
//! - **Canonical-coordinate map**: 8-bit RGB PNG. Each channel value `c`
//!   decodes to `c/255 − 0.5` per axis, i.e. the stored cube is
//!   `[−0.5, 0.5]³`. Note this differs from the `[−1, 1]³` cube used by the
//!   synthetic generator; the frame writer rescales accordingly, and the
//!   solver is agnostic because any fixed cube scaling is absorbed by the
//!   object scale. An all-zero pixel marks background.
//! - **Instance mask**: 8-bit single-channel PNG, `0` = background, `k` =
//!   instance `k`.
//!
//! Image coordinates are centered on load: pixel `(px, py)` in a `w×h` image
//! becomes `(px − w/2, py − h/2)`.

mod codec;
mod evaluate;

pub use codec::{render_scene_to_files, write_frame_files};
pub use evaluate::{
    evaluate_dataset, subsample_object, DatasetReport, FrameFailure, FrameReport, SceneSummary,
    DEFAULT_MAX_POINTS_PER_OBJECT,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::geometry::Correspondence;
use crate::pose::SimilarityPose;

/// Current manifest schema version.
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },
    #[error("cannot write {path}: {reason}")]
    WriteFailed { path: PathBuf, reason: String },
    #[error("{path}: expected {expected_w}x{expected_h}, found {found_w}x{found_h}")]
    DimensionMismatch {
        path: PathBuf,
        expected_w: u32,
        expected_h: u32,
        found_w: u32,
        found_h: u32,
    },
    #[error("unsupported manifest format version {0} (expected {MANIFEST_FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("frame `{0}` not found in manifest")]
    UnknownFrame(String),
    #[error("frame index {index} out of range ({len} frames)")]
    FrameIndexOutOfRange { index: usize, len: usize },
}

/// How raw 16-bit depth values map to meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEncoding {
    /// Raw units per meter; the default of 1000 stores millimeters.
    pub units_per_meter: f64,
}

impl Default for DepthEncoding {
    fn default() -> Self {
        Self {
            units_per_meter: 1000.0,
        }
    }
}

/// How 8-bit channel values map to canonical coordinates: `p = c·scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NocEncoding {
    pub scale: f64,
    pub offset: f64,
}

impl Default for NocEncoding {
    fn default() -> Self {
        Self {
            scale: 1.0 / 255.0,
            offset: -0.5,
        }
    }
}

/// One frame entry of the manifest. Paths are relative to the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub frame_id: String,
    pub width: u32,
    pub height: u32,
    pub depth_map: String,
    pub noc_map: String,
    pub instance_mask: String,
    /// Scene label used for per-scene aggregation in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_focal: Option<f64>,
    /// Ground-truth pose per instance, ordered by instance id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_poses: Option<Vec<SimilarityPose>>,
    /// Instance id (as a string key) to category name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub categories: BTreeMap<String, String>,
}

/// Top-level dataset description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    #[serde(default)]
    pub depth_encoding: DepthEncoding,
    #[serde(default)]
    pub noc_encoding: NocEncoding,
    #[serde(default)]
    pub frames: Vec<ManifestFrame>,
    /// Directory all relative paths resolve against; set on load/save.
    #[serde(skip)]
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            depth_encoding: DepthEncoding::default(),
            noc_encoding: NocEncoding::default(),
            frames: Vec::new(),
            root: root.into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = fs::read_to_string(path).map_err(|e| IngestError::UnreadableFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| IngestError::UnreadableFile {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(IngestError::UnsupportedVersion(manifest.format_version));
        }
        manifest.root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text).map_err(|e| IngestError::WriteFailed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Load and decode one frame by index.
    pub fn load_frame(&self, index: usize) -> Result<FrameRecord, IngestError> {
        let entry = self
            .frames
            .get(index)
            .ok_or(IngestError::FrameIndexOutOfRange {
                index,
                len: self.frames.len(),
            })?;
        codec::decode_frame(self, entry)
    }

    /// Load and decode one frame by id.
    pub fn load_frame_by_id(&self, frame_id: &str) -> Result<FrameRecord, IngestError> {
        let index = self
            .frames
            .iter()
            .position(|f| f.frame_id == frame_id)
            .ok_or_else(|| IngestError::UnknownFrame(frame_id.to_string()))?;
        self.load_frame(index)
    }
}

/// Pixel set of one instance as (start, length) runs over row-major indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLengthMask {
    pub runs: Vec<(u32, u32)>,
}

impl RunLengthMask {
    /// Encode an ascending sequence of row-major pixel indices.
    pub fn from_sorted_indices(indices: &[u32]) -> Self {
        let mut runs: Vec<(u32, u32)> = Vec::new();
        for &i in indices {
            match runs.last_mut() {
                Some((start, len)) if *start + *len == i => *len += 1,
                _ => runs.push((i, 1)),
            }
        }
        Self { runs }
    }

    pub fn num_pixels(&self) -> usize {
        self.runs.iter().map(|&(_, len)| len as usize).sum()
    }

    /// Row-major pixel indices, ascending.
    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.runs.iter().flat_map(|&(start, len)| start..start + len)
    }
}

/// One segmented instance with its valid correspondences.
///
/// The `i`-th mask index and the `i`-th correspondence refer to the same
/// pixel; the mask holds exactly the pixels that carried valid depth and
/// canonical values.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub category: String,
    pub mask: RunLengthMask,
    pub correspondences: Vec<Correspondence>,
}

/// A decoded frame: per-object correspondences plus optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: String,
    pub image_size: (u32, u32),
    pub objects: Vec<ObjectRecord>,
    pub gt_focal: Option<f64>,
    pub gt_poses: Option<Vec<SimilarityPose>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_length_round_trip() {
        let indices = [3u32, 4, 5, 9, 10, 20];
        let mask = RunLengthMask::from_sorted_indices(&indices);
        assert_eq!(mask.runs, vec![(3, 3), (9, 2), (20, 1)]);
        assert_eq!(mask.num_pixels(), indices.len());
        assert_eq!(mask.indices().collect::<Vec<_>>(), indices);
    }

    #[test]
    fn manifest_rejects_other_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, r#"{"format_version": 2, "frames": []}"#).unwrap();
        assert!(matches!(
            DatasetManifest::load(&path),
            Err(IngestError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn manifest_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let mut manifest = DatasetManifest::new(dir.path());
        manifest.frames.push(ManifestFrame {
            frame_id: "0000".into(),
            width: 640,
            height: 480,
            depth_map: "depth/0000.png".into(),
            noc_map: "nocs/0000.png".into(),
            instance_mask: "mask/0000.png".into(),
            scene: Some("scene_1".into()),
            gt_focal: Some(590.0),
            gt_poses: None,
            categories: BTreeMap::new(),
        });
        manifest.save(&path).unwrap();
        let loaded = DatasetManifest::load(&path).unwrap();
        assert_eq!(loaded.frames, manifest.frames);
        assert_eq!(loaded.root, dir.path());
    }
}
