//! PNG decode/encode of frame maps.

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{
    DatasetManifest, FrameRecord, IngestError, ManifestFrame, ObjectRecord, RunLengthMask,
};
use crate::geometry::{CameraIntrinsics, Correspondence};
use crate::synth::SyntheticScene;

fn open_image(path: &Path) -> Result<DynamicImage, IngestError> {
    image::open(path).map_err(|e| IngestError::UnreadableFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn check_dims(
    path: &Path,
    (w, h): (u32, u32),
    entry: &ManifestFrame,
) -> Result<(), IngestError> {
    if (w, h) != (entry.width, entry.height) {
        return Err(IngestError::DimensionMismatch {
            path: path.to_path_buf(),
            expected_w: entry.width,
            expected_h: entry.height,
            found_w: w,
            found_h: h,
        });
    }
    Ok(())
}

pub(super) fn decode_frame(
    manifest: &DatasetManifest,
    entry: &ManifestFrame,
) -> Result<FrameRecord, IngestError> {
    let depth_path = manifest.root.join(&entry.depth_map);
    let noc_path = manifest.root.join(&entry.noc_map);
    let mask_path = manifest.root.join(&entry.instance_mask);

    let DynamicImage::ImageLuma16(depth) = open_image(&depth_path)? else {
        return Err(IngestError::UnreadableFile {
            path: depth_path,
            reason: "expected a 16-bit single-channel PNG".into(),
        });
    };
    let DynamicImage::ImageRgb8(nocs) = open_image(&noc_path)? else {
        return Err(IngestError::UnreadableFile {
            path: noc_path,
            reason: "expected an 8-bit RGB PNG".into(),
        });
    };
    let DynamicImage::ImageLuma8(mask) = open_image(&mask_path)? else {
        return Err(IngestError::UnreadableFile {
            path: mask_path,
            reason: "expected an 8-bit single-channel PNG".into(),
        });
    };
    check_dims(&depth_path, depth.dimensions(), entry)?;
    check_dims(&noc_path, nocs.dimensions(), entry)?;
    check_dims(&mask_path, mask.dimensions(), entry)?;

    let intrinsics = CameraIntrinsics::new(1.0, entry.width, entry.height);
    let decode_noc = |c: u8| f64::from(c) * manifest.noc_encoding.scale + manifest.noc_encoding.offset;

    // Row-major scan keeps per-instance pixel indices ascending.
    let mut builders: BTreeMap<u8, (Vec<u32>, Vec<Correspondence>)> = BTreeMap::new();
    for (py, px, &Luma([instance])) in mask.enumerate_pixels().map(|(x, y, p)| (y, x, p)) {
        if instance == 0 {
            continue;
        }
        let Luma([raw_depth]) = *depth.get_pixel(px, py);
        if raw_depth == 0 {
            continue;
        }
        let Rgb(rgb) = *nocs.get_pixel(px, py);
        if rgb == [0, 0, 0] {
            continue;
        }
        let d = f64::from(raw_depth) / manifest.depth_encoding.units_per_meter;
        let p = nalgebra::Vector3::new(
            decode_noc(rgb[0]),
            decode_noc(rgb[1]),
            decode_noc(rgb[2]),
        );
        let x = intrinsics.center_pixel(f64::from(px), f64::from(py));
        let (indices, corrs) = builders.entry(instance).or_default();
        indices.push(py * entry.width + px);
        corrs.push(Correspondence::new(x, d, p));
    }

    let mut objects = Vec::with_capacity(builders.len());
    for (instance, (indices, correspondences)) in builders {
        if correspondences.len() < 3 {
            log::warn!(
                "frame {}: instance {instance} has only {} valid pixels, skipped",
                entry.frame_id,
                correspondences.len()
            );
            continue;
        }
        let category = entry
            .categories
            .get(&instance.to_string())
            .cloned()
            .unwrap_or_else(|| format!("instance-{instance}"));
        objects.push(ObjectRecord {
            category,
            mask: RunLengthMask::from_sorted_indices(&indices),
            correspondences,
        });
    }

    Ok(FrameRecord {
        frame_id: entry.frame_id.clone(),
        image_size: (entry.width, entry.height),
        objects,
        gt_focal: entry.gt_focal,
        gt_poses: entry.gt_poses.clone(),
    })
}

fn save_image<P, C>(img: &ImageBuffer<P, C>, path: &Path) -> Result<(), IngestError>
where
    P: image::Pixel + image::PixelWithColorType,
    C: std::ops::Deref<Target = [P::Subpixel]>,
    [P::Subpixel]: image::EncodableLayout,
{
    img.save(path).map_err(|e| IngestError::WriteFailed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Encode one synthetic frame as the three PNG maps and return its manifest
/// entry.
///
/// Correspondences are rasterized to their nearest pixel; points falling
/// outside the image or colliding with an already-written pixel are dropped.
/// Canonical coordinates from the generator's `[−1, 1]³` cube are halved into
/// the storage cube `[−0.5, 0.5]³` (values outside it clamp to the edge), and
/// depths are rounded to the depth encoding's resolution.
pub fn write_frame_files(
    scene: &SyntheticScene,
    width: u32,
    height: u32,
    manifest: &DatasetManifest,
    frame_id: &str,
    scene_label: Option<&str>,
) -> Result<ManifestFrame, IngestError> {
    let mut depth = ImageBuffer::<Luma<u16>, Vec<u16>>::new(width, height);
    let mut nocs = RgbImage::new(width, height);
    let mut mask = GrayImage::new(width, height);

    let intrinsics = CameraIntrinsics::new(1.0, width, height);
    let units = manifest.depth_encoding.units_per_meter;
    let encode_noc = |v: f64| {
        (((v / 2.0) - manifest.noc_encoding.offset) / manifest.noc_encoding.scale)
            .round()
            .clamp(0.0, 255.0) as u8
    };

    for (obj_index, corrs) in scene.objects.iter().enumerate() {
        let instance = (obj_index + 1).min(255) as u8;
        for c in corrs {
            let (px, py) = intrinsics.uncenter_pixel(c.x);
            let (px, py) = (px.round(), py.round());
            if px < 0.0 || py < 0.0 || px >= f64::from(width) || py >= f64::from(height) {
                continue;
            }
            let (px, py) = (px as u32, py as u32);
            if mask.get_pixel(px, py).0[0] != 0 {
                continue;
            }
            let raw_depth = (c.d * units).round();
            if raw_depth < 1.0 || raw_depth > f64::from(u16::MAX) {
                continue;
            }
            depth.put_pixel(px, py, Luma([raw_depth as u16]));
            nocs.put_pixel(
                px,
                py,
                Rgb([encode_noc(c.p.x), encode_noc(c.p.y), encode_noc(c.p.z)]),
            );
            mask.put_pixel(px, py, Luma([instance]));
        }
    }

    let rel = |kind: &str| format!("{kind}/{frame_id}.png");
    for kind in ["depth", "nocs", "mask"] {
        let dir = manifest.root.join(kind);
        fs::create_dir_all(&dir).map_err(|e| IngestError::WriteFailed {
            path: dir.clone(),
            reason: e.to_string(),
        })?;
    }
    save_image(&depth, &manifest.root.join(rel("depth")))?;
    save_image(&nocs, &manifest.root.join(rel("nocs")))?;
    save_image(&mask, &manifest.root.join(rel("mask")))?;

    Ok(ManifestFrame {
        frame_id: frame_id.to_string(),
        width,
        height,
        depth_map: rel("depth"),
        noc_map: rel("nocs"),
        instance_mask: rel("mask"),
        scene: scene_label.map(str::to_string),
        gt_focal: Some(scene.focal),
        gt_poses: Some(scene.poses.clone()),
        categories: BTreeMap::new(),
    })
}

/// Render several scenes into `root` and write the manifest to
/// `root/manifest.json`. Frame ids are zero-padded indices.
pub fn render_scene_to_files(
    scenes: &[SyntheticScene],
    width: u32,
    height: u32,
    root: &Path,
    scene_label: Option<&str>,
) -> Result<DatasetManifest, IngestError> {
    fs::create_dir_all(root).map_err(|e| IngestError::WriteFailed {
        path: root.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut manifest = DatasetManifest::new(root);
    for (i, scene) in scenes.iter().enumerate() {
        let frame_id = format!("{i:06}");
        let entry = write_frame_files(scene, width, height, &manifest, &frame_id, scene_label)?;
        manifest.frames.push(entry);
    }
    manifest.save(&root.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_scene, SceneConfig};
    use approx::assert_abs_diff_eq;

    fn write_test_maps(
        dir: &Path,
        entry: &ManifestFrame,
        depth: &ImageBuffer<Luma<u16>, Vec<u16>>,
        nocs: &RgbImage,
        mask: &GrayImage,
    ) {
        depth.save(dir.join(&entry.depth_map)).unwrap();
        nocs.save(dir.join(&entry.noc_map)).unwrap();
        mask.save(dir.join(&entry.instance_mask)).unwrap();
    }

    fn tiny_entry(width: u32, height: u32) -> ManifestFrame {
        ManifestFrame {
            frame_id: "t".into(),
            width,
            height,
            depth_map: "d.png".into(),
            noc_map: "n.png".into(),
            instance_mask: "m.png".into(),
            scene: None,
            gt_focal: None,
            gt_poses: None,
            categories: BTreeMap::new(),
        }
    }

    #[test]
    fn decodes_units_and_centering() {
        let dir = tempfile::tempdir().unwrap();
        let entry = tiny_entry(640, 480);
        let mut depth = ImageBuffer::<Luma<u16>, Vec<u16>>::new(640, 480);
        let mut nocs = RgbImage::new(640, 480);
        let mut mask = GrayImage::new(640, 480);
        // Three pixels so the instance is not skipped; the probe pixel sits
        // exactly at the image center.
        for (i, &(px, py)) in [(320u32, 240u32), (321, 240), (322, 240)].iter().enumerate() {
            depth.put_pixel(px, py, Luma([4000 + i as u16]));
            nocs.put_pixel(px, py, Rgb([255, 128, i as u8]));
            mask.put_pixel(px, py, Luma([1]));
        }
        write_test_maps(dir.path(), &entry, &depth, &nocs, &mask);

        let mut manifest = DatasetManifest::new(dir.path());
        manifest.frames.push(entry);
        let frame = manifest.load_frame(0).unwrap();
        assert_eq!(frame.objects.len(), 1);
        let c = &frame.objects[0].correspondences[0];
        assert_eq!(c.d, 4.0);
        assert_eq!((c.x.u, c.x.v), (0.0, 0.0));
        assert_abs_diff_eq!(c.p.x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p.y, 128.0 / 255.0 - 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p.z, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn drops_invalid_depth_and_background_nocs() {
        let dir = tempfile::tempdir().unwrap();
        let entry = tiny_entry(8, 8);
        let mut depth = ImageBuffer::<Luma<u16>, Vec<u16>>::new(8, 8);
        let mut nocs = RgbImage::new(8, 8);
        let mut mask = GrayImage::new(8, 8);
        for px in 0..5u32 {
            depth.put_pixel(px, 0, Luma([if px == 0 { 0 } else { 1000 }]));
            nocs.put_pixel(px, 0, if px == 1 { Rgb([0, 0, 0]) } else { Rgb([10, 20, 30]) });
            mask.put_pixel(px, 0, Luma([1]));
        }
        write_test_maps(dir.path(), &entry, &depth, &nocs, &mask);

        let mut manifest = DatasetManifest::new(dir.path());
        manifest.frames.push(entry);
        let frame = manifest.load_frame(0).unwrap();
        // Pixel 0 has no depth, pixel 1 encodes background: 3 survive.
        assert_eq!(frame.objects[0].correspondences.len(), 3);
        assert_eq!(frame.objects[0].mask.num_pixels(), 3);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let entry = tiny_entry(8, 8);
        let depth = ImageBuffer::<Luma<u16>, Vec<u16>>::new(8, 8);
        let nocs = RgbImage::new(4, 8);
        let mask = GrayImage::new(8, 8);
        write_test_maps(dir.path(), &entry, &depth, &nocs, &mask);
        let mut manifest = DatasetManifest::new(dir.path());
        manifest.frames.push(entry);
        assert!(matches!(
            manifest.load_frame(0),
            Err(IngestError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tiny_objects_are_skipped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let entry = tiny_entry(8, 8);
        let mut depth = ImageBuffer::<Luma<u16>, Vec<u16>>::new(8, 8);
        let mut nocs = RgbImage::new(8, 8);
        let mut mask = GrayImage::new(8, 8);
        // Instance 1: two pixels (skipped). Instance 2: three pixels (kept).
        for (px, instance) in [(0u32, 1u8), (1, 1), (3, 2), (4, 2), (5, 2)] {
            depth.put_pixel(px, 0, Luma([500]));
            nocs.put_pixel(px, 0, Rgb([100, 100, 100]));
            mask.put_pixel(px, 0, Luma([instance]));
        }
        write_test_maps(dir.path(), &entry, &depth, &nocs, &mask);
        let mut manifest = DatasetManifest::new(dir.path());
        manifest.frames.push(entry);
        let frame = manifest.load_frame(0).unwrap();
        assert_eq!(frame.objects.len(), 1);
        assert_eq!(frame.objects[0].category, "instance-2");
    }

    #[test]
    fn synthetic_round_trip_is_quantization_limited() {
        let cfg = SceneConfig {
            focal_range: (500.0, 700.0),
            translation_ball_radius: 0.8,
            points_per_object: 300,
            seed: 77,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest =
            render_scene_to_files(std::slice::from_ref(&scene), 640, 480, dir.path(), None)
                .unwrap();
        let frame = manifest.load_frame(0).unwrap();
        assert_eq!(frame.gt_focal, Some(scene.focal));
        let loaded = &frame.objects[0].correspondences;
        assert!(loaded.len() > 100, "only {} points survived", loaded.len());

        let intrinsics = CameraIntrinsics::new(1.0, 640, 480);
        for c in loaded {
            // Un-centering must land exactly on a pixel index.
            let (px, py) = intrinsics.uncenter_pixel(c.x);
            assert_eq!(px, px.trunc());
            assert_eq!(py, py.trunc());
            // Match the original by pixel: rasterization rounded coordinates.
            let original = scene.objects[0]
                .iter()
                .find(|o| {
                    let (px, py) = intrinsics.uncenter_pixel(o.x);
                    (px.round() - (c.x.u + 320.0)).abs() < 0.5
                        && (py.round() - (c.x.v + 240.0)).abs() < 0.5
                })
                .expect("loaded pixel has an originating correspondence");
            assert!((original.x.u - c.x.u).abs() <= 0.5);
            assert!((original.x.v - c.x.v).abs() <= 0.5);
            assert!((original.d - c.d).abs() <= 0.5e-3 + 1e-12);
            for axis in 0..3 {
                assert!(
                    (original.p[axis] / 2.0 - c.p[axis]).abs() <= 1.0 / 510.0 + 1e-12,
                    "axis {axis}: stored {} vs loaded {}",
                    original.p[axis] / 2.0,
                    c.p[axis]
                );
            }
        }
    }
}
