//! Render synthetic frames in the dataset format so the CLI has something to
//! chew on:
//!
//! ```sh
//! cargo run --example render_synthetic -- /tmp/fcop-demo 10 42
//! fcop evaluate --manifest /tmp/fcop-demo/manifest.json --out /tmp/fcop-demo/report
//! ```

use std::path::PathBuf;

use fcop::ingest::render_scene_to_files;
use fcop::synth::{generate_scene, NoiseConfig, SceneConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(args.next().unwrap_or_else(|| "fcop-demo".into()));
    let frames: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let scenes: Vec<_> = (0..frames)
        .map(|i| {
            generate_scene(&SceneConfig {
                focal_range: (400.0, 900.0),
                translation_ball_radius: 0.8,
                num_objects: 2,
                points_per_object: 400,
                noise: NoiseConfig {
                    depth_bound_m: 0.002,
                    noc_bound: 0.002,
                },
                seed: seed.wrapping_add(i as u64),
                ..SceneConfig::default()
            })
        })
        .collect::<Result<_, _>>()?;

    let manifest = render_scene_to_files(&scenes, 640, 480, &root, Some("synthetic"))?;
    println!(
        "wrote {} frames under {} (manifest: {})",
        manifest.frames.len(),
        root.display(),
        root.join("manifest.json").display()
    );
    for frame in &manifest.frames {
        println!(
            "  frame {}: ground-truth focal {:.2} px",
            frame.frame_id,
            frame.gt_focal.unwrap()
        );
    }
    Ok(())
}
