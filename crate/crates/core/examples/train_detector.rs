//! Trains the part detector on uncolored chair views and reports mean
//! best-IoU on held-out shapes.
//!
//! ```text
//! cargo run --release --example train_detector -- 3000
//! ```

use std::time::Instant;

use partcap::annotate::{build_geometry_gt, BoxGrouping};
use partcap::detector::{best_ious, detect, train_detector, DetectorConfig, DetectorTrainConfig};
use partcap::geometry::voxelize_mesh;
use partcap::nn::{OptimizerConfig, OptimizerKind};
use partcap::pipeline::{generate_synthetic_dataset, ShapeCategory};
use partcap::render::{default_viewpoints, render_view};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3000);
    let t = Instant::now();
    let shapes = generate_synthetic_dataset(20, 7, ShapeCategory::Chair)?;
    let cams = default_viewpoints(12)?;
    let mut data = Vec::new();
    for s in &shapes {
        let (grid, _) = voxelize_mesh(&s.mesh, 100, 32, 1)?;
        let (anns, _) = build_geometry_gt(&s.id, &grid, &cams, 9, BoxGrouping::Component);
        for (cam, ann) in cams.iter().zip(anns) {
            data.push((render_view(&grid, cam, None), ann));
        }
    }
    let (train, test) = data.split_at(16 * cams.len());
    let mut cfg = DetectorConfig::new(4, 128);
    cfg.refine_steps = 1;
    let tc = DetectorTrainConfig {
        steps,
        optimizer: OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: 1e-3,
            ..Default::default()
        },
        ..Default::default()
    };
    let (model, log) = train_detector(train, cfg, &tc)?;
    println!(
        "trained {steps} steps in {:.1}s, loss {:.3} -> {:.3}",
        t.elapsed().as_secs_f64(),
        log.head_mean(50),
        log.tail_mean(50)
    );
    let mut ious = Vec::new();
    let mut per_class = vec![Vec::new(); 4];
    for (v, (view, ann)) in test.iter().enumerate() {
        let dets = detect(&model, view, v, 0.5);
        for (b, iou) in ann.boxes.iter().zip(best_ious(&dets, &ann.boxes)) {
            per_class[b.class()].push(iou);
            ious.push(iou);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!("held-out mean best-IoU {:.3} over {} boxes", mean(&ious), ious.len());
    for (name, v) in ShapeCategory::Chair.class_names().iter().zip(&per_class) {
        println!("  {name:<5} {:.3} ({} boxes)", mean(v), v.len());
    }
    Ok(())
}
