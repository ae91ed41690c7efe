//! Renders geometry, colored and part-highlight views of one chair to PPM.
//!
//! ```text
//! cargo run --release --example render_views -- /tmp/views
//! ```

use std::path::PathBuf;

use partcap::geometry::voxelize_mesh;
use partcap::pipeline::{generate_synthetic_dataset, ShapeCategory};
use partcap::render::{default_viewpoints, render_part_highlight, render_view};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/views".into()));
    std::fs::create_dir_all(&out)?;
    let shape = generate_synthetic_dataset(1, 5, ShapeCategory::Chair)?.remove(0);
    let (grid, _) = voxelize_mesh(&shape.mesh, 100, 32, 0)?;
    let cams = default_viewpoints(12)?;
    for (v, cam) in cams.iter().enumerate() {
        render_view(&grid, cam, None).write_ppm(&out.join(format!("geometry_{v:02}.ppm")))?;
        render_view(&grid, cam, Some(&shape.palette)).write_ppm(&out.join(format!("colored_{v:02}.ppm")))?;
        for (k, name) in ShapeCategory::Chair.class_names().iter().enumerate() {
            render_part_highlight(&grid, cam, k)?.write_ppm(&out.join(format!("{name}_{v:02}.ppm")))?;
        }
    }
    println!("{} views of `{}` written to {}", cams.len(), shape.caption, out.display());
    Ok(())
}
