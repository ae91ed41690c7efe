//! Derives geometry ground-truth part boxes from highlight renders.

use partcap::annotate::{build_geometry_gt, BoxGrouping};
use partcap::geometry::voxelize_mesh;
use partcap::pipeline::{generate_synthetic_dataset, ShapeCategory};
use partcap::render::default_viewpoints;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shape = generate_synthetic_dataset(1, 11, ShapeCategory::Chair)?.remove(0);
    let (grid, _) = voxelize_mesh(&shape.mesh, 100, 32, 0)?;
    let cams = default_viewpoints(12)?;
    let names = ShapeCategory::Chair.class_names();
    for grouping in [BoxGrouping::Component, BoxGrouping::MergedPerClass] {
        let (anns, coverage) = build_geometry_gt(&shape.id, &grid, &cams, 9, grouping);
        println!("{grouping:?}: {coverage:?}");
        for b in &anns[0].boxes {
            let r = b.bbox;
            println!("  view 0 {:<5} [{:>5.1} {:>5.1} {:>5.1} {:>5.1}]", names[b.class()], r.x0, r.y0, r.x1, r.y1);
        }
    }
    Ok(())
}
