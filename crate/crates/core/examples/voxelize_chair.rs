//! Generates a synthetic chair, voxelizes it and prints per-class occupancy.

use partcap::geometry::voxelize_mesh;
use partcap::pipeline::{generate_synthetic_dataset, ShapeCategory};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shape = generate_synthetic_dataset(1, 3, ShapeCategory::Chair)?.remove(0);
    println!("{}: {}", shape.id, shape.caption);
    println!("{} faces", shape.mesh.faces().len());
    for res in [8, 16, 32] {
        let (grid, degenerate) = voxelize_mesh(&shape.mesh, 100, res, 0)?;
        let mut per_class = vec![0usize; grid.num_classes()];
        for (_, label) in grid.occupied() {
            per_class[label] += 1;
        }
        let names = ShapeCategory::Chair.class_names();
        let parts: Vec<String> = names.iter().zip(&per_class).map(|(n, c)| format!("{n}={c}")).collect();
        println!(
            "res {res:>2}: {} occupied, {} degenerate faces, {}",
            grid.occupied_count(),
            degenerate.len(),
            parts.join(" ")
        );
    }
    Ok(())
}
