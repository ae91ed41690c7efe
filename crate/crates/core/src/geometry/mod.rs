//! Labelled triangle meshes and their conversion to labelled voxel grids.
//!
//! Each face is sampled with uniform random points that inherit the face's
//! part label; every voxel receiving points takes the majority label. The
//! grid is surface-only: interiors of closed meshes stay empty.

mod mesh;
mod sample;
mod voxel;

pub use mesh::{Point3, TriangleMesh};
pub use sample::{sample_triangle_points, DegenerateFace, LabeledPointSet, DEFAULT_SAMPLES_PER_FACE};
pub use voxel::{
    voxelize_in_bounds, voxelize_with_labels, GridBounds, LabeledVoxelGrid, DEFAULT_RESOLUTION,
    MAX_RESOLUTION,
};

use crate::error::Result;

/// Samples a mesh and voxelizes it inside the mesh's fitted bounds.
pub fn voxelize_mesh(
    mesh: &TriangleMesh,
    per_face: usize,
    resolution: usize,
    seed: u64,
) -> Result<(LabeledVoxelGrid, Vec<DegenerateFace>)> {
    let (points, warnings) = sample_triangle_points(mesh, per_face, seed)?;
    Ok((voxelize_with_labels(&points, resolution)?, warnings))
}
