mod common;

use common::{oracle_bounds, oracle_voxelize, random_mesh, rng};
use partcap::geometry::{
    sample_triangle_points, voxelize_in_bounds, voxelize_mesh, voxelize_with_labels, LabeledPointSet, TriangleMesh,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn sampled(seed: u64, per_face: usize) -> LabeledPointSet {
    let mut r = rng(seed);
    let mesh = random_mesh(&mut r, 4);
    sample_triangle_points(&mesh, per_face, seed).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_rebinning_oracle(seed in 0u64..10_000, res in 2usize..=16) {
        let points = sampled(seed, 20);
        let grid = voxelize_with_labels(&points, res).unwrap();
        let bounds = oracle_bounds(points.aabb.0, points.aabb.1);
        prop_assert_eq!(grid.bounds(), bounds);
        prop_assert_eq!(grid.codes(), &oracle_voxelize(&points, res, bounds)[..]);
    }

    #[test]
    fn point_order_does_not_matter(seed in 0u64..10_000, res in 2usize..=16) {
        let points = sampled(seed, 10);
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.shuffle(&mut rng(seed ^ 77));
        let mut shuffled = LabeledPointSet::new(
            order.iter().map(|&i| points.points[i]).collect(),
            order.iter().map(|&i| points.labels[i]).collect(),
            points.num_classes,
        ).unwrap();
        shuffled.aabb = points.aabb;
        prop_assert_eq!(
            voxelize_with_labels(&points, res).unwrap(),
            voxelize_with_labels(&shuffled, res).unwrap()
        );
    }

    #[test]
    fn adding_points_keeps_occupancy(seed in 0u64..10_000, res in 2usize..=16, keep in 0.1f64..0.9) {
        let all = sampled(seed, 10);
        let bounds = oracle_bounds(all.aabb.0, all.aabb.1);
        let n = ((all.len() as f64) * keep) as usize;
        let part = LabeledPointSet::new(all.points[..n].to_vec(), all.labels[..n].to_vec(), all.num_classes).unwrap();
        let small = voxelize_in_bounds(&part, res, bounds).unwrap();
        let big = voxelize_in_bounds(&all, res, bounds).unwrap();
        for (c, _) in small.occupied() {
            prop_assert!(big.is_occupied(c[0], c[1], c[2]));
        }
    }

    #[test]
    fn single_label_cells_keep_it(seed in 0u64..10_000, res in 2usize..=16) {
        let points = sampled(seed, 10);
        let grid = voxelize_with_labels(&points, res).unwrap();
        let b = grid.bounds();
        let mut seen = std::collections::BTreeMap::<[usize; 3], std::collections::BTreeSet<usize>>::new();
        for (p, &l) in points.points.iter().zip(&points.labels) {
            let c = [0, 1, 2].map(|a| b.axis_index(a, p[a], res));
            seen.entry(c).or_default().insert(l);
        }
        for (c, labels) in seen {
            if labels.len() == 1 {
                prop_assert_eq!(grid.label(c[0], c[1], c[2]), labels.first().copied());
            }
        }
    }

    #[test]
    fn bounds_enclose_samples(seed in 0u64..10_000) {
        let points = sampled(seed, 15);
        let b = voxelize_with_labels(&points, 8).unwrap().bounds();
        for p in &points.points {
            for a in 0..3 {
                prop_assert!(p[a] > b.min[a] && p[a] < b.min[a] + b.side);
            }
        }
    }
}

#[test]
fn default_density_is_100_per_face() {
    let mesh = random_mesh(&mut rng(3), 3);
    let (points, warn) = sample_triangle_points(&mesh, 100, 0).unwrap();
    assert_eq!(points.len(), 100 * mesh.faces().len());
    assert_eq!(points.labels.len(), points.len());
    assert!(warn.is_empty());
}

#[test]
fn boundary_point_goes_to_lower_cell() {
    let pts = LabeledPointSet::new(vec![[0.5; 3], [1.0; 3], [0.5, 0.75, 0.25]], vec![2, 1, 0], 3).unwrap();
    let g = voxelize_in_bounds(&pts, 2, partcap::geometry::GridBounds::UNIT).unwrap();
    assert_eq!(g.label(0, 0, 0), Some(2));
    assert_eq!(g.label(1, 1, 1), Some(1));
    assert_eq!(g.label(0, 1, 0), Some(0));
    assert_eq!(g.occupied_count(), 3);
}

#[test]
fn zero_area_face_is_reported_not_fatal() {
    let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let mesh = TriangleMesh::new(v, vec![[0, 1, 2], [0, 1, 3]], vec![0, 1], 2).unwrap();
    let (grid, warn) = voxelize_mesh(&mesh, 50, 8, 1).unwrap();
    assert_eq!(warn.len(), 1);
    assert_eq!(warn[0].face, 0);
    assert!(grid.occupied_count() > 0);
}

#[test]
fn rejects_bad_meshes() {
    assert!(TriangleMesh::new(vec![[0.0; 3]; 3], vec![[0, 1, 3]], vec![0], 1).is_err());
    assert!(TriangleMesh::new(vec![[0.0; 3]; 3], vec![[0, 1, 2]], vec![2], 2).is_err());
    assert!(TriangleMesh::new(vec![[0.0; 3]; 3], vec![], vec![], 2).is_err());
}

#[test]
fn obj_roundtrip() {
    let mesh = random_mesh(&mut rng(5), 4);
    let (obj, labels) = mesh.to_obj();
    assert_eq!(TriangleMesh::parse_obj(&obj, &labels, 4).unwrap(), mesh);
}

#[test]
fn voxel_file_roundtrip() {
    let points = sampled(9, 10);
    let grid = voxelize_with_labels(&points, 12).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.vox");
    grid.write(&p).unwrap();
    let back = partcap::geometry::LabeledVoxelGrid::read(&p).unwrap();
    assert_eq!(back.codes(), grid.codes());
    assert_eq!(back.num_classes(), grid.num_classes());
}
