use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mesh::{triangle_area, Point3, TriangleMesh};
use crate::error::{Error, Result};

/// Per-face sample count used when building voxel labels.
pub const DEFAULT_SAMPLES_PER_FACE: usize = 100;

/// Faces with area below this are treated as degenerate.
const DEGENERATE_AREA: f64 = 1e-14;

/// Points sampled on a labelled surface, each inheriting its face label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointSet {
    pub points: Vec<Point3>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Bounds used to fit the voxel grid: the source mesh box when sampled,
    /// otherwise the points' own box.
    pub aabb: (Point3, Point3),
}

impl LabeledPointSet {
    pub fn new(points: Vec<Point3>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                actual: labels.len(),
                context: "point labels",
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "point label {l} >= class count {num_classes}"
            )));
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Ok(Self {
            points,
            labels,
            num_classes,
            aabb: (lo, hi),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A zero-area face that was sampled at its centroid instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateFace {
    pub face: usize,
    pub area: f64,
}

/// Uniform barycentric sampling of `per_face` points on every face.
///
/// Points are emitted face by face; point `k` of face `f` sits at index
/// `f * per_face + k`. The RNG stream is consumed for degenerate faces too,
/// so a degenerate face does not shift samples of later faces.
pub fn sample_triangle_points(
    mesh: &TriangleMesh,
    per_face: usize,
    seed: u64,
) -> Result<(LabeledPointSet, Vec<DegenerateFace>)> {
    if per_face == 0 {
        return Err(Error::InvalidArgument("per_face must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.faces().len() * per_face;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    for (fi, &label) in mesh.face_labels().iter().enumerate() {
        let [a, b, c] = mesh.triangle(fi);
        let area = triangle_area(&[a, b, c]);
        let degenerate = !(area > DEGENERATE_AREA);
        if degenerate {
            warnings.push(DegenerateFace { face: fi, area });
        }
        for _ in 0..per_face {
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let (wa, wb, wc) = if degenerate {
                (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
            } else {
                let s = r1.sqrt();
                (1.0 - s, s * (1.0 - r2), s * r2)
            };
            points.push([
                wa * a[0] + wb * b[0] + wc * c[0],
                wa * a[1] + wb * b[1] + wc * c[1],
                wa * a[2] + wb * b[2] + wc * c[2],
            ]);
            labels.push(label);
        }
    }
    let mut set = LabeledPointSet::new(points, labels, mesh.num_classes())?;
    set.aabb = mesh.aabb();
    Ok((set, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle(label: usize) -> TriangleMesh {
        TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
            vec![label],
            4,
        )
        .unwrap()
    }

    #[test]
    fn hundred_points_per_face_all_labelled() {
        let (set, warn) = sample_triangle_points(&unit_triangle(2), 100, 7).unwrap();
        assert_eq!(set.len(), 100);
        assert!(set.labels.iter().all(|&l| l == 2));
        assert!(warn.is_empty());
    }

    #[test]
    fn samples_lie_inside_triangle() {
        let (set, _) = sample_triangle_points(&unit_triangle(0), 1, 3).unwrap();
        let p = set.points[0];
        assert_eq!(p[2], 0.0);
        assert!(p[0] >= 0.0 && p[1] >= 0.0 && p[0] + p[1] <= 1.0 + 1e-12);
        let (many, _) = sample_triangle_points(&unit_triangle(0), 500, 11).unwrap();
        for p in &many.points {
            assert!(p[0] >= 0.0 && p[1] >= 0.0 && p[0] + p[1] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let m = TriangleMesh::cuboid([0.0; 3], [1.0, 2.0, 3.0], 1, 2).unwrap();
        let (a, _) = sample_triangle_points(&m, 10, 42).unwrap();
        let (b, _) = sample_triangle_points(&m, 10, 42).unwrap();
        let bits = |s: &LabeledPointSet| {
            s.points
                .iter()
                .flat_map(|p| p.iter().map(|c| c.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
        let (c, _) = sample_triangle_points(&m, 10, 43).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn degenerate_face_samples_centroid_and_warns() {
        let m = TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]],
            vec![[0, 1, 2]],
            vec![1],
            2,
        )
        .unwrap();
        let (set, warn) = sample_triangle_points(&m, 5, 0).unwrap();
        assert_eq!(warn.len(), 1);
        assert_eq!(warn[0].face, 0);
        for p in &set.points {
            for c in p {
                assert!((c - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_per_face_rejected() {
        assert!(sample_triangle_points(&unit_triangle(0), 0, 0).is_err());
    }
}
