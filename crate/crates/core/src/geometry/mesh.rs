use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, IoContext, Result};

pub type Point3 = [f64; 3];

/// A triangle mesh whose faces carry part-class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    face_labels: Vec<usize>,
    num_classes: usize,
}

impl TriangleMesh {
    pub fn new(
        vertices: Vec<Point3>,
        faces: Vec<[usize; 3]>,
        face_labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        if faces.len() != face_labels.len() {
            return Err(Error::InvalidMesh(format!(
                "{} faces but {} face labels",
                faces.len(),
                face_labels.len()
            )));
        }
        if num_classes == 0 || num_classes > 255 {
            return Err(Error::InvalidMesh(format!(
                "class count {num_classes} outside 1..=255"
            )));
        }
        for (i, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "face {i} references vertex {bad} but mesh has {} vertices",
                    vertices.len()
                )));
            }
        }
        if let Some((i, &l)) = face_labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= num_classes)
        {
            return Err(Error::InvalidMesh(format!(
                "face {i} has label {l}, class count is {num_classes}"
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        Ok(Self {
            vertices,
            faces,
            face_labels,
            num_classes,
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_labels(&self) -> &[usize] {
        &self.face_labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn triangle(&self, face: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Axis-aligned bounds of the vertices referenced by faces.
    pub fn aabb(&self) -> (Point3, Point3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for f in &self.faces {
            for &v in f {
                for a in 0..3 {
                    lo[a] = lo[a].min(self.vertices[v][a]);
                    hi[a] = hi[a].max(self.vertices[v][a]);
                }
            }
        }
        (lo, hi)
    }

    /// Appends another mesh's geometry; labels are kept as-is.
    pub fn merge(&mut self, other: &TriangleMesh) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::InvalidMesh("class count mismatch in merge".into()));
        }
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| f.map(|v| v + base)));
        self.face_labels.extend_from_slice(&other.face_labels);
        Ok(())
    }

    /// Parses Wavefront-style text (`v` and `f` records) and a sidecar label
    /// text with one integer per face.
    pub fn parse_obj(obj: &str, labels: &str, num_classes: usize) -> Result<Self> {
        Self::parse_with_paths(obj, Path::new("<obj>"), labels, Path::new("<labels>"), num_classes)
    }

    pub fn read_obj(obj_path: &Path, label_path: &Path, num_classes: usize) -> Result<Self> {
        let obj = std::fs::read_to_string(obj_path).at(obj_path)?;
        let labels = std::fs::read_to_string(label_path).at(label_path)?;
        Self::parse_with_paths(&obj, obj_path, &labels, label_path, num_classes)
    }

    fn parse_with_paths(
        obj: &str,
        obj_path: &Path,
        labels: &str,
        label_path: &Path,
        num_classes: usize,
    ) -> Result<Self> {
        let perr = |path: &Path, line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (ln, raw) in obj.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let coords: Vec<f64> = it
                        .take(3)
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| perr(obj_path, ln + 1, format!("bad vertex: {e}")))?;
                    if coords.len() != 3 {
                        return Err(perr(obj_path, ln + 1, "vertex needs 3 coordinates".into()));
                    }
                    vertices.push([coords[0], coords[1], coords[2]]);
                }
                Some("f") => {
                    let idx: Vec<&str> = it.collect();
                    if idx.len() != 3 {
                        return Err(perr(
                            obj_path,
                            ln + 1,
                            format!("only triangles are supported, got {} vertices", idx.len()),
                        ));
                    }
                    let mut face = [0usize; 3];
                    for (k, tok) in idx.iter().enumerate() {
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head
                            .parse()
                            .map_err(|e| perr(obj_path, ln + 1, format!("bad index `{tok}`: {e}")))?;
                        let resolved = if i > 0 {
                            i - 1
                        } else if i < 0 {
                            vertices.len() as i64 + i
                        } else {
                            return Err(perr(obj_path, ln + 1, "vertex index 0 is invalid".into()));
                        };
                        if resolved < 0 {
                            return Err(perr(obj_path, ln + 1, format!("index {i} out of range")));
                        }
                        face[k] = resolved as usize;
                    }
                    faces.push(face);
                }
                _ => {}
            }
        }
        let mut face_labels = Vec::with_capacity(faces.len());
        for (ln, raw) in labels.lines().enumerate() {
            let t = raw.trim();
            if t.is_empty() {
                continue;
            }
            face_labels.push(
                t.parse::<usize>()
                    .map_err(|e| perr(label_path, ln + 1, format!("bad label: {e}")))?,
            );
        }
        Self::new(vertices, faces, face_labels, num_classes)
    }

    /// Serializes to (obj text, label text).
    pub fn to_obj(&self) -> (String, String) {
        let mut obj = String::new();
        for v in &self.vertices {
            let _ = writeln!(obj, "v {} {} {}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(obj, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        let mut labels = String::new();
        for l in &self.face_labels {
            let _ = writeln!(labels, "{l}");
        }
        (obj, labels)
    }

    /// An axis-aligned box of 12 triangles, all labelled `label`.
    pub fn cuboid(min: Point3, max: Point3, label: usize, num_classes: usize) -> Result<Self> {
        let [x0, y0, z0] = min;
        let [x1, y1, z1] = max;
        let vertices = vec![
            [x0, y0, z0],
            [x1, y0, z0],
            [x1, y1, z0],
            [x0, y1, z0],
            [x0, y0, z1],
            [x1, y0, z1],
            [x1, y1, z1],
            [x0, y1, z1],
        ];
        let faces = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [3, 7, 6],
            [3, 6, 2],
            [0, 4, 7],
            [0, 7, 3],
            [1, 2, 6],
            [1, 6, 5],
        ];
        Self::new(vertices, faces, vec![label; 12], num_classes)
    }
    /// An axis-aligned box whose faces are split into a grid of triangles
    /// with edges no longer than `max_edge`, so that a fixed sample count per
    /// face covers large boxes densely.
    pub fn tessellated_cuboid(min: Point3, max: Point3, label: usize, num_classes: usize, max_edge: f64) -> Result<Self> {
        if !(max_edge > 0.0) {
            return Err(Error::InvalidArgument(format!("max_edge must be positive, got {max_edge}")));
        }
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        // (normal axis, side, u axis, v axis)
        let sides = [(0, 0, 2, 1), (0, 1, 1, 2), (1, 0, 0, 2), (1, 1, 2, 0), (2, 0, 1, 0), (2, 1, 0, 1)];
        for (axis, side, ua, va) in sides {
            let nu = ((max[ua] - min[ua]) / max_edge).ceil().max(1.0) as usize;
            let nv = ((max[va] - min[va]) / max_edge).ceil().max(1.0) as usize;
            let base = vertices.len();
            for j in 0..=nv {
                for i in 0..=nu {
                    let mut p = [0.0; 3];
                    p[axis] = if side == 0 { min[axis] } else { max[axis] };
                    p[ua] = min[ua] + (max[ua] - min[ua]) * i as f64 / nu as f64;
                    p[va] = min[va] + (max[va] - min[va]) * j as f64 / nv as f64;
                    vertices.push(p);
                }
            }
            let at = |i: usize, j: usize| base + j * (nu + 1) + i;
            for j in 0..nv {
                for i in 0..nu {
                    faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
                    faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
                }
            }
        }
        let n = faces.len();
        Self::new(vertices, faces, vec![label; n], num_classes)
    }
}

pub(crate) fn triangle_area(t: &[Point3; 3]) -> f64 {
    let u = sub(t[1], t[0]);
    let v = sub(t[2], t[0]);
    let c = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_face_index() {
        let err = TriangleMesh::new(vec![[0.0; 3]; 2], vec![[0, 1, 2]], vec![0], 1);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn rejects_label_beyond_class_count() {
        let err = TriangleMesh::new(vec![[0.0; 3]; 3], vec![[0, 1, 2]], vec![3], 3);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn rejects_empty_mesh() {
        assert!(TriangleMesh::new(vec![], vec![], vec![], 1).is_err());
    }

    #[test]
    fn obj_roundtrip_preserves_mesh() {
        let m = TriangleMesh::cuboid([0.0, -1.5, 0.25], [1.0, 2.0, 3.125], 2, 4).unwrap();
        let (obj, labels) = m.to_obj();
        let back = TriangleMesh::parse_obj(&obj, &labels, 4).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn parses_slashed_and_negative_indices() {
        let obj = "# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n";
        let m = TriangleMesh::parse_obj(obj, "0\n", 1).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn rejects_quads() {
        let obj = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(
            TriangleMesh::parse_obj(obj, "0\n", 1),
            Err(Error::Parse { line: 5, .. })
        ));
    }

    #[test]
    fn label_count_must_match_faces() {
        let obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        assert!(TriangleMesh::parse_obj(obj, "0\n1\n", 2).is_err());
    }
}
