use std::collections::HashMap;
use std::path::Path;

use super::mesh::Point3;
use super::sample::LabeledPointSet;
use crate::error::{Error, IoContext, Result};

pub const DEFAULT_RESOLUTION: usize = 32;
pub const MAX_RESOLUTION: usize = 128;

/// Fraction of the longest extent added on each side when fitting bounds.
const BOUNDS_PADDING: f64 = 0.02;

const VOXEL_MAGIC: &[u8; 8] = b"PCVOXEL1";

/// Cubic region covered by a voxel grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub min: Point3,
    pub side: f64,
}

impl GridBounds {
    pub const UNIT: GridBounds = GridBounds {
        min: [0.0; 3],
        side: 1.0,
    };

    /// Cube around the box's center with side = longest extent padded 2% per
    /// side. A degenerate box gets side 1.
    pub fn fit(lo: Point3, hi: Point3) -> Self {
        let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0_f64, f64::max);
        let side = if extent > 0.0 {
            extent * (1.0 + 2.0 * BOUNDS_PADDING)
        } else {
            1.0
        };
        let min = [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]) - 0.5 * side);
        Self { min, side }
    }

    /// Coordinate of the `i`-th cell boundary along `axis`; boundary `0` is
    /// the lower face of the cube and boundary `res` the upper face.
    pub fn edge(&self, axis: usize, i: usize, res: usize) -> f64 {
        self.min[axis] + self.side * (i as f64) / (res as f64)
    }

    /// Cell index along one axis. Cell `i` spans `(edge(i), edge(i+1)]`, so a
    /// point on a shared boundary goes to the lower cell. Out-of-range
    /// coordinates clamp to the outer cells.
    pub fn axis_index(&self, axis: usize, p: f64, res: usize) -> usize {
        let t = (p - self.min[axis]) / self.side * res as f64;
        let mut i = if t.is_nan() || t <= 0.0 {
            0
        } else {
            (t.floor() as usize).min(res - 1)
        };
        while i > 0 && p <= self.edge(axis, i, res) {
            i -= 1;
        }
        while i + 1 < res && p > self.edge(axis, i + 1, res) {
            i += 1;
        }
        i
    }
}

/// Dense occupancy grid with one part label per occupied cell.
///
/// Cells are stored as codes: `0` empty, `k + 1` occupied with class `k`.
/// Linear index is `x + res * (y + res * z)`, with `y` pointing up.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVoxelGrid {
    resolution: usize,
    num_classes: usize,
    bounds: GridBounds,
    cells: Vec<u8>,
}

impl LabeledVoxelGrid {
    pub fn empty(resolution: usize, num_classes: usize) -> Result<Self> {
        if resolution < 2 || resolution > MAX_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} outside 2..={MAX_RESOLUTION}"
            )));
        }
        if num_classes == 0 || num_classes > 255 {
            return Err(Error::InvalidArgument(format!(
                "class count {num_classes} outside 1..=255"
            )));
        }
        Ok(Self {
            resolution,
            num_classes,
            bounds: GridBounds::UNIT,
            cells: vec![0; resolution * resolution * resolution],
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn bounds(&self) -> GridBounds {
        self.bounds
    }

    pub fn codes(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.resolution * (y + self.resolution * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let r = self.resolution;
        [idx % r, (idx / r) % r, idx / (r * r)]
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize, z: usize) -> Option<usize> {
        match self.cells[self.index(x, y, z)] {
            0 => None,
            c => Some(c as usize - 1),
        }
    }

    pub fn is_occupied(&self, x: usize, y: usize, z: usize) -> bool {
        self.cells[self.index(x, y, z)] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, label: Option<usize>) -> Result<()> {
        let code = match label {
            None => 0,
            Some(l) if l < self.num_classes => (l + 1) as u8,
            Some(l) => {
                return Err(Error::InvalidArgument(format!(
                    "label {l} >= class count {}",
                    self.num_classes
                )))
            }
        };
        let i = self.index(x, y, z);
        self.cells[i] = code;
        Ok(())
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    /// Iterates `(x, y, z, label)` over occupied cells in linear-index order.
    pub fn occupied(&self) -> impl Iterator<Item = ([usize; 3], usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (self.coords(i), c as usize - 1))
    }

    pub fn contains_class(&self, class: usize) -> bool {
        let code = class + 1;
        code <= 255 && self.cells.iter().any(|&c| c as usize == code)
    }

    /// The grid turned a quarter turn about the vertical axis, so that
    /// viewing it from azimuth `a` matches viewing the original from `a + 90`.
    pub fn rotated_quarter_turn(&self) -> Self {
        let r = self.resolution;
        let mut out = self.clone();
        out.cells.iter_mut().for_each(|c| *c = 0);
        for z in 0..r {
            for y in 0..r {
                for x in 0..r {
                    let code = self.cells[self.index(x, y, z)];
                    let dst = out.index(r - 1 - z, y, x);
                    out.cells[dst] = code;
                }
            }
        }
        out
    }

    /// Binary layout: 8-byte magic, `u32` resolution, `u32` class count (all
    /// little-endian), then `resolution³` cell codes in linear-index order.
    /// Bounds are not stored; a loaded grid has unit bounds.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.cells.len());
        out.extend_from_slice(VOXEL_MAGIC);
        out.extend_from_slice(&(self.resolution as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_classes as u32).to_le_bytes());
        out.extend_from_slice(&self.cells);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != VOXEL_MAGIC {
            return Err(Error::Format("not a voxel grid file (bad magic)".into()));
        }
        let res = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let classes = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let mut grid = Self::empty(res, classes)?;
        let body = &bytes[16..];
        if body.len() != grid.cells.len() {
            return Err(Error::Format(format!(
                "voxel body has {} bytes, expected {}",
                body.len(),
                grid.cells.len()
            )));
        }
        if let Some(&c) = body.iter().find(|&&c| c as usize > classes) {
            return Err(Error::Format(format!(
                "cell code {c} exceeds class count {classes}"
            )));
        }
        grid.cells.copy_from_slice(body);
        Ok(grid)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).at(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).at(path)?)
    }
}

/// Bins points into a cubic grid fitted to `points.aabb` and labels each
/// occupied cell by majority vote; ties go to the smallest class index.
pub fn voxelize_with_labels(points: &LabeledPointSet, resolution: usize) -> Result<LabeledVoxelGrid> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("cannot voxelize an empty point set".into()));
    }
    let (lo, hi) = points.aabb;
    voxelize_in_bounds(points, resolution, GridBounds::fit(lo, hi))
}

pub fn voxelize_in_bounds(
    points: &LabeledPointSet,
    resolution: usize,
    bounds: GridBounds,
) -> Result<LabeledVoxelGrid> {
    let mut grid = LabeledVoxelGrid::empty(resolution, points.num_classes)?;
    grid.bounds = bounds;
    let c = points.num_classes;
    let mut votes: HashMap<usize, Vec<u32>> = HashMap::new();
    for (p, &l) in points.points.iter().zip(&points.labels) {
        let [x, y, z] = [0, 1, 2].map(|a| bounds.axis_index(a, p[a], resolution));
        votes
            .entry(grid.index(x, y, z))
            .or_insert_with(|| vec![0; c])[l] += 1;
    }
    for (cell, counts) in votes {
        // max_by_key keeps the last maximum; scan in reverse so the smallest
        // class index wins ties.
        let (best, _) = counts
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, &n)| n)
            .expect("class count >= 1");
        grid.cells[cell] = (best + 1) as u8;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: Vec<Point3>, labels: Vec<usize>, c: usize) -> LabeledPointSet {
        LabeledPointSet::new(points, labels, c).unwrap()
    }

    #[test]
    fn single_point_occupies_one_cell() {
        let s = set(vec![[0.3, -2.0, 5.0]], vec![1], 3);
        let g = voxelize_with_labels(&s, 8).unwrap();
        assert_eq!(g.occupied_count(), 1);
        let (_, label) = g.occupied().next().unwrap();
        assert_eq!(label, 1);
    }

    #[test]
    fn majority_vote_and_tie_break() {
        let mut pts = vec![[0.5, 0.5, 0.5]; 100];
        let mut labels = vec![0usize; 40];
        labels.extend(vec![2usize; 60]);
        pts.push([0.0, 0.0, 0.0]);
        pts.push([1.0, 1.0, 1.0]);
        labels.push(1);
        labels.push(1);
        let g = voxelize_with_labels(&set(pts.clone(), labels, 3), 4).unwrap();
        let b = g.bounds();
        let [x, y, z] = [0, 1, 2].map(|a| b.axis_index(a, 0.5, 4));
        assert_eq!(g.label(x, y, z), Some(2));

        let mut tie = vec![1usize; 50];
        tie.extend(vec![0usize; 50]);
        tie.extend([1, 1]);
        let g = voxelize_with_labels(&set(pts, tie, 3), 4).unwrap();
        assert_eq!(g.label(x, y, z), Some(0));
    }

    #[test]
    fn boundary_point_goes_to_lower_cell() {
        let b = GridBounds {
            min: [0.0; 3],
            side: 4.0,
        };
        assert_eq!(b.axis_index(0, 1.0, 4), 0);
        assert_eq!(b.axis_index(0, 1.0 + 1e-12, 4), 1);
        assert_eq!(b.axis_index(0, 0.0, 4), 0);
        assert_eq!(b.axis_index(0, 4.0, 4), 3);
        assert_eq!(b.axis_index(0, -3.0, 4), 0);
        assert_eq!(b.axis_index(0, 9.0, 4), 3);
    }

    #[test]
    fn fitted_bounds_are_padded_cube() {
        let b = GridBounds::fit([0.0, 0.0, 0.0], [1.0, 2.0, 0.5]);
        assert!((b.side - 2.08).abs() < 1e-12);
        assert!((b.min[1] + 0.04).abs() < 1e-12);
        assert!((b.min[0] - (0.5 - 1.04)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_resolution_and_empty_points() {
        let s = set(vec![[0.0; 3]], vec![0], 1);
        assert!(voxelize_with_labels(&s, 1).is_err());
        assert!(voxelize_with_labels(&s, 129).is_err());
        let e = set(vec![], vec![], 1);
        assert!(voxelize_with_labels(&e, 8).is_err());
    }

    #[test]
    fn file_roundtrip_and_header() {
        let mut g = LabeledVoxelGrid::empty(3, 4).unwrap();
        g.set(0, 1, 2, Some(3)).unwrap();
        g.set(2, 2, 2, Some(0)).unwrap();
        let bytes = g.to_bytes();
        assert_eq!(bytes.len(), 16 + 27);
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &4u32.to_le_bytes());
        assert_eq!(bytes[16 + g.index(0, 1, 2)], 4);
        let back = LabeledVoxelGrid::from_bytes(&bytes).unwrap();
        assert_eq!(back.codes(), g.codes());
        assert!(LabeledVoxelGrid::from_bytes(&bytes[..20]).is_err());
        let mut bad = bytes.clone();
        bad[16] = 9;
        assert!(LabeledVoxelGrid::from_bytes(&bad).is_err());
    }

    #[test]
    fn quarter_turns_compose_to_identity() {
        let mut g = LabeledVoxelGrid::empty(5, 2).unwrap();
        g.set(0, 1, 4, Some(1)).unwrap();
        g.set(3, 0, 1, Some(0)).unwrap();
        let r4 = g
            .rotated_quarter_turn()
            .rotated_quarter_turn()
            .rotated_quarter_turn()
            .rotated_quarter_turn();
        assert_eq!(r4.codes(), g.codes());
        assert_ne!(g.rotated_quarter_turn().codes(), g.codes());
    }
}
