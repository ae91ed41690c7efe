use crate::error::{Error, Result};
use crate::geometry::LabeledVoxelGrid;

pub const DEFAULT_IMAGE_SIZE: usize = 128;
pub const DEFAULT_ELEVATION: f64 = 30.0;

/// Fraction of the image spanned by the shape's bounding sphere.
const FILL_FRACTION: f64 = 0.9;

/// Orthographic camera orbiting the grid center.
///
/// Azimuth 0 looks down the -z axis with +x to the right; positive
/// elevation tilts the camera above the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    azimuth: f64,
    elevation: f64,
    image_size: usize,
}

impl Camera {
    pub fn new(azimuth: f64, elevation: f64, image_size: usize) -> Result<Self> {
        if !(0.0..360.0).contains(&azimuth) {
            return Err(Error::InvalidArgument(format!("azimuth {azimuth} outside [0,360)")));
        }
        if !(elevation > -90.0 && elevation < 90.0) {
            return Err(Error::InvalidArgument(format!("elevation {elevation} outside (-90,90)")));
        }
        if image_size < 16 {
            return Err(Error::InvalidArgument(format!("image size {image_size} < 16")));
        }
        Ok(Self {
            azimuth,
            elevation,
            image_size,
        })
    }

    /// Front view: azimuth 0, elevation 0.
    pub fn front(image_size: usize) -> Result<Self> {
        Self::new(0.0, 0.0, image_size)
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    /// Ray geometry for rendering `grid` from this camera.
    pub fn frame(&self, grid: &LabeledVoxelGrid) -> ViewFrame {
        let (sa, ca) = self.azimuth.to_radians().sin_cos();
        let (se, ce) = self.elevation.to_radians().sin_cos();
        let toward = [ce * sa, se, ce * ca];
        let right = [ca, 0.0, -sa];
        let up = [-se * sa, ce, -se * ca];
        let res = grid.resolution() as f64;
        let half = 0.5 * res;
        let radius = occupied_radius(grid);
        let size = self.image_size as f64;
        let scale = FILL_FRACTION * size / (2.0 * radius);
        let back = 2.0 * res;
        ViewFrame {
            size: self.image_size,
            scale,
            origin0: [0, 1, 2].map(|a| half + back * toward[a]),
            right,
            up,
            dir: toward.map(|v| -v),
        }
    }
}

/// Radius of the sphere around the grid center enclosing all occupied cells,
/// in cell units. Empty grids use the whole cube.
fn occupied_radius(grid: &LabeledVoxelGrid) -> f64 {
    let half = 0.5 * grid.resolution() as f64;
    let mut best = 0.0_f64;
    for (c, _) in grid.occupied() {
        let d2: f64 = c
            .iter()
            .map(|&i| {
                let lo = (i as f64 - half).abs();
                let hi = (i as f64 + 1.0 - half).abs();
                lo.max(hi).powi(2)
            })
            .sum();
        best = best.max(d2);
    }
    if best > 0.0 {
        best.sqrt()
    } else {
        half * 3f64.sqrt()
    }
}

/// Per-view ray generator in grid cell coordinates (cell `(i,j,k)` spans
/// `[i,i+1]×[j,j+1]×[k,k+1]`).
#[derive(Debug, Clone, Copy)]
pub struct ViewFrame {
    pub size: usize,
    /// Pixels per cell unit.
    pub scale: f64,
    origin0: [f64; 3],
    right: [f64; 3],
    up: [f64; 3],
    pub dir: [f64; 3],
}

impl ViewFrame {
    /// Ray origin through the center of pixel `(px, py)`; row 0 is the top.
    #[inline]
    pub fn ray_origin(&self, px: usize, py: usize) -> [f64; 3] {
        let h = 0.5 * self.size as f64;
        let sx = (px as f64 + 0.5 - h) / self.scale;
        let sy = (h - py as f64 - 0.5) / self.scale;
        [
            self.origin0[0] + sx * self.right[0] + sy * self.up[0],
            self.origin0[1] + sx * self.right[1] + sy * self.up[1],
            self.origin0[2] + sx * self.right[2] + sy * self.up[2],
        ]
    }

    /// Continuous pixel coordinates of a grid-space point.
    #[inline]
    pub fn project(&self, p: [f64; 3]) -> (f64, f64) {
        let h = 0.5 * self.size as f64;
        let d = [p[0] - self.origin0[0], p[1] - self.origin0[1], p[2] - self.origin0[2]];
        let sx = d[0] * self.right[0] + d[1] * self.right[1] + d[2] * self.right[2];
        let sy = d[0] * self.up[0] + d[1] * self.up[1] + d[2] * self.up[2];
        (sx * self.scale + h - 0.5, h - sy * self.scale - 0.5)
    }
}

/// Entry distance of a ray into a closed box, if it touches the box.
#[inline]
pub fn slab_entry(origin: [f64; 3], dir: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Option<f64> {
    let mut tmin = f64::NEG_INFINITY;
    let mut tmax = f64::INFINITY;
    for a in 0..3 {
        if dir[a] == 0.0 {
            if origin[a] < lo[a] || origin[a] > hi[a] {
                return None;
            }
        } else {
            let t1 = (lo[a] - origin[a]) / dir[a];
            let t2 = (hi[a] - origin[a]) / dir[a];
            tmin = tmin.max(t1.min(t2));
            tmax = tmax.min(t1.max(t2));
        }
    }
    (tmin <= tmax).then_some(tmin)
}

/// `V` cameras at equal azimuth spacing, fixed elevation.
pub fn default_viewpoints(views: usize) -> Result<Vec<Camera>> {
    viewpoints(views, DEFAULT_ELEVATION, DEFAULT_IMAGE_SIZE)
}

pub fn viewpoints(views: usize, elevation: f64, image_size: usize) -> Result<Vec<Camera>> {
    if views == 0 {
        return Err(Error::InvalidArgument("view count must be >= 1".into()));
    }
    (0..views)
        .map(|i| Camera::new(360.0 * i as f64 / views as f64, elevation, image_size))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_views_every_thirty_degrees() {
        let cams = default_viewpoints(12).unwrap();
        let az: Vec<f64> = cams.iter().map(|c| c.azimuth()).collect();
        let expect: Vec<f64> = (0..12).map(|i| 30.0 * i as f64).collect();
        assert_eq!(az, expect);
        assert!(cams.iter().all(|c| c.elevation() == 30.0 && c.image_size() == 128));
    }

    #[test]
    fn one_and_four_views() {
        assert_eq!(default_viewpoints(1).unwrap()[0].azimuth(), 0.0);
        let four: Vec<f64> = default_viewpoints(4).unwrap().iter().map(|c| c.azimuth()).collect();
        assert_eq!(four, vec![0.0, 90.0, 180.0, 270.0]);
        assert!(default_viewpoints(0).is_err());
    }

    #[test]
    fn camera_validation() {
        assert!(Camera::new(360.0, 0.0, 64).is_err());
        assert!(Camera::new(0.0, 90.0, 64).is_err());
        assert!(Camera::new(0.0, 0.0, 15).is_err());
        assert!(Camera::new(359.9, -89.0, 16).is_ok());
    }

    #[test]
    fn slab_hits_and_misses() {
        let t = slab_entry([0.5, 0.5, 10.0], [0.0, 0.0, -1.0], [0.0; 3], [1.0; 3]);
        assert_eq!(t, Some(9.0));
        assert_eq!(slab_entry([1.5, 0.5, 10.0], [0.0, 0.0, -1.0], [0.0; 3], [1.0; 3]), None);
        // grazing the face counts as a hit
        assert_eq!(slab_entry([1.0, 0.5, 10.0], [0.0, 0.0, -1.0], [0.0; 3], [1.0; 3]), Some(9.0));
    }
}
