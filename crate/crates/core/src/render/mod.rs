//! Orthographic voxel rendering in geometry, colored and per-class highlight
//! modes.
//!
//! Every pixel casts one ray through its center; the first occupied cell the
//! ray touches decides the pixel. Cells are closed boxes, so rays grazing an
//! edge count as hits. Equal entry distances resolve to the smaller linear
//! cell index. All modes share that per-pixel hit, which keeps silhouettes
//! identical across modes.

mod camera;
mod image;

pub use camera::{
    default_viewpoints, slab_entry, viewpoints, Camera, ViewFrame, DEFAULT_ELEVATION,
    DEFAULT_IMAGE_SIZE,
};
pub use image::{ColorPalette, RenderMode, Rgb, ViewImage, BACKGROUND, HIGHLIGHT, NEUTRAL};

use crate::error::{Error, Result};
use crate::geometry::LabeledVoxelGrid;

/// Per-pixel class of the first occupied cell hit, `None` for background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub size: usize,
    pub labels: Vec<Option<u8>>,
}

impl LabelMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<usize> {
        self.labels[y * self.size + x].map(usize::from)
    }

    pub fn colorize(&self, mode: RenderMode, palette: Option<&ColorPalette>) -> ViewImage {
        let mut img = ViewImage::filled(self.size, self.size, BACKGROUND, mode);
        for (px, l) in img.pixels.iter_mut().zip(&self.labels) {
            if let Some(l) = *l {
                let l = l as usize;
                *px = match mode {
                    RenderMode::Geometry => NEUTRAL,
                    RenderMode::Colored => palette.and_then(|p| p.color(l)).unwrap_or(NEUTRAL),
                    RenderMode::Highlight(c) if c == l => HIGHLIGHT,
                    RenderMode::Highlight(_) => NEUTRAL,
                };
            }
        }
        img
    }

    /// Mask of pixels whose visible cell belongs to `class`.
    pub fn class_mask(&self, class: usize) -> Vec<bool> {
        self.labels
            .iter()
            .map(|l| l.map(usize::from) == Some(class))
            .collect()
    }
}

/// Object-order rasterization: each occupied cell tests only the pixels
/// under its projected footprint.
pub fn render_labels(grid: &LabeledVoxelGrid, cam: &Camera) -> LabelMap {
    let frame = cam.frame(grid);
    let n = frame.size;
    let mut best_t = vec![f64::INFINITY; n * n];
    let mut best_cell = vec![usize::MAX; n * n];
    let mut labels = vec![None; n * n];
    for (cell, label) in grid.occupied() {
        let lo = cell.map(|c| c as f64);
        let hi = cell.map(|c| c as f64 + 1.0);
        let idx = grid.index(cell[0], cell[1], cell[2]);
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for k in 0..8 {
            let corner = [
                if k & 1 == 0 { lo[0] } else { hi[0] },
                if k & 2 == 0 { lo[1] } else { hi[1] },
                if k & 4 == 0 { lo[2] } else { hi[2] },
            ];
            let (px, py) = frame.project(corner);
            x0 = x0.min(px);
            x1 = x1.max(px);
            y0 = y0.min(py);
            y1 = y1.max(py);
        }
        let clamp = |v: f64| v.max(0.0).min((n - 1) as f64) as usize;
        let (xa, xb) = (clamp(x0.floor() - 1.0), clamp(x1.ceil() + 1.0));
        let (ya, yb) = (clamp(y0.floor() - 1.0), clamp(y1.ceil() + 1.0));
        if x1 < -1.0 || y1 < -1.0 || x0 > n as f64 || y0 > n as f64 {
            continue;
        }
        for py in ya..=yb {
            for px in xa..=xb {
                let o = frame.ray_origin(px, py);
                if let Some(t) = slab_entry(o, frame.dir, lo, hi) {
                    let p = py * n + px;
                    if t < best_t[p] || (t == best_t[p] && idx < best_cell[p]) {
                        best_t[p] = t;
                        best_cell[p] = idx;
                        labels[p] = Some(label as u8);
                    }
                }
            }
        }
    }
    LabelMap { size: n, labels }
}

/// Geometry render (`palette` none, neutral gray) or colored render.
pub fn render_view(grid: &LabeledVoxelGrid, cam: &Camera, palette: Option<&ColorPalette>) -> ViewImage {
    let mode = if palette.is_some() {
        RenderMode::Colored
    } else {
        RenderMode::Geometry
    };
    render_labels(grid, cam).colorize(mode, palette)
}

/// Cells of `part_class` visible from `cam` drawn in blue, other occupied
/// cells neutral gray.
pub fn render_part_highlight(grid: &LabeledVoxelGrid, cam: &Camera, part_class: usize) -> Result<ViewImage> {
    if part_class >= grid.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "part class {part_class} >= class count {}",
            grid.num_classes()
        )));
    }
    Ok(render_labels(grid, cam).colorize(RenderMode::Highlight(part_class), None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_renders_background() {
        let g = LabeledVoxelGrid::empty(8, 2).unwrap();
        let cam = Camera::new(30.0, 30.0, 32).unwrap();
        let img = render_view(&g, &cam, None);
        assert!(img.pixels.iter().all(|&p| p == BACKGROUND));
        assert_eq!(img.pixels.len(), 32 * 32);
    }

    #[test]
    fn center_voxel_front_view_is_centered_square() {
        let mut g = LabeledVoxelGrid::empty(9, 1).unwrap();
        g.set(4, 4, 4, Some(0)).unwrap();
        let img = render_view(&g, &Camera::front(64).unwrap(), None);
        let on: Vec<(usize, usize)> = (0..64)
            .flat_map(|y| (0..64).map(move |x| (x, y)))
            .filter(|&(x, y)| img.get(x, y) != BACKGROUND)
            .collect();
        assert!(!on.is_empty());
        let xs: Vec<usize> = on.iter().map(|p| p.0).collect();
        let ys: Vec<usize> = on.iter().map(|p| p.1).collect();
        let (x0, x1) = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
        let (y0, y1) = (*ys.iter().min().unwrap(), *ys.iter().max().unwrap());
        assert_eq!(x1 - x0, y1 - y0);
        assert_eq!(on.len(), (x1 - x0 + 1) * (y1 - y0 + 1));
        assert_eq!(x0 + x1, 63);
        assert_eq!(y0 + y1, 63);
    }

    #[test]
    fn highlight_of_absent_class_is_empty_and_full_class_matches_silhouette() {
        let mut g = LabeledVoxelGrid::empty(6, 3).unwrap();
        for x in 1..5 {
            g.set(x, 2, 3, Some(1)).unwrap();
        }
        let cam = Camera::new(45.0, 30.0, 32).unwrap();
        let none = render_part_highlight(&g, &cam, 0).unwrap();
        assert!(!none.pixels.contains(&HIGHLIGHT));
        let all = render_part_highlight(&g, &cam, 1).unwrap();
        assert_eq!(all.mask_of(HIGHLIGHT), all.silhouette());
        assert!(render_part_highlight(&g, &cam, 3).is_err());
    }

    #[test]
    fn palette_changes_only_foreground_color() {
        let mut g = LabeledVoxelGrid::empty(6, 2).unwrap();
        g.set(2, 2, 2, Some(0)).unwrap();
        g.set(3, 2, 2, Some(1)).unwrap();
        let cam = Camera::new(60.0, 20.0, 32).unwrap();
        let pal = ColorPalette::new(vec![[200, 10, 10], [10, 200, 10]]).unwrap();
        let plain = render_view(&g, &cam, None);
        let colored = render_view(&g, &cam, Some(&pal));
        assert_eq!(plain.silhouette(), colored.silhouette());
        assert_ne!(plain.pixels, colored.pixels);
        assert_eq!(colored.mode, RenderMode::Colored);
    }
}
