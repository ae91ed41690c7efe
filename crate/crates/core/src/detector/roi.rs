use crate::bbox::BBox;
use crate::nn::FeatureMap;

/// Bilinear taps `(spatial index, weight)` for each pooling bin of one box.
///
/// A bin averages 2×2 bilinear samples of the feature map; taps falling
/// outside the map contribute zero. The same taps apply to every channel.
#[derive(Debug, Clone)]
pub struct RoiTaps {
    pub bins: Vec<Vec<(usize, f64)>>,
}

/// Layout of the pooled descriptor: an inner grid over the box plus a coarser
/// grid over the box enlarged about its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiLayout {
    pub inner_bins: usize,
    pub context_bins: usize,
    pub context_scale: f64,
    /// Input pixels per feature cell.
    pub stride: usize,
}

impl RoiLayout {
    pub fn bins(&self) -> usize {
        self.inner_bins * self.inner_bins + self.context_bins * self.context_bins
    }

    pub fn taps(&self, b: &BBox, fh: usize, fw: usize) -> RoiTaps {
        let mut bins = Vec::with_capacity(self.bins());
        grid_taps(b, self.inner_bins, self.stride, fh, fw, &mut bins);
        if self.context_bins > 0 {
            let (cx, cy) = b.center();
            let ctx = BBox::from_center(cx, cy, b.width() * self.context_scale, b.height() * self.context_scale);
            grid_taps(&ctx, self.context_bins, self.stride, fh, fw, &mut bins);
        }
        RoiTaps { bins }
    }
}

fn grid_taps(b: &BBox, g: usize, stride: usize, fh: usize, fw: usize, out: &mut Vec<Vec<(usize, f64)>>) {
    let bw = b.width() / g as f64;
    let bh = b.height() / g as f64;
    let s = stride as f64;
    for by in 0..g {
        for bx in 0..g {
            let mut taps: Vec<(usize, f64)> = Vec::with_capacity(16);
            for sy in [0.25, 0.75] {
                for sx in [0.25, 0.75] {
                    let px = b.x0 + (bx as f64 + sx) * bw;
                    let py = b.y0 + (by as f64 + sy) * bh;
                    let fx = (px - 0.5) / s;
                    let fy = (py - 0.5) / s;
                    let x0 = fx.floor();
                    let y0 = fy.floor();
                    let ax = fx - x0;
                    let ay = fy - y0;
                    for (dy, wy) in [(0isize, 1.0 - ay), (1, ay)] {
                        for (dx, wx) in [(0isize, 1.0 - ax), (1, ax)] {
                            let xi = x0 as isize + dx;
                            let yi = y0 as isize + dy;
                            let w = 0.25 * wx * wy;
                            if w == 0.0 || xi < 0 || yi < 0 || xi >= fw as isize || yi >= fh as isize {
                                continue;
                            }
                            let idx = yi as usize * fw + xi as usize;
                            match taps.iter_mut().find(|(i, _)| *i == idx) {
                                Some(t) => t.1 += w,
                                None => taps.push((idx, w)),
                            }
                        }
                    }
                }
            }
            out.push(taps);
        }
    }
}

/// Pooled descriptor laid out channel-major: `out[c * bins + b]`.
pub fn roi_pool(fm: &FeatureMap, taps: &RoiTaps) -> Vec<f64> {
    let nb = taps.bins.len();
    let plane = fm.height * fm.width;
    let mut out = vec![0.0; fm.channels * nb];
    for c in 0..fm.channels {
        let p = &fm.data[c * plane..(c + 1) * plane];
        for (b, t) in taps.bins.iter().enumerate() {
            out[c * nb + b] = t.iter().map(|&(i, w)| w * p[i]).sum();
        }
    }
    out
}

/// Scatters `dL/dpooled` back onto the feature map gradient.
pub fn roi_pool_backward(dpooled: &[f64], taps: &RoiTaps, dfm: &mut FeatureMap) {
    let nb = taps.bins.len();
    let plane = dfm.height * dfm.width;
    for c in 0..dfm.channels {
        let p = &mut dfm.data[c * plane..(c + 1) * plane];
        for (b, t) in taps.bins.iter().enumerate() {
            let g = dpooled[c * nb + b];
            if g == 0.0 {
                continue;
            }
            for &(i, w) in t {
                p[i] += w * g;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map_pools_to_constant_inside() {
        let fm = FeatureMap {
            channels: 2,
            height: 8,
            width: 8,
            data: vec![1.5; 128],
        };
        let layout = RoiLayout {
            inner_bins: 3,
            context_bins: 0,
            context_scale: 2.0,
            stride: 4,
        };
        let taps = layout.taps(&BBox::new(8.0, 8.0, 24.0, 24.0), 8, 8);
        let pooled = roi_pool(&fm, &taps);
        assert_eq!(pooled.len(), 18);
        assert!(pooled.iter().all(|v| (v - 1.5).abs() < 1e-12));
    }

    #[test]
    fn stride_shift_moves_taps_by_one_cell() {
        let layout = RoiLayout {
            inner_bins: 2,
            context_bins: 2,
            context_scale: 2.0,
            stride: 4,
        };
        let b = BBox::new(10.0, 12.0, 30.0, 26.0);
        let a = layout.taps(&b, 16, 16);
        let s = layout.taps(&b.translate(4.0, 0.0), 16, 16);
        for (ta, ts) in a.bins.iter().zip(&s.bins) {
            for (&(ia, wa), &(is, ws)) in ta.iter().zip(ts) {
                assert_eq!(is, ia + 1);
                assert!((wa - ws).abs() < 1e-12);
            }
        }
    }
}
