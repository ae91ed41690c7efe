//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use partcap::annotate::PartBox;
use partcap::bbox::BBox;
use partcap::geometry::{GridBounds, LabeledPointSet, LabeledVoxelGrid, TriangleMesh};
use partcap::nn::Parameters;
use partcap::render::{Camera, ColorPalette, Rgb, BACKGROUND, HIGHLIGHT, NEUTRAL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;
/// Denominator floor so gradients that are zero in both forms do not blow up
/// the relative error.
pub const FD_FLOOR: f64 = 1e-6;

/// Largest relative error between analytic and central-difference
/// gradients over every parameter.
pub fn max_grad_error<P: Parameters + Clone>(model: &P, analytic: &P, loss: impl Fn(&P) -> f64) -> f64 {
    let base = model.flat();
    let grad = analytic.flat();
    let mut probe = model.clone();
    let mut worst = 0.0_f64;
    for i in 0..base.len() {
        let mut v = base.clone();
        v[i] = base[i] + FD_STEP;
        probe.set_flat(&v);
        let up = loss(&probe);
        v[i] = base[i] - FD_STEP;
        probe.set_flat(&v);
        let down = loss(&probe);
        let numeric = (up - down) / (2.0 * FD_STEP);
        let denom = grad[i].abs().max(numeric.abs()).max(FD_FLOOR);
        worst = worst.max((grad[i] - numeric).abs() / denom);
    }
    worst
}

/// Random labelled mesh: a few axis-aligned boxes with random classes.
pub fn random_mesh(rng: &mut ChaCha8Rng, num_classes: usize) -> TriangleMesh {
    let parts = rng.gen_range(1..=4);
    let mut mesh: Option<TriangleMesh> = None;
    for _ in 0..parts {
        let lo = [0, 1, 2].map(|_| rng.gen_range(-1.0..0.5));
        let hi = lo.map(|v| v + rng.gen_range(0.05..1.0));
        let m = TriangleMesh::cuboid(lo, hi, rng.gen_range(0..num_classes), num_classes).unwrap();
        match &mut mesh {
            Some(acc) => acc.merge(&m).unwrap(),
            None => mesh = Some(m),
        }
    }
    mesh.unwrap()
}

/// Random grid with a few solid blobs.
pub fn random_grid(rng: &mut ChaCha8Rng, resolution: usize, num_classes: usize) -> LabeledVoxelGrid {
    let mut g = LabeledVoxelGrid::empty(resolution, num_classes).unwrap();
    let density = rng.gen_range(0.05..0.3);
    for z in 0..resolution {
        for y in 0..resolution {
            for x in 0..resolution {
                if rng.gen_bool(density) {
                    g.set(x, y, z, Some(rng.gen_range(0..num_classes))).unwrap();
                }
            }
        }
    }
    if g.occupied_count() == 0 {
        g.set(0, 0, 0, Some(0)).unwrap();
    }
    g
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cube fitted to the box: longest side padded 2% each way, centered.
pub fn oracle_bounds(lo: [f64; 3], hi: [f64; 3]) -> GridBounds {
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    let side = if extent > 0.0 { extent * 1.04 } else { 1.0 };
    GridBounds {
        min: [0, 1, 2].map(|a| (lo[a] + hi[a]) / 2.0 - side / 2.0),
        side,
    }
}

/// Per-point binning by a linear scan over cell boundaries, then a
/// majority vote per cell. Returns cell codes (0 empty, k+1 class k).
pub fn oracle_voxelize(points: &LabeledPointSet, res: usize, bounds: GridBounds) -> Vec<u8> {
    let mut votes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (p, &l) in points.points.iter().zip(&points.labels) {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            idx[a] = (0..res)
                .find(|&i| p[a] <= bounds.edge(a, i + 1, res))
                .unwrap_or(res - 1);
        }
        let cell = idx[0] + res * (idx[1] + res * idx[2]);
        votes.entry(cell).or_insert_with(|| vec![0; points.num_classes])[l] += 1;
    }
    let mut codes = vec![0u8; res * res * res];
    for (cell, counts) in votes {
        let top = *counts.iter().max().unwrap();
        let class = counts.iter().position(|&n| n == top).unwrap();
        codes[cell] = class as u8 + 1;
    }
    codes
}

fn oracle_slab(o: [f64; 3], d: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Option<f64> {
    let (mut near, mut far) = (f64::NEG_INFINITY, f64::INFINITY);
    for a in 0..3 {
        if d[a] == 0.0 {
            if o[a] < lo[a] || o[a] > hi[a] {
                return None;
            }
            continue;
        }
        let t1 = (lo[a] - o[a]) / d[a];
        let t2 = (hi[a] - o[a]) / d[a];
        near = near.max(t1.min(t2));
        far = far.min(t1.max(t2));
    }
    (near <= far).then_some(near)
}

/// Class of the nearest occupied cell along each pixel's ray, testing every
/// cell for every pixel.
pub fn oracle_labels(grid: &LabeledVoxelGrid, cam: &Camera) -> Vec<Option<usize>> {
    let frame = cam.frame(grid);
    let n = frame.size;
    let cells: Vec<([usize; 3], usize)> = grid.occupied().collect();
    let mut out = vec![None; n * n];
    for py in 0..n {
        for px in 0..n {
            let o = frame.ray_origin(px, py);
            let mut best: Option<(f64, usize)> = None;
            for &(c, label) in &cells {
                let lo = c.map(|v| v as f64);
                let hi = c.map(|v| v as f64 + 1.0);
                if let Some(t) = oracle_slab(o, frame.dir, lo, hi) {
                    if best.map_or(true, |(bt, _)| t < bt) {
                        best = Some((t, label));
                    }
                }
            }
            out[py * n + px] = best.map(|(_, l)| l);
        }
    }
    out
}

pub enum OracleMode<'a> {
    Geometry,
    Colored(&'a ColorPalette),
    Highlight(usize),
}

/// Binary PPM bytes of the oracle render.
pub fn oracle_ppm(labels: &[Option<usize>], size: usize, mode: &OracleMode) -> Vec<u8> {
    let mut out = format!("P6\n{size} {size}\n255\n").into_bytes();
    for l in labels {
        let c: Rgb = match (l, mode) {
            (None, _) => BACKGROUND,
            (Some(_), OracleMode::Geometry) => NEUTRAL,
            (Some(k), OracleMode::Colored(p)) => p.colors()[*k],
            (Some(k), OracleMode::Highlight(h)) if k == h => HIGHLIGHT,
            (Some(_), OracleMode::Highlight(_)) => NEUTRAL,
        };
        out.extend_from_slice(&c);
    }
    out
}

/// 8-connected flood fill over `mask`, then a min/max scan of each region's
/// pixel list. Regions smaller than `min_pixels` are dropped; output is in
/// raster order of each region's first pixel.
pub fn oracle_boxes(mask: &[bool], width: usize, min_pixels: usize) -> Vec<BBox> {
    let height = mask.len() / width;
    let mut region = vec![usize::MAX; mask.len()];
    let mut regions: Vec<Vec<(usize, usize)>> = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || region[start] != usize::MAX {
            continue;
        }
        let id = regions.len();
        let mut pixels = Vec::new();
        let mut stack = vec![start];
        region[start] = id;
        while let Some(p) = stack.pop() {
            let (x, y) = (p % width, p / width);
            pixels.push((x, y));
            for ny in y.saturating_sub(1)..=(y + 1).min(height - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                    let q = ny * width + nx;
                    if mask[q] && region[q] == usize::MAX {
                        region[q] = id;
                        stack.push(q);
                    }
                }
            }
        }
        regions.push(pixels);
    }
    regions
        .into_iter()
        .filter(|r| r.len() >= min_pixels)
        .map(|r| {
            let x0 = r.iter().map(|p| p.0).min().unwrap();
            let x1 = r.iter().map(|p| p.0).max().unwrap();
            let y0 = r.iter().map(|p| p.1).min().unwrap();
            let y1 = r.iter().map(|p| p.1).max().unwrap();
            BBox::new(x0 as f64, y0 as f64, (x1 + 1) as f64, (y1 + 1) as f64)
        })
        .collect()
}

/// Every side of the box touches at least one masked pixel.
pub fn is_tight(b: &BBox, mask: &[bool], width: usize) -> bool {
    let (x0, y0, x1, y1) = (b.x0 as usize, b.y0 as usize, b.x1 as usize - 1, b.y1 as usize - 1);
    let at = |x: usize, y: usize| mask[y * width + x];
    (y0..=y1).any(|y| at(x0, y))
        && (y0..=y1).any(|y| at(x1, y))
        && (x0..=x1).any(|x| at(x, y0))
        && (x0..=x1).any(|x| at(x, y1))
}

pub fn box_classes(boxes: &[PartBox]) -> Vec<usize> {
    boxes.iter().map(|b| b.class()).collect()
}

pub fn random_detections(r: &mut ChaCha8Rng, n: usize, c: usize, d: usize) -> Vec<partcap::detector::Detection> {
    (0..n)
        .map(|_| {
            let class = r.gen_range(0..c);
            let mut probs: Vec<f64> = (0..c).map(|_| r.gen_range(0.0..0.1)).collect();
            probs[class] = r.gen_range(0.5..1.0);
            let s: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= s);
            partcap::detector::Detection {
                view_index: r.gen_range(0..4),
                bbox: BBox::new(0.0, 0.0, 8.0, 8.0),
                probs,
                feature: (0..d).map(|_| r.gen_range(-2.0..2.0)).collect(),
            }
        })
        .collect()
}

/// One randomized round of the pooling properties: permutation invariance
/// for every mode, class isolation for max/mean/mixed, max idempotence under
/// duplication, and the class leak of max_all.
pub fn aggregation_trial(seed: u64) -> Result<(), String> {
    use partcap::aggregate::{aggregate, AggregationConfig, PoolingMode};
    use rand::seq::SliceRandom;

    let mut r = rng(seed);
    let (c, d) = (r.gen_range(2..5), r.gen_range(1..6));
    let n = r.gen_range(1..12);
    let dets = random_detections(&mut r, n, c, d);
    let cfg = |mode| AggregationConfig { mode, ..AggregationConfig::new(c, d) };
    let modes = [PoolingMode::Max, PoolingMode::Mean, PoolingMode::Mixed, PoolingMode::MaxAll];

    let mut shuffled = dets.clone();
    shuffled.shuffle(&mut r);
    for mode in modes {
        if aggregate(&dets, &cfg(mode)).unwrap() != aggregate(&shuffled, &cfg(mode)).unwrap() {
            return Err(format!("{mode} not permutation invariant"));
        }
    }

    let a = r.gen_range(0..c);
    let mut edited: Vec<_> = dets.iter().filter(|x| x.class() != a).cloned().collect();
    let mut extra = random_detections(&mut r, 3, c, d);
    for e in &mut extra {
        e.probs.iter_mut().for_each(|p| *p = 0.0);
        e.probs[a] = 1.0;
    }
    edited.extend(extra.iter().cloned());
    for mode in [PoolingMode::Max, PoolingMode::Mean, PoolingMode::Mixed] {
        let before = aggregate(&dets, &cfg(mode)).unwrap();
        let after = aggregate(&edited, &cfg(mode)).unwrap();
        for b in (0..c).filter(|&b| b != a) {
            if before.per_class[b] != after.per_class[b] || before.present[b] != after.present[b] {
                return Err(format!("{mode}: editing class {a} changed class {b}"));
            }
        }
    }

    let mut doubled = dets.clone();
    doubled.push(dets[r.gen_range(0..n)].clone());
    if aggregate(&doubled, &cfg(PoolingMode::Max)).unwrap() != aggregate(&dets, &cfg(PoolingMode::Max)).unwrap() {
        return Err("max changed under duplication".into());
    }

    let mut spike = extra[0].clone();
    spike.feature = vec![1e3; d];
    let mut leaked = dets.clone();
    leaked.push(spike);
    let before = aggregate(&dets, &cfg(PoolingMode::MaxAll)).unwrap();
    let after = aggregate(&leaked, &cfg(PoolingMode::MaxAll)).unwrap();
    if (0..c).any(|b| before.per_class[b] == after.per_class[b]) {
        return Err("max_all kept a slot isolated from a crafted detection".into());
    }
    Ok(())
}
