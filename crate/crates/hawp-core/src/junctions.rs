//! Junction heatmap / offset ground truth on the stride-s lattice and
//! endpoint extraction via local non-maximum suppression, top-N selection,
//! and sub-pixel offset refinement.

use crate::geometry::{Junction, Point2, Wireframe};
use crate::hatfield::lattice_dim;

/// Binary (for ground truth) endpoint heatmap plus componentwise sub-pixel
/// offsets on the stride-s lattice. Offsets live in `[0, 1)` except for
/// endpoints sitting exactly on the right/bottom image border, which store
/// an offset of exactly 1 in the clamped last cell so the inverse mapping
/// `(cell + offset) * stride` stays exact.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionMaps {
    pub width: usize,
    pub height: usize,
    pub stride: u32,
    pub heatmap: Vec<f32>,
    pub offset_x: Vec<f32>,
    pub offset_y: Vec<f32>,
}

impl JunctionMaps {
    pub fn zeros(width: usize, height: usize, stride: u32) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            stride,
            heatmap: vec![0.0; n],
            offset_x: vec![0.0; n],
            offset_y: vec![0.0; n],
        }
    }

    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// Selection mode for [`extract_junctions`]: the top-N budget differs
/// between training (tied to the ground-truth junction count) and testing
/// (tied to the heatmap response above `tau_j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractMode {
    Train,
    Test,
}

/// Default heatmap response threshold used by the test-mode budget.
pub const DEFAULT_TAU_J: f64 = 0.008;

/// Builds ground-truth junction maps from the unique segment endpoints of
/// `wf`: the cell `floor(p / stride)` is set to 1 and the fractional part
/// of `p / stride` stored as its offset.
pub fn gt_junction_maps(wf: &Wireframe, stride: u32) -> JunctionMaps {
    let width = lattice_dim(wf.width, stride);
    let height = lattice_dim(wf.height, stride);
    let mut maps = JunctionMaps::zeros(width, height, stride);
    let s = stride as f64;
    for p in wf.unique_endpoints() {
        let gx = p.x / s;
        let gy = p.y / s;
        let cx = (gx.floor() as usize).min(width - 1);
        let cy = (gy.floor() as usize).min(height - 1);
        let i = maps.idx(cx, cy);
        maps.heatmap[i] = 1.0;
        maps.offset_x[i] = (gx - cx as f64) as f32;
        maps.offset_y[i] = (gy - cy as f64) as f32;
    }
    maps
}

/// Extracts scored junctions from heatmap/offset maps.
///
/// A cell survives the 3x3 NMS when it is strictly greater than each of its
/// neighbors, with equal-valued neighbors losing to the lower row-major
/// index (so plateaus keep exactly their index-minimal cells). Survivors
/// are ranked by descending score and cut to `N = max(2 * n_gt, 300)` in
/// train mode or `N = max(#{heatmap >= tau_j}, 300)` (raw cell count) in
/// test mode. Positions are refined to `(cell + offset) * stride` image
/// coordinates.
pub fn extract_junctions(
    maps: &JunctionMaps,
    mode: ExtractMode,
    n_gt: usize,
    tau_j: f64,
) -> Vec<Junction> {
    let (w, h) = (maps.width, maps.height);
    let mut survivors: Vec<(usize, f32)> = Vec::new();
    for y in 0..h {
        'cell: for x in 0..w {
            let i = y * w + x;
            let v = maps.heatmap[i];
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    let nv = maps.heatmap[j];
                    if nv > v || (nv == v && j < i) {
                        continue 'cell;
                    }
                }
            }
            survivors.push((i, v));
        }
    }
    survivors.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let n = match mode {
        ExtractMode::Train => (2 * n_gt).max(300),
        ExtractMode::Test => {
            let above = maps.heatmap.iter().filter(|&&v| v as f64 >= tau_j).count();
            above.max(300)
        }
    };
    survivors.truncate(n);
    let s = maps.stride as f64;
    survivors
        .into_iter()
        .map(|(i, v)| {
            let x = i % w;
            let y = i / w;
            let px = (x as f64 + maps.offset_x[i] as f64) * s;
            let py = (y as f64 + maps.offset_y[i] as f64) * s;
            Junction::new(Point2::new(px, py), v as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LineSegment;
    use approx::assert_abs_diff_eq;

    fn wf_with_segments(segs: &[(f64, f64, f64, f64)]) -> Wireframe {
        let mut wf = Wireframe::new(64, 64);
        for &(x1, y1, x2, y2) in segs {
            wf.segments
                .push(LineSegment::new(Point2::new(x1, y1), Point2::new(x2, y2)));
        }
        wf
    }

    #[test]
    fn gt_maps_aligned_endpoint() {
        let wf = wf_with_segments(&[(8.0, 8.0, 40.0, 8.0)]);
        let maps = gt_junction_maps(&wf, 4);
        let i = maps.idx(2, 2);
        assert_eq!(maps.heatmap[i], 1.0);
        assert_eq!(maps.offset_x[i], 0.0);
        assert_eq!(maps.offset_y[i], 0.0);
    }

    #[test]
    fn gt_maps_fractional_offset() {
        let wf = wf_with_segments(&[(9.0, 11.0, 40.0, 40.0)]);
        let maps = gt_junction_maps(&wf, 4);
        let i = maps.idx(2, 2);
        assert_eq!(maps.heatmap[i], 1.0);
        assert_abs_diff_eq!(maps.offset_x[i], 0.25);
        assert_abs_diff_eq!(maps.offset_y[i], 0.75);
    }

    #[test]
    fn gt_maps_shared_endpoint_single_activation() {
        let wf = wf_with_segments(&[(8.0, 8.0, 40.0, 8.0), (8.0, 8.0, 8.0, 40.0)]);
        let maps = gt_junction_maps(&wf, 4);
        let on: usize = maps.heatmap.iter().filter(|&&v| v > 0.0).count();
        assert_eq!(on, 3);
    }

    #[test]
    fn gt_maps_border_endpoint_round_trips() {
        let wf = wf_with_segments(&[(20.0, 20.0, 64.0, 64.0)]);
        let maps = gt_junction_maps(&wf, 4);
        let i = maps.idx(15, 15);
        assert_eq!(maps.heatmap[i], 1.0);
        assert_eq!(maps.offset_x[i], 1.0);
        let juncs = extract_junctions(&maps, ExtractMode::Train, 2, DEFAULT_TAU_J);
        assert!(juncs
            .iter()
            .any(|j| j.p.distance(Point2::new(64.0, 64.0)) < 1e-6));
    }

    #[test]
    fn extract_round_trips_gt_endpoints() {
        let wf = wf_with_segments(&[(8.5, 9.25, 41.0, 10.0), (20.0, 40.0, 55.5, 58.75)]);
        let maps = gt_junction_maps(&wf, 4);
        let juncs = extract_junctions(&maps, ExtractMode::Train, 4, DEFAULT_TAU_J);
        let positive: Vec<&Junction> = juncs.iter().filter(|j| j.score > 0.0).collect();
        assert_eq!(positive.len(), 4);
        for p in wf.unique_endpoints() {
            let best = positive
                .iter()
                .map(|j| j.p.distance(p))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6, "endpoint {p:?} missed by {best}");
        }
    }

    #[test]
    fn uniform_heatmap_keeps_top_left() {
        let mut maps = JunctionMaps::zeros(8, 8, 4);
        maps.heatmap.fill(0.3);
        let juncs = extract_junctions(&maps, ExtractMode::Train, 1, DEFAULT_TAU_J);
        assert_eq!(juncs.len(), 1);
        assert_abs_diff_eq!(juncs[0].p.x, 0.0);
        assert_abs_diff_eq!(juncs[0].p.y, 0.0);
    }

    #[test]
    fn single_activation_extracted_at_refined_position() {
        let mut maps = JunctionMaps::zeros(8, 8, 4);
        let i = maps.idx(3, 5);
        maps.heatmap[i] = 1.0;
        maps.offset_x[i] = 0.5;
        maps.offset_y[i] = 0.25;
        let juncs = extract_junctions(&maps, ExtractMode::Test, 0, DEFAULT_TAU_J);
        let hot: Vec<&Junction> = juncs.iter().filter(|j| j.score > 0.0).collect();
        assert_eq!(hot.len(), 1);
        assert_abs_diff_eq!(hot[0].p.x, 14.0);
        assert_abs_diff_eq!(hot[0].p.y, 21.0);
    }

    #[test]
    fn outputs_sorted_by_descending_score() {
        let mut maps = JunctionMaps::zeros(16, 16, 4);
        for (x, y, v) in [(2, 2, 0.4), (8, 3, 0.9), (12, 12, 0.7)] {
            let i = maps.idx(x, y);
            maps.heatmap[i] = v;
        }
        let juncs = extract_junctions(&maps, ExtractMode::Test, 0, 0.1);
        let scores: Vec<f64> = juncs.iter().map(|j| j.score).take(3).collect();
        // Scores pass through the f32 heatmap, so compare after widening.
        assert_eq!(scores, vec![0.9f32 as f64, 0.7f32 as f64, 0.4f32 as f64]);
    }

    #[test]
    fn nms_survivors_non_adjacent() {
        let mut maps = JunctionMaps::zeros(16, 16, 4);
        // A tight cluster plus an isolated peak.
        for (x, y, v) in [(4, 4, 0.5), (5, 4, 0.8), (5, 5, 0.6), (12, 9, 0.4)] {
            let i = maps.idx(x, y);
            maps.heatmap[i] = v;
        }
        let juncs = extract_junctions(&maps, ExtractMode::Test, 0, 0.1);
        let hot: Vec<(i64, i64)> = juncs
            .iter()
            .filter(|j| j.score > 0.0)
            .map(|j| ((j.p.x / 4.0) as i64, (j.p.y / 4.0) as i64))
            .collect();
        assert_eq!(hot.len(), 2);
        for a in 0..hot.len() {
            for b in a + 1..hot.len() {
                let adj = (hot[a].0 - hot[b].0).abs() <= 1 && (hot[a].1 - hot[b].1).abs() <= 1;
                assert!(!adj);
            }
        }
    }

    #[test]
    fn train_budget_caps_output() {
        let mut maps = JunctionMaps::zeros(64, 64, 4);
        // Peaks on a sparse grid, every 2 cells, all isolated by zeros.
        for y in (0..64).step_by(2) {
            for x in (0..64).step_by(2) {
                let i = maps.idx(x, y);
                maps.heatmap[i] = 0.5 + (x + y) as f32 * 1e-4;
            }
        }
        let juncs = extract_junctions(&maps, ExtractMode::Train, 2, DEFAULT_TAU_J);
        assert_eq!(juncs.len(), 300);
        let juncs = extract_junctions(&maps, ExtractMode::Train, 400, DEFAULT_TAU_J);
        assert_eq!(juncs.len(), 800);
    }
}
