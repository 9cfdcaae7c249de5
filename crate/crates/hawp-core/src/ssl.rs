//! Homography-adaptation pseudo-labeling: aggregate edge predictions
//! from warped views back into the source frame, score putative segments
//! against the aggregated edge map, and prune by the harmonic
//! edge/verification score.

use crate::geometry::{Homography, LineSegment, Point2, Wireframe};
use crate::raster::rasterize_segments;
use rayon::prelude::*;
use thiserror::Error;

/// Pruning threshold on the combined score (inclusive).
pub const DEFAULT_TAU_SSL: f64 = 0.75;
/// Samples taken along a segment when scoring it against an edge map.
pub const DEFAULT_EDGE_POINTS: usize = 64;
/// Local-max half-window (pixels) around each sample.
pub const DEFAULT_EDGE_WINDOW: usize = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SslError {
    #[error("need matching non-empty lists, got {maps} edge maps and {homographies} homographies")]
    LengthMismatch { maps: usize, homographies: usize },
    #[error("homography is not invertible")]
    DegenerateHomography,
}

/// A dense edge-probability map at full image resolution, values in
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: u32,
    pub height: u32,
    /// Row-major, `width * height` values.
    pub grid: Vec<f32>,
}

impl EdgeMap {
    /// Builds a map from raw values, clamping each into `[0, 1]`.
    pub fn new(width: u32, height: u32, mut grid: Vec<f32>) -> EdgeMap {
        assert_eq!(grid.len(), (width * height) as usize, "grid size mismatch");
        for v in grid.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        EdgeMap { width, height, grid }
    }

    pub fn constant(width: u32, height: u32, value: f32) -> EdgeMap {
        EdgeMap::new(width, height, vec![value; (width * height) as usize])
    }

    /// Binary map with 1 on the rasterization of `segments`.
    pub fn from_segments(segments: &[LineSegment], width: u32, height: u32) -> EdgeMap {
        let grid = rasterize_segments(segments, width as usize, height as usize)
            .into_iter()
            .map(|b| if b { 1.0 } else { 0.0 })
            .collect();
        EdgeMap::new(width, height, grid)
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.grid[y * self.width as usize + x] as f64
    }

    /// Bilinear value at a position already known to lie inside
    /// `[0, width-1] x [0, height-1]`.
    fn bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor().clamp(0.0, (self.width - 1) as f64) as usize;
        let y0 = y.floor().clamp(0.0, (self.height - 1) as f64) as usize;
        let x1 = (x0 + 1).min(self.width as usize - 1);
        let y1 = (y0 + 1).min(self.height as usize - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.at(x0, y0);
        let v10 = self.at(x1, y0);
        let v01 = self.at(x0, y1);
        let v11 = self.at(x1, y1);
        (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy
    }
}

/// Fuses edge predictions made on warped views back into the source
/// frame. `homographies[i]` maps source coordinates into view `i`'s
/// frame; each source pixel reads view `i` bilinearly at its forward-
/// mapped position when that lands in-bounds, and the output is the mean
/// over covering views (0 where nothing covers).
pub fn aggregate_edges(
    edge_maps: &[EdgeMap],
    homographies: &[Homography],
    out_size: (u32, u32),
) -> Result<EdgeMap, SslError> {
    if edge_maps.is_empty() || edge_maps.len() != homographies.len() {
        return Err(SslError::LengthMismatch {
            maps: edge_maps.len(),
            homographies: homographies.len(),
        });
    }
    for h in homographies {
        h.inverse().map_err(|_| SslError::DegenerateHomography)?;
    }
    let (out_w, out_h) = (out_size.0 as usize, out_size.1 as usize);
    let mut grid = vec![0.0f32; out_w * out_h];
    grid.par_chunks_mut(out_w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let p = Point2::new(x as f64, y as f64);
            let mut sum = 0.0f64;
            let mut count = 0u32;
            for (map, h) in edge_maps.iter().zip(homographies) {
                let Ok(q) = h.apply(p) else { continue };
                if q.x >= 0.0
                    && q.y >= 0.0
                    && q.x <= (map.width - 1) as f64
                    && q.y <= (map.height - 1) as f64
                {
                    sum += map.bilinear(q.x, q.y);
                    count += 1;
                }
            }
            if count > 0 {
                *out = (sum / count as f64) as f32;
            }
        }
    });
    Ok(EdgeMap::new(out_size.0, out_size.1, grid))
}

/// Mean of local-max edge responses at `n_pts` points spread evenly
/// along the segment (endpoints included). Each sample rounds to the
/// nearest pixel (clamped to bounds) and takes the maximum over the
/// `(2*window+1)^2` neighborhood intersected with the image.
pub fn edge_score(seg: &LineSegment, edges: &EdgeMap, n_pts: usize, window: usize) -> f64 {
    assert!(n_pts >= 2, "need at least the two endpoints");
    let (w, h) = (edges.width as i64, edges.height as i64);
    let mut sum = 0.0;
    for i in 0..n_pts {
        let t = i as f64 / (n_pts - 1) as f64;
        let px = seg.x1.x + t * (seg.x2.x - seg.x1.x);
        let py = seg.x1.y + t * (seg.x2.y - seg.x1.y);
        let cx = (px.round() as i64).clamp(0, w - 1);
        let cy = (py.round() as i64).clamp(0, h - 1);
        let mut local = 0.0f64;
        let r = window as i64;
        for dy in -r..=r {
            for dx in -r..=r {
                let (nx, ny) = (cx + dx, cy + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                local = local.max(edges.at(nx as usize, ny as usize));
            }
        }
        sum += local;
    }
    sum / n_pts as f64
}

/// Prunes a putative wireframe by the combined score
/// `sqrt(verification * edge)`: segments keep only when it reaches
/// `tau_ssl` (inclusive), and their score is replaced by the combined
/// value. Junctions survive only while still within 1e-6 of a kept
/// segment endpoint.
pub fn ssl_filter(wf: &Wireframe, edges: &EdgeMap, tau_ssl: f64) -> Wireframe {
    let mut out = Wireframe::new(wf.width, wf.height);
    for seg in &wf.segments {
        let c = seg.score.clamp(0.0, 1.0);
        let c_edge = edge_score(seg, edges, DEFAULT_EDGE_POINTS, DEFAULT_EDGE_WINDOW);
        let combined = (c * c_edge).sqrt();
        if combined >= tau_ssl {
            out.segments
                .push(LineSegment::with_score(seg.x1, seg.x2, combined));
        }
    }
    for j in &wf.junctions {
        let keep = out.segments.iter().any(|s| {
            s.x1.distance(j.p) <= 1e-6 || s.x2.distance(j.p) <= 1e-6
        });
        if keep {
            out.junctions.push(*j);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Junction;
    use approx::assert_abs_diff_eq;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64, score: f64) -> LineSegment {
        LineSegment::with_score(Point2::new(x1, y1), Point2::new(x2, y2), score)
    }

    #[test]
    fn aggregate_identity_is_passthrough() {
        let grid: Vec<f32> = (0..64).map(|i| (i as f32) / 63.0).collect();
        let map = EdgeMap::new(8, 8, grid);
        let out = aggregate_edges(
            &[map.clone()],
            &[Homography::identity()],
            (8, 8),
        )
        .unwrap();
        for i in 0..64 {
            assert_abs_diff_eq!(out.grid[i], map.grid[i], epsilon = 1e-6);
        }
        let two = aggregate_edges(
            &[map.clone(), map.clone()],
            &[Homography::identity(), Homography::identity()],
            (8, 8),
        )
        .unwrap();
        for i in 0..64 {
            assert_abs_diff_eq!(two.grid[i], map.grid[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn aggregate_identity_matches_pointwise_mean() {
        let a = EdgeMap::constant(6, 4, 0.2);
        let b = EdgeMap::constant(6, 4, 0.8);
        let c = EdgeMap::constant(6, 4, 0.5);
        let out = aggregate_edges(
            &[a, b, c],
            &[Homography::identity(); 3],
            (6, 4),
        )
        .unwrap();
        for &v in &out.grid {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-7);
        }
    }

    #[test]
    fn aggregate_translation_covers_the_overlap_only() {
        // Source pixel p reads the view at p + (5, 0); the constant-1 map
        // covers x + 5 <= 9, i.e. x <= 4.
        let map = EdgeMap::constant(10, 10, 1.0);
        let h = Homography::translation(5.0, 0.0);
        let out = aggregate_edges(&[map], &[h], (10, 10)).unwrap();
        for y in 0..10 {
            for x in 0..10 {
                let expect = if x <= 4 { 1.0 } else { 0.0 };
                assert_eq!(out.at(x, y), expect, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn aggregate_count_normalizes_partial_coverage() {
        // One full view at 0.4 and one shifted view at 0.8: overlap pixels
        // average, the rest keep the single covering view's value.
        let full = EdgeMap::constant(10, 1, 0.4);
        let shifted = EdgeMap::constant(10, 1, 0.8);
        let out = aggregate_edges(
            &[full, shifted],
            &[Homography::identity(), Homography::translation(6.0, 0.0)],
            (10, 1),
        )
        .unwrap();
        for x in 0..10 {
            let expect = if x <= 3 { 0.6 } else { 0.4 };
            assert_abs_diff_eq!(out.at(x, 0), expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn aggregate_rejects_mismatched_or_empty_inputs() {
        let map = EdgeMap::constant(4, 4, 1.0);
        assert_eq!(
            aggregate_edges(&[], &[], (4, 4)),
            Err(SslError::LengthMismatch { maps: 0, homographies: 0 })
        );
        assert_eq!(
            aggregate_edges(&[map.clone(), map], &[Homography::identity()], (4, 4)),
            Err(SslError::LengthMismatch { maps: 2, homographies: 1 })
        );
    }

    #[test]
    fn aggregate_rejects_singular_homography() {
        let map = EdgeMap::constant(4, 4, 1.0);
        let singular = Homography {
            m: [[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        };
        assert_eq!(
            aggregate_edges(&[map], &[singular], (4, 4)),
            Err(SslError::DegenerateHomography)
        );
    }

    #[test]
    fn edge_score_constant_maps() {
        let s = seg(2.0, 2.0, 14.0, 9.0, 1.0);
        let ones = EdgeMap::constant(16, 16, 1.0);
        let zeros = EdgeMap::constant(16, 16, 0.0);
        assert_eq!(edge_score(&s, &ones, 64, 1), 1.0);
        assert_eq!(edge_score(&s, &zeros, 64, 1), 0.0);
    }

    #[test]
    fn edge_score_on_own_rasterization_is_one() {
        for (x1, y1, x2, y2) in [
            (3.0, 4.0, 28.0, 17.0),
            (5.0, 25.0, 27.0, 6.0),
            (2.0, 16.0, 30.0, 16.0),
            (16.0, 2.0, 17.0, 30.0),
        ] {
            let s = seg(x1, y1, x2, y2, 1.0);
            let edges = EdgeMap::from_segments(&[s], 32, 32);
            assert_eq!(edge_score(&s, &edges, 64, 1), 1.0);
        }
    }

    #[test]
    fn filter_keeps_and_prunes_per_combined_score() {
        let edges = EdgeMap::constant(32, 32, 1.0);
        let mut wf = Wireframe::new(32, 32);
        wf.segments.push(seg(2.0, 2.0, 30.0, 2.0, 1.0));
        let kept = ssl_filter(&wf, &edges, DEFAULT_TAU_SSL);
        assert_eq!(kept.segments.len(), 1);
        assert_eq!(kept.segments[0].score, 1.0);

        // c = 1 but c' = 0.49: combined 0.7 < 0.75.
        let weak = EdgeMap::constant(32, 32, 0.49);
        let pruned = ssl_filter(&wf, &weak, DEFAULT_TAU_SSL);
        assert!(pruned.segments.is_empty());
    }

    #[test]
    fn filter_boundary_is_inclusive() {
        // c = c' = 0.75 gives exactly 0.75, which is kept.
        let edges = EdgeMap::constant(32, 32, 0.75);
        let mut wf = Wireframe::new(32, 32);
        wf.segments.push(seg(2.0, 2.0, 30.0, 2.0, 0.75));
        let kept = ssl_filter(&wf, &edges, DEFAULT_TAU_SSL);
        assert_eq!(kept.segments.len(), 1);
        assert_abs_diff_eq!(kept.segments[0].score, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn filter_output_shrinks_monotonically_in_tau() {
        let mut wf = Wireframe::new(64, 64);
        for i in 0..8 {
            let y = 4.0 + 7.0 * i as f64;
            wf.segments
                .push(seg(2.0, y, 60.0, y, 0.3 + 0.1 * i as f64));
        }
        let edges = EdgeMap::from_segments(&wf.segments, 64, 64);
        let mut prev = usize::MAX;
        for tau in [0.0, 0.4, 0.6, 0.8, 1.01] {
            let kept = ssl_filter(&wf, &edges, tau);
            assert!(kept.segments.len() <= prev, "tau {tau}");
            assert!(kept.segments.len() <= wf.segments.len());
            prev = kept.segments.len();
        }
    }

    #[test]
    fn filter_junctions_follow_kept_endpoints() {
        let edges = EdgeMap::constant(64, 64, 1.0);
        let mut wf = Wireframe::new(64, 64);
        wf.segments.push(seg(4.0, 4.0, 60.0, 4.0, 1.0));
        wf.segments.push(seg(4.0, 40.0, 60.0, 40.0, 0.2));
        for s in wf.segments.clone() {
            wf.junctions.push(Junction::new(s.x1, 1.0));
            wf.junctions.push(Junction::new(s.x2, 1.0));
        }
        let kept = ssl_filter(&wf, &edges, DEFAULT_TAU_SSL);
        assert_eq!(kept.segments.len(), 1);
        assert_eq!(kept.junctions.len(), 2);
        for j in &kept.junctions {
            let near = kept
                .segments
                .iter()
                .any(|s| s.x1.distance(j.p) <= 1e-6 || s.x2.distance(j.p) <= 1e-6);
            assert!(near);
        }
    }
}
