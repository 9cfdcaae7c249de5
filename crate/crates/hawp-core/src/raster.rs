//! Shared rasterization helpers: integer line rasterization for pixel-set
//! metrics, and an anti-aliased float canvas used by the synthetic data
//! generator.
//!
//! Pixel `(x, y)` is centered at continuous coordinates `(x, y)`, i.e. a
//! pixel covers the half-open square `[x-0.5, x+0.5) x [y-0.5, y+0.5)`.
//! Geometry in image coordinates maps onto pixels by rounding.

use crate::geometry::{project_to_segment, LineSegment, Point2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// All pixels of the integer line from `(x0, y0)` to `(x1, y1)`,
/// endpoints included.
pub fn bresenham(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let (mut x, mut y) = (x0, y0);
    let mut err = dx + dy;
    let mut pts = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        pts.push((x, y));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    pts
}

/// Rasterizes segments into a boolean occupancy grid: endpoints are
/// rounded to pixel centers and out-of-bounds pixels are dropped (not
/// clamped, so lines leaving the grid are truncated rather than bent).
pub fn rasterize_segments(segs: &[LineSegment], width: usize, height: usize) -> Vec<bool> {
    let mut grid = vec![false; width * height];
    for seg in segs {
        let pts = bresenham(
            seg.x1.x.round() as i64,
            seg.x1.y.round() as i64,
            seg.x2.x.round() as i64,
            seg.x2.y.round() as i64,
        );
        for (x, y) in pts {
            if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                grid[y as usize * width + x as usize] = true;
            }
        }
    }
    grid
}

/// A grayscale float canvas in `[0, 255]` units for rendering synthetic
/// images before 8-bit quantization.
#[derive(Debug, Clone)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, background: f32) -> Self {
        Canvas {
            width,
            height,
            pixels: vec![background; width * height],
        }
    }

    fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[self.idx(x, y)]
    }

    fn blend(&mut self, x: usize, y: usize, color: f32, coverage: f32) {
        let i = self.idx(x, y);
        self.pixels[i] += (color - self.pixels[i]) * coverage;
    }

    /// Strokes a segment with an anti-aliased round-capped pen: per-pixel
    /// coverage is `clamp(stroke_width/2 + 0.5 - distance, 0, 1)` of the
    /// pixel center's distance to the segment.
    pub fn stroke_segment(&mut self, seg: &LineSegment, stroke_width: f64, color: f32) {
        let half = stroke_width / 2.0;
        let pad = (half + 1.0).ceil();
        let x_lo = (seg.x1.x.min(seg.x2.x) - pad).floor().max(0.0) as usize;
        let x_hi = (seg.x1.x.max(seg.x2.x) + pad).ceil().min((self.width - 1) as f64) as usize;
        let y_lo = (seg.x1.y.min(seg.x2.y) - pad).floor().max(0.0) as usize;
        let y_hi = (seg.x1.y.max(seg.x2.y) + pad).ceil().min((self.height - 1) as f64) as usize;
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let d = project_to_segment(Point2::new(x as f64, y as f64), seg).distance;
                let cov = (half + 0.5 - d).clamp(0.0, 1.0) as f32;
                if cov > 0.0 {
                    self.blend(x, y, color, cov);
                }
            }
        }
    }

    /// Fills a convex polygon with 4x4 supersampled coverage. Vertices may
    /// be in either winding order.
    pub fn fill_convex_polygon(&mut self, pts: &[Point2], color: f32) {
        if pts.len() < 3 {
            return;
        }
        // Signed area fixes the winding so the inside test is sign-stable.
        let mut area = 0.0;
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            area += a.x * b.y - b.x * a.y;
        }
        let orient = if area >= 0.0 { 1.0 } else { -1.0 };
        let inside = |px: f64, py: f64| {
            for i in 0..pts.len() {
                let a = pts[i];
                let b = pts[(i + 1) % pts.len()];
                let cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
                if cross * orient < 0.0 {
                    return false;
                }
            }
            true
        };
        let x_lo = pts.iter().fold(f64::INFINITY, |m, p| m.min(p.x));
        let x_hi = pts.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.x));
        let y_lo = pts.iter().fold(f64::INFINITY, |m, p| m.min(p.y));
        let y_hi = pts.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.y));
        let xs = (x_lo - 1.0).floor().max(0.0) as usize;
        let xe = (x_hi + 1.0).ceil().min((self.width - 1) as f64) as usize;
        let ys = (y_lo - 1.0).floor().max(0.0) as usize;
        let ye = (y_hi + 1.0).ceil().min((self.height - 1) as f64) as usize;
        const SUB: usize = 4;
        for y in ys..=ye {
            for x in xs..=xe {
                let mut hits = 0u32;
                for sy in 0..SUB {
                    for sx in 0..SUB {
                        let fx = x as f64 + (sx as f64 + 0.5) / SUB as f64 - 0.5;
                        let fy = y as f64 + (sy as f64 + 0.5) / SUB as f64 - 0.5;
                        if inside(fx, fy) {
                            hits += 1;
                        }
                    }
                }
                if hits > 0 {
                    self.blend(x, y, color, hits as f32 / (SUB * SUB) as f32);
                }
            }
        }
    }

    /// Adds a constant brightness offset to every pixel.
    pub fn add_brightness(&mut self, delta: f32) {
        for p in self.pixels.iter_mut() {
            *p += delta;
        }
    }

    /// Adds i.i.d. Gaussian noise in row-major order, so the result is a
    /// pure function of the RNG state.
    pub fn add_gaussian_noise<R: Rng>(&mut self, rng: &mut R, sigma: f64) {
        let normal = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
        for p in self.pixels.iter_mut() {
            *p += normal.sample(rng) as f32;
        }
    }

    /// Quantizes to 8-bit grayscale, clamping to `[0, 255]`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| p.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> LineSegment {
        LineSegment::new(Point2::new(x1, y1), Point2::new(x2, y2))
    }

    #[test]
    fn bresenham_horizontal_and_diagonal() {
        assert_eq!(bresenham(1, 2, 4, 2), vec![(1, 2), (2, 2), (3, 2), (4, 2)]);
        assert_eq!(bresenham(0, 0, 3, 3), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert_eq!(bresenham(5, 5, 5, 5), vec![(5, 5)]);
    }

    #[test]
    fn bresenham_is_direction_symmetric_as_a_set() {
        let mut a = bresenham(2, 1, 11, 7);
        let mut b = bresenham(11, 7, 2, 1);
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn rasterize_drops_out_of_bounds_pixels() {
        let grid = rasterize_segments(&[seg(-2.0, 1.0, 3.0, 1.0)], 4, 4);
        let row: Vec<bool> = (0..4).map(|x| grid[4 + x]).collect();
        assert_eq!(row, vec![true, true, true, true]);
        assert_eq!(grid.iter().filter(|&&b| b).count(), 4);
    }

    #[test]
    fn rasterize_rounds_fractional_endpoints() {
        let grid = rasterize_segments(&[seg(0.4, 0.4, 2.4, 0.4)], 4, 4);
        assert!(grid[0] && grid[1] && grid[2]);
        assert!(!grid[3]);
    }

    #[test]
    fn stroke_covers_centerline_fully() {
        let mut c = Canvas::new(16, 8, 0.0);
        c.stroke_segment(&seg(2.0, 3.0, 12.0, 3.0), 1.0, 200.0);
        assert_eq!(c.get(7, 3), 200.0);
        // One row away the coverage has fallen to zero.
        assert_eq!(c.get(7, 4), 0.0);
    }

    #[test]
    fn stroke_splits_coverage_between_adjacent_rows() {
        let mut c = Canvas::new(16, 8, 0.0);
        c.stroke_segment(&seg(2.0, 3.5, 12.0, 3.5), 1.0, 100.0);
        assert_abs_diff_eq!(c.get(7, 3), 50.0, epsilon = 1e-3);
        assert_abs_diff_eq!(c.get(7, 4), 50.0, epsilon = 1e-3);
    }

    #[test]
    fn polygon_fill_covers_interior_and_feathers_edges() {
        let mut c = Canvas::new(10, 10, 0.0);
        let rect = [
            Point2::new(2.0, 3.0),
            Point2::new(6.0, 3.0),
            Point2::new(6.0, 7.0),
            Point2::new(2.0, 7.0),
        ];
        c.fill_convex_polygon(&rect, 80.0);
        assert_eq!(c.get(4, 5), 80.0);
        // A pixel centered on the boundary gets half coverage.
        assert_abs_diff_eq!(c.get(2, 5), 40.0, epsilon = 1e-3);
        assert_eq!(c.get(8, 5), 0.0);
    }

    #[test]
    fn polygon_fill_winding_independent() {
        let cw = [
            Point2::new(2.0, 2.0),
            Point2::new(2.0, 6.0),
            Point2::new(6.0, 6.0),
            Point2::new(6.0, 2.0),
        ];
        let ccw: Vec<Point2> = cw.iter().rev().copied().collect();
        let mut a = Canvas::new(8, 8, 0.0);
        let mut b = Canvas::new(8, 8, 0.0);
        a.fill_convex_polygon(&cw, 50.0);
        b.fill_convex_polygon(&ccw, 50.0);
        assert_eq!(a.pixels, b.pixels);
    }

    #[test]
    fn quantization_rounds_and_clamps() {
        let mut c = Canvas::new(2, 2, 0.0);
        c.pixels = vec![-5.0, 127.4, 127.6, 300.0];
        assert_eq!(c.to_u8(), vec![0, 127, 128, 255]);
    }

    #[test]
    fn noise_is_deterministic_per_seed_and_roughly_sized() {
        let mut a = Canvas::new(64, 64, 128.0);
        let mut b = Canvas::new(64, 64, 128.0);
        a.add_gaussian_noise(&mut ChaCha8Rng::seed_from_u64(7), 10.0);
        b.add_gaussian_noise(&mut ChaCha8Rng::seed_from_u64(7), 10.0);
        assert_eq!(a.pixels, b.pixels);

        let n = a.pixels.len() as f64;
        let mean: f64 = a.pixels.iter().map(|&p| p as f64).sum::<f64>() / n;
        let var: f64 = a
            .pixels
            .iter()
            .map(|&p| (p as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        assert!((mean - 128.0).abs() < 1.0, "mean drifted: {mean}");
        assert!(
            (var.sqrt() - 10.0).abs() < 1.0,
            "std {} far from 10",
            var.sqrt()
        );

        let mut c = Canvas::new(64, 64, 128.0);
        c.add_gaussian_noise(&mut ChaCha8Rng::seed_from_u64(8), 10.0);
        assert_ne!(a.pixels, c.pixels);
    }
}
