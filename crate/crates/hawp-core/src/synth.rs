//! Deterministic synthetic-primitive generator: eight families of simple
//! geometric scenes (checkerboards, line sets, cubes, noise, strips,
//! polygons, polygon groups, stars) rendered as anti-aliased grayscale
//! images with exact wireframe ground truth.
//!
//! Every sample is fully determined by `(primitive, seed, size)`; dataset
//! generation derives one seed per sample so any sample can be
//! regenerated in isolation.

use crate::geometry::{clip_segment, Junction, LineSegment, Point2, Wireframe};
use crate::io::{self, IoError, Manifest, ManifestEntry};
use crate::raster::Canvas;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::Path;

/// Dataset default: samples generated per primitive.
pub const DEFAULT_COUNT_PER_PRIMITIVE: usize = 2000;
/// Dataset default image size.
pub const DEFAULT_SIZE: (u32, u32) = (128, 128);
/// Additive Gaussian pixel noise, in 8-bit units.
pub const NOISE_SIGMA: f64 = 10.0;
/// Minimum gray-level separation between adjacent regions, before noise.
const MIN_CONTRAST: f64 = 40.0;

/// The eight synthetic scene families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    Checkerboard,
    Lines,
    Cube,
    Gaussian,
    Strips,
    Polygon,
    Polygons,
    Star,
}

impl Primitive {
    pub const ALL: [Primitive; 8] = [
        Primitive::Checkerboard,
        Primitive::Lines,
        Primitive::Cube,
        Primitive::Gaussian,
        Primitive::Strips,
        Primitive::Polygon,
        Primitive::Polygons,
        Primitive::Star,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Checkerboard => "checkerboard",
            Primitive::Lines => "lines",
            Primitive::Cube => "cube",
            Primitive::Gaussian => "gaussian",
            Primitive::Strips => "strips",
            Primitive::Polygon => "polygon",
            Primitive::Polygons => "polygons",
            Primitive::Star => "star",
        }
    }

    pub fn from_name(name: &str) -> Option<Primitive> {
        Primitive::ALL.iter().copied().find(|p| p.name() == name)
    }

    fn id(self) -> u64 {
        Primitive::ALL.iter().position(|&p| p == self).unwrap() as u64
    }
}

/// One generated sample: the rendered image (row-major, 8-bit) and its
/// exact wireframe.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub image: Vec<u8>,
    pub width: u32,
    pub height: u32,
    pub wireframe: Wireframe,
    pub primitive: Primitive,
    pub seed: u64,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed derived from the master seed, primitive, and index,
/// so samples regenerate independently of generation order.
pub fn sample_seed(master: u64, primitive: Primitive, index: u64) -> u64 {
    mix64(master ^ mix64(primitive.id() ^ mix64(index)))
}

/// A gray level at least [`MIN_CONTRAST`] away from every level in
/// `taken` (at most two entries, so a valid level always exists).
fn distinct_gray<R: Rng>(rng: &mut R, taken: &[f64]) -> f64 {
    loop {
        let g = rng.gen_range(0.0..=255.0);
        if taken.iter().all(|t| (t - g).abs() >= MIN_CONTRAST) {
            return g;
        }
    }
}

fn pt(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn checkerboard<R: Rng>(rng: &mut R, canvas: &mut Canvas, bg: f64) -> Vec<LineSegment> {
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    let x0 = w * rng.gen_range(0.04..=0.12);
    let x1 = w * (1.0 - rng.gen_range(0.04..=0.12));
    let y0 = h * rng.gen_range(0.04..=0.12);
    let y1 = h * (1.0 - rng.gen_range(0.04..=0.12));
    let rows = rng.gen_range(3..=7usize);
    let cols = rng.gen_range(3..=7usize);
    let color_a = distinct_gray(rng, &[bg]);
    let color_b = distinct_gray(rng, &[bg, color_a]);
    // Shared coordinate arrays keep grid-line endpoints bitwise-identical.
    let xs: Vec<f64> = (0..=cols)
        .map(|j| x0 + j as f64 * (x1 - x0) / cols as f64)
        .collect();
    let ys: Vec<f64> = (0..=rows)
        .map(|i| y0 + i as f64 * (y1 - y0) / rows as f64)
        .collect();
    for i in 0..rows {
        for j in 0..cols {
            let color = if (i + j) % 2 == 0 { color_a } else { color_b };
            canvas.fill_convex_polygon(
                &[
                    pt(xs[j], ys[i]),
                    pt(xs[j + 1], ys[i]),
                    pt(xs[j + 1], ys[i + 1]),
                    pt(xs[j], ys[i + 1]),
                ],
                color as f32,
            );
        }
    }
    let mut segs = Vec::with_capacity(rows + cols + 2);
    for &y in &ys {
        segs.push(LineSegment::with_score(pt(xs[0], y), pt(xs[cols], y), 1.0));
    }
    for &x in &xs {
        segs.push(LineSegment::with_score(pt(x, ys[0]), pt(x, ys[rows]), 1.0));
    }
    segs
}

fn random_lines<R: Rng>(rng: &mut R, canvas: &mut Canvas, bg: f64) -> Vec<LineSegment> {
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    let count = rng.gen_range(1..=10usize);
    let stroke = rng.gen_range(1.0..=2.5);
    let mut segs = Vec::with_capacity(count);
    for _ in 0..count {
        let seg = loop {
            let a = pt(rng.gen_range(2.0..=w - 2.0), rng.gen_range(2.0..=h - 2.0));
            let b = pt(rng.gen_range(2.0..=w - 2.0), rng.gen_range(2.0..=h - 2.0));
            if a.distance(b) >= 32.0 {
                break LineSegment::with_score(a, b, 1.0);
            }
        };
        let color = distinct_gray(rng, &[bg]);
        canvas.stroke_segment(&seg, stroke, color as f32);
        segs.push(seg);
    }
    segs
}

/// Rotation matrix from a random unit quaternion.
fn random_rotation<R: Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    loop {
        let q: [f64; 4] = [
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        ];
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        let (qw, qx, qy, qz) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
        return [
            [
                1.0 - 2.0 * (qy * qy + qz * qz),
                2.0 * (qx * qy - qw * qz),
                2.0 * (qx * qz + qw * qy),
            ],
            [
                2.0 * (qx * qy + qw * qz),
                1.0 - 2.0 * (qx * qx + qz * qz),
                2.0 * (qy * qz - qw * qx),
            ],
            [
                2.0 * (qx * qz - qw * qy),
                2.0 * (qy * qz + qw * qx),
                1.0 - 2.0 * (qx * qx + qy * qy),
            ],
        ];
    }
}

fn cube<R: Rng>(rng: &mut R, canvas: &mut Canvas, bg: f64) -> Vec<LineSegment> {
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    // Re-draw the pose until every face is clearly front- or back-facing,
    // which leaves exactly three visible faces and nine visible edges.
    let rot = loop {
        let r = random_rotation(rng);
        if r[2].iter().all(|&nz| nz.abs() > 0.1) {
            break r;
        }
    };
    let scale = rng.gen_range(0.15..=0.25) * w.min(h);
    // Any projected vertex stays within sqrt(3)*scale of the center, so
    // this placement keeps the whole cube on-canvas (no clipped edges).
    let radius = 3.0f64.sqrt() * scale;
    let cx = rng.gen_range(radius + 2.0..=w - radius - 2.0);
    let cy = rng.gen_range(radius + 2.0..=h - radius - 2.0);
    // Vertex i has coordinates (+-1)^bits; orthographic projection after
    // rotation.
    let project = |i: usize| {
        let v = [
            if i & 1 != 0 { 1.0 } else { -1.0 },
            if i & 2 != 0 { 1.0 } else { -1.0 },
            if i & 4 != 0 { 1.0 } else { -1.0 },
        ];
        let px = rot[0][0] * v[0] + rot[0][1] * v[1] + rot[0][2] * v[2];
        let py = rot[1][0] * v[0] + rot[1][1] * v[1] + rot[1][2] * v[2];
        pt(cx + scale * px, cy + scale * py)
    };
    let pv: Vec<Point2> = (0..8).map(project).collect();
    // A face is (axis, sign); visible when its rotated outward normal has
    // positive depth component.
    let visible = |axis: usize, positive: bool| {
        let nz = rot[2][axis];
        if positive { nz > 0.1 } else { -nz > 0.1 }
    };
    let mut face_colors = vec![bg];
    for axis in 0..3 {
        for positive in [false, true] {
            if !visible(axis, positive) {
                continue;
            }
            let color = distinct_gray(rng, &face_colors);
            face_colors.push(color);
            let mut corners: Vec<Point2> = (0..8usize)
                .filter(|i| ((i >> axis) & 1 == 1) == positive)
                .map(|i| pv[i])
                .collect();
            let c = corners
                .iter()
                .fold(pt(0.0, 0.0), |a, p| pt(a.x + p.x / 4.0, a.y + p.y / 4.0));
            corners.sort_by(|a, b| {
                (a.y - c.y)
                    .atan2(a.x - c.x)
                    .total_cmp(&(b.y - c.y).atan2(b.x - c.x))
            });
            canvas.fill_convex_polygon(&corners, color as f32);
        }
    }
    let mut segs = Vec::new();
    for i in 0..8usize {
        for axis in 0..3 {
            let j = i ^ (1 << axis);
            if j < i {
                continue;
            }
            // The edge borders the two faces spanned by the other axes.
            let edge_visible = (0..3).filter(|&a| a != axis).any(|a| {
                let positive = (i >> a) & 1 == 1;
                visible(a, positive)
            });
            if edge_visible {
                segs.push(LineSegment::with_score(pv[i], pv[j], 1.0));
            }
        }
    }
    segs
}

fn strips<R: Rng>(rng: &mut R, canvas: &mut Canvas, bg: f64) -> Vec<LineSegment> {
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    let theta = rng.gen_range(0.0..PI);
    let (sin, cos) = theta.sin_cos();
    let n = pt(cos, sin);
    let dir = pt(-sin, cos);
    let projections = [
        0.0,
        w * n.x,
        h * n.y,
        w * n.x + h * n.y,
    ];
    let lo = projections.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = projections.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let bands = rng.gen_range(2..=6usize);
    let slot = (hi - lo) / bands as f64;
    let reach = w + h;
    let mut segs = Vec::with_capacity(bands * 2);
    for i in 0..bands {
        let hw = rng.gen_range(3.0..=(slot * 0.3).clamp(3.0, 12.0));
        let jitter_room = slot / 2.0 - hw;
        let center =
            lo + (i as f64 + 0.5) * slot + rng.gen_range(-0.8..=0.8) * jitter_room;
        let color = distinct_gray(rng, &[bg]);
        let p_lo = pt(n.x * (center - hw), n.y * (center - hw));
        let p_hi = pt(n.x * (center + hw), n.y * (center + hw));
        canvas.fill_convex_polygon(
            &[
                pt(p_lo.x - reach * dir.x, p_lo.y - reach * dir.y),
                pt(p_lo.x + reach * dir.x, p_lo.y + reach * dir.y),
                pt(p_hi.x + reach * dir.x, p_hi.y + reach * dir.y),
                pt(p_hi.x - reach * dir.x, p_hi.y - reach * dir.y),
            ],
            color as f32,
        );
        for p0 in [p_lo, p_hi] {
            segs.push(LineSegment::with_score(
                pt(p0.x - reach * dir.x, p0.y - reach * dir.y),
                pt(p0.x + reach * dir.x, p0.y + reach * dir.y),
                1.0,
            ));
        }
    }
    segs
}

/// `k` angles in `[0, 2pi)`, sorted, with every circular gap at least 0.3
/// radians (re-drawn as a set until satisfied).
fn spread_angles<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        let ok = (0..k).all(|i| {
            let gap = if i + 1 < k {
                angles[i + 1] - angles[i]
            } else {
                2.0 * PI - angles[k - 1] + angles[0]
            };
            gap >= 0.3
        });
        if ok {
            return angles;
        }
    }
}

fn convex_vertices<R: Rng>(
    rng: &mut R,
    center: Point2,
    semi_axes: (f64, f64),
) -> Vec<Point2> {
    let k = rng.gen_range(3..=8usize);
    let angles = spread_angles(rng, k);
    let phi = rng.gen_range(0.0..2.0 * PI);
    let (sp, cp) = phi.sin_cos();
    angles
        .iter()
        .map(|&a| {
            let (ex, ey) = (semi_axes.0 * a.cos(), semi_axes.1 * a.sin());
            pt(center.x + cp * ex - sp * ey, center.y + sp * ex + cp * ey)
        })
        .collect()
}

fn polygon_edges(verts: &[Point2]) -> Vec<LineSegment> {
    (0..verts.len())
        .map(|i| LineSegment::with_score(verts[i], verts[(i + 1) % verts.len()], 1.0))
        .collect()
}

fn polygon<R: Rng>(rng: &mut R, canvas: &mut Canvas, bg: f64) -> Vec<LineSegment> {
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    let m = w.min(h);
    let center = pt(w * rng.gen_range(0.4..=0.6), h * rng.gen_range(0.4..=0.6));
    let semi = (m * rng.gen_range(0.15..=0.35), m * rng.gen_range(0.15..=0.35));
    let verts = convex_vertices(rng, center, semi);
    canvas.fill_convex_polygon(&verts, distinct_gray(rng, &[bg]) as f32);
    polygon_edges(&verts)
}

fn polygons<R: Rng>(rng: &mut R, canvas: &mut Canvas, bg: f64) -> Vec<LineSegment> {
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    let m = w.min(h);
    let count = rng.gen_range(2..=4usize);
    let mut placed: Vec<(Point2, f64)> = Vec::new();
    let mut segs = Vec::new();
    for _ in 0..count {
        let mut semi = (m * rng.gen_range(0.08..=0.16), m * rng.gen_range(0.08..=0.16));
        let center = loop {
            let r = semi.0.max(semi.1);
            let mut found = None;
            for _ in 0..100 {
                let c = pt(
                    rng.gen_range(r + 2.0..=w - r - 2.0),
                    rng.gen_range(r + 2.0..=h - r - 2.0),
                );
                if placed
                    .iter()
                    .all(|&(pc, pr)| c.distance(pc) > r + pr + 4.0)
                {
                    found = Some(c);
                    break;
                }
            }
            match found {
                Some(c) => break c,
                // Crowded layout: shrink this shape and retry.
                None => semi = (semi.0 * 0.75, semi.1 * 0.75),
            }
        };
        placed.push((center, semi.0.max(semi.1)));
        let verts = convex_vertices(rng, center, semi);
        canvas.fill_convex_polygon(&verts, distinct_gray(rng, &[bg]) as f32);
        segs.extend(polygon_edges(&verts));
    }
    segs
}

fn star<R: Rng>(rng: &mut R, canvas: &mut Canvas, bg: f64) -> Vec<LineSegment> {
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    let m = w.min(h);
    let center = pt(w * rng.gen_range(0.4..=0.6), h * rng.gen_range(0.4..=0.6));
    let spokes = rng.gen_range(5..=8usize);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let stroke = rng.gen_range(1.0..=2.5);
    let color = distinct_gray(rng, &[bg]);
    let step = 2.0 * PI / spokes as f64;
    let mut segs = Vec::with_capacity(spokes);
    for i in 0..spokes {
        let angle = phase + i as f64 * step + rng.gen_range(-0.25..=0.25) * step;
        let radius = m * rng.gen_range(0.15..=0.42);
        let tip = pt(center.x + radius * angle.cos(), center.y + radius * angle.sin());
        let seg = LineSegment::with_score(center, tip, 1.0);
        canvas.stroke_segment(&seg, stroke, color as f32);
        segs.push(seg);
    }
    segs
}

/// Renders one synthetic sample. Deterministic per `(primitive, seed,
/// size)`; the wireframe lists the exact stroke geometry clipped to the
/// image bounds, with junctions at the unique segment endpoints.
pub fn generate(primitive: Primitive, seed: u64, size: (u32, u32)) -> SynthSample {
    assert!(
        size.0 >= 64 && size.1 >= 64,
        "synthetic samples need at least a 64x64 canvas"
    );
    let (w, h) = size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg = rng.gen_range(40.0..=215.0);
    let mut canvas = Canvas::new(w as usize, h as usize, bg as f32);
    let segments = match primitive {
        Primitive::Checkerboard => checkerboard(&mut rng, &mut canvas, bg),
        Primitive::Lines => random_lines(&mut rng, &mut canvas, bg),
        Primitive::Cube => cube(&mut rng, &mut canvas, bg),
        Primitive::Gaussian => Vec::new(),
        Primitive::Strips => strips(&mut rng, &mut canvas, bg),
        Primitive::Polygon => polygon(&mut rng, &mut canvas, bg),
        Primitive::Polygons => polygons(&mut rng, &mut canvas, bg),
        Primitive::Star => star(&mut rng, &mut canvas, bg),
    };
    let mut wireframe = Wireframe::new(w, h);
    for seg in &segments {
        if let Some(clipped) = clip_segment(seg, w as f64, h as f64) {
            wireframe.segments.push(clipped);
        }
    }
    for p in wireframe.unique_endpoints() {
        wireframe.junctions.push(Junction::new(p, 1.0));
    }
    canvas.add_brightness(rng.gen_range(-20.0..=20.0) as f32);
    canvas.add_gaussian_noise(&mut rng, NOISE_SIGMA);
    SynthSample {
        image: canvas.to_u8(),
        width: w,
        height: h,
        wireframe,
        primitive,
        seed,
    }
}

/// Generates `count_per_primitive` samples for each primitive into
/// `out_dir` (`images/*.pgm`, `wireframes/*.json`) plus a
/// `manifest.json` listing every sample. Samples are generated in
/// parallel but written in a fixed order, so the output is byte-identical
/// across runs and thread counts.
pub fn generate_dataset(
    out_dir: &Path,
    count_per_primitive: usize,
    master_seed: u64,
    size: (u32, u32),
) -> Result<Manifest, IoError> {
    generate_dataset_filtered(out_dir, &Primitive::ALL, count_per_primitive, master_seed, size)
}

/// [`generate_dataset`] restricted to a subset of primitives.
pub fn generate_dataset_filtered(
    out_dir: &Path,
    primitives: &[Primitive],
    count_per_primitive: usize,
    master_seed: u64,
    size: (u32, u32),
) -> Result<Manifest, IoError> {
    let image_dir = out_dir.join("images");
    let wf_dir = out_dir.join("wireframes");
    io::create_dir_all(&image_dir)?;
    io::create_dir_all(&wf_dir)?;
    let mut manifest = Manifest { samples: Vec::new() };
    let specs: Vec<(Primitive, u64)> = primitives
        .iter()
        .flat_map(|&p| (0..count_per_primitive as u64).map(move |i| (p, i)))
        .collect();
    // Bounded chunks keep memory flat on full-size datasets.
    for chunk in specs.chunks(128) {
        let samples: Vec<SynthSample> = chunk
            .par_iter()
            .map(|&(p, i)| generate(p, sample_seed(master_seed, p, i), size))
            .collect();
        for (&(p, i), sample) in chunk.iter().zip(&samples) {
            let stem = format!("{}_{:06}", p.name(), i);
            let image_rel = format!("images/{stem}.pgm");
            let wf_rel = format!("wireframes/{stem}.json");
            io::write_pgm(
                &out_dir.join(&image_rel),
                sample.width,
                sample.height,
                &sample.image,
            )?;
            io::write_wireframe(&out_dir.join(&wf_rel), &sample.wireframe)?;
            manifest.samples.push(ManifestEntry {
                image: image_rel,
                wireframe: wf_rel,
                primitive: p.name().to_string(),
                seed: sample.seed,
            });
        }
    }
    io::write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_primitive_is_pure_noise() {
        let s = generate(Primitive::Gaussian, 11, (64, 64));
        assert!(s.wireframe.segments.is_empty());
        assert!(s.wireframe.junctions.is_empty());
        assert_eq!(s.image.len(), 64 * 64);
    }

    #[test]
    fn generation_is_deterministic() {
        for p in Primitive::ALL {
            let a = generate(p, 123, (96, 64));
            let b = generate(p, 123, (96, 64));
            assert_eq!(a.image, b.image, "{}", p.name());
            assert_eq!(a.wireframe.segments.len(), b.wireframe.segments.len());
            for (x, y) in a.wireframe.segments.iter().zip(&b.wireframe.segments) {
                assert_eq!((x.x1.x, x.x1.y, x.x2.x, x.x2.y), (y.x1.x, y.x1.y, y.x2.x, y.x2.y));
            }
            let c = generate(p, 124, (96, 64));
            if p != Primitive::Gaussian {
                assert_ne!(a.image, c.image, "{}", p.name());
            }
        }
    }

    #[test]
    fn polygon_topology_junction_degree_two() {
        for seed in 0..20 {
            let s = generate(Primitive::Polygon, seed, (128, 128));
            let k = s.wireframe.segments.len();
            assert!((3..=8).contains(&k), "vertex count {k}");
            assert_eq!(s.wireframe.junctions.len(), k);
            for j in &s.wireframe.junctions {
                let degree = s
                    .wireframe
                    .segments
                    .iter()
                    .filter(|seg| {
                        (seg.x1.x == j.p.x && seg.x1.y == j.p.y)
                            || (seg.x2.x == j.p.x && seg.x2.y == j.p.y)
                    })
                    .count();
                assert_eq!(degree, 2);
            }
        }
    }

    #[test]
    fn checkerboard_segment_count_matches_grid() {
        for seed in 0..20 {
            let s = generate(Primitive::Checkerboard, seed, (128, 128));
            let n = s.wireframe.segments.len();
            // rows+1 horizontals plus cols+1 verticals, rows/cols in 3..=7.
            assert!((8..=16).contains(&n), "grid line count {n}");
            let horizontals = s
                .wireframe
                .segments
                .iter()
                .filter(|s| s.x1.y == s.x2.y)
                .count();
            let verticals = s
                .wireframe
                .segments
                .iter()
                .filter(|s| s.x1.x == s.x2.x)
                .count();
            assert_eq!(horizontals + verticals, n);
            assert!((4..=8).contains(&horizontals));
            assert!((4..=8).contains(&verticals));
        }
    }

    #[test]
    fn cube_has_nine_visible_edges_and_seven_corners() {
        for seed in 0..20 {
            let s = generate(Primitive::Cube, seed, (128, 128));
            assert_eq!(s.wireframe.segments.len(), 9, "seed {seed}");
            // Hexagonal silhouette plus the shared front corner; a clipped
            // pose could split edges, but the layout keeps the cube inside.
            assert_eq!(s.wireframe.junctions.len(), 7, "seed {seed}");
        }
    }

    #[test]
    fn star_spokes_share_the_center() {
        for seed in 0..10 {
            let s = generate(Primitive::Star, seed, (128, 128));
            let k = s.wireframe.segments.len();
            assert!((5..=8).contains(&k));
            let first = s.wireframe.segments[0].x1;
            let hub_degree = s
                .wireframe
                .segments
                .iter()
                .filter(|seg| seg.x1.x == first.x && seg.x1.y == first.y)
                .count();
            assert_eq!(hub_degree, k, "all spokes start at the hub");
        }
    }

    #[test]
    fn strips_have_two_boundaries_per_band() {
        for seed in 0..10 {
            let s = generate(Primitive::Strips, seed, (128, 128));
            let n = s.wireframe.segments.len();
            assert!(n % 2 == 0 && (4..=12).contains(&n), "boundary count {n}");
        }
    }

    #[test]
    fn segments_lie_inside_the_canvas() {
        for p in Primitive::ALL {
            for seed in 0..10 {
                let s = generate(p, seed, (96, 72));
                for seg in &s.wireframe.segments {
                    for q in [seg.x1, seg.x2] {
                        assert!(q.x >= 0.0 && q.x <= 96.0 && q.y >= 0.0 && q.y <= 72.0);
                    }
                }
            }
        }
    }

    #[test]
    fn edges_are_visible_against_their_surroundings() {
        // Probe a few pixels straddling each gt segment's midpoint; the
        // rendered contrast (before noise this is >= 40 gray levels) must
        // survive into the quantized image for most segments.
        let mut visible = 0usize;
        let mut tested = 0usize;
        for p in [Primitive::Checkerboard, Primitive::Polygon, Primitive::Strips] {
            for seed in 0..5 {
                let s = generate(p, seed, (128, 128));
                for seg in &s.wireframe.segments {
                    let mid = pt((seg.x1.x + seg.x2.x) / 2.0, (seg.x1.y + seg.x2.y) / 2.0);
                    let d = pt(seg.x2.x - seg.x1.x, seg.x2.y - seg.x1.y);
                    let len = (d.x * d.x + d.y * d.y).sqrt();
                    if len < 8.0 {
                        continue;
                    }
                    let n = pt(-d.y / len, d.x / len);
                    let a = pt(mid.x + 3.0 * n.x, mid.y + 3.0 * n.y);
                    let b = pt(mid.x - 3.0 * n.x, mid.y - 3.0 * n.y);
                    let inside = |q: Point2| {
                        q.x >= 0.0 && q.x < 128.0 && q.y >= 0.0 && q.y < 128.0
                    };
                    if !inside(a) || !inside(b) {
                        continue;
                    }
                    let sample = |q: Point2| {
                        s.image[q.y.round() as usize * 128 + q.x.round() as usize] as f64
                    };
                    tested += 1;
                    if (sample(a) - sample(b)).abs() > 10.0 {
                        visible += 1;
                    }
                }
            }
        }
        assert!(tested > 50);
        assert!(
            visible as f64 >= 0.9 * tested as f64,
            "only {visible}/{tested} probed edges show contrast"
        );
    }

    #[test]
    fn sample_seeds_do_not_collide() {
        let mut seen = std::collections::HashSet::new();
        for p in Primitive::ALL {
            for i in 0..1000 {
                assert!(seen.insert(sample_seed(7, p, i)));
            }
        }
        // A different master seed produces a disjoint stream.
        for p in Primitive::ALL {
            for i in 0..1000 {
                assert!(seen.insert(sample_seed(8, p, i)));
            }
        }
    }
}
