//! The holistic attraction (HAT) field codec.
//!
//! Every off-segment pixel inside a segment's attraction region encodes that
//! segment as a 4-vector `(d, theta, theta1, theta2)`: the perpendicular
//! distance to the segment, the rotation that puts the foot of the
//! perpendicular straight "ahead" of the pixel, and the two angles that
//! subtend the endpoints from the rotated frame. The segment is recovered in
//! closed form, so a dense field of these vectors is a redundant, decodable
//! representation of the whole wireframe.

use crate::geometry::{project_to_segment, LineSegment, Point2, Wireframe};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HatError {
    /// Encoding is undefined: the point lies on the segment's line or its
    /// perpendicular foot is not interior.
    #[error("degenerate encoding: zero distance or non-interior foot")]
    DegenerateEncoding,
    /// Decode parameters outside their domain (d <= 0, theta1 not in
    /// (0, pi/2), theta2 not in (-pi/2, 0]).
    #[error("invalid decode parameters")]
    InvalidParameters,
    /// Operations over a wireframe require at least one segment.
    #[error("wireframe has no segments")]
    EmptyWireframe,
}

/// Unnormalized HAT vector. `d` is in lattice units, angles in radians with
/// `theta` in `[-pi, pi)`, `theta1` in `(0, pi/2)`, `theta2` in `(-pi/2, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatVector {
    pub d: f64,
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Nearest-segment labels on the stride-s lattice. `-1` marks background.
#[derive(Debug, Clone)]
pub struct RegionLabels {
    pub width: usize,
    pub height: usize,
    /// Index into the wireframe's segment list, `-1` for background.
    pub labels: Vec<i32>,
    /// Clamped point-to-segment distance to the nearest segment, in lattice
    /// units (filled for background pixels too).
    pub distances: Vec<f64>,
}

impl RegionLabels {
    pub fn label(&self, x: usize, y: usize) -> i32 {
        self.labels[y * self.width + x]
    }
}

/// The HAT field on the stride-s lattice. All planes are stored normalized
/// to `[0, 1]` as f32 row-major grids; `mask` is 1 on foreground pixels and
/// 0 elsewhere, and every plane is 0 wherever `mask` is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HatField {
    pub width_s: usize,
    pub height_s: usize,
    pub stride: u32,
    /// Distance normalization cap, in lattice units.
    pub tau_d: f64,
    pub d: Vec<f32>,
    pub delta_d: Vec<f32>,
    pub theta: Vec<f32>,
    pub theta1: Vec<f32>,
    pub theta2: Vec<f32>,
    pub mask: Vec<f32>,
}

impl HatField {
    pub fn zeros(width_s: usize, height_s: usize, stride: u32, tau_d: f64) -> Self {
        let n = width_s * height_s;
        Self {
            width_s,
            height_s,
            stride,
            tau_d,
            d: vec![0.0; n],
            delta_d: vec![0.0; n],
            theta: vec![0.0; n],
            theta1: vec![0.0; n],
            theta2: vec![0.0; n],
            mask: vec![0.0; n],
        }
    }

    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width_s + x
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m > 0.5).count()
    }
}

/// Default distance cap for attraction regions, in lattice units.
pub const DEFAULT_TAU_D: f64 = 5.0;
/// Pixels closer to their segment than this are background: they sit on the
/// (anti-aliased) stroke itself and the encoding degenerates as d -> 0.
pub const DEFAULT_D_MIN: f64 = 0.05;

/// Ceiling division used to size the stride-s lattice so it covers the
/// image.
pub fn lattice_dim(image_dim: u32, stride: u32) -> usize {
    ((image_dim + stride - 1) / stride) as usize
}

/// Labels every lattice point with its nearest segment (ties to the lowest
/// segment index), then demotes to background the points that are farther
/// than `tau_d`, closer than `d_min`, or whose perpendicular foot is not
/// interior. Segment coordinates are divided by `stride` before any
/// distance is computed, so `tau_d`/`d_min` are in lattice units.
pub fn assign_regions(
    wf: &Wireframe,
    width_s: usize,
    height_s: usize,
    tau_d: f64,
    d_min: f64,
    stride: u32,
) -> Result<RegionLabels, HatError> {
    if wf.segments.is_empty() {
        return Err(HatError::EmptyWireframe);
    }
    let inv = 1.0 / stride as f64;
    let segs: Vec<LineSegment> = wf.segments.iter().map(|s| s.scaled(inv)).collect();
    let rows: Vec<(Vec<i32>, Vec<f64>)> = (0..height_s)
        .into_par_iter()
        .map(|y| {
            let mut labels = vec![-1i32; width_s];
            let mut distances = vec![0.0f64; width_s];
            for x in 0..width_s {
                let p = Point2::new(x as f64, y as f64);
                let mut best = usize::MAX;
                let mut best_d = f64::INFINITY;
                let mut best_interior = false;
                for (i, seg) in segs.iter().enumerate() {
                    let proj = project_to_segment(p, seg);
                    if proj.distance < best_d {
                        best_d = proj.distance;
                        best = i;
                        best_interior = proj.interior;
                    }
                }
                distances[x] = best_d;
                let foreground = best_d <= tau_d && best_d >= d_min && best_interior;
                labels[x] = if foreground { best as i32 } else { -1 };
            }
            (labels, distances)
        })
        .collect();
    let mut labels = Vec::with_capacity(width_s * height_s);
    let mut distances = Vec::with_capacity(width_s * height_s);
    for (l, d) in rows {
        labels.extend(l);
        distances.extend(d);
    }
    Ok(RegionLabels {
        width: width_s,
        height: height_s,
        labels,
        distances,
    })
}

/// Encodes the segment seen from `p` as a HAT vector. Fails when the
/// perpendicular foot is not strictly interior or the distance vanishes.
pub fn encode_point(p: Point2, seg: &LineSegment) -> Result<HatVector, HatError> {
    let proj = project_to_segment(p, seg);
    if !proj.interior || proj.distance <= 0.0 {
        return Err(HatError::DegenerateEncoding);
    }
    let d = proj.distance;
    let u = (proj.foot - p).scale(1.0 / d);
    let mut theta = u.y.atan2(u.x);
    if theta == PI {
        theta = -PI;
    }
    // Unit vector along the rotated frame's +y axis (90 degrees CCW of u);
    // endpoint heights along it decide which endpoint plays x1 (above the
    // foot, positive angle).
    let n = Point2::new(-u.y, u.x);
    let h1 = (seg.x1 - proj.foot).dot(n);
    let h2 = (seg.x2 - proj.foot).dot(n);
    let (top, bottom) = if h1 > h2 { (h1, h2) } else { (h2, h1) };
    let theta1 = (top / d).atan();
    let theta2 = (bottom / d).atan();
    if theta1 <= 0.0 || theta2 > 0.0 {
        return Err(HatError::DegenerateEncoding);
    }
    Ok(HatVector {
        d,
        theta,
        theta1,
        theta2,
    })
}

/// Closed-form inverse of [`encode_point`]: reconstructs the segment from a
/// HAT vector anchored at `p`. The returned `x1` is the endpoint subtended
/// by `theta1` (the "upper" one in the rotated frame).
pub fn decode_point(p: Point2, v: &HatVector) -> Result<LineSegment, HatError> {
    validate_decode(v)?;
    let (s, c) = v.theta.sin_cos();
    let endpoint = |t: f64| {
        Point2::new(
            p.x + v.d * (c - s * t),
            p.y + v.d * (s + c * t),
        )
    };
    Ok(LineSegment::new(
        endpoint(v.theta1.tan()),
        endpoint(v.theta2.tan()),
    ))
}

fn validate_decode(v: &HatVector) -> Result<(), HatError> {
    let ok = v.d > 0.0
        && v.d.is_finite()
        && v.theta.is_finite()
        && v.theta1 > 0.0
        && v.theta1 < FRAC_PI_2
        && v.theta2 > -FRAC_PI_2
        && v.theta2 <= 0.0;
    if ok {
        Ok(())
    } else {
        Err(HatError::InvalidParameters)
    }
}

/// Analytic Jacobian of [`decode_point`]: rows are
/// `(x1.x, x1.y, x2.x, x2.y)`, columns `(d, theta, theta1, theta2)`.
/// `theta1`/`theta2` must stay 1e-6 away from `±pi/2` so the `tan` terms
/// are well conditioned.
pub fn decode_jacobian(v: &HatVector) -> Result<[[f64; 4]; 4], HatError> {
    validate_decode(v)?;
    if FRAC_PI_2 - v.theta1 < 1e-6 || v.theta2 + FRAC_PI_2 < 1e-6 {
        return Err(HatError::InvalidParameters);
    }
    let (s, c) = v.theta.sin_cos();
    let mut j = [[0.0; 4]; 4];
    for (e, &ti) in [v.theta1, v.theta2].iter().enumerate() {
        let t = ti.tan();
        let sec2 = 1.0 / (ti.cos() * ti.cos());
        let rx = 2 * e; // row of the endpoint's x coordinate
        // d/dd
        j[rx][0] = c - s * t;
        j[rx + 1][0] = s + c * t;
        // d/dtheta
        j[rx][1] = v.d * (-s - c * t);
        j[rx + 1][1] = v.d * (c - s * t);
        // d/dtheta_i (column 2 for theta1, 3 for theta2)
        j[rx][2 + e] = -v.d * s * sec2;
        j[rx + 1][2 + e] = v.d * c * sec2;
    }
    Ok(j)
}

/// Maps an unnormalized HAT vector to the `[0,1]` storage ranges:
/// `d/tau_d` (clamped), `theta/2pi + 1/2`, `theta1/(pi/2)`,
/// `theta2/(pi/2) + 1`.
pub fn normalize_vector(v: &HatVector, tau_d: f64) -> [f64; 4] {
    [
        (v.d / tau_d).clamp(0.0, 1.0),
        v.theta / TAU + 0.5,
        v.theta1 / FRAC_PI_2,
        v.theta2 / FRAC_PI_2 + 1.0,
    ]
}

/// Inverse of [`normalize_vector`] on the valid ranges.
pub fn denormalize_vector(n: [f64; 4], tau_d: f64) -> HatVector {
    HatVector {
        d: n[0] * tau_d,
        theta: (n[1] - 0.5) * TAU,
        theta1: n[2] * FRAC_PI_2,
        theta2: (n[3] - 1.0) * FRAC_PI_2,
    }
}

/// Builds the ground-truth HAT field of a wireframe: every foreground
/// lattice point (per [`assign_regions`]) stores the normalized encoding of
/// its segment; the residual plane is zero and the mask records foreground.
pub fn encode_field(
    wf: &Wireframe,
    stride: u32,
    tau_d: f64,
    d_min: f64,
) -> Result<HatField, HatError> {
    let width_s = lattice_dim(wf.width, stride);
    let height_s = lattice_dim(wf.height, stride);
    let labels = assign_regions(wf, width_s, height_s, tau_d, d_min, stride)?;
    let inv = 1.0 / stride as f64;
    let segs: Vec<LineSegment> = wf.segments.iter().map(|s| s.scaled(inv)).collect();
    let mut field = HatField::zeros(width_s, height_s, stride, tau_d);
    let rows: Vec<Vec<Option<[f64; 4]>>> = (0..height_s)
        .into_par_iter()
        .map(|y| {
            (0..width_s)
                .map(|x| {
                    let label = labels.label(x, y);
                    if label < 0 {
                        return None;
                    }
                    let p = Point2::new(x as f64, y as f64);
                    encode_point(p, &segs[label as usize])
                        .ok()
                        .map(|v| normalize_vector(&v, tau_d))
                })
                .collect()
        })
        .collect();
    for (y, row) in rows.iter().enumerate() {
        for (x, enc) in row.iter().enumerate() {
            if let Some(n) = enc {
                let i = field.idx(x, y);
                field.d[i] = n[0] as f32;
                field.theta[i] = n[1] as f32;
                field.theta1[i] = n[2] as f32;
                field.theta2[i] = n[3] as f32;
                field.mask[i] = 1.0;
            }
        }
    }
    Ok(field)
}

/// One decoded proposal: the segment in image coordinates plus the lattice
/// pixel (scaled back to image coordinates) it was decoded from.
#[derive(Debug, Clone, Copy)]
pub struct DecodedProposal {
    pub segment: LineSegment,
    pub origin: Point2,
}

/// Decodes every foreground pixel at every requested residual scale.
///
/// For scale `i` the rectified normalized distance is `d + i * delta_d`;
/// non-positive or non-finite rectifications are skipped (and counted),
/// values above 1 are clamped to 1. The decoded endpoints are multiplied by
/// the stride back into image coordinates. The returned counts satisfy
/// `proposals.len() + skipped == scales.len() * foreground_count` exactly.
pub fn decode_field(field: &HatField, scales: &[i32]) -> (Vec<DecodedProposal>, usize) {
    let stride = field.stride as f64;
    let per_row: Vec<(Vec<DecodedProposal>, usize)> = (0..field.height_s)
        .into_par_iter()
        .map(|y| {
            let mut out = Vec::new();
            let mut skipped = 0usize;
            for x in 0..field.width_s {
                let i = y * field.width_s + x;
                if field.mask[i] <= 0.5 {
                    continue;
                }
                for &scale in scales {
                    let rectified =
                        field.d[i] as f64 + scale as f64 * field.delta_d[i] as f64;
                    if !rectified.is_finite() || rectified <= 0.0 {
                        skipped += 1;
                        continue;
                    }
                    let n = [
                        rectified.min(1.0),
                        field.theta[i] as f64,
                        field.theta1[i] as f64,
                        field.theta2[i] as f64,
                    ];
                    let v = denormalize_vector(n, field.tau_d);
                    let p = Point2::new(x as f64, y as f64);
                    match decode_point(p, &v) {
                        Ok(seg) => out.push(DecodedProposal {
                            segment: seg.scaled(stride),
                            origin: p.scale(stride),
                        }),
                        Err(_) => skipped += 1,
                    }
                }
            }
            (out, skipped)
        })
        .collect();
    let mut proposals = Vec::new();
    let mut skipped = 0;
    for (row, s) in per_row {
        proposals.extend(row);
        skipped += s;
    }
    (proposals, skipped)
}

/// Collapses near-duplicate segments from a dense decode: segments are
/// brought to a canonical endpoint order, sorted, and a segment is dropped
/// when both its endpoints lie within `tol` of the previously kept one.
/// Intended as post-processing for [`decode_field`] output before set-based
/// evaluation; binding performs its own deduplication.
pub fn dedup_segments(segments: &[LineSegment], tol: f64) -> Vec<LineSegment> {
    let canonical = |s: &LineSegment| {
        let swap = (s.x2.x, s.x2.y) < (s.x1.x, s.x1.y);
        if swap {
            LineSegment::with_score(s.x2, s.x1, s.score)
        } else {
            *s
        }
    };
    let mut segs: Vec<LineSegment> = segments.iter().map(|s| canonical(s)).collect();
    segs.sort_by(|a, b| {
        (a.x1.x, a.x1.y, a.x2.x, a.x2.y)
            .partial_cmp(&(b.x1.x, b.x1.y, b.x2.x, b.x2.y))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<LineSegment> = Vec::new();
    for seg in segs {
        let dup = kept.last().is_some_and(|k| {
            k.x1.distance(seg.x1).max(k.x2.distance(seg.x2)) <= tol
        });
        if !dup {
            kept.push(seg);
        }
    }
    kept
}
