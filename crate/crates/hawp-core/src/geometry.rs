//! Foundational 2-D types: points, segments, lines, homographies, and the
//! segment distance metrics used by every other module.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// Homogeneous w-component vanished while applying a homography.
    #[error("degenerate point: homogeneous w-component ~ 0")]
    DegeneratePoint,
    /// A matrix with zero determinant was supplied where an invertible
    /// transform is required.
    #[error("singular homography matrix")]
    SingularMatrix,
}

/// A 2-D point with sub-pixel precision, also used as a 2-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point2) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dot(&self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// A scored line segment; `score` defaults to 1 for ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub x1: Point2,
    pub x2: Point2,
    pub score: f64,
}

impl LineSegment {
    pub fn new(x1: Point2, x2: Point2) -> Self {
        Self { x1, x2, score: 1.0 }
    }

    pub fn with_score(x1: Point2, x2: Point2, score: f64) -> Self {
        Self { x1, x2, score }
    }

    pub fn length(&self) -> f64 {
        self.x1.distance(self.x2)
    }

    /// Both endpoints divided by `s`; used to move between the image lattice
    /// and the stride-s lattice.
    pub fn scaled(&self, s: f64) -> LineSegment {
        LineSegment {
            x1: self.x1.scale(s),
            x2: self.x2.scale(s),
            score: self.score,
        }
    }
}

/// Normalized line equation `a·x + b = 0` with `‖a‖ = 1` and a canonical
/// sign (first nonzero component of `a` positive) so serialization is
/// reproducible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub a: [f64; 2],
    pub b: f64,
}

impl Line {
    /// Line through the two endpoints of `seg`.
    pub fn from_segment(seg: &LineSegment) -> Line {
        let d = seg.x2 - seg.x1;
        let len = d.norm();
        let mut a = [-d.y / len, d.x / len];
        let mut b = -(a[0] * seg.x1.x + a[1] * seg.x1.y);
        let flip = if a[0] != 0.0 { a[0] < 0.0 } else { a[1] < 0.0 };
        if flip {
            a = [-a[0], -a[1]];
            b = -b;
        }
        Line { a, b }
    }

    /// Signed evaluation `a·p + b`; zero (within 1e-9) on the line.
    pub fn eval(&self, p: Point2) -> f64 {
        self.a[0] * p.x + self.a[1] * p.y + self.b
    }
}

/// Result of projecting a point onto a segment.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    /// Perpendicular foot when interior, otherwise the nearer endpoint.
    pub foot: Point2,
    /// `‖p − foot‖`.
    pub distance: f64,
    /// True when the perpendicular foot falls strictly between the
    /// endpoints. Feet exactly on an endpoint count as non-interior; the
    /// HAT angle parametrization is not defined there.
    pub interior: bool,
}

/// Projects `p` onto `seg`, clamping the foot to the segment.
pub fn project_to_segment(p: Point2, seg: &LineSegment) -> Projection {
    let d = seg.x2 - seg.x1;
    let len_sq = d.dot(d);
    let t = (p - seg.x1).dot(d) / len_sq;
    let interior = t > 0.0 && t < 1.0;
    let tc = t.clamp(0.0, 1.0);
    let foot = seg.x1 + d.scale(tc);
    Projection {
        foot,
        distance: p.distance(foot),
        interior,
    }
}

/// Structural distance: half the endpoint-distance sum under the better of
/// the two endpoint pairings. Zero iff the segments are equal up to
/// endpoint order.
pub fn structural_distance(a: &LineSegment, b: &LineSegment) -> f64 {
    let straight = a.x1.distance(b.x1) + a.x2.distance(b.x2);
    let crossed = a.x1.distance(b.x2) + a.x2.distance(b.x1);
    0.5 * straight.min(crossed)
}

/// Orthogonal distance: half the sum of the four point-to-segment distances
/// (each endpoint of one segment projected onto the other, feet clamped).
pub fn orthogonal_distance(a: &LineSegment, b: &LineSegment) -> f64 {
    let d = project_to_segment(a.x1, b).distance
        + project_to_segment(a.x2, b).distance
        + project_to_segment(b.x1, a).distance
        + project_to_segment(b.x2, a).distance;
    0.5 * d
}

/// 3×3 projective transform, row-major, normalized so `m[2][2] = 1`
/// whenever that entry is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]],
        }
    }

    /// Builds from a raw matrix, rejecting singular input and normalizing
    /// the scale.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        let h = Self { m };
        if h.det().abs() < 1e-12 {
            return Err(GeometryError::SingularMatrix);
        }
        Ok(h.normalized())
    }

    fn normalized(mut self) -> Self {
        let w = self.m[2][2];
        if w != 0.0 {
            for row in self.m.iter_mut() {
                for v in row.iter_mut() {
                    *v /= w;
                }
            }
        }
        self
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        let det = self.det();
        if det.abs() < 1e-12 {
            return Err(GeometryError::SingularMatrix);
        }
        let m = &self.m;
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                inv[r][c] = adj[r][c] / det;
            }
        }
        Ok(Homography { m: inv }.normalized())
    }

    /// Composition: `self.compose(other)` applies `other` first.
    pub fn compose(&self, other: &Homography) -> Homography {
        let mut m = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                for k in 0..3 {
                    m[r][c] += self.m[r][k] * other.m[k][c];
                }
            }
        }
        Homography { m }.normalized()
    }

    /// Perspective-divided image of `p`.
    pub fn apply(&self, p: Point2) -> Result<Point2, GeometryError> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if w.abs() < 1e-12 {
            return Err(GeometryError::DegeneratePoint);
        }
        Ok(Point2::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        ))
    }
}

/// A scored junction point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub p: Point2,
    pub score: f64,
}

impl Junction {
    pub fn new(p: Point2, score: f64) -> Self {
        Self { p, score }
    }
}

/// A vectorized set of scored line segments and junctions in image
/// coordinates, with coordinates inside `[0, width] × [0, height]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wireframe {
    pub width: u32,
    pub height: u32,
    pub segments: Vec<LineSegment>,
    pub junctions: Vec<Junction>,
}

impl Wireframe {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            segments: Vec::new(),
            junctions: Vec::new(),
        }
    }

    /// Unique segment endpoints in first-appearance order (exact coordinate
    /// equality), each scored 1. Junction ground truth is built from these.
    pub fn unique_endpoints(&self) -> Vec<Point2> {
        let mut seen: Vec<Point2> = Vec::new();
        for seg in &self.segments {
            for p in [seg.x1, seg.x2] {
                if !seen.iter().any(|q| q.x == p.x && q.y == p.y) {
                    seen.push(p);
                }
            }
        }
        seen
    }
}

/// Clips `seg` to the rectangle `[0, w] × [0, h]` (inclusive boundaries,
/// Liang–Barsky). Returns `None` when the segment lies fully outside or
/// degenerates to a point.
pub fn clip_segment(seg: &LineSegment, w: f64, h: f64) -> Option<LineSegment> {
    let dx = seg.x2.x - seg.x1.x;
    let dy = seg.x2.y - seg.x1.y;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    // (p, q) per boundary: t is clipped to q/p entering when p < 0, leaving
    // when p > 0; p = 0 keeps the segment iff it is inside that boundary.
    let checks = [
        (-dx, seg.x1.x),
        (dx, w - seg.x1.x),
        (-dy, seg.x1.y),
        (dy, h - seg.x1.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                if r > t0 {
                    t0 = r;
                }
            } else {
                if r < t0 {
                    return None;
                }
                if r < t1 {
                    t1 = r;
                }
            }
        }
    }
    if t0 >= t1 {
        return None;
    }
    // Unclipped endpoints pass through exactly, so shared endpoints stay
    // bitwise-shared (junction identity relies on exact equality). Clipped
    // ones land on the rectangle boundary up to rounding; the clamp keeps
    // them inside it.
    let a = if t0 == 0.0 {
        seg.x1
    } else {
        Point2::new(
            (seg.x1.x + t0 * dx).clamp(0.0, w),
            (seg.x1.y + t0 * dy).clamp(0.0, h),
        )
    };
    let b = if t1 == 1.0 {
        seg.x2
    } else {
        Point2::new(
            (seg.x1.x + t1 * dx).clamp(0.0, w),
            (seg.x1.y + t1 * dy).clamp(0.0, h),
        )
    };
    if a.distance(b) == 0.0 {
        return None;
    }
    Some(LineSegment::with_score(a, b, seg.score))
}

/// Maps a wireframe through `h` into an `out_size = (width, height)` frame:
/// endpoints and junctions transformed, segments clipped to the output
/// rectangle, segments fully outside (or collapsing) dropped, junctions
/// outside dropped, scores preserved.
pub fn warp_wireframe(
    h: &Homography,
    wf: &Wireframe,
    out_size: (u32, u32),
) -> Result<Wireframe, GeometryError> {
    let (w, hgt) = (out_size.0 as f64, out_size.1 as f64);
    let mut out = Wireframe::new(out_size.0, out_size.1);
    for seg in &wf.segments {
        let (Ok(a), Ok(b)) = (h.apply(seg.x1), h.apply(seg.x2)) else {
            continue;
        };
        let warped = LineSegment::with_score(a, b, seg.score);
        if let Some(clipped) = clip_segment(&warped, w, hgt) {
            out.segments.push(clipped);
        }
    }
    for j in &wf.junctions {
        if let Ok(p) = h.apply(j.p) {
            if p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= hgt {
                out.junctions.push(Junction::new(p, j.score));
            }
        }
    }
    Ok(out)
}
