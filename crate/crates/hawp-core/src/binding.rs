//! Binds dense decoded line proposals to a sparse set of junction
//! proposals and assigns verification ground-truth labels.

use crate::geometry::{Junction, LineSegment, Point2, Wireframe};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BindError {
    #[error("cannot bind against an empty junction set")]
    NoJunctions,
}

/// An endpoint-augmented line proposal: the decoded endpoints `x1`/`x2`
/// together with the junctions `y1`/`y2` they were bound to, the binding
/// cost `delta` (max of the two squared endpoint-to-junction distances, in
/// `units`-scaled coordinates), and a score carried from the source line
/// until verification overwrites it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub y1: Point2,
    pub y2: Point2,
    pub x1: Point2,
    pub x2: Point2,
    pub delta: f64,
    pub score: f64,
}

impl Proposal {
    /// The bound segment `(y1, y2)` with the proposal's score.
    pub fn bound_segment(&self) -> LineSegment {
        LineSegment::with_score(self.y1, self.y2, self.score)
    }
}

/// Default binding threshold on `delta` (squared distance, lattice units).
pub const DEFAULT_TAU_DELTA: f64 = 10.0;
/// Default threshold for verification ground truth (plain distance).
pub const DEFAULT_TAU_VER: f64 = 1.5;

/// Binds each line's endpoints to their nearest junctions.
///
/// Coordinates are divided by `units` (typically the lattice stride) before
/// distances are computed, so `tau_delta` is a squared distance in those
/// units. Lines whose endpoints bind to one and the same junction are
/// dropped, `delta > tau_delta` is pruned, and the survivors are
/// deduplicated per unordered junction pair keeping the smallest delta
/// (first winner on ties). Junction and endpoint coordinates in the output
/// stay in the input (image) frame.
pub fn bind(
    lines: &[LineSegment],
    juncs: &[Junction],
    tau_delta: f64,
    units: f64,
) -> Result<Vec<Proposal>, BindError> {
    if juncs.is_empty() {
        return Err(BindError::NoJunctions);
    }
    let inv = 1.0 / units;
    let scaled: Vec<Point2> = juncs.iter().map(|j| j.p.scale(inv)).collect();
    let nearest = |p: Point2| -> (usize, f64) {
        let q = p.scale(inv);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, j) in scaled.iter().enumerate() {
            let d = q.distance_sq(*j);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        (best, best_d)
    };
    let mut by_pair: Vec<((usize, usize), Proposal)> = Vec::new();
    for line in lines {
        let (j1, d1) = nearest(line.x1);
        let (j2, d2) = nearest(line.x2);
        if j1 == j2 {
            continue;
        }
        let delta = d1.max(d2);
        if delta > tau_delta {
            continue;
        }
        let key = (j1.min(j2), j1.max(j2));
        let prop = Proposal {
            y1: juncs[j1].p,
            y2: juncs[j2].p,
            x1: line.x1,
            x2: line.x2,
            delta,
            score: line.score,
        };
        match by_pair.iter_mut().find(|(k, _)| *k == key) {
            Some((_, existing)) => {
                if prop.delta < existing.delta {
                    *existing = prop;
                }
            }
            None => by_pair.push((key, prop)),
        }
    }
    Ok(by_pair.into_iter().map(|(_, p)| p).collect())
}

/// Labels each proposal positive when some ground-truth segment lies within
/// `tau_ver` of its bound endpoints: the larger of the two endpoint
/// distances, under the better endpoint pairing, must be strictly below the
/// threshold. Proposals and ground truth must share one coordinate frame.
pub fn assign_verification_labels(
    props: &[Proposal],
    gt: &Wireframe,
    tau_ver: f64,
) -> Vec<bool> {
    props
        .iter()
        .map(|prop| {
            gt.segments.iter().any(|seg| {
                let straight = prop.y1.distance(seg.x1).max(prop.y2.distance(seg.x2));
                let crossed = prop.y1.distance(seg.x2).max(prop.y2.distance(seg.x1));
                straight.min(crossed) < tau_ver
            })
        })
        .collect()
}
