//! Pure loss evaluators for every training objective in the pipeline.
//!
//! These compute scalar losses from predictions and ground truth without
//! any gradient machinery, so external trainers can be checked against a
//! reference and unit tests can pin closed-form values.

use crate::geometry::{project_to_segment, LineSegment, Point2, Wireframe};
use crate::hatfield::{decode_point, denormalize_vector, lattice_dim, HatField};
use crate::junctions::JunctionMaps;
use thiserror::Error;

/// Weight of the junction heatmap term in the combined junction loss.
pub const DEFAULT_BETA_PT: f64 = 8.0;
/// Weight of the junction offset term in the combined junction loss.
pub const DEFAULT_BETA_O: f64 = 0.25;
/// Probabilities are clamped to `[EPS, 1-EPS]` before taking logs.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("probability {value} outside [0, 1]")]
    DomainError { value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Masked mean absolute errors of the distance plane, the three angle
/// planes (one mean over all three jointly), and the residual plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldL1 {
    pub l1_d: f64,
    pub l1_angles: f64,
    pub l1_residual: f64,
}

/// Every loss component with the weighted total; the junction terms carry
/// their beta weights in the total, everything else weight one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub l1_d: f64,
    pub l1_angles: f64,
    pub l1_residual: f64,
    pub epe: f64,
    pub bce_junction: f64,
    pub l1_offset: f64,
    pub bce_edge_balanced: f64,
    pub total: f64,
}

impl LossReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        l1_d: f64,
        l1_angles: f64,
        l1_residual: f64,
        epe: f64,
        bce_junction: f64,
        l1_offset: f64,
        bce_edge_balanced: f64,
        beta_pt: f64,
        beta_o: f64,
    ) -> Self {
        LossReport {
            l1_d,
            l1_angles,
            l1_residual,
            epe,
            bce_junction,
            l1_offset,
            bce_edge_balanced,
            total: l1_d
                + l1_angles
                + l1_residual
                + epe
                + beta_pt * bce_junction
                + beta_o * l1_offset
                + bce_edge_balanced,
        }
    }
}

fn check_field_shapes(pred: &HatField, gt: &HatField) -> Result<(), LossError> {
    if pred.width_s != gt.width_s || pred.height_s != gt.height_s {
        return Err(LossError::ShapeMismatch {
            expected: (gt.width_s, gt.height_s),
            got: (pred.width_s, pred.height_s),
        });
    }
    Ok(())
}

/// Masked ℓ1 losses between two fields, in the normalized plane units.
///
/// The mask is taken from `gt`; each reported value is a mean over the
/// masked entries (zero when the mask is empty). The residual plane's
/// ground truth is computed on the fly as `|gt.d − pred.d|` per pixel.
pub fn field_l1_losses(pred: &HatField, gt: &HatField) -> Result<FieldL1, LossError> {
    check_field_shapes(pred, gt)?;
    let mut count = 0usize;
    let mut sum_d = 0.0;
    let mut sum_ang = 0.0;
    let mut sum_res = 0.0;
    for i in 0..gt.mask.len() {
        if gt.mask[i] <= 0.5 {
            continue;
        }
        count += 1;
        let dd = (pred.d[i] as f64 - gt.d[i] as f64).abs();
        sum_d += dd;
        sum_ang += (pred.theta[i] as f64 - gt.theta[i] as f64).abs()
            + (pred.theta1[i] as f64 - gt.theta1[i] as f64).abs()
            + (pred.theta2[i] as f64 - gt.theta2[i] as f64).abs();
        sum_res += (pred.delta_d[i] as f64 - dd).abs();
    }
    if count == 0 {
        return Ok(FieldL1 {
            l1_d: 0.0,
            l1_angles: 0.0,
            l1_residual: 0.0,
        });
    }
    let n = count as f64;
    Ok(FieldL1 {
        l1_d: sum_d / n,
        l1_angles: sum_ang / (3.0 * n),
        l1_residual: sum_res / n,
    })
}

/// Endpoint error of a predicted field against the ground-truth wireframe.
///
/// For every foreground pixel of `pred.mask` and every residual scale, the
/// field is decoded in lattice units (rectified distance `d + i·Δd`,
/// clamped to 1, non-positive or undecodable combinations skipped) and the
/// ℓ1 error of the four endpoint coordinates — under the better endpoint
/// pairing — against the pixel's nearest ground-truth segment is divided
/// by that segment's lattice-unit length. The result is the sum over all
/// pixels and scales.
pub fn epe_loss(
    pred: &HatField,
    gt_wf: &Wireframe,
    scales: &[i32],
    stride: u32,
) -> Result<f64, LossError> {
    let expected = (
        lattice_dim(gt_wf.width, stride),
        lattice_dim(gt_wf.height, stride),
    );
    if (pred.width_s, pred.height_s) != expected || pred.stride != stride {
        return Err(LossError::ShapeMismatch {
            expected,
            got: (pred.width_s, pred.height_s),
        });
    }
    let inv = 1.0 / stride as f64;
    let segs: Vec<LineSegment> = gt_wf.segments.iter().map(|s| s.scaled(inv)).collect();
    if segs.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for y in 0..pred.height_s {
        for x in 0..pred.width_s {
            let i = y * pred.width_s + x;
            if pred.mask[i] <= 0.5 {
                continue;
            }
            let p = Point2::new(x as f64, y as f64);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (k, seg) in segs.iter().enumerate() {
                let d = project_to_segment(p, seg).distance;
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            let gt_seg = &segs[best];
            let len = gt_seg.length();
            if len <= 0.0 {
                continue;
            }
            for &scale in scales {
                let rectified = pred.d[i] as f64 + scale as f64 * pred.delta_d[i] as f64;
                if !rectified.is_finite() || rectified <= 0.0 {
                    continue;
                }
                let n = [
                    rectified.min(1.0),
                    pred.theta[i] as f64,
                    pred.theta1[i] as f64,
                    pred.theta2[i] as f64,
                ];
                let v = denormalize_vector(n, pred.tau_d);
                let Ok(dec) = decode_point(p, &v) else { continue };
                let l1 = |a: Point2, b: Point2| (a.x - b.x).abs() + (a.y - b.y).abs();
                let straight = l1(dec.x1, gt_seg.x1) + l1(dec.x2, gt_seg.x2);
                let crossed = l1(dec.x1, gt_seg.x2) + l1(dec.x2, gt_seg.x1);
                total += straight.min(crossed) / len;
            }
        }
    }
    Ok(total)
}

/// Clamps a probability into `[EPS, 1-EPS]`; values strictly outside
/// `[0, 1]` are a domain error.
fn checked_prob(p: f64) -> Result<f64, LossError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(LossError::DomainError { value: p });
    }
    Ok(p.clamp(BCE_EPS, 1.0 - BCE_EPS))
}

fn bce_term(p: f64, t: f64) -> f64 {
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

/// Junction losses: heatmap BCE and masked offset ℓ1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionLoss {
    /// Mean binary cross-entropy over all cells.
    pub bce: f64,
    /// Sum of per-cell offset ℓ1 over cells with positive ground truth.
    pub l1_offset: f64,
    /// `beta_pt * bce + beta_o * l1_offset`.
    pub total: f64,
}

/// Computes the junction heatmap and offset losses. The predicted heatmap
/// must lie in `[0, 1]`; exact zeros/ones are clamped by [`BCE_EPS`] before
/// the log.
pub fn junction_losses(
    pred: &JunctionMaps,
    gt: &JunctionMaps,
    beta_pt: f64,
    beta_o: f64,
) -> Result<JunctionLoss, LossError> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(LossError::ShapeMismatch {
            expected: (gt.width, gt.height),
            got: (pred.width, pred.height),
        });
    }
    let n = gt.heatmap.len();
    let mut bce = 0.0;
    let mut l1 = 0.0;
    for i in 0..n {
        let p = checked_prob(pred.heatmap[i] as f64)?;
        let t = gt.heatmap[i] as f64;
        bce += bce_term(p, t);
        if t > 0.5 {
            l1 += (pred.offset_x[i] as f64 - gt.offset_x[i] as f64).abs()
                + (pred.offset_y[i] as f64 - gt.offset_y[i] as f64).abs();
        }
    }
    bce /= n as f64;
    Ok(JunctionLoss {
        bce,
        l1_offset: l1,
        total: beta_pt * bce + beta_o * l1,
    })
}

/// Balanced edge BCE with a flag for degenerate single-class ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBce {
    pub value: f64,
    /// True when `gt` contained only one class; `value` is then the plain
    /// unbalanced mean BCE.
    pub single_class: bool,
}

/// Class-balanced binary cross-entropy over an edge map: the positive and
/// negative sums are each normalized by their class count and averaged.
/// Ground-truth entries above 0.5 count as positive. When only one class
/// is present the unbalanced mean is returned with `single_class` set.
pub fn balanced_bce_edge(pred: &[f64], gt: &[f64]) -> Result<EdgeBce, LossError> {
    if pred.len() != gt.len() {
        return Err(LossError::LengthMismatch {
            expected: gt.len(),
            got: pred.len(),
        });
    }
    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut pos_n = 0usize;
    for (&p, &t) in pred.iter().zip(gt) {
        let p = checked_prob(p)?;
        if t > 0.5 {
            pos_sum += -p.ln();
            pos_n += 1;
        } else {
            neg_sum += -(1.0 - p).ln();
        }
    }
    let neg_n = gt.len() - pos_n;
    if pos_n == 0 || neg_n == 0 {
        let value = if gt.is_empty() {
            0.0
        } else {
            (pos_sum + neg_sum) / gt.len() as f64
        };
        return Ok(EdgeBce {
            value,
            single_class: true,
        });
    }
    Ok(EdgeBce {
        value: 0.5 * (pos_sum / pos_n as f64 + neg_sum / neg_n as f64),
        single_class: false,
    })
}

/// Mean binary cross-entropy of verification scores against boolean
/// labels; zero for empty inputs.
pub fn verification_bce(scores: &[f64], labels: &[bool]) -> Result<f64, LossError> {
    if scores.len() != labels.len() {
        return Err(LossError::LengthMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (&s, &l) in scores.iter().zip(labels) {
        let p = checked_prob(s)?;
        sum += bce_term(p, if l { 1.0 } else { 0.0 });
    }
    Ok(sum / scores.len() as f64)
}
