//! Quantitative evaluation protocol: structural AP for segments, junction
//! mAP, heatmap AP/F over rasterized edge pixels, repeatability under
//! homographies, and the random homography sampler itself.
//!
//! All set-based metrics rescale both predictions and ground truth onto a
//! common evaluation domain (default 128x128) with per-axis scaling, and
//! use greedy score-ordered matching with consumption.

use crate::geometry::{
    orthogonal_distance, structural_distance, warp_wireframe, Homography, LineSegment, Point2,
    Wireframe,
};
use crate::raster::rasterize_segments;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Structural AP squared-distance thresholds.
pub const SAP_THRESHOLDS: [f64; 3] = [5.0, 10.0, 15.0];
/// Junction AP squared-distance thresholds.
pub const JUNCTION_AP_THRESHOLDS: [f64; 3] = [0.5, 1.0, 2.0];
/// Default evaluation domain for the set-based metrics.
pub const DEFAULT_EVAL_DOMAIN: (u32, u32) = (128, 128);
/// Default repeatability matching threshold, in pixels.
pub const DEFAULT_REP_EPS: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {expected} ground-truth entries vs {got} predictions")]
    LengthMismatch { expected: usize, got: usize },
    #[error("homography is not invertible")]
    DegenerateHomography,
    #[error("no valid homography found after 100 attempts")]
    SamplingFailed,
}

/// A precision/recall sweep: `thresholds` are descending score cutoffs,
/// one PR point per cutoff, with the all-point interpolated AP.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub ap: f64,
}

/// All-point interpolated AP for PR points whose recall is (weakly)
/// ascending: the precision envelope from the high-recall side integrated
/// over recall increments.
fn ap_from_pr(precision: &[f64], recall: &[f64]) -> f64 {
    let n = precision.len();
    if n == 0 {
        return 0.0;
    }
    let mut env = precision.to_vec();
    for i in (0..n - 1).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev = 0.0;
    for i in 0..n {
        ap += (recall[i] - prev).max(0.0) * env[i];
        prev = prev.max(recall[i]);
    }
    ap
}

/// Builds the PR curve from per-detection `(score, is_tp)` labels and the
/// total ground-truth count. Detections are stably sorted by descending
/// score, so ties keep their accumulation order.
fn average_precision(mut labeled: Vec<(f64, bool)>, n_gt: usize) -> PrCurve {
    labeled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut tp = 0usize;
    let mut precision = Vec::with_capacity(labeled.len());
    let mut recall = Vec::with_capacity(labeled.len());
    let mut thresholds = Vec::with_capacity(labeled.len());
    for (rank, &(score, is_tp)) in labeled.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        thresholds.push(score);
        precision.push(tp as f64 / (rank + 1) as f64);
        recall.push(if n_gt > 0 { tp as f64 / n_gt as f64 } else { 0.0 });
    }
    let ap = if n_gt > 0 {
        ap_from_pr(&precision, &recall)
    } else {
        0.0
    };
    PrCurve {
        thresholds,
        precision,
        recall,
        ap,
    }
}

/// Greedy score-ordered matching with consumption: predictions are taken
/// in descending score order (ties by index), each matched to its
/// lowest-cost unmatched ground truth; the match counts as a true positive
/// when that cost is within `thr`. Returns `(score, is_tp)` per
/// prediction, in matching order. Exposed so matcher behavior can be
/// probed with explicit cost functions.
pub fn greedy_label(
    scores: &[f64],
    n_gt: usize,
    cost: impl Fn(usize, usize) -> f64,
    thr: f64,
) -> Vec<(f64, bool)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut used = vec![false; n_gt];
    let mut labeled = Vec::with_capacity(scores.len());
    for &p in &order {
        let mut best: Option<(f64, usize)> = None;
        for g in 0..n_gt {
            if used[g] {
                continue;
            }
            let c = cost(p, g);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, g));
            }
        }
        let tp = match best {
            Some((c, g)) if c <= thr => {
                used[g] = true;
                true
            }
            _ => false,
        };
        labeled.push((scores[p], tp));
    }
    labeled
}

/// Rescales a wireframe onto the evaluation domain with per-axis factors.
fn rescale(wf: &Wireframe, domain: (u32, u32)) -> Wireframe {
    let sx = if wf.width > 0 {
        domain.0 as f64 / wf.width as f64
    } else {
        1.0
    };
    let sy = if wf.height > 0 {
        domain.1 as f64 / wf.height as f64
    } else {
        1.0
    };
    let map = |p: Point2| Point2::new(p.x * sx, p.y * sy);
    let mut out = Wireframe::new(domain.0, domain.1);
    for s in &wf.segments {
        out.segments
            .push(LineSegment::with_score(map(s.x1), map(s.x2), s.score));
    }
    for j in &wf.junctions {
        out.junctions
            .push(crate::geometry::Junction::new(map(j.p), j.score));
    }
    out
}

/// Squared endpoint-distance sum under the better endpoint pairing.
fn squared_pair_cost(a: &LineSegment, b: &LineSegment) -> f64 {
    let straight = a.x1.distance_sq(b.x1) + a.x2.distance_sq(b.x2);
    let crossed = a.x1.distance_sq(b.x2) + a.x2.distance_sq(b.x1);
    straight.min(crossed)
}

fn check_aligned(preds: &[Wireframe], gts: &[Wireframe]) -> Result<(), EvalError> {
    if preds.len() != gts.len() {
        return Err(EvalError::LengthMismatch {
            expected: gts.len(),
            got: preds.len(),
        });
    }
    Ok(())
}

/// Structural AP: per image, predicted segments are greedily matched to
/// ground truth under the squared endpoint-distance test; the dataset-wide
/// PR sweep yields one AP per threshold. Returns `(threshold, curve)`
/// pairs in the given threshold order.
pub fn sap_curves(
    preds: &[Wireframe],
    gts: &[Wireframe],
    thresholds: &[f64],
    domain: (u32, u32),
) -> Result<Vec<(f64, PrCurve)>, EvalError> {
    check_aligned(preds, gts)?;
    let scaled: Vec<(Wireframe, Wireframe)> = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| (rescale(p, domain), rescale(g, domain)))
        .collect();
    let n_gt: usize = scaled.iter().map(|(_, g)| g.segments.len()).sum();
    let mut out = Vec::with_capacity(thresholds.len());
    for &thr in thresholds {
        let per_image: Vec<Vec<(f64, bool)>> = scaled
            .par_iter()
            .map(|(p, g)| {
                let scores: Vec<f64> = p.segments.iter().map(|s| s.score).collect();
                greedy_label(
                    &scores,
                    g.segments.len(),
                    |pi, gi| squared_pair_cost(&p.segments[pi], &g.segments[gi]),
                    thr,
                )
            })
            .collect();
        let labeled: Vec<(f64, bool)> = per_image.into_iter().flatten().collect();
        out.push((thr, average_precision(labeled, n_gt)));
    }
    Ok(out)
}

/// Structural AP values only, per threshold.
pub fn sap(
    preds: &[Wireframe],
    gts: &[Wireframe],
    thresholds: &[f64],
    domain: (u32, u32),
) -> Result<Vec<(f64, f64)>, EvalError> {
    Ok(sap_curves(preds, gts, thresholds, domain)?
        .into_iter()
        .map(|(t, c)| (t, c.ap))
        .collect())
}

/// Junction AP curves under squared point-distance thresholds.
pub fn junction_ap_curves(
    preds: &[Wireframe],
    gts: &[Wireframe],
    thresholds: &[f64],
    domain: (u32, u32),
) -> Result<Vec<(f64, PrCurve)>, EvalError> {
    check_aligned(preds, gts)?;
    let scaled: Vec<(Wireframe, Wireframe)> = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| (rescale(p, domain), rescale(g, domain)))
        .collect();
    let n_gt: usize = scaled.iter().map(|(_, g)| g.junctions.len()).sum();
    let mut out = Vec::with_capacity(thresholds.len());
    for &thr in thresholds {
        let per_image: Vec<Vec<(f64, bool)>> = scaled
            .par_iter()
            .map(|(p, g)| {
                let scores: Vec<f64> = p.junctions.iter().map(|j| j.score).collect();
                greedy_label(
                    &scores,
                    g.junctions.len(),
                    |pi, gi| p.junctions[pi].p.distance_sq(g.junctions[gi].p),
                    thr,
                )
            })
            .collect();
        let labeled: Vec<(f64, bool)> = per_image.into_iter().flatten().collect();
        out.push((thr, average_precision(labeled, n_gt)));
    }
    Ok(out)
}

/// Mean junction AP over the standard thresholds.
pub fn map_junctions(
    preds: &[Wireframe],
    gts: &[Wireframe],
    thresholds: &[f64],
    domain: (u32, u32),
) -> Result<f64, EvalError> {
    let curves = junction_ap_curves(preds, gts, thresholds, domain)?;
    if curves.is_empty() {
        return Ok(0.0);
    }
    Ok(curves.iter().map(|(_, c)| c.ap).sum::<f64>() / curves.len() as f64)
}

/// Default pixel-matching tolerance for the heatmap metrics:
/// `0.0075 * diagonal` of the evaluation domain.
pub fn default_heatmap_tol(domain: (u32, u32)) -> f64 {
    let (w, h) = (domain.0 as f64, domain.1 as f64);
    0.0075 * (w * w + h * h).sqrt()
}

/// Heatmap AP and best F over the rasterized-pixel PR sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapResult {
    pub ap: f64,
    pub f: f64,
    pub curve: PrCurve,
}

/// Matches predicted pixels to ground-truth pixels in row-major order,
/// each taking the nearest unmatched gt pixel within `tol` (ties by gt
/// index). Returns (tp, fp, fn).
fn match_pixels(
    pred: &[bool],
    gt: &[bool],
    width: usize,
    height: usize,
    tol: f64,
) -> (usize, usize, usize) {
    let mut gt_idx = vec![-1i64; width * height];
    let mut gt_n = 0usize;
    for i in 0..gt.len() {
        if gt[i] {
            gt_idx[i] = gt_n as i64;
            gt_n += 1;
        }
    }
    let mut used = vec![false; gt_n];
    let r = tol.ceil() as i64;
    let tol_sq = tol * tol;
    let (mut tp, mut fp) = (0usize, 0usize);
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            if !pred[y as usize * width + x as usize] {
                continue;
            }
            // (squared distance, gt index), minimized lexicographically.
            let mut best: Option<(i64, i64)> = None;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                        continue;
                    }
                    let d_sq = dx * dx + dy * dy;
                    if d_sq as f64 > tol_sq {
                        continue;
                    }
                    let gi = gt_idx[ny as usize * width + nx as usize];
                    if gi < 0 || used[gi as usize] {
                        continue;
                    }
                    if best.is_none_or(|b| (d_sq, gi) < b) {
                        best = Some((d_sq, gi));
                    }
                }
            }
            match best {
                Some((_, gi)) => {
                    used[gi as usize] = true;
                    tp += 1;
                }
                None => fp += 1,
            }
        }
    }
    let fn_count = used.iter().filter(|&&u| !u).count();
    (tp, fp, fn_count)
}

/// Heatmap AP/F: segments are rasterized at the evaluation domain, the
/// predictions thresholded at 99 score cutoffs (0.01..0.99), and pixel
/// TP/FP/FN accumulated dataset-wide per cutoff. AP integrates the swept
/// PR points; F is the best harmonic mean.
pub fn heatmap_ap_f(
    preds: &[Wireframe],
    gts: &[Wireframe],
    domain: (u32, u32),
    tol: f64,
) -> Result<HeatmapResult, EvalError> {
    check_aligned(preds, gts)?;
    let (w, h) = (domain.0 as usize, domain.1 as usize);
    let cutoffs: Vec<f64> = (1..=99).rev().map(|k| k as f64 / 100.0).collect();
    let per_image: Vec<Vec<(usize, usize, usize)>> = preds
        .par_iter()
        .zip(gts.par_iter())
        .map(|(p, g)| {
            let ps = rescale(p, domain);
            let gs = rescale(g, domain);
            let gt_grid = rasterize_segments(&gs.segments, w, h);
            cutoffs
                .iter()
                .map(|&cut| {
                    let kept: Vec<LineSegment> = ps
                        .segments
                        .iter()
                        .filter(|s| s.score >= cut)
                        .copied()
                        .collect();
                    let pred_grid = rasterize_segments(&kept, w, h);
                    match_pixels(&pred_grid, &gt_grid, w, h, tol)
                })
                .collect()
        })
        .collect();
    let mut precision = Vec::with_capacity(cutoffs.len());
    let mut recall = Vec::with_capacity(cutoffs.len());
    let mut best_f = 0.0f64;
    for k in 0..cutoffs.len() {
        let (mut tp, mut fp, mut fn_c) = (0usize, 0usize, 0usize);
        for img in &per_image {
            tp += img[k].0;
            fp += img[k].1;
            fn_c += img[k].2;
        }
        let p = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            1.0
        };
        let r = if tp + fn_c > 0 {
            tp as f64 / (tp + fn_c) as f64
        } else {
            0.0
        };
        if p + r > 0.0 {
            best_f = best_f.max(2.0 * p * r / (p + r));
        }
        precision.push(p);
        recall.push(r);
    }
    let ap = ap_from_pr(&precision, &recall);
    Ok(HeatmapResult {
        ap,
        f: best_f,
        curve: PrCurve {
            thresholds: cutoffs,
            precision,
            recall,
            ap,
        },
    })
}

/// Segment distance used by the repeatability protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMetric {
    Structural,
    Orthogonal,
}

impl SegmentMetric {
    pub fn distance(self, a: &LineSegment, b: &LineSegment) -> f64 {
        match self {
            SegmentMetric::Structural => structural_distance(a, b),
            SegmentMetric::Orthogonal => orthogonal_distance(a, b),
        }
    }
}

/// Repeatability of a wireframe pair under a known homography.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatabilityResult {
    /// Mean of the two directional repeated fractions, in `[0, 1]`.
    pub rep: f64,
    /// Mean matched distance over both directions; NaN when nothing
    /// matched.
    pub loc: f64,
    /// Matched segment count over both directions.
    pub matched: usize,
    /// Total warped segments that survived clipping, both directions.
    pub total: usize,
}

fn direction_stats(
    from: &Wireframe,
    to: &Wireframe,
    h: &Homography,
    metric: SegmentMetric,
    eps: f64,
) -> Result<(usize, usize, f64), EvalError> {
    let warped = warp_wireframe(h, from, (to.width, to.height))
        .map_err(|_| EvalError::DegenerateHomography)?;
    let mut matched = 0usize;
    let mut dist_sum = 0.0;
    for seg in &warped.segments {
        let best = to
            .segments
            .iter()
            .map(|t| metric.distance(seg, t))
            .fold(f64::INFINITY, f64::min);
        if best <= eps {
            matched += 1;
            dist_sum += best;
        }
    }
    Ok((matched, warped.segments.len(), dist_sum))
}

/// Measures how many of `wf_a`'s segments reappear in `wf_b` (and vice
/// versa) when mapped through `h` (which takes a's frame to b's). A warped
/// segment is repeated when its minimum distance to the other wireframe is
/// within `eps`; segments clipped away entirely leave the denominator.
/// `rep` averages the two directional ratios (directions with no surviving
/// segments are skipped; 0 when both are empty) and `loc` pools the mean
/// matched distance.
pub fn repeatability(
    wf_a: &Wireframe,
    wf_b: &Wireframe,
    h: &Homography,
    metric: SegmentMetric,
    eps: f64,
) -> Result<RepeatabilityResult, EvalError> {
    let h_inv = h.inverse().map_err(|_| EvalError::DegenerateHomography)?;
    let (m_ab, n_ab, d_ab) = direction_stats(wf_a, wf_b, h, metric, eps)?;
    let (m_ba, n_ba, d_ba) = direction_stats(wf_b, wf_a, &h_inv, metric, eps)?;
    let mut ratios = Vec::new();
    if n_ab > 0 {
        ratios.push(m_ab as f64 / n_ab as f64);
    }
    if n_ba > 0 {
        ratios.push(m_ba as f64 / n_ba as f64);
    }
    let rep = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let matched = m_ab + m_ba;
    let loc = if matched > 0 {
        (d_ab + d_ba) / matched as f64
    } else {
        f64::NAN
    };
    Ok(RepeatabilityResult {
        rep,
        loc,
        matched,
        total: n_ab + n_ba,
    })
}

/// The random draws behind one sampled homography, exposed for
/// statistical tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomographyParams {
    /// Vertical perspective displacement (top corners down, bottom up).
    pub perspective_dy: f64,
    /// Horizontal displacement of the left corners.
    pub perspective_dl: f64,
    /// Horizontal displacement of the right corners.
    pub perspective_dr: f64,
    /// Scale factor about the patch centroid.
    pub scale: f64,
    /// Translation in normalized units.
    pub translation: (f64, f64),
    /// Rotation angle about the patch centroid, radians.
    pub rotation: f64,
}

/// Normal draw truncated to two standard deviations (by rejection).
fn truncated_normal<R: Rng>(rng: &mut R, mean: f64, sigma: f64) -> f64 {
    let normal = Normal::new(mean, sigma).expect("valid normal parameters");
    loop {
        let v = normal.sample(rng);
        if (v - mean).abs() <= 2.0 * sigma {
            return v;
        }
    }
}

/// Direct linear transform for 4 point correspondences, solved by
/// Gaussian elimination with partial pivoting. `None` when the system is
/// singular.
fn solve_dlt(src: &[(f64, f64); 4], dst: &[(f64, f64); 4]) -> Option<[[f64; 3]; 3]> {
    let mut a = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let (x, y) = src[i];
        let (u, v) = dst[i];
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
    }
    for col in 0..8 {
        let piv = (col..8).max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..8 {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            for k in col..9 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let h: Vec<f64> = (0..8).map(|i| a[i][8] / a[i][i]).collect();
    Some([
        [h[0], h[1], h[2]],
        [h[3], h[4], h[5]],
        [h[6], h[7], 1.0],
    ])
}

/// Samples a random homography the way self-supervised keypoint pipelines
/// do: a 0.85 patch with truncated-Gaussian perspective displacements
/// (std 0.1), truncated-Gaussian scaling (std 0.1) about the centroid,
/// uniform translation within the valid area, and uniform rotation in
/// `[-pi/2, pi/2]`, composed in that order over normalized coordinates and
/// lifted to pixel coordinates of `size`. Near-singular draws are
/// rejected and resampled, up to 100 attempts.
pub fn sample_homography_detailed(
    seed: u64,
    size: (u32, u32),
) -> Result<(Homography, HomographyParams), EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = 0.075;
    let patch = 0.85;
    for _ in 0..100 {
        let mut pts = [
            (margin, margin),
            (margin, margin + patch),
            (margin + patch, margin + patch),
            (margin + patch, margin),
        ];
        let dy = truncated_normal(&mut rng, 0.0, 0.1);
        let dl = truncated_normal(&mut rng, 0.0, 0.1);
        let dr = truncated_normal(&mut rng, 0.0, 0.1);
        pts[0] = (pts[0].0 + dl, pts[0].1 + dy);
        pts[1] = (pts[1].0 + dl, pts[1].1 - dy);
        pts[2] = (pts[2].0 + dr, pts[2].1 + dy);
        pts[3] = (pts[3].0 + dr, pts[3].1 - dy);

        let scale = truncated_normal(&mut rng, 1.0, 0.1);
        let cx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
        let cy = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
        for p in pts.iter_mut() {
            *p = (cx + (p.0 - cx) * scale, cy + (p.1 - cy) * scale);
        }

        let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let pick = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
            // Always consume one draw; center when the patch overflows.
            let u: f64 = rng.gen();
            if hi > lo {
                lo + u * (hi - lo)
            } else {
                0.5 * (lo + hi)
            }
        };
        let tx = pick(&mut rng, -min_x, 1.0 - max_x);
        let ty = pick(&mut rng, -min_y, 1.0 - max_y);
        for p in pts.iter_mut() {
            *p = (p.0 + tx, p.1 + ty);
        }

        let rotation = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
        let (s, c) = rotation.sin_cos();
        let cx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
        let cy = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
        for p in pts.iter_mut() {
            let (dx, dy2) = (p.0 - cx, p.1 - cy);
            *p = (cx + c * dx - s * dy2, cy + s * dx + c * dy2);
        }

        let (w, h) = (size.0 as f64, size.1 as f64);
        let src = [(0.0, 0.0), (0.0, h), (w, h), (w, 0.0)];
        let dst = [
            (pts[0].0 * w, pts[0].1 * h),
            (pts[1].0 * w, pts[1].1 * h),
            (pts[2].0 * w, pts[2].1 * h),
            (pts[3].0 * w, pts[3].1 * h),
        ];
        let Some(m) = solve_dlt(&src, &dst) else { continue };
        let Ok(hom) = Homography::from_matrix(m) else { continue };
        if hom.det().abs() <= 1e-8 {
            continue;
        }
        return Ok((
            hom,
            HomographyParams {
                perspective_dy: dy,
                perspective_dl: dl,
                perspective_dr: dr,
                scale,
                translation: (tx, ty),
                rotation,
            },
        ));
    }
    Err(EvalError::SamplingFailed)
}

/// Samples a random homography; see [`sample_homography_detailed`].
pub fn sample_homography(seed: u64, size: (u32, u32)) -> Result<Homography, EvalError> {
    Ok(sample_homography_detailed(seed, size)?.0)
}
