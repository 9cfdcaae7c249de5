//! Line-of-interest feature sampling and the verification scoring head.
//!
//! Endpoint-decoupled sampling: a proposal's two junction endpoints are
//! sampled on a high-dimensional feature grid, while intermediate points —
//! taken along both the bound segment `(y1, y2)` and the raw decoded
//! segment `(x1, x2)` — are sampled on thin auxiliary grids. The gathered
//! vector is scored by small affine+rectifier networks with externally
//! supplied weights.
//!
//! All sampling coordinates are interpreted in grid units; callers sampling
//! image-frame geometry on a strided lattice divide by the stride first.

use crate::binding::Proposal;
use crate::geometry::Point2;
use thiserror::Error;

/// Default number of sampling intervals per segment (30 interior points).
pub const DEFAULT_N: usize = 31;
/// Default channel count of the junction feature grid.
pub const DEFAULT_C: usize = 256;
/// Default channel count of the thin midpoint feature grids.
pub const DEFAULT_C_PSI: usize = 4;
/// Default hidden width of the scoring networks.
pub const DEFAULT_HIDDEN: usize = 128;

#[derive(Debug, Error, PartialEq)]
pub enum LoiError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// A channel-major feature map: `data[c * height * width + y * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

/// Behavior for sample points outside `[0, width-1] x [0, height-1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Clamp coordinates to the border (the default everywhere).
    Clamp,
    /// Treat cells outside the grid as zero.
    Zero,
}

impl FeatureGrid {
    pub fn zeros(channels: usize, width: usize, height: usize) -> Self {
        FeatureGrid {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    /// Builds a grid from a per-(channel, x, y) value function.
    pub fn from_fn<F: FnMut(usize, usize, usize) -> f64>(
        channels: usize,
        width: usize,
        height: usize,
        mut f: F,
    ) -> Self {
        let mut g = FeatureGrid::zeros(channels, width, height);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    g.data[c * height * width + y * width + x] = f(c, x, y);
                }
            }
        }
        g
    }

    /// Value at integer cell `(x, y)` in channel `c`.
    pub fn at(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[c * self.height * self.width + y * self.width + x]
    }

    fn tap(&self, c: usize, x: i64, y: i64, padding: Padding) -> f64 {
        let (w, h) = (self.width as i64, self.height as i64);
        match padding {
            Padding::Clamp => {
                let xc = x.clamp(0, w - 1) as usize;
                let yc = y.clamp(0, h - 1) as usize;
                self.at(c, xc, yc)
            }
            Padding::Zero => {
                if x < 0 || y < 0 || x >= w || y >= h {
                    0.0
                } else {
                    self.at(c, x as usize, y as usize)
                }
            }
        }
    }

    /// Bilinear sample of all channels at `p`, with the given padding.
    pub fn sample_with(&self, p: Point2, padding: Padding) -> Vec<f64> {
        let x0 = p.x.floor();
        let y0 = p.y.floor();
        let fx = p.x - x0;
        let fy = p.y - y0;
        let (xi, yi) = (x0 as i64, y0 as i64);
        (0..self.channels)
            .map(|c| {
                let v00 = self.tap(c, xi, yi, padding);
                let v10 = self.tap(c, xi + 1, yi, padding);
                let v01 = self.tap(c, xi, yi + 1, padding);
                let v11 = self.tap(c, xi + 1, yi + 1, padding);
                let top = v00 * (1.0 - fx) + v10 * fx;
                let bot = v01 * (1.0 - fx) + v11 * fx;
                top * (1.0 - fy) + bot * fy
            })
            .collect()
    }

    /// Bilinear sample with border clamping.
    pub fn sample(&self, p: Point2) -> Vec<f64> {
        self.sample_with(p, Padding::Clamp)
    }
}

/// Bilinear samples for a batch of points: one row of `grid.channels`
/// values per point, out-of-bounds coordinates clamped to the border.
pub fn bilinear_sample(grid: &FeatureGrid, pts: &[Point2]) -> Vec<Vec<f64>> {
    pts.iter().map(|&p| grid.sample(p)).collect()
}

/// Points sampled along a proposal for feature gathering.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePoints {
    /// The bound junction endpoints `(y1, y2)`.
    pub endpoints: [Point2; 2],
    /// Interior points of the bound segment at `t = i/n`, `i = 1..n-1`.
    pub mid_y: Vec<Point2>,
    /// Interior points of the raw decoded segment at the same fractions.
    pub mid_x: Vec<Point2>,
}

fn lerp(a: Point2, b: Point2, t: f64) -> Point2 {
    Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
}

/// Samples the endpoint pair and the two interior point subsets of a
/// proposal. `n` is the number of intervals, so each interior subset has
/// `n - 1` points; `n >= 2`.
pub fn sample_line_points(prop: &Proposal, n: usize) -> LinePoints {
    debug_assert!(n >= 2, "need at least one interior point");
    let frac = |i: usize| i as f64 / n as f64;
    let mid_y = (1..n).map(|i| lerp(prop.y1, prop.y2, frac(i))).collect();
    let mid_x = (1..n).map(|i| lerp(prop.x1, prop.x2, frac(i))).collect();
    LinePoints {
        endpoints: [prop.y1, prop.y2],
        mid_y,
        mid_x,
    }
}

/// Gathers the full feature vector `Z` and its thin subset `Z_psi` for one
/// proposal. Endpoints are sampled on `f_j`; interior points of the bound
/// segment on `f_y` and of the raw segment on `f_x`, which must share one
/// channel count. Layout: `Z = [f_j@y1, f_j@y2, Z_psi]` with
/// `Z_psi = [f_y@mid_y ascending, f_x@mid_x ascending]`, channels
/// contiguous per point.
pub fn gather_proposal_features(
    prop: &Proposal,
    n: usize,
    f_j: &FeatureGrid,
    f_y: &FeatureGrid,
    f_x: &FeatureGrid,
) -> Result<(Vec<f64>, Vec<f64>), LoiError> {
    if f_y.channels != f_x.channels {
        return Err(LoiError::DimensionMismatch {
            what: "thin grid channels",
            expected: f_y.channels,
            got: f_x.channels,
        });
    }
    let pts = sample_line_points(prop, n);
    let mut z_psi = Vec::with_capacity(2 * (n - 1) * f_y.channels);
    for &p in &pts.mid_y {
        z_psi.extend(f_y.sample(p));
    }
    for &p in &pts.mid_x {
        z_psi.extend(f_x.sample(p));
    }
    let mut z = Vec::with_capacity(2 * f_j.channels + z_psi.len());
    z.extend(f_j.sample(pts.endpoints[0]));
    z.extend(f_j.sample(pts.endpoints[1]));
    z.extend_from_slice(&z_psi);
    Ok((z, z_psi))
}

/// Layer activation of an affine network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

/// One affine layer: `w` is out-major (`w[o][i]`), `b` has length out.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MlpLayer {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub act: Activation,
}

/// A stack of affine layers applied in order.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct MlpWeights {
    pub layers: Vec<MlpLayer>,
}

impl MlpWeights {
    /// A single affine layer without activation.
    pub fn linear(w: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        MlpWeights {
            layers: vec![MlpLayer {
                w,
                b,
                act: Activation::None,
            }],
        }
    }

    /// Forward pass; errors when an input length does not match a layer.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, LoiError> {
        let mut x = input.to_vec();
        for layer in &self.layers {
            let out_dim = layer.w.len();
            if layer.b.len() != out_dim {
                return Err(LoiError::DimensionMismatch {
                    what: "bias length",
                    expected: out_dim,
                    got: layer.b.len(),
                });
            }
            let mut y = Vec::with_capacity(out_dim);
            for (row, b) in layer.w.iter().zip(&layer.b) {
                if row.len() != x.len() {
                    return Err(LoiError::DimensionMismatch {
                        what: "layer input",
                        expected: row.len(),
                        got: x.len(),
                    });
                }
                let mut acc = *b;
                for (wi, xi) in row.iter().zip(&x) {
                    acc += wi * xi;
                }
                y.push(match layer.act {
                    Activation::Relu => acc.max(0.0),
                    Activation::None => acc,
                });
            }
            x = y;
        }
        Ok(x)
    }
}

/// Logistic function.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Verification output for one proposal; both the logit and its sigmoid
/// are exposed so losses can be computed on either.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationScore {
    pub logit: f64,
    pub score: f64,
    pub aux_logit: Option<f64>,
    pub aux: Option<f64>,
}

/// Scores one gathered proposal: `sigmoid(final(psi_net(z_psi) +
/// main_net(z)))`, plus the auxiliary head `sigmoid(aux(z_psi))` when
/// given. The two branch networks must agree on output width and the
/// heads must produce a single value.
pub fn score_proposal(
    z: &[f64],
    z_psi: &[f64],
    w_main: &MlpWeights,
    w_psi: &MlpWeights,
    w_final: &MlpWeights,
    w_aux: Option<&MlpWeights>,
) -> Result<VerificationScore, LoiError> {
    let hm = w_main.forward(z)?;
    let hp = w_psi.forward(z_psi)?;
    if hm.len() != hp.len() {
        return Err(LoiError::DimensionMismatch {
            what: "branch output widths",
            expected: hm.len(),
            got: hp.len(),
        });
    }
    let merged: Vec<f64> = hm.iter().zip(&hp).map(|(a, b)| a + b).collect();
    let out = w_final.forward(&merged)?;
    if out.len() != 1 {
        return Err(LoiError::DimensionMismatch {
            what: "score head output",
            expected: 1,
            got: out.len(),
        });
    }
    let logit = out[0];
    let (aux_logit, aux) = match w_aux {
        Some(w) => {
            let a = w.forward(z_psi)?;
            if a.len() != 1 {
                return Err(LoiError::DimensionMismatch {
                    what: "aux head output",
                    expected: 1,
                    got: a.len(),
                });
            }
            (Some(a[0]), Some(sigmoid(a[0])))
        }
        None => (None, None),
    };
    Ok(VerificationScore {
        logit,
        score: sigmoid(logit),
        aux_logit,
        aux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn prop(y1: (f64, f64), y2: (f64, f64), x1: (f64, f64), x2: (f64, f64)) -> Proposal {
        Proposal {
            y1: Point2::new(y1.0, y1.1),
            y2: Point2::new(y2.0, y2.1),
            x1: Point2::new(x1.0, x1.1),
            x2: Point2::new(x2.0, x2.1),
            delta: 0.0,
            score: 1.0,
        }
    }

    #[test]
    fn two_intervals_sample_the_midpoint() {
        let p = prop((0.0, 0.0), (10.0, 0.0), (0.0, 0.0), (10.0, 0.0));
        let pts = sample_line_points(&p, 2);
        assert_eq!(pts.mid_y, vec![Point2::new(5.0, 0.0)]);
        assert_eq!(pts.endpoints, [Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)]);
    }

    #[test]
    fn four_intervals_sample_evenly() {
        let p = prop((0.0, 0.0), (4.0, 4.0), (0.0, 0.0), (4.0, 4.0));
        let pts = sample_line_points(&p, 4);
        assert_eq!(
            pts.mid_y,
            vec![
                Point2::new(1.0, 1.0),
                Point2::new(2.0, 2.0),
                Point2::new(3.0, 3.0)
            ]
        );
    }

    #[test]
    fn default_interval_count_gives_thirty_interior_points() {
        let p = prop((0.0, 0.0), (31.0, 0.0), (0.5, 0.0), (31.5, 0.0));
        let pts = sample_line_points(&p, DEFAULT_N);
        assert_eq!(pts.mid_y.len(), 30);
        assert_eq!(pts.mid_x.len(), 30);
        // Raw-segment points follow the raw endpoints, not the bound ones.
        assert_abs_diff_eq!(pts.mid_x[0].x, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn bilinear_is_exact_on_grid_points() {
        let g = FeatureGrid::from_fn(2, 4, 3, |c, x, y| (c * 100 + y * 10 + x) as f64);
        let rows = bilinear_sample(&g, &[Point2::new(2.0, 1.0)]);
        assert_eq!(rows[0], vec![12.0, 112.0]);
    }

    #[test]
    fn bilinear_midpoint_averages_cells() {
        let g = FeatureGrid::from_fn(1, 2, 1, |_, x, _| x as f64);
        let rows = bilinear_sample(&g, &[Point2::new(0.5, 0.0)]);
        assert_abs_diff_eq!(rows[0][0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bilinear_clamps_outside_points() {
        let g = FeatureGrid::from_fn(1, 3, 3, |_, x, y| (y * 3 + x) as f64);
        let rows = bilinear_sample(&g, &[Point2::new(-2.0, 5.0), Point2::new(10.0, -1.0)]);
        assert_eq!(rows[0][0], g.at(0, 0, 2));
        assert_eq!(rows[1][0], g.at(0, 2, 0));
    }

    #[test]
    fn zero_padding_fades_past_the_border() {
        let g = FeatureGrid::from_fn(1, 2, 2, |_, _, _| 1.0);
        let v = g.sample_with(Point2::new(-0.5, 0.0), Padding::Zero);
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-12);
        let far = g.sample_with(Point2::new(-3.0, 0.0), Padding::Zero);
        assert_eq!(far[0], 0.0);
    }

    #[test]
    fn gathered_lengths_match_defaults() {
        let p = prop((1.0, 1.0), (20.0, 14.0), (1.2, 0.8), (19.5, 14.5));
        let f_j = FeatureGrid::zeros(DEFAULT_C, 32, 32);
        let f_y = FeatureGrid::zeros(DEFAULT_C_PSI, 32, 32);
        let f_x = FeatureGrid::zeros(DEFAULT_C_PSI, 32, 32);
        let (z, z_psi) = gather_proposal_features(&p, DEFAULT_N, &f_j, &f_y, &f_x).unwrap();
        assert_eq!(z_psi.len(), 240);
        assert_eq!(z.len(), 752);
    }

    #[test]
    fn constant_grids_gather_constants() {
        let p = prop((0.0, 0.0), (7.0, 3.0), (0.1, 0.1), (6.9, 3.2));
        let f_j = FeatureGrid::from_fn(3, 8, 8, |_, _, _| 2.5);
        let f_y = FeatureGrid::from_fn(2, 8, 8, |_, _, _| -1.0);
        let f_x = FeatureGrid::from_fn(2, 8, 8, |_, _, _| -1.0);
        let (z, z_psi) = gather_proposal_features(&p, 5, &f_j, &f_y, &f_x).unwrap();
        assert!(z[..6].iter().all(|&v| v == 2.5));
        assert!(z_psi.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn thin_grid_channel_mismatch_is_rejected() {
        let p = prop((0.0, 0.0), (7.0, 3.0), (0.0, 0.0), (7.0, 3.0));
        let f_j = FeatureGrid::zeros(4, 8, 8);
        let f_y = FeatureGrid::zeros(2, 8, 8);
        let f_x = FeatureGrid::zeros(3, 8, 8);
        assert!(gather_proposal_features(&p, 5, &f_j, &f_y, &f_x).is_err());
    }

    #[test]
    fn gather_matches_naive_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        let fill = |rng: &mut StdRng, c: usize| {
            FeatureGrid::from_fn(c, 9, 7, |_, _, _| rng.gen_range(-1.0..1.0))
        };
        let f_j = fill(&mut rng, 3);
        let f_y = fill(&mut rng, 2);
        let f_x = fill(&mut rng, 2);
        let p = prop((0.7, 1.3), (7.9, 5.2), (1.1, 0.9), (8.3, 5.8));
        let n = 6;
        let (z, _) = gather_proposal_features(&p, n, &f_j, &f_y, &f_x).unwrap();

        // Direct per-point, per-channel recomputation.
        let naive = |g: &FeatureGrid, c: usize, p: Point2| {
            let cl = |v: f64, hi: usize| v.clamp(0.0, (hi - 1) as f64);
            let x = cl(p.x, g.width);
            let y = cl(p.y, g.height);
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(g.width - 1), (y0 + 1).min(g.height - 1));
            let (fx, fy) = (x - x0 as f64, y - y0 as f64);
            g.at(c, x0, y0) * (1.0 - fx) * (1.0 - fy)
                + g.at(c, x1, y0) * fx * (1.0 - fy)
                + g.at(c, x0, y1) * (1.0 - fx) * fy
                + g.at(c, x1, y1) * fx * fy
        };
        let mut expect = Vec::new();
        for &e in &[p.y1, p.y2] {
            for c in 0..3 {
                expect.push(naive(&f_j, c, e));
            }
        }
        for i in 1..n {
            let t = i as f64 / n as f64;
            let q = Point2::new(
                p.y1.x + (p.y2.x - p.y1.x) * t,
                p.y1.y + (p.y2.y - p.y1.y) * t,
            );
            for c in 0..2 {
                expect.push(naive(&f_y, c, q));
            }
        }
        for i in 1..n {
            let t = i as f64 / n as f64;
            let q = Point2::new(
                p.x1.x + (p.x2.x - p.x1.x) * t,
                p.x1.y + (p.x2.y - p.x1.y) * t,
            );
            for c in 0..2 {
                expect.push(naive(&f_x, c, q));
            }
        }
        assert_eq!(z.len(), expect.len());
        for (a, b) in z.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_weights_score_half() {
        let dim = 6;
        let zeros = |o: usize, i: usize| MlpWeights {
            layers: vec![MlpLayer {
                w: vec![vec![0.0; i]; o],
                b: vec![0.0; o],
                act: Activation::Relu,
            }],
        };
        let z = vec![1.0; dim];
        let z_psi = vec![1.0; 4];
        let s = score_proposal(
            &z,
            &z_psi,
            &zeros(3, dim),
            &zeros(3, 4),
            &MlpWeights::linear(vec![vec![0.0; 3]], vec![0.0]),
            Some(&MlpWeights::linear(vec![vec![0.0; 4]], vec![0.0])),
        )
        .unwrap();
        assert_eq!(s.logit, 0.0);
        assert_eq!(s.score, 0.5);
        assert_eq!(s.aux, Some(0.5));
    }

    #[test]
    fn one_dim_toy_matches_hand_computation() {
        // main: relu(2x - 1), psi: relu(3x), final: 0.5h + 0.25.
        let main = MlpWeights {
            layers: vec![MlpLayer {
                w: vec![vec![2.0]],
                b: vec![-1.0],
                act: Activation::Relu,
            }],
        };
        let psi = MlpWeights {
            layers: vec![MlpLayer {
                w: vec![vec![3.0]],
                b: vec![0.0],
                act: Activation::Relu,
            }],
        };
        let fin = MlpWeights::linear(vec![vec![0.5]], vec![0.25]);
        let s = score_proposal(&[2.0], &[1.0], &main, &psi, &fin, None).unwrap();
        // relu(3) + relu(3) = 6 -> 0.5*6 + 0.25 = 3.25.
        assert_abs_diff_eq!(s.logit, 3.25, epsilon = 1e-12);
        assert_abs_diff_eq!(s.score, sigmoid(3.25), epsilon = 1e-12);
        assert_eq!(s.aux, None);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let w = MlpWeights::linear(vec![vec![1.0, 1.0]], vec![0.0]);
        assert!(w.forward(&[1.0]).is_err());
        assert!(w.forward(&[1.0, 2.0]).is_ok());
    }

    #[test]
    fn random_weights_match_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(17);
        let mut rand_net = |dims: &[usize], last_act: Activation| {
            let mut layers = Vec::new();
            for k in 1..dims.len() {
                layers.push(MlpLayer {
                    w: (0..dims[k])
                        .map(|_| (0..dims[k - 1]).map(|_| rng.gen_range(-0.5..0.5)).collect())
                        .collect(),
                    b: (0..dims[k]).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                    act: if k == dims.len() - 1 {
                        last_act
                    } else {
                        Activation::Relu
                    },
                });
            }
            MlpWeights { layers }
        };
        let main = rand_net(&[10, 8, 5], Activation::Relu);
        let psi = rand_net(&[4, 8, 5], Activation::Relu);
        let fin = rand_net(&[5, 1], Activation::None);
        let aux = rand_net(&[4, 1], Activation::None);
        let mut rng2 = StdRng::seed_from_u64(18);
        let z: Vec<f64> = (0..10).map(|_| rng2.gen_range(-1.0..1.0)).collect();
        let z_psi: Vec<f64> = (0..4).map(|_| rng2.gen_range(-1.0..1.0)).collect();

        let s = score_proposal(&z, &z_psi, &main, &psi, &fin, Some(&aux)).unwrap();

        // Independent forward pass with explicit loops.
        let run = |net: &MlpWeights, input: &[f64]| {
            let mut x = input.to_vec();
            for l in &net.layers {
                let mut y = vec![0.0; l.w.len()];
                for (o, row) in l.w.iter().enumerate() {
                    let mut acc = l.b[o];
                    for (i, v) in row.iter().enumerate() {
                        acc += v * x[i];
                    }
                    y[o] = if l.act == Activation::Relu {
                        acc.max(0.0)
                    } else {
                        acc
                    };
                }
                x = y;
            }
            x
        };
        let hm = run(&main, &z);
        let hp = run(&psi, &z_psi);
        let merged: Vec<f64> = hm.iter().zip(&hp).map(|(a, b)| a + b).collect();
        let logit = run(&fin, &merged)[0];
        let aux_logit = run(&aux, &z_psi)[0];
        assert_abs_diff_eq!(s.logit, logit, epsilon = 1e-6);
        assert_abs_diff_eq!(s.score, sigmoid(logit), epsilon = 1e-6);
        assert_abs_diff_eq!(s.aux_logit.unwrap(), aux_logit, epsilon = 1e-6);
    }
}
