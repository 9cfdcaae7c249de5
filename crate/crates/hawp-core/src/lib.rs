//! Geometric core of attraction-field wireframe parsing.
//!
//! The crate covers everything around the neural network of a wireframe
//! parser, usable on its own for dataset preparation, evaluation, and
//! pseudo-label generation:
//!
//! 1. [`geometry`] — points, segments, homographies, wireframes, and the
//!    structural / orthogonal segment distances.
//! 2. [`hatfield`] — the holistic attraction (HAT) field codec: attraction
//!    region assignment, the per-pixel 4-D `(d, theta, theta1, theta2)`
//!    encoding, closed-form decoding, residual-rectified decoding, and
//!    analytic Jacobians.
//! 3. [`junctions`] — junction heatmap / offset ground truth and endpoint
//!    extraction (local NMS, top-N, sub-pixel refinement).
//! 4. [`binding`] — binding dense line proposals to sparse junctions and
//!    verification ground-truth assignment.
//! 5. [`loi`] — line-of-interest sampling, bilinear feature gathering, and a
//!    small MLP evaluator for verification scores with external weights.
//! 6. [`losses`] — pure evaluators for the field, junction, verification,
//!    and balanced edge losses.
//! 7. [`eval`] — structural AP, junction mAP, heatmap AP/F, repeatability /
//!    localization, and the random homography sampler.
//! 8. [`synth`] — deterministic synthetic-primitive dataset generator.
//! 9. [`ssl`] — homography-adaptation edge aggregation, edge scoring, and
//!    pseudo-label pruning.
//! 10. [`io`] — wireframe/homography/proposal JSON, the HATF plane
//!     container, MLP weight files, and PGM images.
//!
//! All operations are pure and deterministic; parallel code paths reduce in
//! a fixed order so results do not depend on thread count.

pub mod binding;
pub mod eval;
pub mod geometry;
pub mod hatfield;
pub mod io;
pub mod junctions;
pub mod loi;
pub mod losses;
pub mod raster;
pub mod ssl;
pub mod synth;

pub use geometry::{Homography, Junction, LineSegment, Point2, Wireframe};
pub use hatfield::HatField;
