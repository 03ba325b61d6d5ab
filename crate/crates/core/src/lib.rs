//! Box-constrained pseudo-label generation for weakly supervised semantic
//! segmentation, plus the metrics used to judge the labels.
//!
//! The flow is: per-image classifier scores pick the image labels, grounded
//! detections give one box per object, in-box mask proposals are filtered and
//! grouped so whole-object masks win over part masks, and the chosen masks
//! are painted into a class-index raster. Model outputs arrive either from
//! interchange files or from a seeded ground-truth oracle.
//!
//! Ratio-valued measures are generic over [`Scalar`]; [`Real`] is the
//! working precision and [`Exact`] gives rational results for checking.

pub mod backends;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod maskgeom;
pub mod pipeline;
pub mod scalar;
pub mod synth;

pub use backends::{Backend, FileBackend, OracleBackend, OracleNoise};
pub use dataio::{ClassTable, DatasetIndex};
pub use error::{Error, Result};
pub use maskgeom::{BBox, BitMask, ClassId, LabelRaster, RleMask};
pub use pipeline::{PipelineConfig, PseudoLabeler};
pub use scalar::Scalar;

/// Working precision for scores, thresholds and metrics.
pub type Real = f64;

/// Exact rational arithmetic for ratio-valued measures.
pub type Exact = num_rational::Ratio<i128>;

/// Evaluation report in working precision.
pub type Report = eval::EvalReport<Real>;

/// Evaluation report with exact ratios.
pub type ExactReport = eval::EvalReport<Exact>;
