//! Pseudo-label generation: image labels, then boxes, then one mask per box,
//! then a class-index raster.
//!
//! Labels and boxes can each be taken from ground truth instead of the
//! backend, which is how supervision ablations are run.

mod compose;
mod config;
mod engine;
mod inbox;
mod select;

pub use compose::{compose, Selection};
pub use config::{PipelineConfig, Source};
pub use engine::{BoxTrace, Generated, PseudoLabeler};
pub use inbox::{select_in_box, CandidateRecord, SelectionTrace, Verdict};
pub use select::{nms_per_class, select_labels};
