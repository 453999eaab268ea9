//! Cardiac pulse analysis for power Doppler holography.
//!
//! Given a power Doppler (M0) video and a binary vessel mask, the pipeline
//! thins the mask into junction-free segments, seeds arteries from segments
//! with a steep systolic upstroke, averages the seeds into a global pulse,
//! and derives the zero-lag correlation map and the systole-minus-diastole
//! ("diasys") image. Together with the time-averaged M0 image these form the
//! three-channel input of an artery/vein segmentation model.
//!
//! [`metrics`] scores artery/vein masks (sensitivity, Dice, clDice, HD95) and
//! [`phantom`] generates synthetic stacks with known ground truth.

pub mod components;
pub mod error;
pub mod features;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod pulse;
pub mod skeleton;
mod stats;

pub use error::{Error, Result};
pub use features::{FeatureStack, NormMethod, NormSpec};
pub use io::{BinaryMask, Class, ClassMask, Image2D, TemporalStack};
pub use metrics::{ClassMetrics, MetricsReport};
pub use phantom::{PhantomSpec, PhantomTruth};
pub use pipeline::{PipelineOutput, PipelineParams};
pub use pulse::{ArteryClassification, ArteryRule, PeakSet, PulseSignal};
pub use skeleton::LabeledSegments;
pub use stats::percentile_sorted;
