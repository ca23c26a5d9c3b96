//! Aperture synthesis, the optical forward model and the measurement bundle.

mod bundle;
mod forward;
mod pattern;

pub use bundle::{FeedbackEvent, MeasurementBundle, ReplayReport, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use forward::forward;
pub(crate) use forward::dot;
pub use pattern::{AperturePattern, PatternSource, SamplingWeight, WeightSource};
