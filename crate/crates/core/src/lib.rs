//! Simulator for privacy-aware adaptive single-pixel imaging.
//!
//! A scene is measured block by block through random aperture patterns.
//! At exponentially spaced acquisitions the partial data is reconstructed,
//! a mask generator marks the region to anonymize, and every later pattern
//! is attenuated there, so the protected region stops contributing to the
//! measurements after the first feedback.

pub mod capture;
pub mod domain;
pub mod error;
pub mod maskgen;
pub mod measurement;
pub mod metrics;
pub mod phantom;
pub mod reconstruct;

pub use capture::{capture, replay_attack, CaptureTrace, FeedbackSnapshot, PhaseTimings};
pub use domain::{
    BlockGrid, BoundingBox, CaptureConfig, ChannelMode, FeedbackSchedule, Image, MaskKind,
    PatternMode, Purpose, RngStream,
};
pub use error::{Error, Result};
pub use measurement::{forward, AperturePattern, MeasurementBundle, SamplingWeight};
pub use reconstruct::{reconstruct_admm_tv, reconstruct_block_lsq, AdmmTvParams, ReconstructionResult, TvFlavor};

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
