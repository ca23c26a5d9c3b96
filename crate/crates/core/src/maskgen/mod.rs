//! Mask generators: map a provisional reconstruction to the sampling
//! weight used for every following aperture.
//!
//! The learned generator of the original system is replaced here by
//! [`Passthrough`] (no privacy), [`OracleMask`] (ground-truth boxes with
//! decaying localization error) and [`SilhouetteMask`] (a tile-statistics
//! detector working on the blurry provisional image).

mod oracle;
mod region;
mod silhouette;

pub use oracle::{JitterSchedule, OracleMask, OracleMaskParams};
pub use region::{region_weight, Rect};
pub use silhouette::{SilhouetteMask, SilhouetteParams};

use crate::domain::{BoundingBox, CaptureConfig, Image, MaskKind, RngStream};
use crate::error::Result;
use crate::measurement::SamplingWeight;

/// Produces `w_{i+1}` from `x_hat^{i}`.
///
/// Implementations must return weights in `[0, 1]` and be pure in
/// `(provisional, acquisition, stream)` and their own parameters.
pub trait MaskGenerator: Send + Sync {
    fn generate(&self, provisional: &Image, acquisition: usize, stream: RngStream) -> SamplingWeight;

    fn name(&self) -> &'static str;
}

/// All-ones weight: plain block-based acquisition.
#[derive(Clone, Copy, Debug, Default)]
pub struct Passthrough;

impl MaskGenerator for Passthrough {
    fn generate(&self, provisional: &Image, _acquisition: usize, _stream: RngStream) -> SamplingWeight {
        SamplingWeight::ones(provisional.pixels())
    }

    fn name(&self) -> &'static str {
        "passthrough"
    }
}

/// Builds the generator selected by `config.mask`. `boxes` are only used by
/// the oracle.
pub fn from_config(config: &CaptureConfig, boxes: &[BoundingBox]) -> Result<Box<dyn MaskGenerator>> {
    Ok(match config.mask {
        MaskKind::Passthrough => Box::new(Passthrough),
        MaskKind::Oracle => {
            for b in boxes {
                b.check_within(config.side)?;
            }
            Box::new(OracleMask::new(OracleMaskParams {
                boxes: boxes.to_vec(),
                dilation: config.mask_dilation,
                softness: config.mask_softness,
                jitter: JitterSchedule {
                    initial: config.mask_jitter,
                    decay: config.mask_jitter_decay,
                    base: config.feedback_base,
                },
            })?)
        }
        MaskKind::Silhouette => Box::new(SilhouetteMask::new(SilhouetteParams {
            tile: config.silhouette_tile,
            mean_min: config.silhouette_mean_min,
            mean_max: config.silhouette_mean_max,
            var_max: config.silhouette_var_max,
            dilation: config.mask_dilation,
            softness: config.mask_softness,
        })?),
    })
}
