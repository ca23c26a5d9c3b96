//! The adaptive acquisition loop.
//!
//! ```text
//! w <- 1
//! for i = 1..=M':
//!     phi_i <- w (.) n_i                  (binary mode: [w >= t] (.) bits_i)
//!     y_i   <- Forward(phi_i, x)
//!     if i in schedule:
//!         x_hat <- Recon(y_[1,i], Phi_[1,i])   (provisional iteration cap)
//!         w     <- MaskGen(x_hat, i)
//! return Recon(y, Phi)
//! ```

use std::time::{Duration, Instant};

use crate::domain::{BoundingBox, CaptureConfig, FeedbackSchedule, Image, Purpose, RngStream};
use crate::error::{Error, Result};
use crate::maskgen::{self, MaskGenerator};
use crate::measurement::{forward, FeedbackEvent, MeasurementBundle, SamplingWeight};
use crate::reconstruct::{admm_tv_system, AdmmTvParams, BlockSystem, ReconstructionResult};

/// State of the loop right after a feedback at acquisition `acquisition`.
#[derive(Clone, Debug)]
pub struct FeedbackSnapshot {
    pub acquisition: usize,
    /// `x_hat^{i}`.
    pub provisional: Image,
    /// `w_{i+1}`.
    pub weight: SamplingWeight,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub acquisition: Duration,
    pub provisional: Duration,
    pub mask: Duration,
    pub final_reconstruction: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.acquisition + self.provisional + self.mask + self.final_reconstruction
    }
}

#[derive(Clone, Debug)]
pub struct CaptureTrace {
    pub schedule: FeedbackSchedule,
    pub snapshots: Vec<FeedbackSnapshot>,
    pub final_result: ReconstructionResult,
    pub bundle: MeasurementBundle,
    pub timings: PhaseTimings,
}

impl CaptureTrace {
    pub fn final_image(&self) -> &Image {
        &self.final_result.image
    }
}

/// Runs a capture with the mask generator selected by `config`.
pub fn capture(x: &Image, boxes: &[BoundingBox], config: &CaptureConfig) -> Result<CaptureTrace> {
    config.validate()?;
    let generator = maskgen::from_config(config, boxes)?;
    capture_with(x, generator.as_ref(), config)
}

/// Runs a capture with an explicit mask generator.
pub fn capture_with(x: &Image, generator: &dyn MaskGenerator, config: &CaptureConfig) -> Result<CaptureTrace> {
    config.validate()?;
    let grid = config.grid()?;
    let channels = config.channels();
    if x.side() != config.side || x.channels() != channels {
        return Err(Error::dimension(
            format!("{0}x{0}x{1} image", config.side, channels),
            x.shape_string(),
        ));
    }
    let schedule = config.schedule()?;
    let acquisitions = config.measurements_per_block();
    let nb = grid.num_blocks();
    let patterns = crate::measurement::PatternSource {
        grid,
        seed: config.seed,
        mode: config.pattern_mode,
        binary_threshold: config.binary_threshold,
    };
    let provisional_params = config.provisional_params();

    let mut timings = PhaseTimings::default();
    let mut system = BlockSystem::new(grid, channels);
    let mut weight = SamplingWeight::ones(grid.num_pixels());
    let mut events = Vec::with_capacity(schedule.indices().len());
    let mut snapshots = Vec::with_capacity(schedule.indices().len());
    let mut records = vec![0.0; acquisitions * nb * channels];

    for i in 1..=acquisitions {
        let started = Instant::now();
        let phi = patterns.synthesize(i, &weight)?;
        let mut y = forward(&phi, x, &grid)?;
        if let Some(noise) = measurement_noise(config, i, nb) {
            for j in 0..nb {
                for c in 0..channels {
                    y[c * nb + j] += noise[j * channels + c];
                }
            }
        }
        for j in 0..nb {
            for c in 0..channels {
                records[((i - 1) * nb + j) * channels + c] = y[c * nb + j];
            }
        }
        system.push(&phi, &y)?;
        timings.acquisition += started.elapsed();

        if schedule.contains(i) {
            let started = Instant::now();
            let provisional = admm_tv_system(&mut system, &provisional_params)?;
            timings.provisional += started.elapsed();

            let started = Instant::now();
            let stream = RngStream::new(config.seed, i as u64, 0, Purpose::Jitter);
            weight = generator.generate(&provisional.image, i, stream);
            timings.mask += started.elapsed();

            events.push(FeedbackEvent {
                acquisition: i,
                weight: weight.values().to_vec(),
            });
            snapshots.push(FeedbackSnapshot {
                acquisition: i,
                provisional: provisional.image,
                weight: weight.clone(),
                converged: provisional.converged,
                iterations: provisional.iterations,
            });
        }
    }

    let started = Instant::now();
    let final_result = admm_tv_system(&mut system, &config.admm_params())?;
    timings.final_reconstruction = started.elapsed();

    let bundle = MeasurementBundle::new(config.clone(), events, records)?;
    Ok(CaptureTrace {
        schedule,
        snapshots,
        final_result,
        bundle,
        timings,
    })
}

/// Reconstruction by an adversary holding only the leaked bundle.
pub fn replay_attack(bundle: &MeasurementBundle, params: &AdmmTvParams) -> Result<ReconstructionResult> {
    crate::reconstruct::reconstruct_admm_tv(bundle, bundle.acquisitions(), params)
}

/// Additive sensor noise for acquisition `i`, laid out `[j * channels + c]`;
/// `None` when the configuration is noiseless.
pub(crate) fn measurement_noise(config: &CaptureConfig, acquisition: usize, blocks: usize) -> Option<Vec<f64>> {
    if config.noise_std == 0.0 {
        return None;
    }
    let draws = RngStream::new(config.seed, acquisition as u64, 0, Purpose::Noise)
        .draw_normal(blocks * config.channels());
    Some(draws.into_iter().map(|e| e * config.noise_std).collect())
}
