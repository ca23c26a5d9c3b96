use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::grid::BlockGrid;
use crate::domain::schedule::FeedbackSchedule;
use crate::error::{Error, Result};
use crate::reconstruct::{AdmmTvParams, TvFlavor};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternMode {
    /// Real-valued apertures `w * n`, `n ~ N(0, 1)`.
    #[default]
    Gaussian,
    /// `{0, 1}` apertures: thresholded weight times fair bits.
    Binary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    #[default]
    Mono,
    /// Three channels measured through one shared aperture per acquisition.
    Rgb,
}

impl ChannelMode {
    pub fn channels(self) -> usize {
        match self {
            ChannelMode::Mono => 1,
            ChannelMode::Rgb => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    /// All-ones weight: conventional block-based acquisition.
    #[default]
    Passthrough,
    /// Ground-truth boxes, with jitter that shrinks as acquisitions accrue.
    Oracle,
    /// Tile-statistics detector on the provisional reconstruction.
    Silhouette,
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskKind::Passthrough => "passthrough",
            MaskKind::Oracle => "oracle",
            MaskKind::Silhouette => "silhouette",
        })
    }
}

impl FromStr for MaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "passthrough" => Ok(MaskKind::Passthrough),
            "oracle" => Ok(MaskKind::Oracle),
            "silhouette" => Ok(MaskKind::Silhouette),
            other => Err(Error::Config(format!("unknown mask generator `{other}`"))),
        }
    }
}

/// Everything that determines a capture. Serialized as flat TOML; the key
/// names are the field names below and unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureConfig {
    /// Image side `L` in pixels.
    pub side: usize,
    /// Block side `B` in pixels.
    pub block: usize,
    /// Sampling rate `M / N`, in `(0, 1]`.
    pub rate: f64,
    /// Feedback base `K > 1`.
    pub feedback_base: f64,
    pub pattern_mode: PatternMode,
    /// Weights at or above this value open a binary aperture pixel.
    pub binary_threshold: f64,
    pub channel_mode: ChannelMode,
    /// Standard deviation of additive measurement noise (0 = noiseless).
    pub noise_std: f64,

    pub mask: MaskKind,
    /// Dilation of detected or given regions, pixels.
    pub mask_dilation: f64,
    /// Width of the linear ramp from 0 to 1 around a masked region, pixels.
    pub mask_softness: f64,
    /// Oracle box-corner jitter std at the first feedback, pixels.
    pub mask_jitter: f64,
    /// Jitter std reduction per power of `K`, pixels.
    pub mask_jitter_decay: f64,
    /// Tile side of the silhouette detector, pixels.
    pub silhouette_tile: usize,
    pub silhouette_mean_min: f64,
    pub silhouette_mean_max: f64,
    pub silhouette_var_max: f64,

    /// TV weight.
    pub lambda: f64,
    /// ADMM penalty.
    pub rho: f64,
    pub max_iterations: usize,
    /// Provisional (in-loop) iteration cap.
    pub provisional_max_iterations: usize,
    pub tolerance: f64,
    pub tv: TvFlavor,

    pub seed: u64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            side: 64,
            block: 8,
            rate: 0.5,
            feedback_base: 4.0,
            pattern_mode: PatternMode::Gaussian,
            binary_threshold: 0.5,
            channel_mode: ChannelMode::Mono,
            noise_std: 0.0,
            mask: MaskKind::Passthrough,
            mask_dilation: 0.0,
            mask_softness: 2.0,
            mask_jitter: 4.0,
            mask_jitter_decay: 1.0,
            silhouette_tile: 4,
            silhouette_mean_min: 0.6,
            silhouette_mean_max: 1.0,
            silhouette_var_max: 0.01,
            lambda: 0.5,
            rho: 4.0,
            max_iterations: 200,
            provisional_max_iterations: 50,
            tolerance: 1e-4,
            tv: TvFlavor::Anisotropic,
            seed: 0,
        }
    }
}

impl CaptureConfig {
    /// Desk-scale defaults: 64x64 mono, 8x8 blocks.
    pub fn desk() -> Self {
        Self::default()
    }

    /// Experimental-protocol scale: 256x256 RGB, 32x32 blocks (M' = 512).
    pub fn paper() -> Self {
        Self {
            side: 256,
            block: 32,
            channel_mode: ChannelMode::Rgb,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::Config(format!("rate must lie in (0, 1], got {}", self.rate)));
        }
        if self.measurements_per_block() == 0 {
            return Err(Error::Config(format!(
                "rate {} leaves no measurement per block of {} pixels",
                self.rate,
                self.block * self.block
            )));
        }
        self.schedule()?;
        let non_negative = [
            ("noise_std", self.noise_std),
            ("mask_dilation", self.mask_dilation),
            ("mask_softness", self.mask_softness),
            ("mask_jitter", self.mask_jitter),
            ("mask_jitter_decay", self.mask_jitter_decay),
            ("silhouette_var_max", self.silhouette_var_max),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {value}")));
            }
        }
        if !(0.0..=1.0).contains(&self.binary_threshold) {
            return Err(Error::Config(format!(
                "binary_threshold must lie in [0, 1], got {}",
                self.binary_threshold
            )));
        }
        if self.silhouette_tile == 0 || self.side % self.silhouette_tile != 0 {
            return Err(Error::Config(format!(
                "silhouette_tile {} must be positive and divide side {}",
                self.silhouette_tile, self.side
            )));
        }
        if self.silhouette_mean_min > self.silhouette_mean_max {
            return Err(Error::Config("silhouette_mean_min exceeds silhouette_mean_max".into()));
        }
        if self.provisional_max_iterations == 0 {
            return Err(Error::Config("provisional_max_iterations must be >= 1".into()));
        }
        self.admm_params().validate()
    }

    pub fn grid(&self) -> Result<BlockGrid> {
        BlockGrid::new(self.side, self.block)
    }

    /// Acquisitions per capture, `M' = round(r * n)`.
    pub fn measurements_per_block(&self) -> usize {
        (self.rate * (self.block * self.block) as f64).round() as usize
    }

    /// Total measurements per channel, `M = M' * N_b`.
    pub fn total_measurements(&self) -> Result<usize> {
        Ok(self.measurements_per_block() * self.grid()?.num_blocks())
    }

    pub fn channels(&self) -> usize {
        self.channel_mode.channels()
    }

    pub fn schedule(&self) -> Result<FeedbackSchedule> {
        FeedbackSchedule::new(self.feedback_base, self.measurements_per_block().max(1))
    }

    /// Solver settings for final and attack reconstructions.
    pub fn admm_params(&self) -> AdmmTvParams {
        AdmmTvParams {
            lambda: self.lambda,
            rho: self.rho,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            flavor: self.tv,
        }
    }

    /// Solver settings for in-loop provisional reconstructions.
    pub fn provisional_params(&self) -> AdmmTvParams {
        AdmmTvParams {
            max_iterations: self.provisional_max_iterations,
            ..self.admm_params()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}
