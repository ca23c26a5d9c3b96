//! Measurement bundle: everything an adversary needs to rebuild `Phi` and
//! `y`, and everything a verifier needs to replay a capture.
//!
//! # File layout (version 1, all integers and floats little-endian)
//!
//! | field            | type          | notes                                   |
//! |------------------|---------------|-----------------------------------------|
//! | magic            | `[u8; 8]`     | `PSPIBNDL`                              |
//! | version          | `u32`         | `1`                                     |
//! | side             | `u32`         | `L`                                     |
//! | block            | `u32`         | `B`                                     |
//! | channels         | `u32`         | 1 or 3                                  |
//! | acquisitions     | `u32`         | `M'`                                    |
//! | blocks           | `u32`         | `N_b`                                   |
//! | seed             | `u64`         | master seed                             |
//! | config length    | `u32`         | byte length of the next field           |
//! | config           | UTF-8         | flat TOML capture configuration         |
//! | event count      | `u32`         | feedback events                         |
//! | events           | repeated      | `u32` acquisition index, `L*L` x `f64` w |
//! | record count     | `u64`         | `M' * N_b * channels`                   |
//! | records          | `f64` x count | ordered by acquisition, block, channel  |
//! | checksum         | `[u8; 32]`    | SHA-256 of every preceding byte         |

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::domain::{CaptureConfig, FeedbackSchedule, Image};
use crate::error::{Error, Result};
use crate::measurement::{forward, PatternSource, SamplingWeight, WeightSource};

pub const BUNDLE_MAGIC: [u8; 8] = *b"PSPIBNDL";
pub const BUNDLE_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Weight snapshot produced by the mask generator after acquisition
/// `acquisition`; in force for acquisitions `acquisition + 1` onward.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackEvent {
    pub acquisition: usize,
    pub weight: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBundle {
    config: CaptureConfig,
    events: Vec<FeedbackEvent>,
    records: Vec<f64>,
}

impl MeasurementBundle {
    pub fn new(config: CaptureConfig, events: Vec<FeedbackEvent>, records: Vec<f64>) -> Result<Self> {
        let bundle = Self {
            config,
            events,
            records,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let grid = self.config.grid()?;
        let m = self.config.measurements_per_block();
        let expected = m * grid.num_blocks() * self.config.channels();
        if self.records.len() != expected {
            return Err(Error::Malformed(format!(
                "expected {expected} measurement records, found {}",
                self.records.len()
            )));
        }
        let mut prev = 0;
        for ev in &self.events {
            if ev.acquisition <= prev || ev.acquisition >= m.max(1) {
                return Err(Error::Malformed(format!(
                    "feedback event at acquisition {} out of order or range",
                    ev.acquisition
                )));
            }
            prev = ev.acquisition;
            if ev.weight.len() != grid.num_pixels() {
                return Err(Error::Malformed(format!(
                    "feedback weight has {} pixels, expected {}",
                    ev.weight.len(),
                    grid.num_pixels()
                )));
            }
            if ev.weight.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::Malformed("feedback weight outside [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &CaptureConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn events(&self) -> &[FeedbackEvent] {
        &self.events
    }

    pub fn records(&self) -> &[f64] {
        &self.records
    }

    /// `M'`.
    pub fn acquisitions(&self) -> usize {
        self.config.measurements_per_block()
    }

    pub fn channels(&self) -> usize {
        self.config.channels()
    }

    /// `y_{i,j}` for `channel`; `acquisition` is 1-based.
    pub fn measurement(&self, acquisition: usize, block: usize, channel: usize) -> f64 {
        let nb = self.num_blocks();
        self.records[((acquisition - 1) * nb + block) * self.channels() + channel]
    }

    pub fn num_blocks(&self) -> usize {
        let k = self.config.side / self.config.block;
        k * k
    }

    pub fn pattern_source(&self) -> Result<PatternSource> {
        Ok(PatternSource {
            grid: self.config.grid()?,
            seed: self.config.seed,
            mode: self.config.pattern_mode,
            binary_threshold: self.config.binary_threshold,
        })
    }

    /// Weight plane in force when acquisition `acquisition` was displayed:
    /// the latest event strictly before it, or `None` for all-ones.
    pub fn weight_for(&self, acquisition: usize) -> Option<&FeedbackEvent> {
        self.events
            .iter()
            .take_while(|ev| ev.acquisition < acquisition)
            .last()
    }

    /// Rebuilds every `phi_i` from the seed and the feedback events, runs the
    /// forward model on `source` and compares against the recorded values.
    pub fn replay(&self, source: &Image) -> Result<ReplayReport> {
        let grid = self.config.grid()?;
        let expected_channels = self.channels();
        if source.side() != grid.side() || source.channels() != expected_channels {
            return Err(Error::dimension(
                format!("{0}x{0}x{1}", grid.side(), expected_channels),
                source.shape_string(),
            ));
        }
        let schedule = FeedbackSchedule::new(self.config.feedback_base, self.acquisitions())?;
        let event_indices: Vec<usize> = self.events.iter().map(|e| e.acquisition).collect();
        let schedule_matches = event_indices == schedule.indices();

        let patterns = self.pattern_source()?;
        let nb = grid.num_blocks();
        let mut max_abs_error: f64 = 0.0;
        let ones = SamplingWeight::ones(grid.num_pixels());
        for i in 1..=self.acquisitions() {
            let weight = match self.weight_for(i) {
                Some(ev) => SamplingWeight::new(ev.weight.clone(), WeightSource::Feedback(ev.acquisition))?,
                None => ones.clone(),
            };
            let phi = patterns.synthesize(i, &weight)?;
            let y = forward(&phi, source, &grid)?;
            let noise = crate::capture::measurement_noise(&self.config, i, nb);
            for j in 0..nb {
                for c in 0..expected_channels {
                    let predicted = y[c * nb + j] + noise.as_ref().map_or(0.0, |n| n[j * expected_channels + c]);
                    let err = (predicted - self.measurement(i, j, c)).abs();
                    max_abs_error = max_abs_error.max(err);
                }
            }
        }
        Ok(ReplayReport {
            acquisitions: self.acquisitions(),
            records: self.records.len(),
            max_abs_error,
            schedule_matches,
        })
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut source: R) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.config.to_toml_string();
        let n = self.config.side * self.config.side;
        let mut out = Vec::with_capacity(
            64 + cfg.len() + self.events.len() * (4 + 8 * n) + 8 * self.records.len() + CHECKSUM_LEN,
        );
        out.extend_from_slice(&BUNDLE_MAGIC);
        out.extend_from_slice(&BUNDLE_VERSION.to_le_bytes());
        for v in [
            self.config.side,
            self.config.block,
            self.channels(),
            self.acquisitions(),
            self.num_blocks(),
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.config.seed.to_le_bytes());
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(cfg.as_bytes());
        out.extend_from_slice(&(self.events.len() as u32).to_le_bytes());
        for ev in &self.events {
            out.extend_from_slice(&(ev.acquisition as u32).to_le_bytes());
            for w in &ev.weight {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for y in &self.records {
            out.extend_from_slice(&y.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.take(8, "magic")?;
        if magic != BUNDLE_MAGIC {
            return Err(Error::Malformed("not a measurement bundle (bad magic)".into()));
        }
        let version = cur.u32("version")?;
        if version != BUNDLE_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                supported: BUNDLE_VERSION,
            });
        }
        let side = cur.u32("side")? as usize;
        let block = cur.u32("block")? as usize;
        let channels = cur.u32("channels")? as usize;
        let acquisitions = cur.u32("acquisitions")? as usize;
        let blocks = cur.u32("block count")? as usize;
        let seed = cur.u64("seed")?;
        let cfg_len = cur.u32("config length")? as usize;
        let cfg_text = std::str::from_utf8(cur.take(cfg_len, "config")?)
            .map_err(|_| Error::Malformed("config block is not UTF-8".into()))?;
        let event_count = cur.u32("event count")? as usize;
        let n = side
            .checked_mul(side)
            .ok_or_else(|| Error::Malformed("image side overflows".into()))?;
        let mut events = Vec::with_capacity(event_count.min(1024));
        for _ in 0..event_count {
            let acquisition = cur.u32("event index")? as usize;
            let weight = cur.f64s(n, "event weights")?;
            events.push(FeedbackEvent { acquisition, weight });
        }
        let record_count = cur.u64("record count")? as usize;
        let records = cur.f64s(record_count, "measurement records")?;
        let body_len = cur.pos;
        let checksum = cur.take(CHECKSUM_LEN, "checksum")?;
        if cur.pos != bytes.len() {
            return Err(Error::Malformed(format!(
                "{} trailing bytes after checksum",
                bytes.len() - cur.pos
            )));
        }
        if Sha256::digest(&bytes[..body_len]).as_slice() != checksum {
            return Err(Error::Checksum);
        }

        let config = CaptureConfig::from_toml_str(cfg_text)?;
        let header = [
            ("side", side, config.side),
            ("block", block, config.block),
            ("channels", channels, config.channels()),
            ("acquisitions", acquisitions, config.measurements_per_block()),
        ];
        for (name, stored, derived) in header {
            if stored != derived {
                return Err(Error::Malformed(format!(
                    "header {name} = {stored} disagrees with config ({derived})"
                )));
            }
        }
        if seed != config.seed {
            return Err(Error::Malformed("header seed disagrees with config".into()));
        }
        let bundle = Self {
            config,
            events,
            records,
        };
        if blocks != bundle.num_blocks() {
            return Err(Error::Malformed("header block count disagrees with config".into()));
        }
        bundle.validate()?;
        Ok(bundle)
    }
}

/// Outcome of [`MeasurementBundle::replay`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub acquisitions: usize,
    pub records: usize,
    /// Largest `|y_replayed - y_recorded|`.
    pub max_abs_error: f64,
    /// Feedback events sit exactly at the configured schedule.
    pub schedule_matches: bool,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let remaining = self.bytes.len() - self.pos;
        if len > remaining {
            return Err(Error::Truncated(format!(
                "{what} needs {len} bytes at offset {}, {remaining} left",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let len = count
            .checked_mul(8)
            .ok_or_else(|| Error::Malformed(format!("{what} length overflows")))?;
        let raw = self.take(len, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
