use crate::domain::{BlockGrid, PatternMode, Purpose, RngStream};
use crate::error::{Error, Result};

/// Where a sampling weight came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightSource {
    /// The all-ones weight in force before the first feedback.
    Initial,
    /// Produced by the mask generator at this acquisition index.
    Feedback(usize),
}

/// Per-pixel attenuation `w` in `[0, 1]`, row-major over one image plane.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingWeight {
    values: Vec<f64>,
    source: WeightSource,
}

impl SamplingWeight {
    pub fn ones(pixels: usize) -> Self {
        Self {
            values: vec![1.0; pixels],
            source: WeightSource::Initial,
        }
    }

    pub fn new(values: Vec<f64>, source: WeightSource) -> Result<Self> {
        if let Some(p) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(format!(
                "sampling weight {} at pixel {p} outside [0, 1]",
                values[p]
            )));
        }
        Ok(Self { values, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> WeightSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// One row `phi_i` of the measurement matrix, stored block-major:
/// coefficient `o` of block `j` lives at `j * n + o`.
#[derive(Clone, Debug, PartialEq)]
pub struct AperturePattern {
    acquisition: usize,
    block_len: usize,
    coeffs: Vec<f64>,
}

impl AperturePattern {
    pub fn from_blocks(acquisition: usize, block_len: usize, coeffs: Vec<f64>) -> Result<Self> {
        if block_len == 0 || coeffs.len() % block_len != 0 {
            return Err(Error::dimension(
                format!("a multiple of block length {block_len}"),
                coeffs.len(),
            ));
        }
        Ok(Self {
            acquisition,
            block_len,
            coeffs,
        })
    }

    pub fn acquisition(&self) -> usize {
        self.acquisition
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn num_blocks(&self) -> usize {
        self.coeffs.len() / self.block_len
    }

    /// Materialized length `N = n * N_b`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.coeffs[j * self.block_len..(j + 1) * self.block_len]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Regenerates aperture patterns from the master seed.
///
/// Block `j` of acquisition `i` draws from its own stream, so single blocks
/// can be rebuilt without touching the rest of the pattern.
#[derive(Clone, Copy, Debug)]
pub struct PatternSource {
    pub grid: BlockGrid,
    pub seed: u64,
    pub mode: PatternMode,
    pub binary_threshold: f64,
}

impl PatternSource {
    /// Writes `phi_{i,j}` for weight plane `weight` into `out` (length `n`).
    pub fn block_into(&self, acquisition: usize, block: usize, weight: &[f64], out: &mut [f64]) {
        let (i, j) = (acquisition as u64, block as u64);
        self.grid.gather(weight, block, out);
        match self.mode {
            PatternMode::Gaussian => {
                let noise = RngStream::new(self.seed, i, j, Purpose::Pattern).draw_normal(out.len());
                for (w, n) in out.iter_mut().zip(noise) {
                    *w *= n;
                }
            }
            PatternMode::Binary => {
                let bits = RngStream::new(self.seed, i, j, Purpose::Bits).draw_bits(out.len());
                for (w, b) in out.iter_mut().zip(bits) {
                    *w = if *w >= self.binary_threshold { b } else { 0.0 };
                }
            }
        }
    }

    /// Full pattern `phi_i = w (.) n_i` (gaussian) or `[w >= t] (.) bits_i`
    /// (binary).
    pub fn synthesize(&self, acquisition: usize, weight: &SamplingWeight) -> Result<AperturePattern> {
        if weight.len() != self.grid.num_pixels() {
            return Err(Error::dimension(
                format!("{} weight pixels", self.grid.num_pixels()),
                weight.len(),
            ));
        }
        let n = self.grid.block_len();
        let mut coeffs = vec![0.0; self.grid.num_pixels()];
        for (j, chunk) in coeffs.chunks_mut(n).enumerate() {
            self.block_into(acquisition, j, weight.values(), chunk);
        }
        AperturePattern::from_blocks(acquisition, n, coeffs)
    }
}
