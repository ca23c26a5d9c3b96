use nalgebra::{DMatrix, DMatrixView};
use rayon::prelude::*;

use crate::domain::BlockGrid;
use crate::error::{Error, Result};
use crate::measurement::{AperturePattern, MeasurementBundle, SamplingWeight, WeightSource};

/// The block-diagonal linear system `y_j = Phi_{[1,i],j} x_j` accumulated so
/// far, one dense row block per image block.
///
/// Rows are appended as acquisitions arrive. Gram matrices
/// `Phi_j^T Phi_j` are cached and extended with only the rows added since
/// the last refresh.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    grid: BlockGrid,
    channels: usize,
    rows: usize,
    blocks: Vec<BlockRows>,
}

#[derive(Clone, Debug)]
struct BlockRows {
    /// Row-major `rows x n`.
    a: Vec<f64>,
    /// Row-major `rows x channels`.
    y: Vec<f64>,
    gram: DMatrix<f64>,
    gram_rows: usize,
}

impl BlockSystem {
    pub fn new(grid: BlockGrid, channels: usize) -> Self {
        let n = grid.block_len();
        let blocks = (0..grid.num_blocks())
            .map(|_| BlockRows {
                a: Vec::new(),
                y: Vec::new(),
                gram: DMatrix::zeros(n, n),
                gram_rows: 0,
            })
            .collect();
        Self {
            grid,
            channels,
            rows: 0,
            blocks,
        }
    }

    /// Rebuilds the system for acquisitions `1..=upto` from a bundle.
    pub fn from_bundle(bundle: &MeasurementBundle, upto: usize) -> Result<Self> {
        if upto == 0 || upto > bundle.acquisitions() {
            return Err(Error::InvalidArgument(format!(
                "acquisition prefix {upto} outside 1..={}",
                bundle.acquisitions()
            )));
        }
        let source = bundle.pattern_source()?;
        let grid = source.grid;
        let channels = bundle.channels();
        let mut system = Self::new(grid, channels);
        let nb = grid.num_blocks();
        let ones = SamplingWeight::ones(grid.num_pixels());
        for i in 1..=upto {
            let weight = match bundle.weight_for(i) {
                Some(ev) => SamplingWeight::new(ev.weight.clone(), WeightSource::Feedback(ev.acquisition))?,
                None => ones.clone(),
            };
            let phi = source.synthesize(i, &weight)?;
            let mut y = vec![0.0; nb * channels];
            for c in 0..channels {
                for j in 0..nb {
                    y[c * nb + j] = bundle.measurement(i, j, c);
                }
            }
            system.push(&phi, &y)?;
        }
        Ok(system)
    }

    /// Appends one acquisition. `y` is channel-major (`y[c * N_b + j]`), as
    /// returned by [`crate::measurement::forward`].
    pub fn push(&mut self, pattern: &AperturePattern, y: &[f64]) -> Result<()> {
        let nb = self.grid.num_blocks();
        if pattern.len() != self.grid.num_pixels() || pattern.block_len() != self.grid.block_len() {
            return Err(Error::dimension(
                format!("pattern of {} coefficients", self.grid.num_pixels()),
                pattern.len(),
            ));
        }
        if y.len() != nb * self.channels {
            return Err(Error::dimension(
                format!("{} measurements", nb * self.channels),
                y.len(),
            ));
        }
        for (j, b) in self.blocks.iter_mut().enumerate() {
            b.a.extend_from_slice(pattern.block(j));
            for c in 0..self.channels {
                b.y.push(y[c * nb + j]);
            }
        }
        self.rows += 1;
        Ok(())
    }

    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Acquisitions accumulated so far.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `Phi_j` as a column-major `n x rows` view, i.e. `Phi_j^T`.
    pub(crate) fn phi_t(&self, block: usize) -> DMatrixView<'_, f64> {
        let n = self.grid.block_len();
        DMatrixView::from_slice(&self.blocks[block].a, n, self.rows)
    }

    pub(crate) fn row(&self, block: usize, k: usize) -> &[f64] {
        let n = self.grid.block_len();
        &self.blocks[block].a[k * n..(k + 1) * n]
    }

    /// Recorded `y_{k,j}` for one channel (`k` 0-based).
    pub(crate) fn y(&self, block: usize, k: usize, channel: usize) -> f64 {
        self.blocks[block].y[k * self.channels + channel]
    }

    /// Extends every cached Gram matrix with rows added since the last call.
    pub(crate) fn refresh_grams(&mut self) {
        let n = self.grid.block_len();
        let rows = self.rows;
        self.blocks.par_iter_mut().for_each(|b| {
            if b.gram_rows == rows {
                return;
            }
            let fresh = rows - b.gram_rows;
            let new_t = DMatrixView::from_slice(&b.a[b.gram_rows * n..], n, fresh);
            b.gram.gemm(1.0, &new_t, &new_t.transpose(), 1.0);
            b.gram_rows = rows;
        });
    }

    pub(crate) fn gram(&self, block: usize) -> &DMatrix<f64> {
        debug_assert_eq!(self.blocks[block].gram_rows, self.rows);
        &self.blocks[block].gram
    }
}
