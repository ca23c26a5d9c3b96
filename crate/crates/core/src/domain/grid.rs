use crate::error::{Error, Result};

/// Partition of an `L x L` raster into non-overlapping `B x B` blocks.
///
/// Blocks are numbered row-major over the block lattice; inside a block,
/// offsets are row-major as well.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    side: usize,
    block: usize,
}

impl BlockGrid {
    pub fn new(side: usize, block: usize) -> Result<Self> {
        if side == 0 || block == 0 {
            return Err(Error::Config(format!(
                "image side ({side}) and block side ({block}) must be positive"
            )));
        }
        if side % block != 0 {
            return Err(Error::Config(format!(
                "block side {block} does not divide image side {side}"
            )));
        }
        Ok(Self { side, block })
    }

    /// Image side `L`.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Block side `B`.
    pub fn block_side(&self) -> usize {
        self.block
    }

    /// Pixels per block, `n = B * B`.
    pub fn block_len(&self) -> usize {
        self.block * self.block
    }

    /// Blocks per row of the block lattice.
    pub fn blocks_per_row(&self) -> usize {
        self.side / self.block
    }

    /// Number of blocks, `N_b = (L / B)^2`.
    pub fn num_blocks(&self) -> usize {
        let k = self.blocks_per_row();
        k * k
    }

    /// Pixels per channel, `N = L * L`.
    pub fn num_pixels(&self) -> usize {
        self.side * self.side
    }

    /// Maps a row-major pixel index to `(block, offset)`.
    #[inline]
    pub fn to_block(&self, pixel: usize) -> (usize, usize) {
        let (row, col) = (pixel / self.side, pixel % self.side);
        let block = (row / self.block) * self.blocks_per_row() + col / self.block;
        let offset = (row % self.block) * self.block + col % self.block;
        (block, offset)
    }

    /// Inverse of [`BlockGrid::to_block`].
    #[inline]
    pub fn from_block(&self, block: usize, offset: usize) -> usize {
        let k = self.blocks_per_row();
        let row = (block / k) * self.block + offset / self.block;
        let col = (block % k) * self.block + offset % self.block;
        row * self.side + col
    }

    /// Copies block `j` of a single-channel plane into `out` (length `n`).
    pub fn gather(&self, plane: &[f64], block: usize, out: &mut [f64]) {
        let k = self.blocks_per_row();
        let (r0, c0) = ((block / k) * self.block, (block % k) * self.block);
        for r in 0..self.block {
            let src = (r0 + r) * self.side + c0;
            out[r * self.block..(r + 1) * self.block]
                .copy_from_slice(&plane[src..src + self.block]);
        }
    }

    /// Writes `values` (length `n`) into block `j` of a plane.
    pub fn scatter(&self, values: &[f64], block: usize, plane: &mut [f64]) {
        let k = self.blocks_per_row();
        let (r0, c0) = ((block / k) * self.block, (block % k) * self.block);
        for r in 0..self.block {
            let dst = (r0 + r) * self.side + c0;
            plane[dst..dst + self.block]
                .copy_from_slice(&values[r * self.block..(r + 1) * self.block]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_scale_geometry() {
        let g = BlockGrid::new(256, 32).unwrap();
        assert_eq!(g.num_blocks(), 64);
        assert_eq!(g.block_len(), 1024);
    }

    #[test]
    fn single_block_geometry() {
        let g = BlockGrid::new(8, 8).unwrap();
        assert_eq!(g.num_blocks(), 1);
        assert_eq!(g.block_len(), 64);
    }

    #[test]
    fn desk_scale_geometry() {
        let g = BlockGrid::new(64, 8).unwrap();
        assert_eq!(g.num_blocks(), 64);
        assert_eq!(g.block_len(), 64);
    }

    #[test]
    fn non_divisible_block_names_both_values() {
        let err = BlockGrid::new(30, 8).unwrap_err().to_string();
        assert!(err.contains("30") && err.contains('8'), "{err}");
    }

    #[test]
    fn blocks_cover_every_pixel_once() {
        let g = BlockGrid::new(12, 4).unwrap();
        let mut seen = vec![false; g.num_pixels()];
        for j in 0..g.num_blocks() {
            for o in 0..g.block_len() {
                let p = g.from_block(j, o);
                assert!(!seen[p]);
                seen[p] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn gather_scatter_agree_with_index_map() {
        let g = BlockGrid::new(8, 4).unwrap();
        let plane: Vec<f64> = (0..64).map(|v| v as f64).collect();
        let mut buf = vec![0.0; 16];
        let mut rebuilt = vec![0.0; 64];
        for j in 0..g.num_blocks() {
            g.gather(&plane, j, &mut buf);
            for (o, v) in buf.iter().enumerate() {
                assert_eq!(*v, plane[g.from_block(j, o)]);
            }
            g.scatter(&buf, j, &mut rebuilt);
        }
        assert_eq!(plane, rebuilt);
    }

    proptest! {
        #[test]
        fn block_mapping_round_trips(k in 1usize..6, b in 1usize..9, seed in any::<u64>()) {
            let g = BlockGrid::new(k * b, b).unwrap();
            let p = (seed as usize) % g.num_pixels();
            let (j, o) = g.to_block(p);
            prop_assert!(j < g.num_blocks() && o < g.block_len());
            prop_assert_eq!(g.from_block(j, o), p);
        }
    }
}
