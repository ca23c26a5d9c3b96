use rayon::prelude::*;

use crate::domain::{BlockGrid, Image};
use crate::error::{Error, Result};
use crate::measurement::AperturePattern;

/// Simulated optical acquisition: `y_{i,j} = phi_{i,j} . x_j` for every block
/// and channel.
///
/// Output layout is channel-major: `y[c * N_b + j]`.
pub fn forward(pattern: &AperturePattern, x: &Image, grid: &BlockGrid) -> Result<Vec<f64>> {
    if x.side() != grid.side() {
        return Err(Error::dimension(
            format!("{0}x{0} image for the block grid", grid.side()),
            x.shape_string(),
        ));
    }
    if pattern.len() != grid.num_pixels() || pattern.block_len() != grid.block_len() {
        return Err(Error::dimension(
            format!(
                "pattern of {} blocks x {} coefficients",
                grid.num_blocks(),
                grid.block_len()
            ),
            format!(
                "pattern of {} blocks x {} coefficients",
                pattern.num_blocks(),
                pattern.block_len()
            ),
        ));
    }
    let nb = grid.num_blocks();
    let mut y = vec![0.0; nb * x.channels()];
    for (c, out) in y.chunks_mut(nb).enumerate() {
        let plane = x.plane(c);
        out.par_iter_mut().enumerate().for_each_init(
            || vec![0.0; grid.block_len()],
            |buf, (j, yj)| {
                grid.gather(plane, j, buf);
                *yj = dot(pattern.block(j), buf);
            },
        );
    }
    Ok(y)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
