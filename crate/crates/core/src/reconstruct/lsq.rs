use nalgebra::{Cholesky, DMatrix, SVD};
use rayon::prelude::*;

use crate::domain::Image;
use crate::error::{Error, Result};
use crate::measurement::MeasurementBundle;
use crate::reconstruct::{BlockSystem, ReconstructionResult};

/// Minimum-norm least-squares solution of every block system, as planes
/// (channel-major, unclamped).
pub fn min_norm_planes(system: &BlockSystem) -> Result<Vec<Vec<f64>>> {
    let grid = *system.grid();
    let channels = system.channels();
    let m = system.rows();
    let solutions: Vec<DMatrix<f64>> = (0..grid.num_blocks())
        .into_par_iter()
        .map(|j| {
            let a = system.phi_t(j).transpose();
            let b = DMatrix::from_fn(m, channels, |k, c| system.y(j, k, c));
            min_norm_solve(a, &b)
        })
        .collect::<Result<_>>()?;
    let mut planes = vec![vec![0.0; grid.num_pixels()]; channels];
    for (j, sol) in solutions.iter().enumerate() {
        for (c, plane) in planes.iter_mut().enumerate() {
            grid.scatter(sol.column(c).as_slice(), j, plane);
        }
    }
    Ok(planes)
}

/// Minimum-norm solution of block `j` through the normal equations of the
/// smaller side (`normal` is `Phi Phi^T` when rows < n, else `Phi^T Phi`),
/// falling back to the SVD when those are badly conditioned. Less accurate
/// than [`min_norm_planes`], much faster for large blocks.
pub(crate) fn min_norm_block_fast(
    system: &BlockSystem,
    j: usize,
    normal: DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let phi_t = system.phi_t(j);
    let m = system.rows();
    let b = DMatrix::from_fn(m, system.channels(), |k, c| system.y(j, k, c));
    match well_conditioned_cholesky(normal) {
        Some(chol) if m < system.grid().block_len() => Ok(phi_t * chol.solve(&b)),
        Some(chol) => Ok(chol.solve(&(phi_t * b))),
        None => min_norm_solve(phi_t.transpose(), &b),
    }
}

fn well_conditioned_cholesky(normal: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let chol = Cholesky::new(normal)?;
    let l = chol.l_dirty();
    let diag = l.diagonal();
    let hi = diag.iter().cloned().fold(0.0, f64::max);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    // The diagonal of L bounds sqrt(cond); stay well clear of losing all digits.
    if hi > 0.0 && lo > hi * 1e-5 {
        Some(chol)
    } else {
        None
    }
}

fn min_norm_solve(a: DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    let svd = SVD::new(a, true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Ok(DMatrix::zeros(cols, b.ncols()));
    }
    let eps = sigma_max * rows.max(cols) as f64 * f64::EPSILON;
    svd.solve(b, eps)
        .map_err(|e| Error::InvalidArgument(format!("block least squares failed: {e}")))
}

/// Data misfit `sqrt(sum (Phi x - y)^2 / count)` of planes against a system.
pub(crate) fn data_residual(system: &BlockSystem, planes: &[Vec<f64>]) -> f64 {
    let grid = system.grid();
    let n = grid.block_len();
    let mut buf = vec![0.0; n];
    let mut sq = 0.0;
    for (c, plane) in planes.iter().enumerate() {
        for j in 0..grid.num_blocks() {
            grid.gather(plane, j, &mut buf);
            for k in 0..system.rows() {
                let r = crate::measurement::dot(system.row(j, k), &buf) - system.y(j, k, c);
                sq += r * r;
            }
        }
    }
    let count = (planes.len() * grid.num_blocks() * system.rows()).max(1);
    (sq / count as f64).sqrt()
}

/// Per-block minimum-norm least squares on acquisitions `1..=upto`; no
/// prior, blocks solved independently.
pub fn reconstruct_block_lsq(bundle: &MeasurementBundle, upto: usize) -> Result<ReconstructionResult> {
    let system = BlockSystem::from_bundle(bundle, upto)?;
    block_lsq_system(&system)
}

pub fn block_lsq_system(system: &BlockSystem) -> Result<ReconstructionResult> {
    let planes = min_norm_planes(system)?;
    let side = system.grid().side();
    let image = Image::from_clamped(side, system.channels(), planes.concat())?;
    let clamped: Vec<Vec<f64>> = (0..image.channels()).map(|c| image.plane(c).to_vec()).collect();
    let residual = data_residual(system, &clamped);
    Ok(ReconstructionResult {
        image,
        iterations: 1,
        converged: true,
        primal_residual: vec![residual],
        dual_residual: vec![0.0],
        objective: vec![residual * residual],
        data_residual: residual,
    })
}
