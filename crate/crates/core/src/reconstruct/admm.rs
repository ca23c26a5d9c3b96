//! ADMM for `min_x sum_j ||Phi_j x_j - y_j||^2 + lambda * TV(x)`.
//!
//! Splitting: `v = x` carries the block-separable data term and `z = D x`
//! carries the TV term, so
//!
//! * x-update: `(I + D^T D) x = (v - u1) + D^T (z - u2)`, solved exactly in
//!   the DCT basis;
//! * v-update: `(2 G_j + rho I) v_j = 2 Phi_j^T y_j + rho (x_j + u1_j)` per
//!   block, with `G_j` the cached Gram matrix and a per-block Cholesky factor
//!   (through the Woodbury identity on the rows side when a block has fewer
//!   rows than pixels);
//! * z-update: shrinkage of `D x + u2` by `lambda / rho`.
//!
//! The iterate is warm-started from the per-block minimum-norm solution.

use nalgebra::{Cholesky, DMatrix, DMatrixView, Dyn};
use rayon::prelude::*;

use crate::domain::Image;
use crate::error::{Error, Result};
use crate::measurement::MeasurementBundle;
use crate::reconstruct::dct::NeumannSolver;
use crate::reconstruct::lsq::{data_residual, min_norm_block_fast};
use crate::reconstruct::tv::{gradient, gradient_adjoint, shrink, tv_of_gradient};
use crate::reconstruct::{AdmmTvParams, BlockSystem, ReconstructionResult};

/// ADMM-TV reconstruction from the first `upto` acquisitions of a bundle.
pub fn reconstruct_admm_tv(
    bundle: &MeasurementBundle,
    upto: usize,
    params: &AdmmTvParams,
) -> Result<ReconstructionResult> {
    params.validate()?;
    let mut system = BlockSystem::from_bundle(bundle, upto)?;
    admm_tv_system(&mut system, params)
}

struct ChannelState {
    x: Vec<f64>,
    v: Vec<f64>,
    z: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

/// Factor of `2 G + rho I`, either directly or of `rho/2 I + Phi Phi^T`.
enum BlockSolver {
    Pixels(Cholesky<f64, Dyn>),
    Rows(Cholesky<f64, Dyn>),
}

impl BlockSolver {
    fn solve(&self, phi_t: DMatrixView<'_, f64>, rhs: DMatrix<f64>, rho: f64) -> DMatrix<f64> {
        match self {
            BlockSolver::Pixels(chol) => chol.solve(&rhs),
            BlockSolver::Rows(chol) => {
                let s = chol.solve(&phi_t.tr_mul(&rhs));
                (rhs - phi_t * s) / rho
            }
        }
    }
}

/// ADMM-TV on an already assembled block system.
pub fn admm_tv_system(system: &mut BlockSystem, params: &AdmmTvParams) -> Result<ReconstructionResult> {
    params.validate()?;
    if system.rows() == 0 {
        return Err(Error::InvalidArgument("no acquisitions to reconstruct from".into()));
    }
    let wide = system.rows() < system.grid().block_len();
    if !wide {
        system.refresh_grams();
    }
    let system = &*system;
    let grid = *system.grid();
    let side = grid.side();
    let n = grid.block_len();
    let nb = grid.num_blocks();
    let npix = grid.num_pixels();
    let channels = system.channels();
    let rho = params.rho;
    let kappa = params.lambda / rho;

    let prepared: Vec<(BlockSolver, DMatrix<f64>)> = (0..nb)
        .into_par_iter()
        .map(|j| {
            let normal = if wide {
                let phi_t = system.phi_t(j);
                phi_t.tr_mul(&phi_t)
            } else {
                system.gram(j).clone()
            };
            let mut m = normal.clone();
            if wide {
                for d in 0..m.nrows() {
                    m[(d, d)] += rho / 2.0;
                }
            } else {
                m *= 2.0;
                for d in 0..n {
                    m[(d, d)] += rho;
                }
            }
            let chol = Cholesky::new(m).ok_or_else(|| {
                Error::InvalidArgument(format!("block {j}: data system not positive definite"))
            })?;
            let warm = min_norm_block_fast(system, j, normal)?;
            let solver = if wide { BlockSolver::Rows(chol) } else { BlockSolver::Pixels(chol) };
            Ok((solver, warm))
        })
        .collect::<Result<_>>()?;
    let (factors, warm_blocks): (Vec<BlockSolver>, Vec<DMatrix<f64>>) = prepared.into_iter().unzip();
    // 2 Phi_j^T y_j, one column per channel.
    let rhs_data: Vec<DMatrix<f64>> = (0..nb)
        .into_par_iter()
        .map(|j| {
            let y = DMatrix::from_fn(system.rows(), channels, |k, c| system.y(j, k, c));
            system.phi_t(j) * y * 2.0
        })
        .collect();

    let mut warm = vec![vec![0.0; npix]; channels];
    for (j, sol) in warm_blocks.iter().enumerate() {
        for (c, plane) in warm.iter_mut().enumerate() {
            grid.scatter(sol.column(c).as_slice(), j, plane);
        }
    }
    let mut states: Vec<ChannelState> = warm
        .into_iter()
        .map(|x| {
            let mut z = vec![0.0; 2 * npix];
            gradient(&x, side, &mut z);
            ChannelState {
                v: x.clone(),
                x,
                z,
                u1: vec![0.0; npix],
                u2: vec![0.0; 2 * npix],
            }
        })
        .collect();

    let solver = NeumannSolver::new(side);
    let mut primal_trace = Vec::new();
    let mut dual_trace = Vec::new();
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut dx = vec![0.0; 2 * npix];
    let mut tmp = vec![0.0; 2 * npix];
    let mut adj = vec![0.0; npix];

    for _ in 0..params.max_iterations {
        iterations += 1;
        let mut primal_sq = 0.0;
        let mut dual_sq = 0.0;
        let mut tv_total = 0.0;

        // x-update, per channel.
        for st in states.iter_mut() {
            for ((t, z), u) in tmp.iter_mut().zip(&st.z).zip(&st.u2) {
                *t = z - u;
            }
            gradient_adjoint(&tmp, side, &mut adj);
            for ((x, (v, u)), a) in st.x.iter_mut().zip(st.v.iter().zip(&st.u1)).zip(&adj) {
                *x = v - u + a;
            }
            solver.solve(&mut st.x);
        }

        // v-update, per block, all channels at once.
        let solved: Vec<DMatrix<f64>> = (0..nb)
            .into_par_iter()
            .map(|j| {
                let mut rhs = rhs_data[j].clone();
                let mut buf = vec![0.0; n];
                for (c, st) in states.iter().enumerate() {
                    grid.gather(&st.x, j, &mut buf);
                    let mut col = rhs.column_mut(c);
                    for (o, b) in buf.iter().enumerate() {
                        col[o] += rho * b;
                    }
                    grid.gather(&st.u1, j, &mut buf);
                    for (o, b) in buf.iter().enumerate() {
                        col[o] += rho * b;
                    }
                }
                factors[j].solve(system.phi_t(j), rhs, rho)
            })
            .collect();

        for (c, st) in states.iter_mut().enumerate() {
            let v_prev = std::mem::replace(&mut st.v, vec![0.0; npix]);
            for (j, sol) in solved.iter().enumerate() {
                grid.scatter(sol.column(c).as_slice(), j, &mut st.v);
            }

            gradient(&st.x, side, &mut dx);
            tv_total += tv_of_gradient(&dx, params.flavor);
            let z_prev = std::mem::take(&mut st.z);
            st.z = dx.iter().zip(&st.u2).map(|(d, u)| d + u).collect();
            shrink(&mut st.z, kappa, params.flavor);

            for p in 0..npix {
                let r = st.x[p] - st.v[p];
                st.u1[p] += r;
                primal_sq += r * r;
            }
            for q in 0..2 * npix {
                let r = dx[q] - st.z[q];
                st.u2[q] += r;
                primal_sq += r * r;
                tmp[q] = st.z[q] - z_prev[q];
            }
            gradient_adjoint(&tmp, side, &mut adj);
            for p in 0..npix {
                let s = rho * ((st.v[p] - v_prev[p]) + adj[p]);
                dual_sq += s * s;
            }
        }

        let xs: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
        let misfit = data_residual(system, &xs);
        let count = (channels * nb * system.rows()) as f64;
        objective.push(misfit * misfit * count + params.lambda * tv_total);

        let primal = (primal_sq / (3 * npix * channels) as f64).sqrt();
        let dual = (dual_sq / (npix * channels) as f64).sqrt();
        primal_trace.push(primal);
        dual_trace.push(dual);
        if primal < params.tolerance && dual < params.tolerance {
            converged = true;
            break;
        }
    }

    let data: Vec<f64> = states.iter().flat_map(|s| s.x.iter().copied()).collect();
    let image = Image::from_clamped(side, channels, data)?;
    let planes: Vec<Vec<f64>> = (0..channels).map(|c| image.plane(c).to_vec()).collect();
    let data_residual = data_residual(system, &planes);
    Ok(ReconstructionResult {
        image,
        iterations,
        converged,
        primal_residual: primal_trace,
        dual_residual: dual_trace,
        objective,
        data_residual,
    })
}
