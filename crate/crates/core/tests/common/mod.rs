#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use privspi_core::domain::{Purpose, RngStream};
use privspi_core::measurement::MeasurementBundle;
use privspi_core::{BlockGrid, Image};
use rand::Rng;

pub fn random_image(side: usize, channels: usize, seed: u64) -> Image {
    let mut rng = RngStream::new(seed, 0, 0, Purpose::Other(77)).rng();
    Image::new(side, channels, (0..side * side * channels).map(|_| rng.random()).collect()).unwrap()
}

/// Measurement matrix of block `j` rebuilt straight from the raw Gaussian
/// streams, assuming every acquisition used the all-ones weight.
pub fn raw_block_matrix(seed: u64, block: usize, rows: usize, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(rows, n);
    for k in 0..rows {
        let row = RngStream::new(seed, (k + 1) as u64, block as u64, Purpose::Pattern).draw_normal(n);
        for (o, v) in row.into_iter().enumerate() {
            a[(k, o)] = v;
        }
    }
    a
}

/// Direct LU solve of every square block system of a passthrough bundle.
pub fn direct_block_solve(bundle: &MeasurementBundle, grid: &BlockGrid, channel: usize) -> Vec<f64> {
    let n = grid.block_len();
    let m = bundle.acquisitions();
    assert_eq!(m, n, "direct solve needs a determined system");
    let mut plane = vec![0.0; grid.num_pixels()];
    for j in 0..grid.num_blocks() {
        let a = raw_block_matrix(bundle.seed(), j, m, n);
        let y = DVector::from_fn(m, |k, _| bundle.measurement(k + 1, j, channel));
        let x = a.lu().solve(&y).expect("full rank");
        for o in 0..n {
            plane[grid.from_block(j, o)] = x[o];
        }
    }
    plane
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() / a.len() as f64
}

/// One-sided sign test: P(X >= successes) for X ~ Binomial(trials, 1/2).
pub fn sign_test_p(successes: usize, trials: usize) -> f64 {
    let mut p = 0.0;
    for k in successes..=trials {
        let mut c = 1.0f64;
        for t in 0..k {
            c = c * (trials - t) as f64 / (t + 1) as f64;
        }
        p += c;
    }
    p / 2f64.powi(trials as i32)
}
