//! Image-quality and anonymity metrics.

mod defocus;
mod report;

pub use defocus::{defocus_baseline, gaussian_kernel_1d, gaussian_kernel_2d, DEFOCUS_SIGMA, DEFOCUS_SIZE};
pub use report::{evaluate, EvalReport, EvalRow, DEFAULT_ALPHA};

use std::fmt;

use serde::{Serialize, Serializer};

use crate::domain::{union_mask, BoundingBox, Image};
use crate::error::{Error, Result};

/// Peak signal-to-noise ratio in dB, or infinite for identical inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn from_mse(mse: f64) -> Self {
        if mse == 0.0 {
            Psnr::Infinite
        } else {
            Psnr::Finite(-10.0 * mse.log10())
        }
    }

    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Psnr::Infinite)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Finite(v) => s.serialize_f64(*v),
            Psnr::Infinite => s.serialize_str("inf"),
        }
    }
}

fn check_pair(reference: &Image, estimate: &Image) -> Result<()> {
    if reference.same_shape(estimate) {
        Ok(())
    } else {
        Err(Error::dimension(reference.shape_string(), estimate.shape_string()))
    }
}

/// Mean squared difference over the pixels where `select` is true, all
/// channels. `None` if nothing is selected.
fn masked_mse(reference: &Image, estimate: &Image, select: &[bool]) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in 0..reference.channels() {
        let (a, b) = (reference.plane(c), estimate.plane(c));
        for p in 0..select.len() {
            if select[p] {
                let d = a[p] - b[p];
                sum += d * d;
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Mean squared error over the whole image.
pub fn mse(reference: &Image, estimate: &Image) -> Result<f64> {
    check_pair(reference, estimate)?;
    let n = reference.data().len() as f64;
    Ok(reference
        .data()
        .iter()
        .zip(estimate.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// PSNR (peak 1.0) over the pixels outside every box in `exclude`.
pub fn psnr_masked(reference: &Image, estimate: &Image, exclude: &[BoundingBox]) -> Result<Psnr> {
    check_pair(reference, estimate)?;
    let outside: Vec<bool> = union_mask(exclude, reference.side()).into_iter().map(|m| !m).collect();
    let mse = masked_mse(reference, estimate, &outside)
        .ok_or_else(|| Error::InvalidArgument("exclusion boxes cover the whole image".into()))?;
    Ok(Psnr::from_mse(mse))
}

/// Mean squared error over the union of `boxes`; large values mean the
/// region was not recovered.
pub fn region_mse(reference: &Image, estimate: &Image, boxes: &[BoundingBox]) -> Result<f64> {
    check_pair(reference, estimate)?;
    if boxes.is_empty() {
        return Err(Error::InvalidArgument("region MSE needs at least one box".into()));
    }
    for b in boxes {
        b.check_within(reference.side())?;
    }
    let inside = union_mask(boxes, reference.side());
    Ok(masked_mse(reference, estimate, &inside).expect("boxes are non-degenerate"))
}

/// Modified leaky ReLU applied to a feature distance: `-(d - 1.1)` below the
/// same-identity threshold 1.1, `-0.01 (d - 1.1)` above it.
pub fn anonymity_adjustment(distance: f64) -> f64 {
    const THRESHOLD: f64 = 1.1;
    if distance < THRESHOLD {
        -(distance - THRESHOLD)
    } else {
        -0.01 * (distance - THRESHOLD)
    }
}
