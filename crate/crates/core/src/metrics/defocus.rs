use crate::domain::Image;
use crate::error::{Error, Result};

/// Defocus kernel side, pixels.
pub const DEFOCUS_SIZE: usize = 31;
/// Defocus kernel standard deviation, pixels.
pub const DEFOCUS_SIGMA: f64 = 16.0;

/// Normalized 1-D Gaussian taps centred on `size / 2`.
pub fn gaussian_kernel_1d(size: usize, sigma: f64) -> Vec<f64> {
    let centre = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - centre;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Row-major `size x size` kernel, the outer product of two 1-D kernels.
pub fn gaussian_kernel_2d(size: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel_1d(size, sigma);
    k.iter().flat_map(|a| k.iter().map(move |b| a * b)).collect()
}

/// Mirror index without repeating the edge sample (`-1 -> 1`).
fn reflect(i: isize, len: usize) -> usize {
    let n = len as isize;
    let mut i = i;
    while i < 0 || i >= n {
        i = if i < 0 { -i } else { 2 * (n - 1) - i };
    }
    i as usize
}

/// The defocus-lens baseline: 31x31 Gaussian blur, sigma 16, reflected
/// borders, applied to every channel.
pub fn defocus_baseline(x: &Image) -> Result<Image> {
    let side = x.side();
    if side < DEFOCUS_SIZE {
        return Err(Error::InvalidArgument(format!(
            "defocus needs an image of at least {DEFOCUS_SIZE} pixels, got {side}"
        )));
    }
    let k = gaussian_kernel_1d(DEFOCUS_SIZE, DEFOCUS_SIGMA);
    let half = (DEFOCUS_SIZE / 2) as isize;
    let mut out = Vec::with_capacity(x.data().len());
    let mut tmp = vec![0.0; side * side];
    for c in 0..x.channels() {
        let plane = x.plane(c);
        for r in 0..side {
            for col in 0..side {
                tmp[r * side + col] = k
                    .iter()
                    .enumerate()
                    .map(|(t, w)| w * plane[r * side + reflect(col as isize + t as isize - half, side)])
                    .sum();
            }
        }
        for r in 0..side {
            for col in 0..side {
                let v: f64 = k
                    .iter()
                    .enumerate()
                    .map(|(t, w)| w * tmp[reflect(r as isize + t as isize - half, side) * side + col])
                    .sum();
                out.push(v);
            }
        }
    }
    Image::from_clamped(side, x.channels(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_shape_and_mass() {
        let k = gaussian_kernel_2d(DEFOCUS_SIZE, DEFOCUS_SIGMA);
        assert_eq!(k.len(), 31 * 31);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let centre = k[15 * 31 + 15];
        assert!(k.iter().all(|v| *v <= centre));
        assert_eq!(k[0], k[30 * 31 + 30]);
    }

    #[test]
    fn constant_is_preserved() {
        let x = Image::filled(40, 3, 0.37).unwrap();
        let y = defocus_baseline(&x).unwrap();
        assert!(y.data().iter().all(|v| (v - 0.37).abs() < 1e-10));
    }

    #[test]
    fn impulse_response_is_kernel() {
        let side = 64;
        let mut data = vec![0.0; side * side];
        data[32 * side + 32] = 1.0;
        let y = defocus_baseline(&Image::new(side, 1, data).unwrap()).unwrap();
        let k = gaussian_kernel_2d(DEFOCUS_SIZE, DEFOCUS_SIGMA);
        for dr in 0..31 {
            for dc in 0..31 {
                let got = y.get(0, 32 - 15 + dr, 32 - 15 + dc);
                assert!((got - k[dr * 31 + dc]).abs() < 1e-15);
            }
        }
        assert_eq!(y.get(0, 0, 0), 0.0);
    }

    #[test]
    fn intensity_shift_commutes() {
        let side = 48;
        let data: Vec<f64> = (0..side * side).map(|p| ((p * 31 % 17) as f64) / 40.0).collect();
        let shifted: Vec<f64> = data.iter().map(|v| v + 0.3).collect();
        let a = defocus_baseline(&Image::new(side, 1, data).unwrap()).unwrap();
        let b = defocus_baseline(&Image::new(side, 1, shifted).unwrap()).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((v - u - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn small_image_is_rejected() {
        assert!(defocus_baseline(&Image::filled(30, 1, 0.5).unwrap()).is_err());
    }

    #[test]
    fn reflection_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-4, 5), 4);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(2, 5), 2);
    }
}
