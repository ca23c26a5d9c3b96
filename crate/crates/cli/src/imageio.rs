//! Raster file I/O. PNG and PNM (PGM/PPM) are supported; samples are mapped
//! linearly to `[0, 1]` on load and quantized to 8 bits on save. RGB input
//! used in mono mode is converted with the luma weights 0.299, 0.587, 0.114.

use std::path::Path;

use image::imageops::{self, FilterType};
use image::{DynamicImage, ImageBuffer, ImageReader, Luma, Rgb};
use privspi_core::{BoundingBox, Image};

use crate::error::{CliError, CliResult, Failure};

/// A decoded file before it is fitted to the simulator's square grid.
#[derive(Clone, Debug)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    /// Planar, row-major.
    pub data: Vec<f64>,
}

pub fn load_raster(path: &Path) -> CliResult<Raster> {
    let reader = ImageReader::open(path)
        .map_err(|e| CliError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| CliError::io(path, e))?;
    let decoded = reader.decode().map_err(|e| CliError::io(path, e))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let n = width * height;
    if decoded.color().has_color() {
        let rgb = decoded.to_rgb32f();
        let mut data = vec![0.0; 3 * n];
        for (p, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                data[c * n + p] = f64::from(px[c]).clamp(0.0, 1.0);
            }
        }
        Ok(Raster {
            width,
            height,
            channels: 3,
            data,
        })
    } else {
        let gray = decoded.to_luma32f();
        let data = gray.pixels().map(|px| f64::from(px[0]).clamp(0.0, 1.0)).collect();
        Ok(Raster {
            width,
            height,
            channels: 1,
            data,
        })
    }
}

/// Loads a square image and converts it to `channels` (1 or 3).
pub fn load_image(path: &Path, channels: usize) -> CliResult<Image> {
    let raster = load_raster(path)?;
    if raster.width != raster.height {
        return Err(CliError::config(format!(
            "{}: expected a square image, got {}x{}",
            path.display(),
            raster.width,
            raster.height
        )));
    }
    let image = Image::new(raster.width, raster.channels, raster.data)?;
    Ok(convert_channels(image, channels))
}

pub fn convert_channels(image: Image, channels: usize) -> Image {
    match (image.channels(), channels) {
        (3, 1) => image.to_mono(),
        (1, 3) => {
            let plane = image.into_data();
            let side = (plane.len() as f64).sqrt() as usize;
            Image::new(side, 3, plane.repeat(3)).expect("replicated gray stays in range")
        }
        _ => image,
    }
}

/// Writes an image as 8-bit gray or RGB; the format follows the extension.
pub fn save_image(image: &Image, path: &Path) -> CliResult<()> {
    let side = image.side() as u32;
    let n = image.pixels();
    let q = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    let dynamic = if image.channels() == 1 {
        let buf: Vec<u8> = image.data().iter().map(|v| q(*v)).collect();
        DynamicImage::ImageLuma8(ImageBuffer::from_raw(side, side, buf).expect("buffer size"))
    } else {
        let d = image.data();
        let buf: Vec<u8> = (0..n).flat_map(|p| (0..3).map(move |c| q(d[c * n + p]))).collect();
        DynamicImage::ImageRgb8(ImageBuffer::from_raw(side, side, buf).expect("buffer size"))
    };
    dynamic.save(path).map_err(|e| CliError::io(path, e))
}

/// Centre-crops `raster` to a square, resamples it to `side` (bilinear) and
/// maps the boxes the same way, rounding outward. Boxes that end up empty
/// are dropped.
pub fn fit_scene(
    raster: &Raster,
    side: usize,
    channels: usize,
    boxes: &[BoundingBox],
) -> CliResult<(Image, Vec<BoundingBox>)> {
    let crop = raster.width.min(raster.height);
    if crop == 0 {
        return Err(CliError::new(Failure::Io, "empty image"));
    }
    let (ox, oy) = ((raster.width - crop) / 2, (raster.height - crop) / 2);
    let n = raster.width * raster.height;
    let sample = |c: usize, x: usize, y: usize| raster.data[c * n + (oy + y) * raster.width + ox + x];

    let data = if crop == side {
        (0..raster.channels)
            .flat_map(|c| (0..side * side).map(move |p| (c, p)))
            .map(|(c, p)| sample(c, p % side, p / side))
            .collect::<Vec<_>>()
    } else if raster.channels == 1 {
        let buf: ImageBuffer<Luma<f32>, Vec<f32>> =
            ImageBuffer::from_fn(crop as u32, crop as u32, |x, y| Luma([sample(0, x as usize, y as usize) as f32]));
        let out = imageops::resize(&buf, side as u32, side as u32, FilterType::Triangle);
        out.pixels().map(|px| f64::from(px[0])).collect()
    } else {
        let buf: ImageBuffer<Rgb<f32>, Vec<f32>> = ImageBuffer::from_fn(crop as u32, crop as u32, |x, y| {
            let (x, y) = (x as usize, y as usize);
            Rgb([sample(0, x, y) as f32, sample(1, x, y) as f32, sample(2, x, y) as f32])
        });
        let out = imageops::resize(&buf, side as u32, side as u32, FilterType::Triangle);
        let mut data = vec![0.0; 3 * side * side];
        for (p, px) in out.pixels().enumerate() {
            for c in 0..3 {
                data[c * side * side + p] = f64::from(px[c]);
            }
        }
        data
    };
    let image = convert_channels(Image::from_clamped(side, raster.channels, data)?, channels);

    let scale = side as f64 / crop as f64;
    let map = |v: usize, offset: usize, round: fn(f64) -> f64| -> usize {
        let t = (v as f64 - offset as f64) * scale;
        round(t).clamp(0.0, side as f64) as usize
    };
    let fitted = boxes
        .iter()
        .filter_map(|b| {
            let x0 = map(b.x0, ox, f64::floor);
            let y0 = map(b.y0, oy, f64::floor);
            let x1 = map(b.x1, ox, f64::ceil);
            let y1 = map(b.y1, oy, f64::ceil);
            BoundingBox::new(b.label.clone(), x0, y0, x1, y1).ok()
        })
        .collect();
    Ok((image, fitted))
}

/// `dir/name.ext` -> `dir/name.boxes`.
pub fn boxes_path_for(image: &Path) -> std::path::PathBuf {
    image.with_extension("boxes")
}
