use crate::error::{Error, Result};

/// Square raster image with 1 or 3 channels and samples in `[0, 1]`.
///
/// Samples are stored planar: channel `c` occupies
/// `data[c * side * side .. (c + 1) * side * side]`, each plane row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    side: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(side: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidArgument("image side must be positive".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = side * side * channels;
        if data.len() != expected {
            return Err(Error::dimension(
                format!("{expected} samples ({side}x{side}x{channels})"),
                format!("{} samples", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sample {pos} = {} outside [0, 1]",
                data[pos]
            )));
        }
        Ok(Self {
            side,
            channels,
            data,
        })
    }

    /// Builds an image by clamping every sample into `[0, 1]`. Non-finite
    /// samples become 0.
    pub fn from_clamped(side: usize, channels: usize, mut data: Vec<f64>) -> Result<Self> {
        for v in &mut data {
            *v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        }
        Self::new(side, channels, data)
    }

    pub fn filled(side: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(side, channels, vec![value; side * side * channels])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Pixels per channel.
    pub fn pixels(&self) -> usize {
        self.side * self.side
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[channel * n..(channel + 1) * n]
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[channel * self.pixels() + row * self.side + col]
    }

    /// Sets a sample, clamping into `[0, 1]`.
    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f64) {
        let idx = channel * self.pixels() + row * self.side + col;
        self.data[idx] = value.clamp(0.0, 1.0);
    }

    /// Collapses an RGB image to one channel with Rec. 601 luma weights
    /// (0.299, 0.587, 0.114). Mono images are returned unchanged.
    pub fn to_mono(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let n = self.pixels();
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        let data = (0..n)
            .map(|p| (0.299 * r[p] + 0.587 * g[p] + 0.114 * b[p]).clamp(0.0, 1.0))
            .collect();
        Image {
            side: self.side,
            channels: 1,
            data,
        }
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.side == other.side && self.channels == other.channels
    }

    pub(crate) fn shape_string(&self) -> String {
        format!("{0}x{0}x{1}", self.side, self.channels)
    }
}
