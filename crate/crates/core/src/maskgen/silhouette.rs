use crate::domain::{Image, RngStream};
use crate::error::{Error, Result};
use crate::maskgen::{region_weight, MaskGenerator, Rect};
use crate::measurement::{SamplingWeight, WeightSource};

/// Target signature for [`SilhouetteMask`]: a tile matches when its mean
/// lies in `[mean_min, mean_max]` and its variance is at most `var_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SilhouetteParams {
    pub tile: usize,
    pub mean_min: f64,
    pub mean_max: f64,
    pub var_max: f64,
    pub dilation: f64,
    pub softness: f64,
}

/// Detects candidate target regions on the provisional reconstruction from
/// per-tile statistics and masks the matching tiles.
#[derive(Clone, Debug)]
pub struct SilhouetteMask {
    params: SilhouetteParams,
}

impl SilhouetteMask {
    pub fn new(params: SilhouetteParams) -> Result<Self> {
        if params.tile == 0 {
            return Err(Error::InvalidArgument("silhouette tile must be positive".into()));
        }
        if params.mean_min > params.mean_max || params.var_max < 0.0 {
            return Err(Error::InvalidArgument("empty silhouette signature".into()));
        }
        Ok(Self { params })
    }

    /// Tiles matching the signature, as rectangles.
    pub fn detect(&self, provisional: &Image) -> Vec<Rect> {
        let luma = provisional.to_mono();
        let plane = luma.plane(0);
        let side = luma.side();
        let t = self.params.tile;
        let mut hits = Vec::new();
        for tr in (0..side).step_by(t) {
            for tc in (0..side).step_by(t) {
                let (r1, c1) = ((tr + t).min(side), (tc + t).min(side));
                let count = ((r1 - tr) * (c1 - tc)) as f64;
                let mut sum = 0.0;
                let mut sq = 0.0;
                for r in tr..r1 {
                    for v in &plane[r * side + tc..r * side + c1] {
                        sum += v;
                        sq += v * v;
                    }
                }
                let mean = sum / count;
                let var = (sq / count - mean * mean).max(0.0);
                if mean >= self.params.mean_min && mean <= self.params.mean_max && var <= self.params.var_max {
                    hits.push(Rect {
                        x0: tc as f64,
                        y0: tr as f64,
                        x1: c1 as f64,
                        y1: r1 as f64,
                    });
                }
            }
        }
        hits
    }
}

impl MaskGenerator for SilhouetteMask {
    fn generate(&self, provisional: &Image, acquisition: usize, _stream: RngStream) -> SamplingWeight {
        let rects = self.detect(provisional);
        let w = region_weight(&rects, provisional.side(), self.params.dilation, self.params.softness);
        SamplingWeight::new(w, WeightSource::Feedback(acquisition)).expect("region weights lie in [0, 1]")
    }

    fn name(&self) -> &'static str {
        "silhouette"
    }
}
