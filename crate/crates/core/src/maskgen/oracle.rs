use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::{BoundingBox, Image, RngStream};
use crate::error::{Error, Result};
use crate::maskgen::{region_weight, MaskGenerator, Rect};
use crate::measurement::{SamplingWeight, WeightSource};

/// Box-corner jitter std `max(0, initial - decay * log_base(i))`, pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JitterSchedule {
    pub initial: f64,
    pub decay: f64,
    pub base: f64,
}

impl JitterSchedule {
    pub fn none() -> Self {
        Self {
            initial: 0.0,
            decay: 0.0,
            base: 2.0,
        }
    }

    pub fn std_at(&self, acquisition: usize) -> f64 {
        let steps = (acquisition.max(1) as f64).ln() / self.base.ln();
        (self.initial - self.decay * steps).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleMaskParams {
    pub boxes: Vec<BoundingBox>,
    pub dilation: f64,
    pub softness: f64,
    pub jitter: JitterSchedule,
}

/// Masks the ground-truth boxes, each corner perturbed by Gaussian noise
/// whose std shrinks with the acquisition index.
#[derive(Clone, Debug)]
pub struct OracleMask {
    params: OracleMaskParams,
}

impl OracleMask {
    pub fn new(params: OracleMaskParams) -> Result<Self> {
        let j = params.jitter;
        if !(params.dilation >= 0.0 && params.softness >= 0.0) {
            return Err(Error::InvalidArgument("dilation and softness must be >= 0".into()));
        }
        if !(j.initial >= 0.0 && j.decay >= 0.0 && j.base > 1.0) {
            return Err(Error::InvalidArgument(
                "jitter schedule must be non-increasing with base > 1".into(),
            ));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &OracleMaskParams {
        &self.params
    }

    fn jittered(&self, acquisition: usize, stream: RngStream) -> Vec<Rect> {
        let std = self.params.jitter.std_at(acquisition);
        let mut rng = stream.rng();
        self.params
            .boxes
            .iter()
            .map(|b| {
                let mut corner = [b.x0 as f64, b.y0 as f64, b.x1 as f64, b.y1 as f64];
                if std > 0.0 {
                    for v in &mut corner {
                        let e: f64 = rng.sample(StandardNormal);
                        *v += std * e;
                    }
                }
                let [x0, y0, x1, y1] = corner;
                Rect {
                    x0: x0.min(x1),
                    y0: y0.min(y1),
                    x1: x0.max(x1),
                    y1: y0.max(y1),
                }
            })
            .collect()
    }
}

impl MaskGenerator for OracleMask {
    fn generate(&self, provisional: &Image, acquisition: usize, stream: RngStream) -> SamplingWeight {
        let rects = self.jittered(acquisition, stream);
        let w = region_weight(&rects, provisional.side(), self.params.dilation, self.params.softness);
        SamplingWeight::new(w, WeightSource::Feedback(acquisition)).expect("region weights lie in [0, 1]")
    }

    fn name(&self) -> &'static str {
        "oracle"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{union_mask, Purpose};

    fn stream(seed: u64, i: usize) -> RngStream {
        RngStream::new(seed, i as u64, 0, Purpose::Jitter)
    }

    fn hard(boxes: Vec<BoundingBox>, dilation: f64) -> OracleMask {
        OracleMask::new(OracleMaskParams {
            boxes,
            dilation,
            softness: 0.0,
            jitter: JitterSchedule::none(),
        })
        .unwrap()
    }

    #[test]
    fn hard_box_zeroes_exactly_the_box() {
        let m = hard(vec![BoundingBox::new("face", 8, 8, 16, 16).unwrap()], 0.0);
        let img = Image::filled(32, 1, 0.5).unwrap();
        let w = m.generate(&img, 1, stream(0, 1));
        for r in 0..32 {
            for c in 0..32 {
                let inside = (8..16).contains(&r) && (8..16).contains(&c);
                assert_eq!(w.values()[r * 32 + c], if inside { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn empty_box_list_is_all_ones() {
        let m = hard(vec![], 2.0);
        let w = m.generate(&Image::filled(16, 1, 0.5).unwrap(), 4, stream(0, 4));
        assert!(w.values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn zero_set_contains_dilated_box() {
        let b = BoundingBox::new("p", 5, 9, 12, 14).unwrap();
        for d in 0..4 {
            let m = OracleMask::new(OracleMaskParams {
                boxes: vec![b.clone()],
                dilation: d as f64,
                softness: 2.0,
                jitter: JitterSchedule::none(),
            })
            .unwrap();
            let w = m.generate(&Image::filled(24, 1, 0.0).unwrap(), 1, stream(1, 1));
            let grown = BoundingBox::new("p", b.x0 - d, b.y0 - d, b.x1 + d, b.y1 + d).unwrap();
            let inside = union_mask(&[grown], 24);
            for (p, is_in) in inside.iter().enumerate() {
                if *is_in {
                    assert_eq!(w.values()[p], 0.0, "pixel {p} with dilation {d}");
                } else {
                    assert!(w.values()[p] > 0.0);
                }
            }
        }
    }

    #[test]
    fn jitter_schedule_decreases() {
        let j = JitterSchedule {
            initial: 4.0,
            decay: 1.0,
            base: 4.0,
        };
        let stds: Vec<f64> = [1, 4, 16, 64, 256, 1024].iter().map(|&i| j.std_at(i)).collect();
        assert_eq!(stds, vec![4.0, 3.0, 2.0, 1.0, 0.0, 0.0]);
    }

    /// Monte Carlo over seeds: with std 2 px at i = 1 decaying to 0 by
    /// i = 16, the average overlap of the zeroed area with the true box
    /// increases monotonically.
    #[test]
    fn overlap_improves_with_acquisitions() {
        let side = 48;
        let b = BoundingBox::new("face", 16, 16, 32, 32).unwrap();
        let truth = union_mask(&[b.clone()], side);
        let m = OracleMask::new(OracleMaskParams {
            boxes: vec![b],
            dilation: 0.0,
            softness: 0.0,
            jitter: JitterSchedule {
                initial: 2.0,
                decay: 1.0,
                base: 4.0,
            },
        })
        .unwrap();
        let img = Image::filled(side, 1, 0.0).unwrap();
        let mean_iou = |i: usize| -> f64 {
            (0..100u64)
                .map(|seed| {
                    let w = m.generate(&img, i, stream(seed, i));
                    let (mut inter, mut uni) = (0usize, 0usize);
                    for (p, t) in truth.iter().enumerate() {
                        let z = w.values()[p] == 0.0;
                        inter += (z && *t) as usize;
                        uni += (z || *t) as usize;
                    }
                    inter as f64 / uni as f64
                })
                .sum::<f64>()
                / 100.0
        };
        let ious: Vec<f64> = [1, 4, 16, 64].iter().map(|&i| mean_iou(i)).collect();
        assert!(ious[0] < ious[1] && ious[1] < ious[2], "{ious:?}");
        assert_eq!(ious[2], 1.0);
        assert_eq!(ious[3], 1.0);
    }

    #[test]
    fn generation_is_pure() {
        let m = OracleMask::new(OracleMaskParams {
            boxes: vec![BoundingBox::new("a", 3, 3, 9, 9).unwrap()],
            dilation: 1.0,
            softness: 2.0,
            jitter: JitterSchedule {
                initial: 3.0,
                decay: 1.0,
                base: 2.0,
            },
        })
        .unwrap();
        let img = Image::filled(16, 1, 0.2).unwrap();
        assert_eq!(m.generate(&img, 2, stream(9, 2)), m.generate(&img, 2, stream(9, 2)));
    }
}
