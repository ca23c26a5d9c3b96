//! Seeded piecewise-constant test scenes with one labelled target.

use rand::Rng;

use crate::domain::{BoundingBox, Image, Purpose, RngStream};

/// A synthetic scene and the box of its anonymization target.
#[derive(Clone, Debug)]
pub struct Phantom {
    pub image: Image,
    pub boxes: Vec<BoundingBox>,
}

impl Phantom {
    /// Background clutter of rectangles and disks plus a face-like target
    /// (bright disk with dark eyes and mouth). `side` should be at least 16.
    pub fn generate(side: usize, channels: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed, 0, 0, Purpose::Phantom).rng();
        let s = side as f64;
        let n = side * side;
        let mut planes = vec![vec![0.0; n]; channels];
        let level = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| -> Vec<f64> {
            let base = rng.random_range(lo..hi);
            (0..channels)
                .map(|_| (base + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0))
                .collect()
        };

        let bg = level(&mut rng, 0.15, 0.35);
        for (plane, v) in planes.iter_mut().zip(&bg) {
            plane.fill(*v);
        }
        let paint = |planes: &mut [Vec<f64>], inside: &dyn Fn(f64, f64) -> bool, value: &[f64]| {
            for r in 0..side {
                for c in 0..side {
                    if inside(c as f64 + 0.5, r as f64 + 0.5) {
                        for (plane, v) in planes.iter_mut().zip(value) {
                            plane[r * side + c] = *v;
                        }
                    }
                }
            }
        };

        for _ in 0..4 {
            let (x0, y0) = (rng.random_range(0.0..s * 0.8), rng.random_range(0.0..s * 0.8));
            let (w, h) = (rng.random_range(s * 0.1..s * 0.4), rng.random_range(s * 0.1..s * 0.4));
            let v = level(&mut rng, 0.0, 0.6);
            paint(&mut planes, &|x, y| x >= x0 && x < x0 + w && y >= y0 && y < y0 + h, &v);
        }
        for _ in 0..2 {
            let (cx, cy) = (rng.random_range(0.0..s), rng.random_range(0.0..s));
            let rad = rng.random_range(s * 0.05..s * 0.15);
            let v = level(&mut rng, 0.3, 0.6);
            paint(&mut planes, &|x, y| (x - cx).hypot(y - cy) < rad, &v);
        }

        // Target: face-like disk with eyes and mouth.
        let rad = (s * 0.14).max(4.0);
        let cx = rng.random_range(s * 0.3..s * 0.7);
        let cy = rng.random_range(s * 0.3..s * 0.7);
        let skin = level(&mut rng, 0.75, 0.95);
        paint(&mut planes, &|x, y| (x - cx).hypot(y - cy) < rad, &skin);
        let feature = level(&mut rng, 0.0, 0.15);
        let eye = (rad * 0.22).max(1.0);
        for dx in [-0.4, 0.4] {
            let (ex, ey) = (cx + dx * rad, cy - 0.3 * rad);
            paint(&mut planes, &|x, y| (x - ex).abs() < eye && (y - ey).abs() < eye, &feature);
        }
        let (mw, mh) = (rad * 0.5, (rad * 0.12).max(0.75));
        let my = cy + 0.45 * rad;
        paint(&mut planes, &|x, y| (x - cx).abs() < mw && (y - my).abs() < mh, &feature);

        let clamp = |v: f64| (v.max(0.0) as usize).min(side);
        let target = BoundingBox::new(
            "face",
            clamp((cx - rad).floor()),
            clamp((cy - rad).floor()),
            clamp((cx + rad).ceil()),
            clamp((cy + rad).ceil()),
        )
        .expect("target box is non-degenerate");

        let image = Image::new(side, channels, planes.concat()).expect("phantom samples lie in [0, 1]");
        Self {
            image,
            boxes: vec![target],
        }
    }
}
