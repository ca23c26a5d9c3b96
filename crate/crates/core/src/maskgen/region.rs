/// Rectangle in continuous pixel coordinates (pixel `(r, c)` spans
/// `[c, c + 1) x [r, r + 1)`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    fn dilate(self, d: f64) -> Self {
        Rect {
            x0: self.x0 - d,
            y0: self.y0 - d,
            x1: self.x1 + d,
            y1: self.y1 + d,
        }
    }
}

/// Weight plane that is 0 for every pixel whose centre lies in a rectangle
/// grown by `dilation`, rises linearly to 1 over `softness` pixels of
/// Euclidean distance from that core, and is 1 elsewhere.
pub fn region_weight(rects: &[Rect], side: usize, dilation: f64, softness: f64) -> Vec<f64> {
    let mut w = vec![1.0; side * side];
    for rect in rects.iter().map(|r| r.dilate(dilation)) {
        if rect.x1 <= rect.x0 || rect.y1 <= rect.y0 {
            continue;
        }
        let reach = softness.max(0.0) + 1.0;
        let c_lo = (rect.x0 - reach).floor().max(0.0) as usize;
        let r_lo = (rect.y0 - reach).floor().max(0.0) as usize;
        let c_hi = ((rect.x1 + reach).ceil().max(0.0) as usize).min(side);
        let r_hi = ((rect.y1 + reach).ceil().max(0.0) as usize).min(side);
        for r in r_lo..r_hi {
            let py = r as f64 + 0.5;
            for c in c_lo..c_hi {
                let px = c as f64 + 0.5;
                let inside = px >= rect.x0 && px < rect.x1 && py >= rect.y0 && py < rect.y1;
                let value = if inside {
                    0.0
                } else if softness > 0.0 {
                    let dx = (rect.x0 - px).max(px - rect.x1).max(0.0);
                    let dy = (rect.y0 - py).max(py - rect.y1).max(0.0);
                    (dx.hypot(dy) / softness).min(1.0)
                } else {
                    1.0
                };
                let slot: &mut f64 = &mut w[r * side + c];
                *slot = (*slot).min(value);
            }
        }
    }
    w
}
