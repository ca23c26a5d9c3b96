use serde::{Deserialize, Serialize};

use crate::domain::Image;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvFlavor {
    /// `sum |d_h| + |d_v|`
    #[default]
    Anisotropic,
    /// `sum sqrt(d_h^2 + d_v^2)`
    Isotropic,
}

/// Forward differences with Neumann boundary: the horizontal difference in
/// the last column and the vertical difference in the last row are zero.
/// Writes `[d_h; d_v]` into `out` (length `2 * side * side`).
pub fn gradient(plane: &[f64], side: usize, out: &mut [f64]) {
    let n = side * side;
    let (dh, dv) = out.split_at_mut(n);
    for r in 0..side {
        let row = &plane[r * side..(r + 1) * side];
        for c in 0..side {
            let p = r * side + c;
            dh[p] = if c + 1 < side { row[c + 1] - row[c] } else { 0.0 };
            dv[p] = if r + 1 < side {
                plane[p + side] - plane[p]
            } else {
                0.0
            };
        }
    }
}

/// Adjoint of [`gradient`]: `out = D^T g` for `g = [g_h; g_v]`.
pub fn gradient_adjoint(g: &[f64], side: usize, out: &mut [f64]) {
    let n = side * side;
    let (gh, gv) = g.split_at(n);
    for r in 0..side {
        for c in 0..side {
            let p = r * side + c;
            let mut acc = 0.0;
            if c + 1 < side {
                acc -= gh[p];
            }
            if c > 0 {
                acc += gh[p - 1];
            }
            if r + 1 < side {
                acc -= gv[p];
            }
            if r > 0 {
                acc += gv[p - side];
            }
            out[p] = acc;
        }
    }
}

/// Total variation of a single plane.
pub fn tv_plane(plane: &[f64], side: usize, flavor: TvFlavor) -> f64 {
    let n = side * side;
    let mut g = vec![0.0; 2 * n];
    gradient(plane, side, &mut g);
    tv_of_gradient(&g, flavor)
}

pub(crate) fn tv_of_gradient(g: &[f64], flavor: TvFlavor) -> f64 {
    let n = g.len() / 2;
    let (dh, dv) = g.split_at(n);
    match flavor {
        TvFlavor::Anisotropic => g.iter().map(|v| v.abs()).sum(),
        TvFlavor::Isotropic => dh.iter().zip(dv).map(|(h, v)| h.hypot(*v)).sum(),
    }
}

/// Total variation summed over channels.
pub fn tv(image: &Image, flavor: TvFlavor) -> f64 {
    (0..image.channels())
        .map(|c| tv_plane(image.plane(c), image.side(), flavor))
        .sum()
}

/// Proximal map of `kappa * TV` in gradient space, in place.
pub(crate) fn shrink(g: &mut [f64], kappa: f64, flavor: TvFlavor) {
    match flavor {
        TvFlavor::Anisotropic => {
            for v in g.iter_mut() {
                *v = v.signum() * (v.abs() - kappa).max(0.0);
            }
        }
        TvFlavor::Isotropic => {
            let n = g.len() / 2;
            let (dh, dv) = g.split_at_mut(n);
            for (h, v) in dh.iter_mut().zip(dv.iter_mut()) {
                let mag = h.hypot(*v);
                let scale = if mag > kappa { 1.0 - kappa / mag } else { 0.0 };
                *h *= scale;
                *v *= scale;
            }
        }
    }
}
