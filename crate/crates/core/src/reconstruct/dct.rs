use nalgebra::DMatrix;

/// Exact solver for `(I + D^T D) x = b` on an `L x L` plane, where `D` is
/// the Neumann forward-difference gradient. The operator is diagonal in the
/// orthonormal DCT-II basis with eigenvalues
/// `1 + (2 - 2 cos(pi k / L)) + (2 - 2 cos(pi l / L))`.
#[derive(Clone, Debug)]
pub(crate) struct NeumannSolver {
    side: usize,
    basis: DMatrix<f64>,
    inv_eig: DMatrix<f64>,
}

impl NeumannSolver {
    pub(crate) fn new(side: usize) -> Self {
        let l = side as f64;
        let basis = DMatrix::from_fn(side, side, |k, i| {
            let scale = if k == 0 { (1.0 / l).sqrt() } else { (2.0 / l).sqrt() };
            scale * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / l).cos()
        });
        let mu: Vec<f64> = (0..side)
            .map(|k| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / l).cos())
            .collect();
        let inv_eig = DMatrix::from_fn(side, side, |k, m| 1.0 / (1.0 + mu[k] + mu[m]));
        Self {
            side,
            basis,
            inv_eig,
        }
    }

    /// Solves in place; `plane` is row-major.
    pub(crate) fn solve(&self, plane: &mut [f64]) {
        let s = self.side;
        // Row-major data read as column-major gives the transpose; the
        // operator is symmetric under transposition, so solving for X^T is
        // equivalent.
        let xt = DMatrix::from_column_slice(s, s, plane);
        let mut spec = &self.basis * xt * self.basis.transpose();
        spec.component_mul_assign(&self.inv_eig);
        let sol = self.basis.transpose() * spec * &self.basis;
        plane.copy_from_slice(sol.as_slice());
    }
}
