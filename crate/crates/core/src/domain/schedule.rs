use crate::error::{Error, Result};

/// Hard cap on feedback rounds; guards against bases extremely close to 1.
const MAX_ROUNDS: usize = 1 << 20;

/// Acquisition indices at which the provisional reconstruction and the
/// sampling weight are recomputed: `floor(K^t)` for `t = 0, 1, 2, ...`,
/// restricted to `1 <= i < M'`.
///
/// The last acquisition is excluded because a weight computed there would
/// only shape a pattern that is never displayed. Colliding indices (small
/// `K`) collapse to one feedback in the loop, but every exponent still
/// counts as a round in [`FeedbackSchedule::rounds`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeedbackSchedule {
    indices: Vec<usize>,
    rounds: usize,
}

impl FeedbackSchedule {
    pub fn new(base: f64, acquisitions: usize) -> Result<Self> {
        if !(base.is_finite() && base > 1.0) {
            return Err(Error::Config(format!(
                "feedback base K must be a finite value > 1, got {base}"
            )));
        }
        if acquisitions == 0 {
            return Err(Error::Config("acquisition count M' must be at least 1".into()));
        }
        let mut indices: Vec<usize> = Vec::new();
        let mut rounds = 0usize;
        loop {
            let value = base.powi(rounds as i32).floor();
            if value >= acquisitions as f64 {
                break;
            }
            rounds += 1;
            if rounds > MAX_ROUNDS {
                return Err(Error::Config(format!(
                    "feedback base K = {base} yields more than {MAX_ROUNDS} rounds"
                )));
            }
            let i = value as usize;
            if indices.last() != Some(&i) {
                indices.push(i);
            }
        }
        Ok(Self { indices, rounds })
    }

    /// Distinct feedback indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of feedback rounds `N_f` (exponents `t` with `floor(K^t) < M'`).
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn contains(&self, acquisition: usize) -> bool {
        self.indices.binary_search(&acquisition).is_ok()
    }
}
