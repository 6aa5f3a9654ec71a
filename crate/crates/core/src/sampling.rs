//! Deterministic sample sets for pointwise identity checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::expr::FiberPoint;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Points with Euclidean fiber norm below this are redrawn.
    pub min_fiber_norm: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { count: 100, seed: 42, x_range: [-1.0, 1.0], y_range: [-1.0, 1.0], min_fiber_norm: 0.0 }
    }
}

impl SampleSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    /// Homogeneity checks stay away from the zero section.
    pub fn away_from_zero(mut self) -> Self {
        self.min_fiber_norm = self.min_fiber_norm.max(0.1);
        self
    }

    pub fn points(&self, m: usize, r: usize) -> Vec<FiberPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let [xl, xh] = self.x_range;
        let [yl, yh] = self.y_range;
        let mut out = Vec::with_capacity(self.count);
        while out.len() < self.count {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(xl..=xh)).collect();
            let y: Vec<f64> = (0..r).map(|_| rng.gen_range(yl..=yh)).collect();
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > 0 && norm < self.min_fiber_norm {
                continue;
            }
            out.push(FiberPoint { x, y });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let s = SampleSpec::default();
        assert_eq!(s.points(2, 3), s.points(2, 3));
        assert_ne!(s.points(2, 3), s.clone().with_seed(7).points(2, 3));
    }

    #[test]
    fn respects_box_and_exclusion() {
        let s = SampleSpec { x_range: [0.0, 0.5], ..SampleSpec::default() }.away_from_zero();
        for p in s.points(2, 2) {
            assert!(p.x.iter().all(|v| (0.0..=0.5).contains(v)));
            assert!(p.y.iter().map(|v| v * v).sum::<f64>().sqrt() >= 0.1);
        }
    }
}
