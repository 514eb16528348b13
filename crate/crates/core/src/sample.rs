//! Quasi-random sampling of box domains.
//!
//! Halton sequences with dimension-wise bases 2, 3, 5, 7, ... The `seed`
//! offsets the Halton index (sample `i` uses index `seed + i + 1`), which is
//! the documented scrambling: two runs with the same seed enumerate the same
//! points in the same order, on any implementation of this rule.

const BASES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Radical inverse of `index` in the given base, in (0, 1).
pub fn radical_inverse(base: u64, mut index: u64) -> f64 {
    let b = base as f64;
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Deterministic Halton sampler over an axis-aligned box.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    box_: Vec<[f64; 2]>,
    seed: u64,
}

impl BoxSampler {
    pub fn new(box_: Vec<[f64; 2]>, seed: u64) -> Self {
        assert!(
            box_.len() <= BASES.len(),
            "at most {} dimensions",
            BASES.len()
        );
        BoxSampler { box_, seed }
    }

    pub fn dim(&self) -> usize {
        self.box_.len()
    }

    /// The `i`-th sample point.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let index = self.seed + i as u64 + 1;
        self.box_
            .iter()
            .enumerate()
            .map(|(d, [lo, hi])| lo + radical_inverse(BASES[d], index) * (hi - lo))
            .collect()
    }

    pub fn take(&self, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|i| self.point(i)).collect()
    }
}

/// Shrink a box towards its center by `factor` (0 keeps the center only).
pub fn shrink_box(box_: &[[f64; 2]], factor: f64) -> Vec<[f64; 2]> {
    box_.iter()
        .map(|[lo, hi]| {
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo) * factor;
            [c - h, c + h]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_two_prefix() {
        let expected = [0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875];
        for (i, &e) in expected.iter().enumerate() {
            assert!((radical_inverse(2, i as u64 + 1) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn base_three_prefix() {
        let expected = [1.0 / 3.0, 2.0 / 3.0, 1.0 / 9.0, 4.0 / 9.0, 7.0 / 9.0];
        for (i, &e) in expected.iter().enumerate() {
            assert!((radical_inverse(3, i as u64 + 1) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_runs_are_reproducible_and_offset() {
        let s = BoxSampler::new(vec![[-1.0, 1.0], [0.0, 2.0]], 7);
        assert_eq!(s.point(0), s.point(0));
        let unseeded = BoxSampler::new(vec![[-1.0, 1.0], [0.0, 2.0]], 0);
        assert_eq!(s.point(0), unseeded.point(7));
    }

    #[test]
    fn points_stay_in_box() {
        let s = BoxSampler::new(vec![[-1.0, 1.0], [0.5, 0.6], [-3.0, -2.0]], 13);
        for p in s.take(200) {
            assert!(p[0] > -1.0 && p[0] < 1.0);
            assert!(p[1] > 0.5 && p[1] < 0.6);
            assert!(p[2] > -3.0 && p[2] < -2.0);
        }
    }
}
