use alloc::vec::Vec;

use rand::RngCore;

use super::{CountTable, Step, UpRightPath};
use crate::environment::Environment;
use crate::rng::{self, Domain};

/// Draws independent uniform paths from a [`CountTable`].
///
/// Path number `k` is a pure function of `(seed, k)`: it is driven by its
/// own random stream. At each cell the walk steps right with probability
/// `B(i+1, j) / (B(i+1, j) + B(i, j+1))`, compared against a uniform 64-bit
/// integer (exact rational comparison when exact counts are available).
#[derive(Debug, Clone, Copy)]
pub struct PathSampler<'a> {
    ct: &'a CountTable,
    seed: u64,
}

impl<'a> PathSampler<'a> {
    pub fn new(ct: &'a CountTable, seed: u64) -> Self {
        PathSampler { ct, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    fn walk(&self, k: u64, mut visit: impl FnMut(Step, usize, usize)) {
        let (m, n) = (self.ct.m(), self.ct.n());
        let mut rng = rng::stream(self.seed, Domain::Path, k);
        let (mut i, mut j) = (1usize, 1usize);
        for _ in 0..(m + n - 2) {
            let right = match self.ct.right_threshold(i, j) {
                0 => false,
                u64::MAX => true,
                t => rng.next_u64() < t,
            };
            if right {
                i += 1;
                visit(Step::Right, i, j);
            } else {
                j += 1;
                visit(Step::Up, i, j);
            }
        }
    }

    /// The `k`-th sampled path.
    pub fn path(&self, k: u64) -> UpRightPath {
        let (m, n) = (self.ct.m(), self.ct.n());
        let mut steps = Vec::with_capacity(m + n - 2);
        self.walk(k, |s, _, _| steps.push(s));
        UpRightPath { m, n, steps }
    }

    /// Energy of the `k`-th path in `env`, without materializing the path.
    ///
    /// `env` must have the table's dimensions.
    pub fn energy(&self, k: u64, env: &Environment) -> f64 {
        debug_assert_eq!(env.dims(), (self.ct.m(), self.ct.n()));
        let w = env.weights();
        let n = self.ct.n();
        let mut at = 0usize;
        let mut sum = w[0];
        self.walk(k, |s, _, _| {
            at += match s {
                Step::Right => n,
                Step::Up => 1,
            };
            sum += w[at];
        });
        sum
    }
}

/// One uniform admissible path, deterministic in `seed`.
pub fn sample_path(ct: &CountTable, seed: u64) -> UpRightPath {
    PathSampler::new(ct, seed).path(0)
}
