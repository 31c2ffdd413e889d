use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

use super::{Cell, PathEnsemble};
use crate::error::{Error, Result};
use crate::math::{self, log_add_exp, ratio_to_f64, NeumaierSum};

/// Exact counts beyond this many bits are converted through log space
/// instead (`2^996 < 10^300`).
const EXACT_RATIO_BITS: u64 = 996;

/// When to keep exact big-integer counts next to the log-space tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountOptions {
    /// Build exact tables when `log2 C(M+N-2, M-1)` is at most this.
    pub exact_bits_limit: u64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            exact_bits_limit: 1000,
        }
    }
}

impl CountOptions {
    pub fn log_only() -> Self {
        CountOptions { exact_bits_limit: 0 }
    }

    pub fn always_exact() -> Self {
        CountOptions {
            exact_bits_limit: u64::MAX,
        }
    }
}

#[derive(Debug, Clone)]
struct ExactCounts {
    forward: Vec<BigUint>,
    backward: Vec<BigUint>,
}

/// Forward and backward path counts for every cell of an ensemble.
///
/// `F(i,j)` counts admissible paths `(1,1) -> (i,j)` and `B(i,j)` counts
/// admissible paths `(i,j) -> (M,N)`; `Z = F(M,N) = B(1,1)`. The log-space
/// tables are always present. Exact tables are kept when the rectangle is
/// small enough (see [`CountOptions`]).
#[derive(Debug, Clone)]
pub struct CountTable {
    ensemble: PathEnsemble,
    m: usize,
    n: usize,
    forward_log: Vec<f64>,
    backward_log: Vec<f64>,
    exact: Option<ExactCounts>,
    /// Per-cell threshold `t` on a uniform `u64`: step right iff `k < t`;
    /// `0` means always up and `u64::MAX` always right.
    right_threshold: Vec<u64>,
}

/// Builds the count tables of `ens` with default options.
pub fn build_counts(ens: &PathEnsemble) -> Result<CountTable> {
    CountTable::build(ens, CountOptions::default())
}

impl CountTable {
    pub fn build(ens: &PathEnsemble, opts: CountOptions) -> Result<Self> {
        let (m, n) = (ens.m(), ens.n());
        let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
        let mut allowed = vec![false; m * n];
        for i in 1..=m {
            for j in 1..=n {
                allowed[idx(i, j)] = ens.allows(i, j);
            }
        }

        let mut forward_log = vec![f64::NEG_INFINITY; m * n];
        for i in 1..=m {
            for j in 1..=n {
                let k = idx(i, j);
                if !allowed[k] {
                    continue;
                }
                forward_log[k] = if i == 1 && j == 1 {
                    0.0
                } else {
                    let left = if i > 1 { forward_log[idx(i - 1, j)] } else { f64::NEG_INFINITY };
                    let below = if j > 1 { forward_log[idx(i, j - 1)] } else { f64::NEG_INFINITY };
                    log_add_exp(left, below)
                };
            }
        }
        let mut backward_log = vec![f64::NEG_INFINITY; m * n];
        for i in (1..=m).rev() {
            for j in (1..=n).rev() {
                let k = idx(i, j);
                if !allowed[k] {
                    continue;
                }
                backward_log[k] = if i == m && j == n {
                    0.0
                } else {
                    let right = if i < m { backward_log[idx(i + 1, j)] } else { f64::NEG_INFINITY };
                    let above = if j < n { backward_log[idx(i, j + 1)] } else { f64::NEG_INFINITY };
                    log_add_exp(right, above)
                };
            }
        }
        if forward_log[idx(m, n)] == f64::NEG_INFINITY {
            return Err(Error::Infeasible(format!(
                "no admissible path in {} ({m}x{n})",
                ens.label()
            )));
        }

        let exact = if log2_binomial(m + n - 2, m - 1) <= opts.exact_bits_limit as f64 {
            Some(exact_counts(m, n, &allowed))
        } else {
            None
        };

        let mut table = CountTable {
            ensemble: ens.clone(),
            m,
            n,
            forward_log,
            backward_log,
            exact,
            right_threshold: Vec::new(),
        };
        table.right_threshold = table.thresholds();
        Ok(table)
    }

    fn thresholds(&self) -> Vec<u64> {
        let (m, n) = (self.m, self.n);
        let mut out = vec![0u64; m * n];
        for i in 1..=m {
            for j in 1..=n {
                let here = self.idx(i, j);
                if self.backward_log[here] == f64::NEG_INFINITY || (i == m && j == n) {
                    continue;
                }
                let r = if i < m { Some(self.idx(i + 1, j)) } else { None };
                let u = if j < n { Some(self.idx(i, j + 1)) } else { None };
                let lr = r.map_or(f64::NEG_INFINITY, |k| self.backward_log[k]);
                let lu = u.map_or(f64::NEG_INFINITY, |k| self.backward_log[k]);
                out[here] = if lr == f64::NEG_INFINITY {
                    0
                } else if lu == f64::NEG_INFINITY {
                    u64::MAX
                } else if let Some(ex) = &self.exact {
                    exact_threshold(&ex.backward[r.unwrap()], &ex.backward[u.unwrap()])
                } else {
                    // P(right) = B_r / (B_r + B_u) = 1 / (1 + e^{lu - lr})
                    let p = 1.0 / (1.0 + math::exp(lu - lr));
                    ((p * 18_446_744_073_709_551_616.0) as u64).clamp(1, u64::MAX - 1)
                };
            }
        }
        out
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n + (j - 1)
    }

    fn in_rect(&self, c: Cell) -> bool {
        c.i >= 1 && c.j >= 1 && c.i <= self.m && c.j <= self.n
    }

    pub fn ensemble(&self) -> &PathEnsemble {
        &self.ensemble
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Exact number of admissible paths, when exact tables were built.
    pub fn z(&self) -> Option<&BigUint> {
        self.exact.as_ref().map(|e| &e.forward[self.idx(self.m, self.n)])
    }

    /// `ln Z`.
    pub fn z_log(&self) -> f64 {
        self.forward_log[self.idx(self.m, self.n)]
    }

    pub fn forward(&self, c: Cell) -> Option<&BigUint> {
        let k = self.idx(c.i, c.j);
        self.exact.as_ref().map(|e| &e.forward[k])
    }

    pub fn backward(&self, c: Cell) -> Option<&BigUint> {
        let k = self.idx(c.i, c.j);
        self.exact.as_ref().map(|e| &e.backward[k])
    }

    /// `ln F(i, j)`, `-inf` when no admissible path reaches the cell.
    pub fn forward_log(&self, c: Cell) -> f64 {
        self.forward_log[self.idx(c.i, c.j)]
    }

    pub fn backward_log(&self, c: Cell) -> f64 {
        self.backward_log[self.idx(c.i, c.j)]
    }

    /// `P(cell in path)` under the uniform law on admissible paths.
    ///
    /// Exact `F * B / Z` rounded once to a double while `Z < 2^996`, else
    /// `exp(ln F + ln B - ln Z)`. Cells outside the rectangle and forbidden
    /// cells have probability zero.
    pub fn inclusion_probability(&self, c: Cell) -> f64 {
        if !self.in_rect(c) {
            return 0.0;
        }
        let k = self.idx(c.i, c.j);
        if let Some(ex) = &self.exact {
            let z = &ex.forward[self.idx(self.m, self.n)];
            if z.bits() <= EXACT_RATIO_BITS {
                return ratio_to_f64(&(&ex.forward[k] * &ex.backward[k]), z);
            }
        }
        let l = self.forward_log[k] + self.backward_log[k];
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            math::exp(l - self.z_log()).min(1.0)
        }
    }

    /// Exact inclusion probability as a reduced fraction.
    pub fn inclusion_probability_exact(&self, c: Cell) -> Option<BigRational> {
        let ex = self.exact.as_ref()?;
        if !self.in_rect(c) {
            return Some(BigRational::zero());
        }
        let k = self.idx(c.i, c.j);
        let z = &ex.forward[self.idx(self.m, self.n)];
        Some(BigRational::new(
            BigInt::from(&ex.forward[k] * &ex.backward[k]),
            BigInt::from(z.clone()),
        ))
    }

    /// Exact `L^2 = sum_a P(a in path)^2`.
    pub fn l_squared_exact(&self) -> Option<BigRational> {
        let ex = self.exact.as_ref()?;
        let z = &ex.forward[self.idx(self.m, self.n)];
        let mut num = BigUint::zero();
        for (f, b) in ex.forward.iter().zip(&ex.backward) {
            let fb = f * b;
            num += &fb * &fb;
        }
        Some(BigRational::new(BigInt::from(num), BigInt::from(z * z)))
    }

    /// Inclusion probabilities of the cells on anti-diagonal `k = i + j`,
    /// ordered by increasing `i`, paired with their cell.
    pub fn diagonal(&self, k: usize) -> impl Iterator<Item = (Cell, f64)> + '_ {
        let lo = if k > self.n { k - self.n } else { 1 };
        let hi = self.m.min(k.saturating_sub(1));
        (lo..=hi).map(move |i| {
            let c = Cell::new(i, k - i);
            (c, self.inclusion_probability(c))
        })
    }

    /// Sum of squared inclusion probabilities, compensated.
    pub fn l_squared(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for i in 1..=self.m {
            for j in 1..=self.n {
                let p = self.inclusion_probability(Cell::new(i, j));
                acc.add(p * p);
            }
        }
        acc.total()
    }

    #[inline]
    pub(crate) fn right_threshold(&self, i: usize, j: usize) -> u64 {
        self.right_threshold[self.idx(i, j)]
    }

    /// Whether a path can continue from `c` to `(M, N)`.
    pub(crate) fn reaches_end(&self, c: Cell) -> bool {
        self.in_rect(c) && self.backward_log[self.idx(c.i, c.j)] > f64::NEG_INFINITY
    }

    pub(crate) fn z_description(&self) -> alloc::string::String {
        match self.z() {
            Some(z) => format!("{z}"),
            None => format!("~e^{:.3}", self.z_log()),
        }
    }
}

fn exact_counts(m: usize, n: usize, allowed: &[bool]) -> ExactCounts {
    let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
    let mut forward = vec![BigUint::zero(); m * n];
    for i in 1..=m {
        for j in 1..=n {
            let k = idx(i, j);
            if !allowed[k] {
                continue;
            }
            if i == 1 && j == 1 {
                forward[k] = BigUint::from(1u32);
                continue;
            }
            let mut acc = BigUint::zero();
            if i > 1 {
                acc += &forward[idx(i - 1, j)];
            }
            if j > 1 {
                acc += &forward[idx(i, j - 1)];
            }
            forward[k] = acc;
        }
    }
    let mut backward = vec![BigUint::zero(); m * n];
    for i in (1..=m).rev() {
        for j in (1..=n).rev() {
            let k = idx(i, j);
            if !allowed[k] {
                continue;
            }
            if i == m && j == n {
                backward[k] = BigUint::from(1u32);
                continue;
            }
            let mut acc = BigUint::zero();
            if i < m {
                acc += &backward[idx(i + 1, j)];
            }
            if j < n {
                acc += &backward[idx(i, j + 1)];
            }
            backward[k] = acc;
        }
    }
    ExactCounts { forward, backward }
}

/// `ceil(r * 2^64 / (r + u))` clamped to `[1, 2^64 - 2]`, so that a uniform
/// 64-bit `k` satisfies `k < t` exactly when `k / 2^64 < r / (r + u)`.
fn exact_threshold(r: &BigUint, u: &BigUint) -> u64 {
    let total = r + u;
    let scaled: BigUint = r << 64u32;
    let (q, rem) = num_integer::Integer::div_rem(&scaled, &total);
    let t = if rem.is_zero() { q } else { q + 1u32 };
    let t: u64 = t.try_into().unwrap_or(u64::MAX);
    t.clamp(1, u64::MAX - 1)
}

fn log2_binomial(n: usize, k: usize) -> f64 {
    let ln_c = libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0);
    ln_c / math::LN_2
}
