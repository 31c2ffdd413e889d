//! Quantities that control quenched Gaussian behaviour: the `L` statistic,
//! anti-diagonal maxima, hypergeometric modes, power-law fits of `L(N)`,
//! the concentration bound, and the moment admissibility calculator.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice_paths::{CountOptions, CountTable, EnsembleFamily};
use crate::math::{self, binomial, least_squares, ln, sqrt};

/// `L = ||E Y||_2 = sqrt(sum_a P(a in path)^2)`.
pub fn compute_l(ct: &CountTable) -> f64 {
    sqrt(ct.l_squared())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMaxima {
    /// `maxima[k - 2]` is the largest inclusion probability on `i + j = k`.
    pub maxima: Vec<f64>,
    pub sum: f64,
    pub l_squared: f64,
}

impl DiagonalMaxima {
    /// `L^2 <= sum_k M_k`, with `1e-12` slack for rounding.
    pub fn bound_holds(&self) -> bool {
        self.l_squared <= self.sum + 1e-12
    }

    /// `M_k` for `k = i + j`.
    pub fn get(&self, k: usize) -> f64 {
        self.maxima[k - 2]
    }
}

/// Full scan of every anti-diagonal.
pub fn diagonal_maxima(ct: &CountTable) -> DiagonalMaxima {
    let mut maxima = Vec::with_capacity(ct.m() + ct.n() - 1);
    let mut sum = math::NeumaierSum::default();
    let mut l2 = math::NeumaierSum::default();
    for k in 2..=ct.m() + ct.n() {
        let mut best = 0.0f64;
        for (_, p) in ct.diagonal(k) {
            best = best.max(p);
            l2.add(p * p);
        }
        maxima.push(best);
        sum.add(best);
    }
    DiagonalMaxima {
        maxima,
        sum: sum.total(),
        l_squared: l2.total(),
    }
}

/// `P(i on diagonal k)` for all paths in the `M x N` rectangle, straight
/// from the hypergeometric closed form
/// `C(k-2, i-1) C(M+N-k, M-i) / C(M+N-2, M-1)`.
pub fn rectangle_inclusion_exact(i: usize, k: usize, m: usize, n: usize) -> BigRational {
    let (i, k, m, n) = (i as i64, k as i64, m as i64, n as i64);
    let num = binomial(k - 2, i - 1) * binomial(m + n - k, m - i);
    let den = binomial(m + n - 2, m - 1);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypergeometricMode {
    /// The real mode `(k-1) M / (M+N)`.
    pub mode: f64,
    /// The admissible index maximizing the inclusion probability.
    pub argmax: usize,
}

/// Mode of the hypergeometric inclusion law on anti-diagonal `k`.
///
/// The argmax is the better of `floor(m)` and `ceil(m)` after clamping to
/// the admissible range `[max(1, k-N), min(M, k-1)]`, ties going to the
/// smaller index. Candidates are compared through the exact ratio
/// `p_{i+1} / p_i = (k-1-i)(M-i) / (i (N-k+i+1))`.
pub fn hypergeometric_mode(k: usize, m: usize, n: usize) -> Result<HypergeometricMode> {
    if m == 0 || n == 0 {
        return Err(Error::param("M, N", "must be positive"));
    }
    if k < 2 || k > m + n {
        return Err(Error::param("k", format!("must lie in [2, {}]", m + n)));
    }
    let mode = (k - 1) as f64 * m as f64 / (m + n) as f64;
    let lo = if k > n { k - n } else { 1 };
    let hi = m.min(k - 1);
    // floor/ceil of (k-1)M/(M+N) in integer arithmetic
    let num = (k - 1) as u128 * m as u128;
    let den = (m + n) as u128;
    let fl = (num / den) as usize;
    let ce = if num % den == 0 { fl } else { fl + 1 };
    let a = fl.clamp(lo, hi);
    let b = ce.clamp(lo, hi);
    let argmax = if a == b {
        a
    } else {
        // b == a + 1; p_b > p_a iff (k-1-a)(M-a) > a (N-k+a+1)
        let (kk, mm, nn, aa) = (k as i128, m as i128, n as i128, a as i128);
        if (kk - 1 - aa) * (mm - aa) > aa * (nn - kk + aa + 1) {
            b
        } else {
            a
        }
    };
    Ok(HypergeometricMode { mode, argmax })
}

/// `L(N)`, `sum_k M_k` and `|Sigma|` for one member of a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    pub l: f64,
    pub mk_sum: f64,
    pub cell_count: usize,
}

pub fn scaling_point(family: &EnsembleFamily, n: usize, opts: CountOptions) -> Result<ScalingPoint> {
    let ens = family.instantiate(n)?;
    let ct = CountTable::build(&ens, opts)?;
    let dm = diagonal_maxima(&ct);
    Ok(ScalingPoint {
        n,
        l: sqrt(dm.l_squared),
        mk_sum: dm.sum,
        cell_count: ens.cell_count(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub n_values: Vec<usize>,
    pub l_values: Vec<f64>,
    pub mk_sums: Vec<f64>,
    pub cell_counts: Vec<usize>,
    /// Least-squares slope of `ln L` against `ln N`.
    pub lambda_hat: f64,
    /// Least-squares slope of `ln |Sigma|` against `ln N`.
    pub eta: f64,
    /// `r^2` of the `ln L` regression.
    pub regression_r2: f64,
}

impl ScalingReport {
    pub fn from_points(points: &[ScalingPoint]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("N_grid", "need at least two grid points"));
        }
        let xs: Vec<f64> = points.iter().map(|p| ln(p.n as f64)).collect();
        let ly: Vec<f64> = points.iter().map(|p| ln(p.l)).collect();
        let ny: Vec<f64> = points.iter().map(|p| ln(p.cell_count as f64)).collect();
        let (lambda_hat, _, regression_r2) = least_squares(&xs, &ly);
        let (eta, _, _) = least_squares(&xs, &ny);
        Ok(ScalingReport {
            n_values: points.iter().map(|p| p.n).collect(),
            l_values: points.iter().map(|p| p.l).collect(),
            mk_sums: points.iter().map(|p| p.mk_sum).collect(),
            cell_counts: points.iter().map(|p| p.cell_count).collect(),
            lambda_hat,
            eta,
            regression_r2,
        })
    }

    /// `sum_k M_k / sqrt(N)` per grid point.
    pub fn mk_ratios(&self) -> Vec<f64> {
        self.n_values
            .iter()
            .zip(&self.mk_sums)
            .map(|(&n, &s)| s / sqrt(n as f64))
            .collect()
    }
}

pub fn validate_grid(grid: &[usize]) -> Result<()> {
    if grid.len() < 4 {
        return Err(Error::param("N_grid", "need at least 4 grid points"));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("N_grid", "must be positive and strictly increasing"));
    }
    Ok(())
}

/// Computes `L(N)` on each grid point and fits the growth exponent.
pub fn fit_lambda(family: &EnsembleFamily, grid: &[usize], opts: CountOptions) -> Result<ScalingReport> {
    validate_grid(grid)?;
    let points = grid
        .iter()
        .map(|&n| scaling_point(family, n, opts))
        .collect::<Result<Vec<_>>>()?;
    ScalingReport::from_points(&points)
}

/// Inputs of the concentration bound. `kappa`, `big_c` and `small_c` are
/// unspecified constants; [`ConcentrationParams::illustrative`] sets all
/// three to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationParams {
    /// Number of sites `n = |Sigma|`.
    pub n: f64,
    /// Path size `m`.
    pub m: f64,
    pub l: f64,
    /// Moment bound `E|w|^p <= K`.
    pub k: f64,
    pub p: f64,
    pub kappa: f64,
    pub big_c: f64,
    pub small_c: f64,
    /// Truncation level.
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

impl ConcentrationParams {
    #[allow(clippy::too_many_arguments)]
    pub fn illustrative(n: f64, m: f64, l: f64, k: f64, p: f64, r: f64, s: f64, t: f64) -> Self {
        ConcentrationParams {
            n,
            m,
            l,
            k,
            p,
            kappa: 1.0,
            big_c: 1.0,
            small_c: 1.0,
            r,
            s,
            t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("n", self.n),
            ("m", self.m),
            ("L", self.l),
            ("K", self.k),
            ("kappa", self.kappa),
            ("C", self.big_c),
            ("c", self.small_c),
            ("R", self.r),
            ("s", self.s),
            ("t", self.t),
        ];
        for (name, v) in named {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::param(name, "must be strictly positive"));
            }
        }
        if !(self.p > 2.0) {
            return Err(Error::param("p", "must exceed 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationBound {
    /// Deviation level `kappa/sqrt(m) + sqrt(K n L^2 / (m R^(p-2))) + s + t`.
    pub epsilon: f64,
    /// `prob_bound_raw` clamped to `[0, 1]`.
    pub prob_bound: f64,
    /// `K n L^2 / (m R^(p-2) s^2) + C exp(-c m t^2 / (L^2 R^2))`.
    pub prob_bound_raw: f64,
}

pub fn concentration_bound(params: &ConcentrationParams) -> Result<ConcentrationBound> {
    params.validate()?;
    let ConcentrationParams {
        n,
        m,
        l,
        k,
        p,
        kappa,
        big_c,
        small_c,
        r,
        s,
        t,
    } = *params;
    let truncation_term = k * n * l * l / (m * math::powf(r, p - 2.0));
    let epsilon = kappa / sqrt(m) + sqrt(truncation_term) + s + t;
    let raw = truncation_term / (s * s) + big_c * math::exp(-small_c * m * t * t / (l * l * r * r));
    if !epsilon.is_finite() || raw.is_nan() {
        return Err(Error::Numeric(format!("bound evaluated to {epsilon}, {raw}")));
    }
    Ok(ConcentrationBound {
        epsilon,
        prob_bound: raw.clamp(0.0, 1.0),
        prob_bound_raw: raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Open interval of truncation exponents `rho` with `R(N) ~ N^rho`
    /// satisfying both power-counting inequalities; `None` when empty.
    pub rho_range: Option<(f64, f64)>,
    /// The moment threshold `(2 + 2 eta) / (1 - 2 lambda)`.
    pub p_threshold: f64,
}

/// Whether moments of order `p` suffice for the quenched CLT when
/// `|Sigma| = O(N^eta)` and `L(N) = O(N^lambda)`.
pub fn qclt_admissibility(eta: f64, lambda: f64, p: f64) -> Result<Admissibility> {
    if !(eta > 0.0 && eta <= 2.0) {
        return Err(Error::param("eta", "must lie in (0, 2]"));
    }
    if !(lambda > 0.0 && lambda <= eta / 2.0) {
        return Err(Error::param("lambda", "must lie in (0, eta/2]"));
    }
    if p.is_nan() {
        return Err(Error::param("p", "must be a number"));
    }
    let p_threshold = (2.0 + 2.0 * eta) / (1.0 - 2.0 * lambda);
    let admissible = lambda < 0.5 && p > p_threshold;
    let rho_range = if admissible {
        // eta + 2 lambda - 1 - rho (p - 2) < -1  and  1 - 2 lambda - 2 rho > 0
        let lo = (eta + 2.0 * lambda) / (p - 2.0);
        let hi = (1.0 - 2.0 * lambda) / 2.0;
        if lo < hi {
            Some((lo, hi))
        } else {
            None
        }
    } else {
        None
    };
    Ok(Admissibility {
        admissible: admissible && rho_range.is_some(),
        rho_range,
        p_threshold,
    })
}

/// Default truncation exponent `rho = 1/2 - lambda - 0.05`.
pub fn default_rho(lambda: f64) -> f64 {
    0.5 - lambda - 0.05
}

/// Symmetry-reduced closed form for the hole ensemble,
/// `(1/Z_N) sum_{y=1}^{A} C(k-2, i-1) C(N+1-k, y-i) C(N-1, y-1)` with
/// `Z_N = 2 sum_{y=1}^{A} C(N-1, y-1)^2` and `k = i + j`, as an exact fraction.
pub fn hole_inclusion_formula_exact(i: usize, j: usize, n: usize, a: usize) -> Result<BigRational> {
    if i == 0 || j < i || i + j > n + 1 {
        return Err(Error::param(
            "(i, j)",
            format!("({i}, {j}) is outside the sector j >= i >= 1, i + j <= N + 1 (N = {n})"),
        ));
    }
    if a == 0 {
        return Err(Error::param("A", "must be at least 1"));
    }
    let (ii, kk, nn) = (i as i64, (i + j) as i64, n as i64);
    let mut num = BigUint::zero();
    let mut z = BigUint::zero();
    let lead = binomial(kk - 2, ii - 1);
    for y in 1..=a as i64 {
        let tail = binomial(nn - 1, y - 1);
        // C(N+1-k, y-i) vanishes for y < i.
        num += &lead * binomial(nn + 1 - kk, y - ii) * &tail;
        z += &tail * &tail;
    }
    z *= 2u32;
    Ok(BigRational::new(BigInt::from(num), BigInt::from(z)))
}

pub fn hole_inclusion_formula(i: usize, j: usize, n: usize, a: usize) -> Result<f64> {
    hole_inclusion_formula_exact(i, j, n, a)?
        .to_f64()
        .ok_or_else(|| Error::Numeric(format!("formula at ({i}, {j}) not representable")))
}
