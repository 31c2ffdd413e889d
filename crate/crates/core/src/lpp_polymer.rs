//! Last-passage percolation and directed-polymer comparators.
//!
//! These work with raw, nonnegative weight laws (geometric or mean-one
//! exponential), in contrast with the centred, normalized environments
//! used elsewhere.

use alloc::vec;
use alloc::vec::Vec;

use crate::environment::{sample_environment, Environment, Family, RawSampler, WeightDistribution};
use crate::error::{Error, Result};
use crate::lattice_paths::{
    enumerate_paths, path_energy, CountOptions, CountTable, PathEnsemble, PathSampler, Step,
    UpRightPath,
};
use crate::math::{log_add_exp, sqrt, NeumaierSum};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct LppResult {
    /// Maximal path energy `G`.
    pub g: f64,
    pub argmax_path: UpRightPath,
    /// `G / N`.
    pub per_n_ratio: f64,
}

/// `G(i,j) = w_ij + max(G(i-1,j), G(i,j-1))` over the whole rectangle.
///
/// The maximizing path is recovered by backtracking from `(M, N)`; ties go
/// to the horizontal predecessor `(i-1, j)`.
pub fn last_passage(env: &Environment) -> LppResult {
    let (m, n) = env.dims();
    let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
    let mut g = vec![0.0f64; m * n];
    for i in 1..=m {
        for j in 1..=n {
            let prev = match (i > 1, j > 1) {
                (false, false) => 0.0,
                (true, false) => g[idx(i - 1, j)],
                (false, true) => g[idx(i, j - 1)],
                (true, true) => g[idx(i - 1, j)].max(g[idx(i, j - 1)]),
            };
            g[idx(i, j)] = env.weight(i, j) + prev;
        }
    }
    let mut steps = Vec::with_capacity(m + n - 2);
    let (mut i, mut j) = (m, n);
    while (i, j) != (1, 1) {
        let horizontal = j == 1 || (i > 1 && g[idx(i - 1, j)] >= g[idx(i, j - 1)]);
        if horizontal {
            steps.push(Step::Right);
            i -= 1;
        } else {
            steps.push(Step::Up);
            j -= 1;
        }
    }
    steps.reverse();
    let total = g[idx(m, n)];
    LppResult {
        g: total,
        argmax_path: UpRightPath::from_steps(m, n, steps).expect("backtracked path is valid"),
        per_n_ratio: total / n as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolymerResult {
    /// Inverse temperature.
    pub beta: f64,
    pub log_z: f64,
    /// `(path, Q)` with `Q = exp(beta <Y, w>) / Z`, when enumerated.
    pub weights: Option<Vec<(UpRightPath, f64)>>,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::param("beta", "must be positive and finite"))
    }
}

/// `ln Z` with `Z = sum over all paths of exp(beta <Y, w>)`, by the
/// log-sum-exp recursion `ln Z(i,j) = beta w_ij + lse(ln Z(i-1,j), ln Z(i,j-1))`.
pub fn log_partition(env: &Environment, beta: f64) -> Result<PolymerResult> {
    check_beta(beta)?;
    let (m, n) = env.dims();
    let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
    let mut lz = vec![f64::NEG_INFINITY; m * n];
    for i in 1..=m {
        for j in 1..=n {
            let prev = if i == 1 && j == 1 {
                0.0
            } else {
                let left = if i > 1 { lz[idx(i - 1, j)] } else { f64::NEG_INFINITY };
                let below = if j > 1 { lz[idx(i, j - 1)] } else { f64::NEG_INFINITY };
                log_add_exp(left, below)
            };
            lz[idx(i, j)] = beta * env.weight(i, j) + prev;
        }
    }
    let log_z = lz[idx(m, n)];
    if !log_z.is_finite() {
        return Err(Error::Numeric(alloc::format!("log Z = {log_z}")));
    }
    Ok(PolymerResult {
        beta,
        log_z,
        weights: None,
    })
}

/// [`log_partition`] plus the polymer weight of every path, by enumeration.
pub fn polymer_weights(env: &Environment, beta: f64, cap: u64) -> Result<PolymerResult> {
    let mut res = log_partition(env, beta)?;
    let ct = CountTable::build(&PathEnsemble::all(env.m(), env.n())?, CountOptions::default())?;
    let weights = enumerate_paths(&ct, cap)?
        .map(|p| {
            let e = path_energy(&p, env)?;
            Ok((p, crate::math::exp(beta * e - res.log_z).min(1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    res.weights = Some(weights);
    Ok(res)
}

/// Raw weight laws for the last-passage comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LppWeights {
    /// `P(w = k) = (1-q) q^k`, `k >= 0`.
    Geometric { q: f64 },
    /// Exponential with mean 1.
    ExponentialMean1,
}

impl LppWeights {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LppWeights::Geometric { q } if !(q > 0.0 && q < 1.0) => {
                Err(Error::param("q", "must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }

    fn sampler(&self) -> RawSampler {
        match *self {
            LppWeights::Geometric { q } => RawSampler::Geometric { q },
            LppWeights::ExponentialMean1 => RawSampler::Exponential { rate: 1.0 },
        }
    }

    /// Raw (uncentered) distribution with analytic metadata.
    pub fn distribution(&self) -> WeightDistribution {
        let s = self.sampler();
        WeightDistribution::raw(Family::Custom {
            mean: s.mean(),
            variance: s.variance(),
            sampler: s,
        })
    }

    pub fn mean(&self) -> f64 {
        self.sampler().mean()
    }

    /// First-order growth rate of `E G_N / N`: `2 sqrt(q) / (1 - sqrt(q))`
    /// for geometric weights, 4 for exponential ones.
    pub fn predicted_g_rate(&self) -> f64 {
        match *self {
            LppWeights::Geometric { q } => 2.0 * sqrt(q) / (1.0 - sqrt(q)),
            LppWeights::ExponentialMean1 => 4.0,
        }
    }

    /// Growth rate of a typical path energy: `2 E w`, i.e. `2q/(1-q)` or 2.
    pub fn predicted_typical_rate(&self) -> f64 {
        2.0 * self.mean()
    }

    pub fn label(&self) -> alloc::string::String {
        match *self {
            LppWeights::Geometric { q } => alloc::format!("geometric(q={q})"),
            LppWeights::ExponentialMean1 => alloc::string::String::from("exponential(mean=1)"),
        }
    }
}

/// Uniform paths drawn per environment to measure the typical energy.
pub const TYPICAL_PATHS_PER_ENV: u64 = 64;

/// One environment's contribution to [`typical_vs_max`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LppEnvRow {
    pub seed: u64,
    pub g: f64,
    /// Mean energy of [`TYPICAL_PATHS_PER_ENV`] uniform paths.
    pub typical_energy: f64,
}

/// Samples environment number `index` and measures `G` and the typical
/// energy in it. `ct` must be the all-paths table of the `N x N` square.
pub fn lpp_env_row(kind: LppWeights, n: usize, seed: u64, index: u64, ct: &CountTable) -> Result<LppEnvRow> {
    kind.validate()?;
    let env_seed = derive_seed(seed, index);
    let env = sample_environment(kind.distribution(), n, n, env_seed)?;
    let lpp = last_passage(&env);
    let sampler = PathSampler::new(ct, env_seed);
    let typical = (0..TYPICAL_PATHS_PER_ENV)
        .map(|k| sampler.energy(k, &env))
        .collect::<NeumaierSum>()
        .total()
        / TYPICAL_PATHS_PER_ENV as f64;
    Ok(LppEnvRow {
        seed: env_seed,
        g: lpp.g,
        typical_energy: typical,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalVsMax {
    pub kind: LppWeights,
    pub n: usize,
    pub rows: Vec<LppEnvRow>,
    /// Average of `G / N`.
    pub mean_g_over_n: f64,
    /// Standard error of `mean_g_over_n` across environments.
    pub g_over_n_stderr: f64,
    /// `(2N - 1) E w / N`.
    pub typical_over_n: f64,
    /// Measured mean energy of uniform paths divided by `N`.
    pub measured_typical_over_n: f64,
    pub predicted_g: f64,
    pub predicted_typical: f64,
}

impl TypicalVsMax {
    pub fn from_rows(kind: LppWeights, n: usize, rows: Vec<LppEnvRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("n_env", "must be positive"));
        }
        let nf = n as f64;
        let k = rows.len() as f64;
        let ratios: Vec<f64> = rows.iter().map(|r| r.g / nf).collect();
        let mean = ratios.iter().sum::<f64>() / k;
        let var = if rows.len() > 1 {
            ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Ok(TypicalVsMax {
            kind,
            n,
            mean_g_over_n: mean,
            g_over_n_stderr: sqrt(var / k),
            typical_over_n: (2.0 * nf - 1.0) * kind.mean() / nf,
            measured_typical_over_n: rows.iter().map(|r| r.typical_energy).sum::<f64>() / (k * nf),
            predicted_g: kind.predicted_g_rate(),
            predicted_typical: kind.predicted_typical_rate(),
            rows,
        })
    }
}

/// Compares the last-passage time with typical path energies over `n_env`
/// independent `N x N` environments of raw weights.
pub fn typical_vs_max(kind: LppWeights, n: usize, n_env: usize, seed: u64) -> Result<TypicalVsMax> {
    kind.validate()?;
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    let ct = CountTable::build(&PathEnsemble::all(n, n)?, CountOptions::log_only())?;
    let rows = (0..n_env as u64)
        .map(|e| lpp_env_row(kind, n, seed, e, &ct))
        .collect::<Result<Vec<_>>>()?;
    TypicalVsMax::from_rows(kind, n, rows)
}
