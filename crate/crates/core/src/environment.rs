//! Random environments: grids of independent real weights.
//!
//! Built-in families are centered; with `normalized = true` they are also
//! rescaled analytically to unit variance, so the mean-zero / unit-variance
//! moment assumptions hold exactly rather than empirically.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{powf, sqrt, NeumaierSum};
use crate::rng::{self, Domain};

/// A raw (uncentered) sampler used by [`Family::Custom`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawSampler {
    /// Exponential with the given rate (mean `1/rate`).
    Exponential { rate: f64 },
    /// Geometric on `{0, 1, 2, ...}` with `P(k) = (1-q) q^k`.
    Geometric { q: f64 },
    /// Uniform on `[low, high)`.
    Uniform { low: f64, high: f64 },
}

impl RawSampler {
    pub fn mean(&self) -> f64 {
        match *self {
            RawSampler::Exponential { rate } => 1.0 / rate,
            RawSampler::Geometric { q } => q / (1.0 - q),
            RawSampler::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            RawSampler::Exponential { rate } => 1.0 / (rate * rate),
            RawSampler::Geometric { q } => q / ((1.0 - q) * (1.0 - q)),
            RawSampler::Uniform { low, high } => (high - low) * (high - low) / 12.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RawSampler::Exponential { rate } => check_rate(rate),
            RawSampler::Geometric { q } => check_q(q),
            RawSampler::Uniform { low, high } => {
                if low.is_finite() && high.is_finite() && low < high {
                    Ok(())
                } else {
                    Err(Error::param("uniform", "need finite low < high"))
                }
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            RawSampler::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            RawSampler::Geometric { q } => {
                Geometric::new(1.0 - q).expect("validated q").sample(rng) as f64
            }
            RawSampler::Uniform { low, high } => rng.random_range(low..high),
        }
    }
}

/// Weight families. Built-ins are centered; [`Family::Custom`] carries its
/// declared mean and variance alongside a raw sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Uniform on `{-1, +1}`.
    Rademacher,
    StandardNormal,
    /// `Exp(rate) - 1/rate`.
    CenteredExponential { rate: f64 },
    /// `Geom(q) - q/(1-q)` with `P(Geom = k) = (1-q) q^k`.
    CenteredGeometric { q: f64 },
    /// Uniform on `[-1, 1]`.
    CenteredUniform,
    Custom {
        mean: f64,
        variance: f64,
        sampler: RawSampler,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Rademacher => "rademacher",
            Family::StandardNormal => "normal",
            Family::CenteredExponential { .. } => "exponential",
            Family::CenteredGeometric { .. } => "geometric",
            Family::CenteredUniform => "uniform",
            Family::Custom { .. } => "custom",
        }
    }

    /// Mean of a raw draw.
    pub fn raw_mean(&self) -> f64 {
        match *self {
            Family::Custom { mean, .. } => mean,
            _ => 0.0,
        }
    }

    /// Variance of a raw draw.
    pub fn raw_variance(&self) -> f64 {
        match *self {
            Family::Rademacher | Family::StandardNormal => 1.0,
            Family::CenteredExponential { rate } => 1.0 / (rate * rate),
            Family::CenteredGeometric { q } => q / ((1.0 - q) * (1.0 - q)),
            Family::CenteredUniform => 1.0 / 3.0,
            Family::Custom { variance, .. } => variance,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Family::CenteredExponential { rate } => check_rate(rate),
            Family::CenteredGeometric { q } => check_q(q),
            Family::Custom {
                mean,
                variance,
                sampler,
            } => {
                if !mean.is_finite() {
                    return Err(Error::param("mean", "must be finite"));
                }
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(Error::param("variance", "must be positive and finite"));
                }
                sampler.validate()
            }
            _ => Ok(()),
        }
    }

    fn draw_raw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Family::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::StandardNormal => StandardNormal.sample(rng),
            Family::CenteredExponential { rate } => {
                Exp::new(rate).expect("validated rate").sample(rng) - 1.0 / rate
            }
            Family::CenteredGeometric { q } => {
                Geometric::new(1.0 - q).expect("validated q").sample(rng) as f64 - q / (1.0 - q)
            }
            Family::CenteredUniform => rng.random_range(-1.0..1.0),
            Family::Custom { sampler, .. } => sampler.draw(rng),
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::param("rate", "must be positive and finite"))
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::param("q", "must lie in (0, 1)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightDistribution {
    pub family: Family,
    /// Affinely rescale draws to mean 0, variance 1 using the analytic moments.
    pub normalized: bool,
    /// Set once an environment has been passed through [`truncate`].
    pub truncation: Option<f64>,
}

impl WeightDistribution {
    pub fn new(family: Family, normalized: bool) -> Self {
        WeightDistribution {
            family,
            normalized,
            truncation: None,
        }
    }

    /// A normalized (mean 0, variance 1) distribution of the given family.
    pub fn normalized(family: Family) -> Self {
        Self::new(family, true)
    }

    pub fn raw(family: Family) -> Self {
        Self::new(family, false)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if let Some(r) = self.truncation {
            if !(r > 0.0) {
                return Err(Error::param("R", "truncation level must be positive"));
            }
        }
        Ok(())
    }

    /// Analytic mean of a draw, ignoring truncation.
    pub fn mean(&self) -> f64 {
        if self.normalized {
            0.0
        } else {
            self.family.raw_mean()
        }
    }

    /// Analytic variance of a draw, ignoring truncation.
    pub fn variance(&self) -> f64 {
        if self.normalized {
            1.0
        } else {
            self.family.raw_variance()
        }
    }

    /// One draw. Assumes [`validate`](Self::validate) succeeded.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut x = self.family.draw_raw(rng);
        if self.normalized {
            x = (x - self.family.raw_mean()) / sqrt(self.family.raw_variance());
        }
        match self.truncation {
            Some(r) if x.abs() > r => 0.0,
            _ => x,
        }
    }
}

/// An `M x N` grid of weights. Cell `(i, j)` is 1-based with
/// `1 <= i <= M` horizontal and `1 <= j <= N` vertical.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    m: usize,
    n: usize,
    weights: Vec<f64>,
    pub dist: WeightDistribution,
    pub seed: u64,
}

impl Environment {
    /// Wraps an explicit weight array laid out as `weights[(i-1)*N + (j-1)]`.
    pub fn from_weights(
        m: usize,
        n: usize,
        weights: Vec<f64>,
        dist: WeightDistribution,
        seed: u64,
    ) -> Result<Self> {
        check_dims(m, n)?;
        if weights.len() != m * n {
            return Err(Error::param(
                "weights",
                alloc::format!("expected {} entries, got {}", m * n, weights.len()),
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("weights", "all weights must be finite"));
        }
        Ok(Environment {
            m,
            n,
            weights,
            dist,
            seed,
        })
    }

    /// Builds from nested rows `rows[i-1][j-1] = w_ij`, tagged as a custom
    /// deterministic environment with seed 0.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::param("weights", "ragged rows"));
        }
        let weights = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let dist = WeightDistribution::raw(Family::Custom {
            mean: 0.0,
            variance: 1.0,
            sampler: RawSampler::Uniform {
                low: -1.0,
                high: 1.0,
            },
        });
        Self::from_weights(m, n, weights, dist, 0)
    }

    /// A constant environment (handy for tests and examples).
    pub fn constant(m: usize, n: usize, value: f64) -> Result<Self> {
        let dist = WeightDistribution::raw(Family::Custom {
            mean: value,
            variance: 1.0,
            sampler: RawSampler::Uniform {
                low: -1.0,
                high: 1.0,
            },
        });
        Self::from_weights(m, n, alloc::vec![value; m * n], dist, 0)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Weight of cell `(i, j)`, 1-based.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i - 1) * self.n + (j - 1)]
    }

    /// Row-major (`i` outer) view of all weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights of the cells with the given horizontal index `i`.
    pub fn column(&self, i: usize) -> &[f64] {
        &self.weights[(i - 1) * self.n..i * self.n]
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::param("M", "must be at least 1"));
    }
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    Ok(())
}

/// The `N` weights with horizontal index `i`, drawn from their own stream.
///
/// Exposed so that callers can generate an environment in parallel over `i`;
/// concatenating `sample_line(.., i)` for `i = 1..=M` reproduces
/// [`sample_environment`] exactly.
pub fn sample_line(dist: &WeightDistribution, n: usize, seed: u64, i: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, Domain::Environment, i as u64);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

pub fn sample_environment(
    dist: WeightDistribution,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<Environment> {
    check_dims(m, n)?;
    dist.validate()?;
    let mut weights = Vec::with_capacity(m * n);
    for i in 1..=m {
        weights.extend(sample_line(&dist, n, seed, i));
    }
    Ok(Environment {
        m,
        n,
        weights,
        dist,
        seed,
    })
}

/// Zeroes every weight with `|w| > r`.
pub fn truncate(env: &Environment, r: f64) -> Result<Environment> {
    if !(r > 0.0) {
        return Err(Error::param("R", "truncation level must be positive"));
    }
    let weights = env
        .weights
        .iter()
        .map(|&w| if w.abs() <= r { w } else { 0.0 })
        .collect();
    let mut dist = env.dist;
    dist.truncation = Some(match dist.truncation {
        Some(prev) => prev.min(r),
        None => r,
    });
    Ok(Environment {
        m: env.m,
        n: env.n,
        weights,
        dist,
        seed: env.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Sample mean of `|w|^p`.
    pub abs_moment: f64,
}

/// Monte Carlo estimates of the mean, variance and `p`-th absolute moment.
pub fn empirical_moments(
    dist: &WeightDistribution,
    p: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Moments> {
    dist.validate()?;
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::param("p", "must be a finite real >= 2"));
    }
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    let mut rng = rng::stream(seed, Domain::Moments, 0);
    let xs: Vec<f64> = (0..n_samples).map(|_| dist.sample(&mut rng)).collect();
    let n = n_samples as f64;
    let mean = xs.iter().copied().collect::<NeumaierSum>().total() / n;
    let ss = xs
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .collect::<NeumaierSum>()
        .total();
    let abs_moment = xs
        .iter()
        .map(|&x| powf(x.abs(), p))
        .collect::<NeumaierSum>()
        .total()
        / n;
    Ok(Moments {
        mean,
        variance: ss / (n - 1.0),
        abs_moment,
    })
}

impl core::fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.family.name())?;
        match self.family {
            Family::CenteredExponential { rate } => write!(f, "(rate={rate})")?,
            Family::CenteredGeometric { q } => write!(f, "(q={q})")?,
            _ => {}
        }
        if !self.normalized {
            f.write_str("[raw]")?;
        }
        if let Some(r) = self.truncation {
            write!(f, "[R={r}]")?;
        }
        Ok(())
    }
}

impl Environment {
    /// Short identifier `family@seed` used in result rows.
    pub fn id(&self) -> alloc::string::String {
        let mut s = self.dist.to_string();
        s.push('@');
        s.push_str(&self.seed.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtins() -> [Family; 5] {
        [
            Family::Rademacher,
            Family::StandardNormal,
            Family::CenteredExponential { rate: 1.0 },
            Family::CenteredGeometric { q: 0.5 },
            Family::CenteredUniform,
        ]
    }

    #[test]
    fn rademacher_support() {
        let env = sample_environment(WeightDistribution::normalized(Family::Rademacher), 2, 2, 7)
            .unwrap();
        assert_eq!(env.weights().len(), 4);
        assert!(env.weights().iter().all(|&w| w == 1.0 || w == -1.0));
    }

    #[test]
    fn centered_exponential_support() {
        let dist = WeightDistribution::raw(Family::CenteredExponential { rate: 1.0 });
        let env = sample_environment(dist, 40, 30, 3).unwrap();
        assert!(env.weights().iter().all(|&w| w >= -1.0));
    }

    #[test]
    fn normal_sample_mean_small_across_seeds() {
        let dist = WeightDistribution::normalized(Family::StandardNormal);
        for seed in 1..=20 {
            let env = sample_environment(dist, 100, 100, seed).unwrap();
            let mean = env.weights().iter().sum::<f64>() / 10_000.0;
            assert!(mean.abs() < 0.04, "seed {seed}: mean {mean}");
        }
    }

    #[test]
    fn parameter_errors() {
        let bad = [
            Family::CenteredExponential { rate: 0.0 },
            Family::CenteredExponential { rate: -2.0 },
            Family::CenteredGeometric { q: 0.0 },
            Family::CenteredGeometric { q: 1.0 },
        ];
        for f in bad {
            let r = sample_environment(WeightDistribution::normalized(f), 2, 2, 0);
            assert!(matches!(r, Err(Error::Parameter { .. })), "{f:?}");
        }
        let dist = WeightDistribution::normalized(Family::Rademacher);
        assert!(sample_environment(dist, 0, 2, 0).is_err());
        assert!(sample_environment(dist, 2, 0, 0).is_err());
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        for f in builtins() {
            let d = WeightDistribution::normalized(f);
            let a = sample_environment(d, 9, 11, 42).unwrap();
            let b = sample_environment(d, 9, 11, 42).unwrap();
            assert_eq!(a, b);
            let c = sample_environment(d, 9, 11, 43).unwrap();
            assert_ne!(a.weights(), c.weights());
        }
    }

    #[test]
    fn truncate_examples() {
        let env = Environment::from_rows(&[&[2.5], &[-0.3]]).unwrap();
        let t = truncate(&env, 1.0).unwrap();
        assert_eq!(t.weights(), &[0.0, -0.3]);
        assert_eq!(t.dist.truncation, Some(1.0));
        assert_eq!(t.dims(), env.dims());

        let max = env.weights().iter().fold(0.0f64, |a, w| a.max(w.abs()));
        assert_eq!(truncate(&env, max).unwrap().weights(), env.weights());

        let rad = sample_environment(WeightDistribution::normalized(Family::Rademacher), 5, 5, 1)
            .unwrap();
        assert!(truncate(&rad, 0.5).unwrap().weights().iter().all(|&w| w == 0.0));

        assert!(truncate(&env, 0.0).is_err());
        assert!(truncate(&env, -1.0).is_err());
        assert!(truncate(&env, f64::NAN).is_err());
    }

    #[test]
    fn empirical_moment_examples() {
        let rad = WeightDistribution::normalized(Family::Rademacher);
        assert_eq!(empirical_moments(&rad, 12.0, 1000, 5).unwrap().abs_moment, 1.0);

        let normal = WeightDistribution::normalized(Family::StandardNormal);
        let m = empirical_moments(&normal, 4.0, 1_000_000, 5).unwrap();
        assert!((m.abs_moment - 3.0).abs() < 0.05 * 3.0, "{m:?}");

        let geo = WeightDistribution::normalized(Family::CenteredGeometric { q: 0.5 });
        let m = empirical_moments(&geo, 2.0, 1_000_000, 5).unwrap();
        assert!((m.variance - 1.0).abs() < 0.05, "{m:?}");

        assert!(empirical_moments(&rad, 1.5, 10, 0).is_err());
        assert!(empirical_moments(&rad, 3.0, 1, 0).is_err());
    }

    #[test]
    fn normalization_within_four_sigma() {
        // Sample mean has sd 1/sqrt(n); the sample variance has sd
        // sqrt((mu4 - 1)/n). Rademacher has mu4 = 1, so that sd is floored.
        let n = 1_000_000usize;
        for f in builtins() {
            let d = WeightDistribution::normalized(f);
            let m = empirical_moments(&d, 4.0, n, 11).unwrap();
            let sd_mean = 1.0 / sqrt(n as f64);
            let sd_var = sqrt((m.abs_moment - 1.0).max(0.1) / n as f64);
            assert!(m.mean.abs() < 4.0 * sd_mean, "{f:?}: {m:?}");
            assert!((m.variance - 1.0).abs() < 4.0 * sd_var, "{f:?}: {m:?}");
        }
    }

    #[test]
    fn analytic_normalization_is_exact() {
        for f in builtins() {
            let d = WeightDistribution::normalized(f);
            assert_eq!((d.mean(), d.variance()), (0.0, 1.0));
        }
        let raw = WeightDistribution::raw(Family::Custom {
            mean: 1.0,
            variance: 1.0,
            sampler: RawSampler::Exponential { rate: 1.0 },
        });
        assert_eq!(raw.mean(), 1.0);
    }

    #[test]
    fn line_sampling_matches_full_grid() {
        let d = WeightDistribution::normalized(Family::StandardNormal);
        let env = sample_environment(d, 4, 6, 99).unwrap();
        for i in 1..=4 {
            assert_eq!(env.column(i), sample_line(&d, 6, 99, i).as_slice());
        }
    }
}
