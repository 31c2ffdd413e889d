//! Quenched laws of normalized path energies for one fixed environment,
//! and their distance to the standard Gaussian.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::lattice_paths::{
    build_counts, enumerate_paths, path_energy, CountTable, PathEnsemble, PathSampler,
};
use crate::math::{normal_cdf, normal_pdf, normal_quantile, sort_f64, sqrt, NeumaierSum};

/// Centres of the convex 1-Lipschitz witnesses `f_a(x) = |x - a|`.
pub const LIPSCHITZ_CENTRES: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// Normalized energies `<Y, w> / sqrt(M + N - 1)` of random paths in one
/// environment.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedSample {
    /// `family@seed` of the environment.
    pub env_id: String,
    pub env_seed: u64,
    pub ensemble: PathEnsemble,
    /// Seed of the path streams; `None` for an enumerated law.
    pub path_seed: Option<u64>,
    pub normalizer: f64,
    pub values: Vec<f64>,
    /// `(value, probability)` pairs, ascending, when built by enumeration.
    pub exact_atoms: Option<Vec<(f64, f64)>>,
}

impl QuenchedSample {
    /// The law as ascending `(value, probability)` atoms.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.exact_atoms {
            Some(a) => a.clone(),
            None => empirical_atoms(self.values.clone()),
        }
    }

    /// Mean of the law.
    pub fn mean(&self) -> f64 {
        self.atoms()
            .iter()
            .map(|&(x, p)| x * p)
            .collect::<NeumaierSum>()
            .total()
    }
}

fn check_dims(env: &Environment, ct: &CountTable) -> Result<()> {
    if env.dims() != (ct.m(), ct.n()) {
        return Err(Error::DimensionMismatch {
            expected: (ct.m(), ct.n()),
            got: env.dims(),
        });
    }
    Ok(())
}

/// Normalized energies of paths `range` drawn with `path_seed`.
///
/// Path `k` depends only on `(path_seed, k)`, so disjoint ranges can be
/// evaluated independently and concatenated in index order.
pub fn quenched_values(
    env: &Environment,
    ct: &CountTable,
    path_seed: u64,
    range: Range<u64>,
) -> Result<Vec<f64>> {
    check_dims(env, ct)?;
    let norm = sqrt((ct.m() + ct.n() - 1) as f64);
    let sampler = PathSampler::new(ct, path_seed);
    Ok(range.map(|k| sampler.energy(k, env) / norm).collect())
}

/// Quenched sample from an already built count table.
pub fn quenched_sample_with(
    env: &Environment,
    ct: &CountTable,
    n_paths: u64,
    path_seed: u64,
) -> Result<QuenchedSample> {
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be positive"));
    }
    let values = quenched_values(env, ct, path_seed, 0..n_paths)?;
    Ok(QuenchedSample {
        env_id: env.id(),
        env_seed: env.seed,
        ensemble: ct.ensemble().clone(),
        path_seed: Some(path_seed),
        normalizer: sqrt((ct.m() + ct.n() - 1) as f64),
        values,
        exact_atoms: None,
    })
}

/// Draws `n_paths` uniform paths of `ens` and records their normalized
/// energies in the fixed environment `env`.
pub fn quenched_sample(
    env: &Environment,
    ens: &PathEnsemble,
    n_paths: u64,
    path_seed: u64,
) -> Result<QuenchedSample> {
    if env.dims() != (ens.m(), ens.n()) {
        return Err(Error::DimensionMismatch {
            expected: (ens.m(), ens.n()),
            got: env.dims(),
        });
    }
    let ct = build_counts(ens)?;
    quenched_sample_with(env, &ct, n_paths, path_seed)
}

/// The exact quenched law by enumeration: every admissible path with mass
/// `1/Z`, equal values merged.
pub fn exact_quenched_law(env: &Environment, ens: &PathEnsemble, cap: u64) -> Result<QuenchedSample> {
    if env.dims() != (ens.m(), ens.n()) {
        return Err(Error::DimensionMismatch {
            expected: (ens.m(), ens.n()),
            got: env.dims(),
        });
    }
    let ct = build_counts(ens)?;
    let norm = sqrt((ens.m() + ens.n() - 1) as f64);
    let values = enumerate_paths(&ct, cap)?
        .map(|p| path_energy(&p, env).map(|e| e / norm))
        .collect::<Result<Vec<_>>>()?;
    let atoms = empirical_atoms(values.clone());
    Ok(QuenchedSample {
        env_id: env.id(),
        env_seed: env.seed,
        ensemble: ens.clone(),
        path_seed: None,
        normalizer: norm,
        values,
        exact_atoms: Some(atoms),
    })
}

/// Sorts and merges equal values, each carrying mass `1/len`.
fn empirical_atoms(mut values: Vec<f64>) -> Vec<(f64, f64)> {
    sort_f64(&mut values);
    let total = values.len() as f64;
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut t = 0;
    while t < values.len() {
        let x = values[t];
        let mut count = 0usize;
        while t < values.len() && values[t] == x {
            count += 1;
            t += 1;
        }
        atoms.push((x, count as f64 / total));
    }
    atoms
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzGap {
    /// Centre of the test function `|x - a|`.
    pub a: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussDistance {
    /// `sup_x |F(x) - Phi(x)|`.
    pub ks: f64,
    /// `int |F(x) - Phi(x)| dx`.
    pub w1: f64,
    pub lipschitz_gaps: Vec<LipschitzGap>,
}

impl GaussDistance {
    pub fn max_gap(&self) -> f64 {
        self.lipschitz_gaps.iter().map(|g| g.gap).fold(0.0, f64::max)
    }
}

pub fn gauss_distance(qs: &QuenchedSample) -> Result<GaussDistance> {
    if qs.values.is_empty() && qs.exact_atoms.as_ref().is_none_or(|a| a.is_empty()) {
        return Err(Error::param("sample", "is empty"));
    }
    gauss_distance_atoms(&qs.atoms())
}

/// Distances from a discrete law (ascending atoms, positive masses) to the
/// standard normal.
///
/// The Kolmogorov distance is exact: it checks both one-sided limits of the
/// step function at every atom. The Wasserstein-1 distance integrates
/// `|F - Phi|` in closed form piece by piece using the antiderivative
/// `x Phi(x) + phi(x)` of `Phi`, splitting a piece where `Phi` crosses the
/// level of `F`.
pub fn gauss_distance_atoms(atoms: &[(f64, f64)]) -> Result<GaussDistance> {
    if atoms.is_empty() {
        return Err(Error::param("sample", "is empty"));
    }
    if atoms.iter().any(|&(x, p)| !x.is_finite() || !(p > 0.0)) {
        return Err(Error::Numeric(String::from("atoms must be finite with positive mass")));
    }
    if atoms.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::param("atoms", "must be strictly ascending"));
    }

    let mut ks = 0.0f64;
    let mut cum = NeumaierSum::default();
    let mut levels = Vec::with_capacity(atoms.len());
    for &(x, p) in atoms {
        let below = cum.total();
        cum.add(p);
        let above = cum.total().min(1.0);
        let phi = normal_cdf(x);
        ks = ks.max((phi - below).abs()).max((above - phi).abs());
        levels.push(above);
    }

    let g = |x: f64| x * normal_cdf(x) + normal_pdf(x);
    let mut w1 = NeumaierSum::default();
    let (x0, xn) = (atoms[0].0, atoms[atoms.len() - 1].0);
    w1.add(g(x0));
    w1.add(normal_pdf(xn) - xn * normal_cdf(-xn));
    for t in 0..atoms.len() - 1 {
        let (a, b) = (atoms[t].0, atoms[t + 1].0);
        let c = levels[t];
        let (pa, pb) = (normal_cdf(a), normal_cdf(b));
        let piece = if c <= pa {
            g(b) - g(a) - c * (b - a)
        } else if c >= pb {
            c * (b - a) - (g(b) - g(a))
        } else {
            let xs = normal_quantile(c).clamp(a, b);
            (c * (xs - a) - (g(xs) - g(a))) + (g(b) - g(xs) - c * (b - xs))
        };
        w1.add(piece.max(0.0));
    }

    let lipschitz_gaps = LIPSCHITZ_CENTRES
        .iter()
        .map(|&a| {
            let emp = atoms
                .iter()
                .map(|&(x, p)| p * (x - a).abs())
                .collect::<NeumaierSum>()
                .total();
            let gauss = 2.0 * normal_pdf(a) + a * (2.0 * normal_cdf(a) - 1.0);
            LipschitzGap {
                a,
                gap: (emp - gauss).abs(),
            }
        })
        .collect();

    let w1 = w1.total();
    if !w1.is_finite() {
        return Err(Error::Numeric(format!("W1 evaluated to {w1}")));
    }
    Ok(GaussDistance {
        ks: ks.min(1.0),
        w1,
        lipschitz_gaps,
    })
}
