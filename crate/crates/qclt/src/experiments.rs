//! Parallel experiment drivers.
//!
//! All parallel work is split into tasks whose random streams are fixed by
//! their index, and results are merged in index order, so every output is
//! independent of the number of worker threads.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use qclt_core::environment::sample_line;
use qclt_core::lattice_paths::{enumerate_paths, CountOptions, CountTable, PathSampler};
use qclt_core::lpp_polymer::{log_partition, lpp_env_row, LppWeights, TypicalVsMax};
use qclt_core::quenched::{gauss_distance, quenched_values, GaussDistance, QuenchedSample};
use qclt_core::rng::derive_seed;
use qclt_core::scaling::{scaling_point, validate_grid, ScalingReport};
use qclt_core::{Cell, EnsembleFamily, Environment, PathEnsemble, WeightDistribution};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{CliError, Result};
use crate::formats::{Table, Value};

/// Paths per parallel task.
pub const PATH_CHUNK: u64 = 4096;

/// [`qclt_core::environment::sample_environment`], generated line by line
/// in parallel; the result is identical.
pub fn par_environment(dist: WeightDistribution, m: usize, n: usize, seed: u64) -> Result<Environment> {
    dist.validate()?;
    let lines: Vec<Vec<f64>> = (1..=m)
        .into_par_iter()
        .map(|i| sample_line(&dist, n, seed, i))
        .collect();
    Ok(Environment::from_weights(m, n, lines.concat(), dist, seed)?)
}

/// [`qclt_core::quenched::quenched_sample_with`], with paths drawn in
/// parallel chunks; the result is identical.
pub fn par_quenched_sample(
    env: &Environment,
    ct: &CountTable,
    n_paths: u64,
    path_seed: u64,
) -> Result<QuenchedSample> {
    if n_paths == 0 {
        return Err(CliError::Config("n_paths must be positive".into()));
    }
    let chunks: Vec<u64> = (0..n_paths.div_ceil(PATH_CHUNK)).collect();
    let parts = chunks
        .par_iter()
        .map(|&c| {
            let lo = c * PATH_CHUNK;
            quenched_values(env, ct, path_seed, lo..(lo + PATH_CHUNK).min(n_paths))
        })
        .collect::<qclt_core::Result<Vec<_>>>()?;
    Ok(QuenchedSample {
        env_id: env.id(),
        env_seed: env.seed,
        ensemble: ct.ensemble().clone(),
        path_seed: Some(path_seed),
        normalizer: ((ct.m() + ct.n() - 1) as f64).sqrt(),
        values: parts.concat(),
        exact_atoms: None,
    })
}

/// Quenched convergence experiment: one environment per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CltConfig {
    pub dist: WeightDistribution,
    pub family: EnsembleFamily,
    pub grid: Vec<usize>,
    pub n_paths: u64,
    pub env_seed: u64,
    pub path_seed: u64,
    /// Reuse `env_seed` at every grid point instead of deriving a fresh
    /// seed per `N`. Environments then agree on their common cells.
    pub common_seed: bool,
}

impl CltConfig {
    pub fn env_seed_for(&self, n: usize) -> u64 {
        if self.common_seed {
            self.env_seed
        } else {
            derive_seed(self.env_seed, n as u64)
        }
    }

    pub fn path_seed_for(&self, n: usize) -> u64 {
        derive_seed(self.path_seed, n as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltRow {
    pub n: usize,
    pub m: usize,
    pub ensemble: String,
    pub env_seed_used: u64,
    pub path_seed_used: u64,
    pub l: f64,
    pub mean: f64,
    pub distance: GaussDistance,
}

pub fn clt_point(cfg: &CltConfig, n: usize) -> Result<CltRow> {
    let ens = cfg.family.instantiate(n)?;
    let ct = CountTable::build(&ens, CountOptions::default())?;
    let env_seed = cfg.env_seed_for(n);
    let path_seed = cfg.path_seed_for(n);
    let env = par_environment(cfg.dist, ens.m(), ens.n(), env_seed)?;
    let qs = par_quenched_sample(&env, &ct, cfg.n_paths, path_seed)?;
    let distance = gauss_distance(&qs)?;
    Ok(CltRow {
        n,
        m: ens.m(),
        ensemble: ens.label(),
        env_seed_used: env_seed,
        path_seed_used: path_seed,
        l: ct.l_squared().sqrt(),
        mean: qs.mean(),
        distance,
    })
}

/// Runs every grid point in order; each point is parallel internally.
pub fn convergence_experiment(cfg: &CltConfig) -> Result<Vec<CltRow>> {
    if cfg.grid.is_empty() || cfg.grid.contains(&0) {
        return Err(CliError::Config("grid must list positive sizes".into()));
    }
    cfg.dist.validate()?;
    cfg.grid.iter().map(|&n| clt_point(cfg, n)).collect()
}

/// KS at the largest `N` is below KS at the smallest.
pub fn ks_decreases(rows: &[CltRow]) -> bool {
    match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() > 1 => b.distance.ks < a.distance.ks,
        _ => false,
    }
}

pub fn clt_table(cfg: &CltConfig, rows: &[CltRow]) -> Table {
    let mut t = Table::new(&[
        "dist",
        "family",
        "ensemble",
        "N",
        "M",
        "env_seed",
        "path_seed",
        "common_seed",
        "env_seed_used",
        "path_seed_used",
        "n_paths",
        "L",
        "mean",
        "ks",
        "w1",
        "max_gap",
        "gap_a-2",
        "gap_a-1",
        "gap_a0",
        "gap_a1",
        "gap_a2",
    ]);
    for r in rows {
        let mut row: Vec<Value> = vec![
            cfg.dist.to_string().into(),
            cfg.family.label().into(),
            r.ensemble.clone().into(),
            r.n.into(),
            r.m.into(),
            cfg.env_seed.into(),
            cfg.path_seed.into(),
            cfg.common_seed.into(),
            r.env_seed_used.into(),
            r.path_seed_used.into(),
            cfg.n_paths.into(),
            r.l.into(),
            r.mean.into(),
            r.distance.ks.into(),
            r.distance.w1.into(),
            r.distance.max_gap().into(),
        ];
        row.extend(r.distance.lipschitz_gaps.iter().map(|g| Value::from(g.gap)));
        t.push(row);
    }
    t
}

/// [`qclt_core::scaling::fit_lambda`] with grid points evaluated in parallel.
pub fn par_fit_lambda(family: &EnsembleFamily, grid: &[usize], opts: CountOptions) -> Result<ScalingReport> {
    validate_grid(grid)?;
    let points = grid
        .par_iter()
        .map(|&n| scaling_point(family, n, opts))
        .collect::<qclt_core::Result<Vec<_>>>()?;
    Ok(ScalingReport::from_points(&points)?)
}

pub fn scaling_table(family: &EnsembleFamily, r: &ScalingReport) -> Table {
    let mut t = Table::new(&[
        "ensemble",
        "N",
        "L",
        "sumMk",
        "sumMk_over_sqrtN",
        "cell_count",
        "lambda_hat",
        "eta",
        "r2",
    ]);
    let ratios = r.mk_ratios();
    for k in 0..r.n_values.len() {
        t.push(vec![
            family.label().into(),
            r.n_values[k].into(),
            r.l_values[k].into(),
            r.mk_sums[k].into(),
            ratios[k].into(),
            r.cell_counts[k].into(),
            r.lambda_hat.into(),
            r.eta.into(),
            r.regression_r2.into(),
        ]);
    }
    t
}

/// Typical-vs-maximal comparison with environments processed in parallel,
/// plus `ln Z` per environment when a polymer temperature is given.
#[derive(Debug, Clone, PartialEq)]
pub struct LppRun {
    pub seed: u64,
    pub summary: TypicalVsMax,
    pub polymer_beta: Option<f64>,
    pub log_z: Vec<f64>,
}

pub fn par_typical_vs_max(
    kind: LppWeights,
    n: usize,
    n_env: usize,
    seed: u64,
    polymer_beta: Option<f64>,
) -> Result<LppRun> {
    kind.validate()?;
    if n == 0 || n_env == 0 {
        return Err(CliError::Config("N and n_env must be positive".into()));
    }
    let ct = CountTable::build(&PathEnsemble::all(n, n)?, CountOptions::log_only())?;
    let rows = (0..n_env as u64)
        .into_par_iter()
        .map(|e| {
            let row = lpp_env_row(kind, n, seed, e, &ct)?;
            let lz = match polymer_beta {
                Some(beta) => {
                    let env = par_environment(kind.distribution(), n, n, row.seed)?;
                    Some(log_partition(&env, beta)?.log_z)
                }
                None => None,
            };
            Ok((row, lz))
        })
        .collect::<Result<Vec<_>>>()?;
    let log_z = rows.iter().filter_map(|r| r.1).collect();
    let summary = TypicalVsMax::from_rows(kind, n, rows.into_iter().map(|r| r.0).collect())?;
    Ok(LppRun {
        seed,
        summary,
        polymer_beta,
        log_z,
    })
}

pub fn lpp_table(run: &LppRun) -> Table {
    let s = &run.summary;
    let mut t = Table::new(&[
        "weights",
        "N",
        "seed",
        "env_index",
        "env_seed",
        "G",
        "G_over_N",
        "typical_over_N",
        "predicted_G",
        "predicted_typical",
        "polymer_beta",
        "log_Z",
    ]);
    let nf = s.n as f64;
    for (e, r) in s.rows.iter().enumerate() {
        t.push(vec![
            s.kind.label().into(),
            s.n.into(),
            run.seed.into(),
            e.into(),
            r.seed.into(),
            r.g.into(),
            (r.g / nf).into(),
            (r.typical_energy / nf).into(),
            s.predicted_g.into(),
            s.predicted_typical.into(),
            run.polymer_beta.map_or(Value::from(""), Value::from),
            run.log_z.get(e).map_or(Value::from(""), |&v| Value::from(v)),
        ]);
    }
    t
}

/// Pearson chi-square of sampled path frequencies against the uniform law.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    /// Upper quantile of the chi-square law at `level`.
    pub critical: f64,
    pub level: f64,
    pub n_samples: u64,
    pub pass: bool,
}

pub fn sampler_chi_square(ct: &CountTable, n_samples: u64, seed: u64, level: f64, cap: u64) -> Result<ChiSquare> {
    let names: Vec<String> = enumerate_paths(ct, cap)?.map(|p| p.step_string()).collect();
    let z = names.len();
    if z < 2 {
        return Err(CliError::Check("chi-square needs at least two paths".into()));
    }
    if n_samples == 0 {
        return Err(CliError::Config("n_samples must be positive".into()));
    }
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let sampler = PathSampler::new(ct, seed);
    let chunks: Vec<u64> = (0..n_samples.div_ceil(PATH_CHUNK)).collect();
    let counts = chunks
        .par_iter()
        .map(|&c| {
            let mut local = vec![0u64; z];
            for k in c * PATH_CHUNK..((c + 1) * PATH_CHUNK).min(n_samples) {
                local[index[sampler.path(k).step_string().as_str()]] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; z],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let expected = n_samples as f64 / z as f64;
    let statistic = counts
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let df = z - 1;
    let critical = ChiSquared::new(df as f64)
        .map_err(|e| CliError::Check(e.to_string()))?
        .inverse_cdf(level);
    Ok(ChiSquare {
        statistic,
        df,
        critical,
        level,
        n_samples,
        pass: statistic < critical,
    })
}

/// Outcome of one enumeration-vs-DP comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub check: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Enumerated path count against the DP count.
pub fn oracle_counts(ct: &CountTable, cap: u64) -> Result<OracleCheck> {
    let listed = enumerate_paths(ct, cap)?.count();
    let pass = match ct.z() {
        Some(z) => *z == BigUint::from(listed),
        None => ((listed as f64).ln() - ct.z_log()).abs() < 1e-9,
    };
    Ok(OracleCheck {
        check: "counts",
        pass,
        detail: format!("enumerated {listed}, DP {}", ct.z().map_or(format!("exp({})", ct.z_log()), |z| z.to_string())),
    })
}

/// Enumerated visit frequencies against DP inclusion probabilities, in
/// exact rationals when the table carries exact counts.
pub fn oracle_inclusion(ct: &CountTable, cap: u64) -> Result<OracleCheck> {
    let (m, n) = (ct.m(), ct.n());
    let mut hits = vec![0u64; m * n];
    let mut z = 0u64;
    for p in enumerate_paths(ct, cap)? {
        z += 1;
        for c in p.cells() {
            hits[(c.i - 1) * n + (c.j - 1)] += 1;
        }
    }
    let mut mismatches = 0usize;
    let mut worst = 0.0f64;
    for i in 1..=m {
        for j in 1..=n {
            let h = hits[(i - 1) * n + (j - 1)];
            let c = Cell::new(i, j);
            match ct.inclusion_probability_exact(c) {
                Some(p) => {
                    if p != BigRational::new(h.into(), z.into()) {
                        mismatches += 1;
                    }
                }
                None => {
                    let d = (ct.inclusion_probability(c) - h as f64 / z as f64).abs();
                    worst = worst.max(d);
                    if d > 1e-12 {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    let detail = if ct.has_exact() {
        format!("{} cells compared exactly, {mismatches} mismatches", m * n)
    } else {
        format!("{} cells compared in floating point, max error {worst:e}", m * n)
    };
    Ok(OracleCheck {
        check: "inclusion",
        pass: mismatches == 0,
        detail,
    })
}
