//! Command-line driver.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use qclt_core::environment::Environment;
use qclt_core::lattice_paths::{CountOptions, CountTable, PathSampler, DEFAULT_ENUMERATION_CAP};
use qclt_core::lpp_polymer::LppWeights;
use qclt_core::math::ln_big;
use qclt_core::scaling::{concentration_bound, diagonal_maxima, qclt_admissibility, ConcentrationParams};
use qclt_core::{Cell, EnsembleFamily, PathEnsemble};

use crate::config::ConfigFile;
use crate::error::{config, CliError, Result};
use crate::experiments::{
    clt_table, convergence_experiment, ks_decreases, lpp_table, oracle_counts, oracle_inclusion,
    par_environment, par_fit_lambda, par_typical_vs_max, sampler_chi_square, scaling_table, CltConfig,
};
use crate::formats::{
    parse_cells, parse_distribution, parse_fractions, paths_to_text, read_environment, write_atomic,
    write_environment, EnsembleFile, OutputFormat, Table, Value,
};

#[derive(Debug, Parser)]
#[command(
    name = "qclt",
    version,
    about = "Random up-right paths in random environments: counts, scaling, quenched CLT experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// key = value file; command-line flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Result file, written atomically. Without it the table goes to stdout
    /// and the summary to stderr.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "QCLT_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleKind {
    All,
    Waypoints,
    Hole,
    Single,
    Forbidden,
}

/// An ensemble of one fixed size.
#[derive(Debug, Clone, Args)]
pub struct FixedEnsembleArgs {
    /// Horizontal size (default: floor(xi * N); N for hole, 1 for single).
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Vertical size.
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = EnsembleKind::All)]
    pub ensemble: EnsembleKind,
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    /// Waypoint cells, `i:j,i:j`.
    #[arg(long)]
    pub waypoints: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Forbidden cells, `i:j,i:j`.
    #[arg(long)]
    pub forbidden: Option<String>,
    /// Ensemble JSON file; replaces the other ensemble flags.
    #[arg(long)]
    pub ensemble_file: Option<PathBuf>,
}

impl FixedEnsembleArgs {
    pub fn resolve(&self) -> Result<PathEnsemble> {
        if let Some(path) = &self.ensemble_file {
            let text = fs::read_to_string(path)?;
            return serde_json::from_str::<EnsembleFile>(&text)?.to_ensemble();
        }
        let n = self.n.ok_or_else(|| config("--N is required"))?;
        let scaled = || {
            let m = (self.xi * n as f64).floor();
            if self.xi > 0.0 && m >= 1.0 {
                Ok(m as usize)
            } else {
                Err(config("xi * N must be at least 1"))
            }
        };
        let m = match self.m {
            Some(m) => m,
            None => match self.ensemble {
                EnsembleKind::Hole => n,
                EnsembleKind::Single => 1,
                _ => scaled()?,
            },
        };
        Ok(match self.ensemble {
            EnsembleKind::All | EnsembleKind::Single => PathEnsemble::all(m, n)?,
            EnsembleKind::Waypoints => {
                let cells = parse_cells(
                    self.waypoints
                        .as_deref()
                        .ok_or_else(|| config("--waypoints is required for the waypoints ensemble"))?,
                )?;
                PathEnsemble::waypoints(m, n, cells.into_iter().map(Cell::from).collect())?
            }
            EnsembleKind::Hole => {
                if m != n {
                    return Err(config("the hole ensemble needs M == N"));
                }
                PathEnsemble::hole(n, self.beta)?
            }
            EnsembleKind::Forbidden => {
                let cells = parse_cells(self.forbidden.as_deref().unwrap_or(""))?;
                PathEnsemble::forbidden(m, n, cells.into_iter().map(Cell::from).collect())?
            }
        })
    }
}

/// A family of ensembles indexed by `N`.
#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = EnsembleKind::All)]
    pub ensemble: EnsembleKind,
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    /// Waypoints as fractions of N, `x:y,x:y`.
    #[arg(long, default_value = "0.5:0.5")]
    pub waypoints: String,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
}

impl FamilyArgs {
    pub fn resolve(&self) -> Result<EnsembleFamily> {
        Ok(match self.ensemble {
            EnsembleKind::All => EnsembleFamily::All { xi: self.xi },
            EnsembleKind::Waypoints => EnsembleFamily::Waypoints {
                xi: self.xi,
                points: parse_fractions(&self.waypoints)?,
            },
            EnsembleKind::Hole => EnsembleFamily::Hole { beta: self.beta },
            EnsembleKind::Single => EnsembleFamily::SinglePath,
            EnsembleKind::Forbidden => return Err(config("forbidden masks have no N-indexed family")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LppKind {
    Exponential,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Counts,
    Inclusion,
    Sampler,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Number of admissible paths.
    #[command(args_override_self = true)]
    Count {
        #[command(flatten)]
        ens: FixedEnsembleArgs,
    },
    /// Inclusion probabilities of every cell (or one `--cell i:j`).
    #[command(args_override_self = true)]
    Include {
        #[command(flatten)]
        ens: FixedEnsembleArgs,
        #[arg(long)]
        cell: Option<String>,
    },
    /// Uniform paths as step strings, with energies when an environment is given.
    #[command(args_override_self = true)]
    Sample {
        #[command(flatten)]
        ens: FixedEnsembleArgs,
        #[arg(long, default_value_t = 10)]
        n_paths: u64,
        #[arg(long, default_value_t = 2)]
        path_seed: u64,
        /// Distribution of a freshly sampled environment.
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value_t = 1)]
        env_seed: u64,
        /// Environment file (CSV with JSON header, or binary).
        #[arg(long, conflicts_with = "dist")]
        env_file: Option<PathBuf>,
        /// Also write the environment (`.bin` for binary, CSV otherwise).
        #[arg(long)]
        save_env: Option<PathBuf>,
        /// Also write the paths, one step string per line.
        #[arg(long)]
        save_paths: Option<PathBuf>,
    },
    /// L(N) and sum_k M_k over a grid of sizes, with the fitted exponent.
    #[command(args_override_self = true)]
    Lscan {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        /// Skip exact big-integer tables.
        #[arg(long)]
        log_only: bool,
    },
    /// Quenched distance to the Gaussian over a grid of sizes.
    #[command(args_override_self = true)]
    Clt {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        #[arg(long, default_value = "rademacher")]
        dist: String,
        #[arg(long, default_value_t = 100_000)]
        n_paths: u64,
        #[arg(long, default_value_t = 1)]
        env_seed: u64,
        #[arg(long, default_value_t = 2)]
        path_seed: u64,
        /// Use env_seed itself at every N instead of a derived seed per N.
        #[arg(long)]
        common_seed: bool,
    },
    /// Concentration bound, and moment admissibility when eta and lambda are given.
    #[command(args_override_self = true)]
    Bound {
        /// Number of sites.
        #[arg(long)]
        n: f64,
        /// Path size.
        #[arg(long)]
        m: f64,
        #[arg(long = "L")]
        l: f64,
        /// Moment bound E|w|^p <= K.
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        p: f64,
        /// Truncation level.
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        big_c: f64,
        #[arg(long = "c", default_value_t = 1.0)]
        small_c: f64,
        #[arg(long, requires = "lambda")]
        eta: Option<f64>,
        #[arg(long, requires = "eta")]
        lambda: Option<f64>,
    },
    /// Last-passage time against typical path energy for raw weights.
    #[command(args_override_self = true)]
    Lpp {
        #[arg(long, value_enum, default_value_t = LppKind::Exponential)]
        weights: LppKind,
        #[arg(long, default_value_t = 0.25)]
        q: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 20)]
        n_env: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also report ln Z of the polymer at this inverse temperature.
        #[arg(long)]
        polymer_beta: Option<f64>,
    },
    /// Brute-force enumeration against the dynamic programs.
    #[command(args_override_self = true)]
    Oracle {
        #[command(flatten)]
        ens: FixedEnsembleArgs,
        #[arg(long, value_enum, default_value_t = OracleKind::All)]
        check: OracleKind,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        /// Draws for the sampler chi-square check.
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub table: Option<Table>,
    /// Whether the table goes to stdout when no `--out` is given.
    pub table_to_stdout: bool,
}

impl Outcome {
    fn table(summary: String, table: Table) -> Self {
        Outcome {
            summary,
            table: Some(table),
            table_to_stdout: true,
        }
    }
}

fn load_environment(
    ens: &PathEnsemble,
    dist: &Option<String>,
    env_seed: u64,
    env_file: &Option<PathBuf>,
) -> Result<Option<Environment>> {
    let env = match (dist, env_file) {
        (_, Some(path)) => read_environment(path)?,
        (Some(spec), None) => par_environment(parse_distribution(spec)?, ens.m(), ens.n(), env_seed)?,
        (None, None) => return Ok(None),
    };
    if env.dims() != (ens.m(), ens.n()) {
        return Err(qclt_core::Error::DimensionMismatch {
            expected: (ens.m(), ens.n()),
            got: env.dims(),
        }
        .into());
    }
    Ok(Some(env))
}

fn z_string(ct: &CountTable) -> String {
    match ct.z() {
        Some(z) => z.to_string(),
        None => format!("exp({})", ct.z_log()),
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Count { ens } => {
            let ens = ens.resolve()?;
            let ct = CountTable::build(&ens, CountOptions::always_exact())?;
            let z = ct.z().expect("exact counts requested");
            let mut t = Table::new(&["M", "N", "ensemble", "Z", "log_Z"]);
            t.push(vec![ens.m().into(), ens.n().into(), ens.label().into(), z.to_string().into(), ln_big(z).into()]);
            Ok(Outcome {
                summary: z.to_string(),
                table: Some(t),
                table_to_stdout: false,
            })
        }
        Command::Include { ens, cell } => {
            let ens = ens.resolve()?;
            let ct = CountTable::build(&ens, CountOptions::default())?;
            let cells: Vec<Cell> = match cell {
                Some(s) => parse_cells(s)?.into_iter().map(Cell::from).collect(),
                None => (1..=ens.m())
                    .flat_map(|i| (1..=ens.n()).map(move |j| Cell::new(i, j)))
                    .collect(),
            };
            let mut t = Table::new(&["M", "N", "ensemble", "i", "j", "k", "p", "p_exact"]);
            for c in cells {
                let exact = ct
                    .inclusion_probability_exact(c)
                    .map_or(String::new(), |r| r.to_string());
                t.push(vec![
                    ens.m().into(),
                    ens.n().into(),
                    ens.label().into(),
                    c.i.into(),
                    c.j.into(),
                    c.diagonal().into(),
                    ct.inclusion_probability(c).into(),
                    exact.into(),
                ]);
            }
            let dm = diagonal_maxima(&ct);
            let summary = format!(
                "{} {}x{}: Z = {}, L = {}, sum_k M_k = {}",
                ens.label(),
                ens.m(),
                ens.n(),
                z_string(&ct),
                dm.l_squared.sqrt(),
                dm.sum
            );
            Ok(Outcome::table(summary, t))
        }
        Command::Sample {
            ens,
            n_paths,
            path_seed,
            dist,
            env_seed,
            env_file,
            save_env,
            save_paths,
        } => {
            let ens = ens.resolve()?;
            let ct = CountTable::build(&ens, CountOptions::default())?;
            let env = load_environment(&ens, dist, *env_seed, env_file)?;
            if let (Some(path), Some(env)) = (save_env, &env) {
                write_environment(path, env)?;
            }
            let sampler = PathSampler::new(&ct, *path_seed);
            let paths: Vec<_> = (0..*n_paths).map(|k| sampler.path(k)).collect();
            if let Some(path) = save_paths {
                write_atomic(path, paths_to_text(&paths).as_bytes())?;
            }
            let norm = (ens.path_len() as f64).sqrt();
            let mut t = Table::new(&[
                "M", "N", "ensemble", "path_seed", "k", "steps", "env", "energy", "normalized",
            ]);
            for (k, p) in paths.iter().enumerate() {
                let (id, e, v) = match &env {
                    Some(env) => {
                        let e = qclt_core::lattice_paths::path_energy(p, env)?;
                        (Value::from(env.id()), Value::from(e), Value::from(e / norm))
                    }
                    None => ("".into(), "".into(), "".into()),
                };
                t.push(vec![
                    ens.m().into(),
                    ens.n().into(),
                    ens.label().into(),
                    (*path_seed).into(),
                    k.into(),
                    p.step_string().into(),
                    id,
                    e,
                    v,
                ]);
            }
            let summary = format!("sampled {n_paths} paths of {} {}x{} with path_seed {path_seed}", ens.label(), ens.m(), ens.n());
            Ok(Outcome::table(summary, t))
        }
        Command::Lscan { family, grid, log_only } => {
            let family = family.resolve()?;
            let opts = if *log_only {
                CountOptions::log_only()
            } else {
                CountOptions::default()
            };
            let r = par_fit_lambda(&family, grid, opts)?;
            let ratios = r.mk_ratios();
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().copied().fold(0.0, f64::max);
            let summary = format!(
                "{}: lambda_hat = {:.4}, eta = {:.4}, r2 = {:.5}, sumMk/sqrt(N) in [{lo:.4}, {hi:.4}] (max/min {:.4})",
                family.label(),
                r.lambda_hat,
                r.eta,
                r.regression_r2,
                hi / lo
            );
            Ok(Outcome::table(summary, scaling_table(&family, &r)))
        }
        Command::Clt {
            family,
            grid,
            dist,
            n_paths,
            env_seed,
            path_seed,
            common_seed,
        } => {
            let cfg = CltConfig {
                dist: parse_distribution(dist)?,
                family: family.resolve()?,
                grid: grid.clone(),
                n_paths: *n_paths,
                env_seed: *env_seed,
                path_seed: *path_seed,
                common_seed: *common_seed,
            };
            let rows = convergence_experiment(&cfg)?;
            let (a, b) = (&rows[0], &rows[rows.len() - 1]);
            let summary = format!(
                "{} / {}: ks {:.5} (N={}) -> {:.5} (N={}), w1 {:.5} -> {:.5}, decreasing = {}",
                cfg.dist,
                cfg.family.label(),
                a.distance.ks,
                a.n,
                b.distance.ks,
                b.n,
                a.distance.w1,
                b.distance.w1,
                ks_decreases(&rows)
            );
            Ok(Outcome::table(summary, clt_table(&cfg, &rows)))
        }
        Command::Bound {
            n,
            m,
            l,
            k,
            p,
            r,
            s,
            t,
            kappa,
            big_c,
            small_c,
            eta,
            lambda,
        } => {
            let params = ConcentrationParams {
                n: *n,
                m: *m,
                l: *l,
                k: *k,
                p: *p,
                kappa: *kappa,
                big_c: *big_c,
                small_c: *small_c,
                r: *r,
                s: *s,
                t: *t,
            };
            let b = concentration_bound(&params)?;
            let illustrative = *kappa == 1.0 && *big_c == 1.0 && *small_c == 1.0;
            let adm = match (eta, lambda) {
                (Some(e), Some(la)) => Some(qclt_admissibility(*e, *la, *p)?),
                _ => None,
            };
            let mut tab = Table::new(&[
                "n", "m", "L", "K", "p", "kappa", "C", "c", "R", "s", "t", "constants", "epsilon", "prob_bound",
                "prob_bound_raw", "eta", "lambda", "p_threshold", "admissible", "rho_lo", "rho_hi",
            ]);
            let opt = |v: Option<f64>| v.map_or(Value::from(""), Value::from);
            tab.push(vec![
                (*n).into(),
                (*m).into(),
                (*l).into(),
                (*k).into(),
                (*p).into(),
                (*kappa).into(),
                (*big_c).into(),
                (*small_c).into(),
                (*r).into(),
                (*s).into(),
                (*t).into(),
                (if illustrative { "illustrative" } else { "user" }).into(),
                b.epsilon.into(),
                b.prob_bound.into(),
                b.prob_bound_raw.into(),
                opt(*eta),
                opt(*lambda),
                opt(adm.map(|a| a.p_threshold)),
                adm.map_or(Value::from(""), |a| Value::from(a.admissible)),
                opt(adm.and_then(|a| a.rho_range).map(|r| r.0)),
                opt(adm.and_then(|a| a.rho_range).map(|r| r.1)),
            ]);
            let mut summary = format!(
                "epsilon = {}, prob_bound = {} (raw {}){}",
                b.epsilon,
                b.prob_bound,
                b.prob_bound_raw,
                if illustrative { " [illustrative constants kappa = C = c = 1]" } else { "" }
            );
            if let Some(a) = adm {
                summary.push_str(&format!(
                    "; p threshold {}, admissible = {}",
                    a.p_threshold, a.admissible
                ));
            }
            Ok(Outcome::table(summary, tab))
        }
        Command::Lpp {
            weights,
            q,
            n,
            n_env,
            seed,
            polymer_beta,
        } => {
            let kind = match weights {
                LppKind::Exponential => LppWeights::ExponentialMean1,
                LppKind::Geometric => LppWeights::Geometric { q: *q },
            };
            let run = par_typical_vs_max(kind, *n, *n_env, *seed, *polymer_beta)?;
            let s = &run.summary;
            let summary = format!(
                "{} N={}: mean G/N = {:.4} +- {:.4} (predicted {:.4}), typical/N = {:.4}, measured {:.4} (predicted {:.4})",
                kind.label(),
                n,
                s.mean_g_over_n,
                s.g_over_n_stderr,
                s.predicted_g,
                s.typical_over_n,
                s.measured_typical_over_n,
                s.predicted_typical
            );
            Ok(Outcome::table(summary, lpp_table(&run)))
        }
        Command::Oracle {
            ens,
            check,
            cap,
            samples,
            seed,
        } => {
            let ens = ens.resolve()?;
            let ct = CountTable::build(&ens, CountOptions::default())?;
            let mut results = Vec::new();
            if matches!(check, OracleKind::Counts | OracleKind::All) {
                results.push(oracle_counts(&ct, *cap)?);
            }
            if matches!(check, OracleKind::Inclusion | OracleKind::All) {
                results.push(oracle_inclusion(&ct, *cap)?);
            }
            let mut sampler = None;
            if matches!(check, OracleKind::Sampler | OracleKind::All) && z_at_least_two(&ct) {
                sampler = Some(sampler_chi_square(&ct, *samples, *seed, 0.999, *cap)?);
            }
            let mut t = Table::new(&["M", "N", "ensemble", "check", "pass", "detail"]);
            for r in &results {
                t.push(vec![
                    ens.m().into(),
                    ens.n().into(),
                    ens.label().into(),
                    r.check.into(),
                    r.pass.into(),
                    r.detail.clone().into(),
                ]);
            }
            if let Some(c) = &sampler {
                t.push(vec![
                    ens.m().into(),
                    ens.n().into(),
                    ens.label().into(),
                    "sampler".into(),
                    c.pass.into(),
                    format!(
                        "chi2 = {} with {} df over {} draws (seed {seed}), critical {} at level {}",
                        c.statistic, c.df, c.n_samples, c.critical, c.level
                    )
                    .into(),
                ]);
            }
            let mut parts = Vec::new();
            if !results.is_empty() {
                let ok = results.iter().all(|r| r.pass);
                parts.push(if ok { "enumeration == DP".to_string() } else { "enumeration != DP".to_string() });
            }
            if let Some(c) = &sampler {
                parts.push(format!(
                    "sampler chi2 {:.3} {} {:.3}",
                    c.statistic,
                    if c.pass { "<" } else { ">=" },
                    c.critical
                ));
            }
            let summary = format!("{} {}x{}: {}", ens.label(), ens.m(), ens.n(), parts.join("; "));
            if results.iter().any(|r| !r.pass) || sampler.as_ref().is_some_and(|c| !c.pass) {
                return Err(CliError::Check(summary));
            }
            Ok(Outcome::table(summary, t))
        }
    }
}

fn z_at_least_two(ct: &CountTable) -> bool {
    ct.z_log() > 0.5
}

const GLOBAL_VALUE_FLAGS: [&str; 4] = ["--config", "--out", "--format", "--threads"];

/// Splices the entries of a `--config` file into `argv`, ahead of the
/// explicit flags.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config_path = None;
    for (t, a) in strs.iter().enumerate() {
        if let Some(v) = a.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(v));
        } else if a == "--config" {
            config_path = strs.get(t + 1).map(PathBuf::from);
        }
    }
    let Some(path) = config_path else {
        return Ok(argv);
    };
    let file = ConfigFile::load(&path)?;
    let root = Cli::command();
    let names: Vec<String> = root.get_subcommands().map(|c| c.get_name().to_string()).collect();

    let mut sub_at = None;
    let mut t = 1;
    while t < strs.len() {
        let a = &strs[t];
        if names.contains(a) {
            sub_at = Some(t);
            break;
        }
        t += if GLOBAL_VALUE_FLAGS.contains(&a.as_str()) { 2 } else { 1 };
    }
    let sub = match sub_at {
        Some(t) => strs[t].clone(),
        None => file
            .get("command")
            .map(str::to_string)
            .ok_or_else(|| config("no command given on the command line or in the config file"))?,
    };
    if let (Some(_), Some(c)) = (sub_at, file.get("command")) {
        if c != sub {
            return Err(config(format!("config file is for `{c}`, command line asks for `{sub}`")));
        }
    }
    let mut out = vec![argv[0].clone(), OsString::from(&sub)];
    out.extend(file.to_flags(&root, &sub)?);
    for (t, a) in argv.into_iter().enumerate().skip(1) {
        if Some(t) != sub_at {
            out.push(a);
        }
    }
    Ok(out)
}

fn emit(global: &GlobalArgs, outcome: &Outcome) -> Result<()> {
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    match (&outcome.table, &global.out) {
        (Some(table), Some(path)) => {
            write_atomic(path, table.render(global.format)?.as_bytes())?;
            writeln!(stdout, "{}", outcome.summary)?;
        }
        (Some(table), None) if outcome.table_to_stdout => {
            stdout.write_all(table.render(global.format)?.as_bytes())?;
            eprintln!("{}", outcome.summary);
        }
        _ => writeln!(stdout, "{}", outcome.summary)?,
    }
    Ok(())
}

/// Parses, runs, and reports; returns the process exit status.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = (|| {
        if cli.global.threads == Some(0) {
            return Err(config("--threads must be positive"));
        }
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.global.threads {
            pool = pool.num_threads(t);
        }
        let pool = pool.build().map_err(|e| config(e.to_string()))?;
        let outcome = pool.install(|| execute(&cli.command))?;
        emit(&cli.global, &outcome)
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
