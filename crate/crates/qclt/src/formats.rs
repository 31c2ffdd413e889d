//! Text and binary formats: result tables, environments, ensembles, paths,
//! and weight-distribution specs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use qclt_core::environment::RawSampler;
use qclt_core::{Cell, Constraint, Environment, Family, PathEnsemble, UpRightPath, WeightDistribution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};

use crate::error::{format, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Uint(u64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Uint(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Uint(v as u64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl Value {
    fn csv_field(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Uint(v) => v.to_string(),
            Value::Float(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Int(v) => json!(v),
            Value::Uint(v) => json!(v),
            Value::Float(v) => json!(v),
            Value::Bool(v) => json!(v),
            Value::Text(v) => json!(v),
        }
    }
}

/// A rectangular result table. CSV has a header row; JSON is an array of
/// objects with the same keys in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv_field))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| format(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Json> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Value::json))
                    .collect();
                Json::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows)?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, fmt: OutputFormat) -> Result<String> {
        match fmt {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Weight distributions

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| format(format!("`{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn take(params: &mut Vec<(String, f64)>, key: &str) -> Option<f64> {
    let at = params.iter().position(|(k, _)| k == key)?;
    Some(params.remove(at).1)
}

/// Parses `name[(k=v,...)][[raw]][[R=r]]`, the inverse of the distribution's
/// `Display` for built-in families. Aliases `gaussian`, `standard_normal`
/// and `centered_*` are accepted.
pub fn parse_distribution(spec: &str) -> Result<WeightDistribution> {
    let mut rest = spec.trim();
    let mut truncation = None;
    let mut normalized = true;
    while let Some(stripped) = rest.strip_suffix(']') {
        let open = stripped
            .rfind('[')
            .ok_or_else(|| format(format!("unbalanced `]` in `{spec}`")))?;
        let tag = &stripped[open + 1..];
        if tag == "raw" {
            normalized = false;
        } else if let Some(r) = tag.strip_prefix("R=") {
            truncation = Some(
                r.parse::<f64>()
                    .map_err(|_| format(format!("bad truncation level `{r}`")))?,
            );
        } else {
            return Err(format(format!("unknown tag `[{tag}]`")));
        }
        rest = &stripped[..open];
    }
    let (name, mut params) = match rest.split_once('(') {
        Some((name, body)) => {
            let body = body
                .strip_suffix(')')
                .ok_or_else(|| format(format!("missing `)` in `{spec}`")))?;
            (name.trim(), parse_params(body)?)
        }
        None => (rest, Vec::new()),
    };
    let family = match name.to_ascii_lowercase().as_str() {
        "rademacher" => Family::Rademacher,
        "normal" | "gaussian" | "standard_normal" => Family::StandardNormal,
        "exponential" | "centered_exponential" => Family::CenteredExponential {
            rate: take(&mut params, "rate").unwrap_or(1.0),
        },
        "geometric" | "centered_geometric" => Family::CenteredGeometric {
            q: take(&mut params, "q").unwrap_or(0.5),
        },
        "uniform" | "centered_uniform" => Family::CenteredUniform,
        other => return Err(format(format!("unknown distribution `{other}`"))),
    };
    if let Some((k, _)) = params.first() {
        return Err(format(format!("unknown parameter `{k}` for `{name}`")));
    }
    let dist = WeightDistribution {
        family,
        normalized,
        truncation,
    };
    dist.validate()?;
    Ok(dist)
}

fn sampler_json(s: &RawSampler) -> Json {
    match *s {
        RawSampler::Exponential { rate } => json!({"kind": "exponential", "rate": rate}),
        RawSampler::Geometric { q } => json!({"kind": "geometric", "q": q}),
        RawSampler::Uniform { low, high } => json!({"kind": "uniform", "low": low, "high": high}),
    }
}

fn num(obj: &Json, key: &str) -> Result<f64> {
    obj.get(key)
        .and_then(Json::as_f64)
        .ok_or_else(|| format(format!("missing number `{key}`")))
}

fn sampler_from_json(v: &Json) -> Result<RawSampler> {
    Ok(match v.get("kind").and_then(Json::as_str) {
        Some("exponential") => RawSampler::Exponential { rate: num(v, "rate")? },
        Some("geometric") => RawSampler::Geometric { q: num(v, "q")? },
        Some("uniform") => RawSampler::Uniform {
            low: num(v, "low")?,
            high: num(v, "high")?,
        },
        _ => return Err(format("unknown raw sampler")),
    })
}

/// JSON description of a distribution, including custom families.
pub fn distribution_json(d: &WeightDistribution) -> Json {
    let params = match d.family {
        Family::CenteredExponential { rate } => json!({"rate": rate}),
        Family::CenteredGeometric { q } => json!({"q": q}),
        Family::Custom {
            mean,
            variance,
            sampler,
        } => json!({"mean": mean, "variance": variance, "sampler": sampler_json(&sampler)}),
        _ => json!({}),
    };
    json!({
        "family": d.family.name(),
        "params": params,
        "normalized": d.normalized,
        "truncation": d.truncation,
    })
}

pub fn distribution_from_json(v: &Json) -> Result<WeightDistribution> {
    let params = v.get("params").cloned().unwrap_or_else(|| json!({}));
    let family = match v.get("family").and_then(Json::as_str) {
        Some("rademacher") => Family::Rademacher,
        Some("normal") => Family::StandardNormal,
        Some("exponential") => Family::CenteredExponential { rate: num(&params, "rate")? },
        Some("geometric") => Family::CenteredGeometric { q: num(&params, "q")? },
        Some("uniform") => Family::CenteredUniform,
        Some("custom") => Family::Custom {
            mean: num(&params, "mean")?,
            variance: num(&params, "variance")?,
            sampler: sampler_from_json(
                params
                    .get("sampler")
                    .ok_or_else(|| format("custom family needs a sampler"))?,
            )?,
        },
        _ => return Err(format("unknown or missing `family`")),
    };
    let dist = WeightDistribution {
        family,
        normalized: v.get("normalized").and_then(Json::as_bool).unwrap_or(true),
        truncation: v.get("truncation").and_then(Json::as_f64),
    };
    dist.validate()?;
    Ok(dist)
}

// ---------------------------------------------------------------------------
// Environments

const ENV_MAGIC: &[u8; 8] = b"QCLTENV1";

fn env_header(env: &Environment) -> Json {
    json!({
        "M": env.m(),
        "N": env.n(),
        "distribution": distribution_json(&env.dist),
        "seed": env.seed,
    })
}

fn env_from_header(header: &Json, weights: Vec<f64>) -> Result<Environment> {
    let dim = |k: &str| {
        header
            .get(k)
            .and_then(Json::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| format(format!("header lacks `{k}`")))
    };
    let dist = distribution_from_json(
        header
            .get("distribution")
            .ok_or_else(|| format("header lacks `distribution`"))?,
    )?;
    let seed = header.get("seed").and_then(Json::as_u64).unwrap_or(0);
    Ok(Environment::from_weights(dim("M")?, dim("N")?, weights, dist, seed)?)
}

/// CSV grid: a `# {json header}` line, then `M` lines; line `i` holds
/// `w(i,1), ..., w(i,N)`.
pub fn environment_to_csv(env: &Environment) -> String {
    let mut s = format!("# {}\n", env_header(env));
    for i in 1..=env.m() {
        let line: Vec<String> = env.column(i).iter().map(|w| w.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn environment_from_csv(text: &str) -> Result<Environment> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| format("environment CSV must start with a `# {json}` header"))?;
    let header: Json = serde_json::from_str(header.trim())?;
    let mut weights = Vec::new();
    for (t, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        for field in line.split(',') {
            weights.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| format(format!("line {}: bad weight `{field}`", t + 2)))?,
            );
        }
    }
    env_from_header(&header, weights)
}

/// Binary grid: magic, little-endian `u64` header length, JSON header, then
/// `M * N` little-endian `f64` weights in the CSV order.
pub fn environment_to_bytes(env: &Environment) -> Vec<u8> {
    let header = env_header(env).to_string();
    let mut out = Vec::with_capacity(16 + header.len() + 8 * env.weights().len());
    out.extend_from_slice(ENV_MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for w in env.weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn environment_from_bytes(bytes: &[u8]) -> Result<Environment> {
    if bytes.len() < 16 || &bytes[..8] != ENV_MAGIC {
        return Err(format("not a binary environment file"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes
        .get(16..16 + len)
        .ok_or_else(|| format("truncated environment header"))?;
    let header: Json = serde_json::from_slice(body)?;
    let data = &bytes[16 + len..];
    if data.len() % 8 != 0 {
        return Err(format("trailing bytes in environment data"));
    }
    let weights = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    env_from_header(&header, weights)
}

/// Reads either format, detected from the leading bytes.
pub fn read_environment(path: &Path) -> Result<Environment> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(ENV_MAGIC) {
        environment_from_bytes(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| format(e.to_string()))?;
        environment_from_csv(&text)
    }
}

/// Writes binary when the extension is `.bin`, CSV otherwise.
pub fn write_environment(path: &Path, env: &Environment) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        write_atomic(path, &environment_to_bytes(env))
    } else {
        write_atomic(path, environment_to_csv(env).as_bytes())
    }
}

// ---------------------------------------------------------------------------
// Ensembles and paths

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// `all`, `waypoints`, `hole` or `forbidden`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<(usize, usize)>>,
}

impl EnsembleFile {
    pub fn from_ensemble(ens: &PathEnsemble) -> Self {
        let mut f = EnsembleFile {
            m: ens.m(),
            n: ens.n(),
            kind: String::new(),
            waypoints: None,
            beta: None,
            cells: None,
        };
        match ens.constraint() {
            Constraint::All => f.kind = "all".into(),
            Constraint::Waypoints(p) => {
                f.kind = "waypoints".into();
                f.waypoints = Some(p.iter().map(|c| (c.i, c.j)).collect());
            }
            Constraint::Hole(h) => {
                f.kind = "hole".into();
                f.beta = Some(h.beta);
            }
            Constraint::Forbidden(mask) => {
                f.kind = "forbidden".into();
                f.cells = Some(mask.iter().map(|c| (c.i, c.j)).collect());
            }
        }
        f
    }

    pub fn to_ensemble(&self) -> Result<PathEnsemble> {
        let cells = |v: &Option<Vec<(usize, usize)>>, what: &str| {
            v.as_ref()
                .map(|v| v.iter().copied().map(Cell::from).collect::<Vec<_>>())
                .ok_or_else(|| format(format!("`{}` ensemble needs `{what}`", self.kind)))
        };
        Ok(match self.kind.as_str() {
            "all" => PathEnsemble::all(self.m, self.n)?,
            "waypoints" => PathEnsemble::waypoints(self.m, self.n, cells(&self.waypoints, "waypoints")?)?,
            "hole" => {
                if self.m != self.n {
                    return Err(format("hole ensemble needs M == N"));
                }
                PathEnsemble::hole(self.n, self.beta.ok_or_else(|| format("hole ensemble needs `beta`"))?)?
            }
            "forbidden" => PathEnsemble::forbidden(
                self.m,
                self.n,
                cells(&self.cells, "cells")?.into_iter().collect::<BTreeSet<_>>(),
            )?,
            other => return Err(format(format!("unknown ensemble kind `{other}`"))),
        })
    }
}

pub fn ensemble_to_json(ens: &PathEnsemble) -> Result<String> {
    Ok(serde_json::to_string(&EnsembleFile::from_ensemble(ens))?)
}

pub fn ensemble_from_json(text: &str) -> Result<PathEnsemble> {
    serde_json::from_str::<EnsembleFile>(text)?.to_ensemble()
}

/// One step string per line.
pub fn paths_to_text(paths: &[UpRightPath]) -> String {
    let mut s = String::new();
    for p in paths {
        let _ = writeln!(s, "{}", p.step_string());
    }
    s
}

pub fn paths_from_text(m: usize, n: usize, text: &str) -> Result<Vec<UpRightPath>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(UpRightPath::parse(m, n, l.trim())?))
        .collect()
}

/// `i:j` pairs separated by commas.
pub fn parse_cells(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (a, b) = t
                .split_once(':')
                .ok_or_else(|| format(format!("expected i:j, got `{t}`")))?;
            let p = |x: &str| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|_| format(format!("`{x}` is not a cell index")))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

/// `x:y` fractional positions separated by commas.
pub fn parse_fractions(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (a, b) = t
                .split_once(':')
                .ok_or_else(|| format(format!("expected x:y, got `{t}`")))?;
            let p = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| format(format!("`{x}` is not a number")))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qclt_core::environment::sample_environment;

    #[test]
    fn csv_and_json_tables() {
        let mut t = Table::new(&["N", "label", "ks"]);
        t.push(vec![32usize.into(), "a,b".into(), 0.125.into()]);
        assert_eq!(t.to_csv().unwrap(), "N,label,ks\n32,\"a,b\",0.125\n");
        let j: Json = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(j[0]["ks"], json!(0.125));
        let keys: Vec<&String> = j[0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["N", "label", "ks"]);
    }

    #[test]
    fn distribution_specs_round_trip() {
        for s in [
            "rademacher",
            "normal",
            "exponential(rate=2.5)",
            "geometric(q=0.3)",
            "uniform",
            "normal[raw]",
            "exponential(rate=1)[R=3.5]",
        ] {
            let d = parse_distribution(s).unwrap();
            assert_eq!(d.to_string(), s);
            assert_eq!(distribution_from_json(&distribution_json(&d)).unwrap(), d);
        }
        assert_eq!(parse_distribution("gaussian").unwrap().to_string(), "normal");
        assert!(parse_distribution("cauchy").is_err());
        assert!(parse_distribution("geometric(q=1.5)").is_err());
        assert!(parse_distribution("normal(rate=2)").is_err());
    }

    #[test]
    fn environment_round_trips() {
        let d = parse_distribution("exponential(rate=2)").unwrap();
        let env = sample_environment(d, 4, 7, 99).unwrap();
        assert_eq!(environment_from_csv(&environment_to_csv(&env)).unwrap(), env);
        assert_eq!(environment_from_bytes(&environment_to_bytes(&env)).unwrap(), env);
        let raw = qclt_core::lpp_polymer::LppWeights::Geometric { q: 0.25 }.distribution();
        let env = sample_environment(raw, 3, 3, 1).unwrap();
        assert_eq!(environment_from_bytes(&environment_to_bytes(&env)).unwrap(), env);
        assert!(environment_from_csv("1,2\n").is_err());
    }

    #[test]
    fn ensembles_round_trip() {
        let cases = [
            PathEnsemble::all(3, 5).unwrap(),
            PathEnsemble::waypoints(6, 6, vec![Cell::new(2, 3), Cell::new(4, 5)]).unwrap(),
            PathEnsemble::hole(8, 0.5).unwrap(),
            PathEnsemble::forbidden(4, 4, [Cell::new(2, 2)].into_iter().collect()).unwrap(),
        ];
        for ens in cases {
            assert_eq!(ensemble_from_json(&ensemble_to_json(&ens).unwrap()).unwrap(), ens);
        }
        assert!(ensemble_from_json(r#"{"M":2,"N":2,"kind":"all","extra":1}"#).is_err());
    }

    #[test]
    fn paths_round_trip() {
        let p = vec![
            UpRightPath::parse(3, 2, "RUR").unwrap(),
            UpRightPath::parse(3, 2, "URR").unwrap(),
        ];
        assert_eq!(paths_from_text(3, 2, &paths_to_text(&p)).unwrap(), p);
        assert!(paths_from_text(3, 2, "RRRU\n").is_err());
    }

    #[test]
    fn cell_lists() {
        assert_eq!(parse_cells("2:3, 4:5").unwrap(), vec![(2, 3), (4, 5)]);
        assert_eq!(parse_fractions("0.5:0.25").unwrap(), vec![(0.5, 0.25)]);
        assert!(parse_cells("2-3").is_err());
    }
}
