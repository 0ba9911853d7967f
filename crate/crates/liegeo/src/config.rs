//! Run configuration: a JSON document, optionally overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use liegeo_core::locus::LocusConvention;
use liegeo_core::metric::MetricOperator;
use liegeo_core::{AlgebraElement, StructuredBasis};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSpec {
    So(usize),
    Su(usize),
    /// su(n) with 𝔥 = so(n) placed first.
    SuWithSo(usize),
    /// su(2) with 𝔥 spanned by the first generator.
    Berger,
}

impl GroupSpec {
    pub fn basis(&self) -> Result<StructuredBasis, CliError> {
        let b = match *self {
            GroupSpec::So(n) => StructuredBasis::so(n),
            GroupSpec::Su(n) => StructuredBasis::su(n, false),
            GroupSpec::SuWithSo(n) => StructuredBasis::su(n, true),
            GroupSpec::Berger => StructuredBasis::su(2, true).and_then(|b| b.with_split(&[0])),
        };
        b.map_err(|e| CliError::Config(format!("group {self}: {e}")))
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::So(n) => write!(f, "so({n})"),
            GroupSpec::Su(n) => write!(f, "su({n})"),
            GroupSpec::SuWithSo(n) => write!(f, "su({n})-with-so({n})"),
            GroupSpec::Berger => write!(f, "berger-sphere"),
        }
    }
}

fn family_dim(s: &str, family: &str) -> Option<usize> {
    let rest = s.strip_prefix(family)?;
    let rest = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
    rest.parse().ok()
}

impl std::str::FromStr for GroupSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        if s == "berger" || s == "berger-sphere" {
            return Ok(GroupSpec::Berger);
        }
        if let Some((a, b)) = s.split_once("-with-") {
            let n = family_dim(a, "su").ok_or_else(|| format!("bad group '{s}'"))?;
            let k = family_dim(b, "so").ok_or_else(|| format!("bad group '{s}'"))?;
            if n != k {
                return Err(format!("group '{s}': only so(n) inside su(n) is supported"));
            }
            return Ok(GroupSpec::SuWithSo(n));
        }
        if let Some(n) = family_dim(&s, "so") {
            return Ok(GroupSpec::So(n));
        }
        if let Some(n) = family_dim(&s, "su") {
            return Ok(GroupSpec::Su(n));
        }
        Err(format!("unknown group '{s}' (so(n), su(n), su(n)-with-so(n), berger-sphere)"))
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricSpec {
    #[default]
    BiInvariant,
    RigidBody {
        mu: Vec<f64>,
    },
    Diagonal {
        lambda: Vec<f64>,
    },
    Cheeger {
        delta: f64,
    },
    /// Λ in basis coordinates, one row per line, comma or space separated.
    Generic {
        file: PathBuf,
    },
}

impl MetricSpec {
    /// `kind` plus an optional comma-separated value list, as on the command line.
    pub fn from_args(args: &[String]) -> Result<Self, CliError> {
        let kind = args.first().map(String::as_str).unwrap_or("");
        let value = args.get(1).map(String::as_str);
        let need = |what: &str| {
            value.ok_or_else(|| CliError::Config(format!("--metric {kind} needs {what}")))
        };
        Ok(match kind {
            "bi-invariant" | "biinvariant" => MetricSpec::BiInvariant,
            "rigid-body" => MetricSpec::RigidBody {
                mu: parse_list(need("moments of inertia")?)?,
            },
            "diagonal" => MetricSpec::Diagonal {
                lambda: parse_list(need("eigenvalues")?)?,
            },
            "cheeger" => MetricSpec::Cheeger {
                delta: parse_number(need("delta")?)?,
            },
            "generic" => MetricSpec::Generic {
                file: PathBuf::from(need("a matrix file")?),
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown metric '{other}' (bi-invariant, rigid-body, diagonal, cheeger, generic)"
                )))
            }
        })
    }

    pub fn build(&self, basis: Arc<StructuredBasis>, base: &Path) -> Result<MetricOperator, CliError> {
        let m = match self {
            MetricSpec::BiInvariant => Ok(MetricOperator::bi_invariant(basis)),
            MetricSpec::RigidBody { mu } => MetricOperator::rigid_body(basis, mu),
            MetricSpec::Diagonal { lambda } => MetricOperator::diagonal(basis, lambda),
            MetricSpec::Cheeger { delta } => MetricOperator::cheeger(basis, *delta),
            MetricSpec::Generic { file } => {
                let path = base.join(file);
                let lambda = read_matrix(&path)?;
                MetricOperator::generic(basis, lambda)
            }
        };
        m.map_err(|e| CliError::Config(format!("metric: {e}")))
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            MetricSpec::RigidBody { mu } => mu.clone(),
            MetricSpec::Diagonal { lambda } => lambda.clone(),
            MetricSpec::Cheeger { delta } => vec![*delta],
            _ => Vec::new(),
        }
    }
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CliError::Config(format!("{}:{}: bad number '{s}'", path.display(), i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("{}: expected a square matrix", path.display())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn parse_number(s: &str) -> Result<f64, CliError> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad number '{s}'")))?;
    if !x.is_finite() {
        return Err(CliError::Config(format!("non-finite number '{s}'")));
    }
    Ok(x)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_number).collect()
}

/// Initial velocity: explicit coordinates or an expression such as
/// `e12`, `0.3*e12 - e13`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Coords(Vec<f64>),
    Expr(String),
}

impl VectorSpec {
    pub fn from_arg(s: &str) -> Result<Self, CliError> {
        let looks_numeric = s
            .chars()
            .all(|c| c.is_ascii_digit() || "+-.,eE ".contains(c))
            && s.chars().any(|c| c.is_ascii_digit());
        if looks_numeric && s.contains(',') || s.trim().parse::<f64>().is_ok() {
            Ok(VectorSpec::Coords(parse_list(s)?))
        } else {
            Ok(VectorSpec::Expr(s.trim().to_string()))
        }
    }

    pub fn resolve(&self, basis: &StructuredBasis) -> Result<AlgebraElement, CliError> {
        let d = basis.dim();
        match self {
            VectorSpec::Coords(c) => {
                if c.len() != d {
                    return Err(CliError::Config(format!("vector has {} coordinates, algebra has {d}", c.len())));
                }
                Ok(DVector::from_column_slice(c))
            }
            VectorSpec::Expr(e) => {
                let mut v = DVector::zeros(d);
                for (sign, term) in split_terms(e) {
                    let (coef, label) = match term.split_once('*') {
                        Some((c, l)) => (parse_number(c)?, l.trim()),
                        None => (1.0, term.trim()),
                    };
                    let k = basis.index_of(label).ok_or_else(|| {
                        CliError::Config(format!("unknown basis label '{label}' (have {})", basis.labels().join(", ")))
                    })?;
                    v[k] += sign * coef;
                }
                Ok(v)
            }
        }
    }
}

fn split_terms(e: &str) -> Vec<(f64, String)> {
    let chars: Vec<char> = e.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let exponent = i >= 2
            && matches!(chars[i - 1], 'e' | 'E')
            && (chars[i - 2].is_ascii_digit() || chars[i - 2] == '.');
        if (c == '+' || c == '-') && !exponent {
            if !cur.is_empty() {
                out.push((sign, std::mem::take(&mut cur)));
            }
            sign = if c == '-' { -1.0 } else { 1.0 };
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push((sign, cur));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionKind {
    Closed,
    SteadyDet,
    SteadyBlocks,
    Misiolek,
    NonsteadyPhi,
    Cheeger,
}

impl CriterionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionKind::Closed => "closed",
            CriterionKind::SteadyDet => "steady-det",
            CriterionKind::SteadyBlocks => "steady-blocks",
            CriterionKind::Misiolek => "misiolek",
            CriterionKind::NonsteadyPhi => "nonsteady-phi",
            CriterionKind::Cheeger => "cheeger",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanTolerances {
    pub time: f64,
    pub sigma_rel: f64,
}

impl Default for ScanTolerances {
    fn default() -> Self {
        ScanTolerances {
            time: 1e-9,
            sigma_rel: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocusSpec {
    pub deltas: Vec<f64>,
    pub angles: usize,
    pub convention: String,
}

impl Default for LocusSpec {
    fn default() -> Self {
        LocusSpec {
            deltas: vec![-0.001, -0.25, -0.5, -0.75, -0.95],
            angles: 720,
            convention: LocusConvention::default().as_str().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub group: GroupSpec,
    pub metric: MetricSpec,
    pub u0: Option<VectorSpec>,
    pub p0: Option<VectorSpec>,
    pub q0: Option<VectorSpec>,
    pub horizon: f64,
    pub dt: Option<f64>,
    pub tolerances: ScanTolerances,
    pub seed: u64,
    /// Determinant samples for the steady scan.
    pub samples: usize,
    /// Random directions added to the Misiołek scan.
    pub random_directions: usize,
    pub criterion: Option<CriterionKind>,
    pub tau: Option<f64>,
    pub locus: LocusSpec,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            group: GroupSpec::So(3),
            metric: MetricSpec::BiInvariant,
            u0: None,
            p0: None,
            q0: None,
            horizon: 10.0,
            dt: None,
            tolerances: ScanTolerances::default(),
            seed: 0,
            samples: 2000,
            random_directions: 200,
            criterion: None,
            tau: None,
            locus: LocusSpec::default(),
            out: PathBuf::from("liegeo-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::Config(what.to_string()));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad("horizon must be positive and finite");
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0 && dt <= self.horizon) {
                return bad("dt must lie in (0, horizon]");
            }
        }
        if let Some(tau) = self.tau {
            if !(tau.is_finite() && tau > 0.0) {
                return bad("tau must be positive and finite");
            }
        }
        let t = &self.tolerances;
        if !(t.time > 0.0 && t.time.is_finite() && t.sigma_rel > 0.0 && t.sigma_rel < 1.0) {
            return bad("tolerances out of range");
        }
        if self.metric.numbers().iter().any(|x| !x.is_finite()) {
            return bad("metric parameters must be finite");
        }
        for v in [&self.u0, &self.p0, &self.q0].into_iter().flatten() {
            if let VectorSpec::Coords(c) = v {
                if c.iter().any(|x| !x.is_finite()) {
                    return bad("vector coordinates must be finite");
                }
            }
        }
        if self.u0.is_some() && (self.p0.is_some() || self.q0.is_some()) {
            return bad("give either u0 or the (p0, q0) split, not both");
        }
        if self.locus.deltas.iter().any(|d| !(d.is_finite() && *d > -1.0)) {
            return bad("locus deltas must be finite and > -1");
        }
        if self.locus.angles < 8 {
            return bad("locus needs at least 8 angles");
        }
        if LocusConvention::parse(&self.locus.convention).is_none() {
            return bad("locus convention: biinvariant-unit, metric-unit or momentum");
        }
        if self.samples < 2 {
            return bad("samples must be at least 2");
        }
        Ok(())
    }

    pub fn convention(&self) -> LocusConvention {
        LocusConvention::parse(&self.locus.convention).unwrap_or_default()
    }

    pub fn step(&self) -> f64 {
        self.dt.unwrap_or_else(|| liegeo_core::dynamics::default_dt(self.horizon))
    }

    /// Basis, metric and (if configured) initial velocity.
    pub fn setup(&self, base: &Path) -> Result<Setup, CliError> {
        let basis = Arc::new(self.group.basis()?);
        let metric = self.metric.build(basis.clone(), base)?;
        let u0 = match (&self.u0, &self.p0, &self.q0) {
            (Some(u), _, _) => Some(u.resolve(&basis)?),
            (None, None, None) => None,
            (None, p, q) => {
                let mut u = DVector::zeros(basis.dim());
                if let Some(p) = p {
                    let pv = p.resolve(&basis)?;
                    let off = basis.project_h_perp(&pv).map_err(|e| CliError::Config(e.to_string()))?;
                    if off.amax() > 1e-12 {
                        return Err(CliError::Config("p0 must lie in the subalgebra h".into()));
                    }
                    u += pv;
                }
                if let Some(q) = q {
                    let qv = q.resolve(&basis)?;
                    let off = basis.project_h(&qv).map_err(|e| CliError::Config(e.to_string()))?;
                    if off.amax() > 1e-12 {
                        return Err(CliError::Config("q0 must lie in the complement of h".into()));
                    }
                    u += qv;
                }
                Some(u)
            }
        };
        Ok(Setup { basis, metric, u0 })
    }
}

pub struct Setup {
    pub basis: Arc<StructuredBasis>,
    pub metric: MetricOperator,
    pub u0: Option<AlgebraElement>,
}

impl Setup {
    pub fn u0(&self) -> Result<&AlgebraElement, CliError> {
        self.u0
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs an initial velocity (--u0 or --p0/--q0)".into()))
    }
}
