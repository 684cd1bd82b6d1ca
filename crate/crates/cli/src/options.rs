//! Parsers for the `--lambda`, `--norm`, `--method` and `--theta` values.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use mfmomp::model::make_lambda;
use mfmomp::{LambdaKind, LambdaVector, NormSpec};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const DEFAULT_ALPHA: f64 = 0.9;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// A λ family with optional parameters; `k` and `α` default to `n/2` and 0.9.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    Family { kind: LambdaKind, k: Option<usize>, alpha: Option<f64> },
    File(String),
}

impl FromStr for LambdaSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if let Some(path) = s.strip_prefix('@') {
            if path.is_empty() {
                return usage("--lambda @ needs a file name");
            }
            return Ok(LambdaSpec::File(path.to_string()));
        }
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let int = |t: &str| t.parse::<usize>().or_else(|_| usage(format!("bad k in --lambda {s}")));
        let real = |t: &str| match t.parse::<f64>() {
            Ok(a) if (0.0..=1.0).contains(&a) => Ok(a),
            _ => usage(format!("bad alpha in --lambda {s}; expected a value in [0, 1]")),
        };
        let (kind, k, alpha) = match (head.to_ascii_uppercase().as_str(), rest.as_slice()) {
            ("W", []) => (LambdaKind::W, None, None),
            ("C", []) => (LambdaKind::C, None, None),
            ("A", []) => (LambdaKind::A, None, None),
            ("K", []) => (LambdaKind::K, None, None),
            ("K", [k]) => (LambdaKind::K, Some(int(k)?), None),
            ("D", []) => (LambdaKind::D, None, None),
            ("D", [a]) => (LambdaKind::D, None, Some(real(a)?)),
            ("S", []) => (LambdaKind::S, None, None),
            ("S", [k]) => (LambdaKind::S, Some(int(k)?), None),
            ("S", [k, a]) => (LambdaKind::S, Some(int(k)?), Some(real(a)?)),
            _ => return usage(format!("unknown --lambda {s:?}; expected W|C|K:<k>|D:<alpha>|S:<k>:<alpha>|A|@<file>")),
        };
        Ok(LambdaSpec::Family { kind, k, alpha })
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::File(p) => write!(f, "@{p}"),
            LambdaSpec::Family { kind, k, alpha } => {
                write!(f, "{}", kind.label())?;
                if let Some(k) = k {
                    write!(f, ":{k}")?;
                }
                if let Some(a) = alpha {
                    write!(f, ":{a}")?;
                }
                Ok(())
            }
        }
    }
}

impl LambdaSpec {
    /// Builds the weight vector for `n` points. Relative `@file` paths are
    /// resolved against `base`.
    pub fn build(&self, n: usize, base: Option<&Path>) -> CliResult<LambdaVector> {
        match self {
            LambdaSpec::Family { kind, k, alpha } => {
                let k = k.unwrap_or(n / 2);
                if matches!(kind, LambdaKind::K | LambdaKind::S) && k > n {
                    return usage(format!("k = {k} exceeds n = {n}"));
                }
                Ok(make_lambda(*kind, n, k, alpha.unwrap_or(DEFAULT_ALPHA))?)
            }
            LambdaSpec::File(p) => {
                let path = match base {
                    Some(b) if Path::new(p).is_relative() => b.join(p),
                    _ => Path::new(p).to_path_buf(),
                };
                let shown = path.display().to_string();
                let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: shown.clone(), source })?;
                let weights = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| CliError::Usage(format!("{shown}: bad weight {t:?}"))))
                    .collect::<CliResult<Vec<f64>>>()?;
                if weights.len() != n {
                    return usage(format!("{shown}: expected {n} weights, found {}", weights.len()));
                }
                Ok(LambdaVector::custom(weights)?)
            }
        }
    }
}

pub fn parse_norm(s: &str) -> CliResult<NormSpec> {
    match s.to_ascii_lowercase().as_str() {
        "l1" => Ok(NormSpec::L1),
        "l2" => Ok(NormSpec::L2),
        other => {
            let frac = other.strip_prefix("ltau:").and_then(|t| t.split_once('/'));
            match frac.map(|(r, s)| (r.parse::<u32>(), s.parse::<u32>())) {
                Some((Ok(r), Ok(s))) => Ok(NormSpec::ltau(r, s)?),
                _ => usage(format!("unknown --norm {s:?}; expected l1|l2|ltau:<r>/<s>")),
            }
        }
    }
}

pub fn norm_label(norm: NormSpec) -> String {
    match norm {
        NormSpec::L1 => "l1".into(),
        NormSpec::L2 => "l2".into(),
        NormSpec::LTau { r, s } => format!("ltau:{r}/{s}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Bnp,
    Matheur,
    KMean(usize),
    Ptf(usize),
    GridOracle(usize),
    PartitionOracle,
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let positive = |a: Option<&str>| match a.map(str::parse::<usize>) {
            Some(Ok(v)) if v > 0 => Ok(v),
            _ => usage(format!("--method {s} needs a positive integer argument")),
        };
        match head.to_ascii_lowercase().as_str() {
            "bnp" if arg.is_none() => Ok(Method::Bnp),
            "matheur" if arg.is_none() => Ok(Method::Matheur),
            "partition-oracle" if arg.is_none() => Ok(Method::PartitionOracle),
            "kmean" => Ok(Method::KMean(positive(arg)?)),
            "ptf" => Ok(Method::Ptf(positive(arg)?)),
            "grid-oracle" => Ok(Method::GridOracle(positive(arg)?)),
            _ => usage(format!(
                "unknown --method {s:?}; expected bnp|matheur|kmean:<m>|ptf:<m>|grid-oracle:<res>|partition-oracle"
            )),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Bnp => write!(f, "bnp"),
            Method::Matheur => write!(f, "matheur"),
            Method::KMean(m) => write!(f, "kmean:{m}"),
            Method::Ptf(m) => write!(f, "ptf:{m}"),
            Method::GridOracle(r) => write!(f, "grid-oracle:{r}"),
            Method::PartitionOracle => write!(f, "partition-oracle"),
        }
    }
}

/// `auto` maps to `None`, letting the solver pick θ from the λ kind.
pub fn parse_theta(s: &str) -> CliResult<Option<f64>> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(t) if (0.0..=1.0).contains(&t) => Ok(Some(t)),
        _ => usage(format!("bad --theta {s:?}; expected auto or a value in [0, 1]")),
    }
}
