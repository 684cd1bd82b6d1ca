//! Batch runs from a TOML manifest, written as CSV.
//!
//! ```toml
//! instances = ["eilon50.txt"]        # relative to the manifest
//! methods = ["bnp", "matheur"]
//! lambdas = ["W", "K:25"]
//! p = [2, 5]                         # defaults to each file's own p
//! norms = ["l1"]
//! time_limit = 600
//! seed = 1
//! ```
//!
//! Every combination is one row. After the runs, one `average` row per
//! (method, λ, norm, p) group summarizes its successful runs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::options::{parse_norm, parse_theta, LambdaSpec, Method};
use crate::report::{run_method, Pricing, Report, RunSettings};
use crate::DEFAULT_TIME_LIMIT;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub instances: Vec<String>,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<String>,
    #[serde(default)]
    pub p: Vec<usize>,
    #[serde(default = "default_norms")]
    pub norms: Vec<String>,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_theta")]
    pub theta: String,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_pricing")]
    pub pricing: Pricing,
}

fn default_lambdas() -> Vec<String> {
    vec!["W".into()]
}
fn default_norms() -> Vec<String> {
    vec!["l1".into()]
}
fn default_time_limit() -> f64 {
    DEFAULT_TIME_LIMIT
}
fn default_theta() -> String {
    "auto".into()
}
fn default_rounds() -> usize {
    20
}
fn default_tol() -> f64 {
    1e-6
}
fn default_pricing() -> Pricing {
    Pricing::HeuristicFirst
}

pub const HEADER: [&str; 20] = [
    "instance",
    "method",
    "lambda",
    "norm",
    "p",
    "n",
    "status",
    "objective",
    "lower_bound",
    "gap_percent",
    "gap_root_percent",
    "nodes",
    "columns",
    "exact_pricer_calls",
    "total_pricer_calls",
    "time_seconds",
    "bound_is_exact",
    "delta",
    "two_delta_bound",
    "error",
];

#[derive(Debug, Clone)]
struct Job {
    instance: String,
    path: PathBuf,
    lambda: String,
    norm: String,
    p: Option<usize>,
    method: String,
    settings: RunSettings,
}

/// One parsed manifest combination, in manifest order: instance, norm, λ, p,
/// method (innermost).
fn jobs(m: &Manifest, base: &Path) -> CliResult<Vec<Job>> {
    let methods = m.methods.iter().map(|s| s.parse::<Method>()).collect::<CliResult<Vec<_>>>()?;
    let lambdas = m.lambdas.iter().map(|s| s.parse::<LambdaSpec>()).collect::<CliResult<Vec<_>>>()?;
    let norms = m.norms.iter().map(|s| parse_norm(s)).collect::<CliResult<Vec<_>>>()?;
    let theta = parse_theta(&m.theta)?;
    let ps: Vec<Option<usize>> = if m.p.is_empty() { vec![None] } else { m.p.iter().copied().map(Some).collect() };
    let mut out = Vec::new();
    for inst in &m.instances {
        let path = base.join(inst);
        for (ni, &norm) in norms.iter().enumerate() {
            for (li, lambda) in lambdas.iter().enumerate() {
                for &p in &ps {
                    for (mi, &method) in methods.iter().enumerate() {
                        out.push(Job {
                            instance: inst.clone(),
                            path: path.clone(),
                            lambda: m.lambdas[li].clone(),
                            norm: m.norms[ni].clone(),
                            p,
                            method: m.methods[mi].clone(),
                            settings: RunSettings {
                                method,
                                lambda: lambda.clone(),
                                norm,
                                p,
                                theta,
                                time_limit: m.time_limit,
                                seed: m.seed,
                                rounds: m.rounds,
                                tol: m.tol,
                                pricing: m.pricing,
                            },
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn row(job: &Job, result: &CliResult<Report>) -> Vec<String> {
    let mut r = vec![job.instance.clone(), job.method.clone(), job.lambda.clone(), job.norm.clone()];
    match result {
        Ok(rep) => {
            let agg = rep.aggregation.as_ref();
            r.extend([
                rep.config.p.to_string(),
                rep.config.n.to_string(),
                rep.status.label().to_string(),
                num(rep.objective),
                opt(rep.lower_bound),
                opt(rep.gap_percent),
                opt(rep.gap_root_percent),
                rep.nodes.to_string(),
                rep.columns.to_string(),
                rep.exact_pricer_calls.to_string(),
                rep.total_pricer_calls.to_string(),
                num(rep.time_seconds),
                rep.bound_is_exact.to_string(),
                opt(agg.map(|a| a.delta)),
                opt(agg.map(|a| a.two_delta_bound)),
                String::new(),
            ]);
        }
        Err(e) => {
            let mut cells = vec![String::new(); HEADER.len() - r.len()];
            cells[0] = job.p.map(|p| p.to_string()).unwrap_or_default();
            cells[2] = "error".into();
            *cells.last_mut().expect("non-empty") = e.to_string();
            r.extend(cells);
        }
    }
    r
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> String {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        String::new()
    } else {
        num(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn average_rows(jobs: &[Job], results: &[CliResult<Report>]) -> Vec<Vec<String>> {
    // group key → indices, in order of first appearance
    let mut order: Vec<(String, String, String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String, String, String), Vec<usize>> = BTreeMap::new();
    for (i, (job, res)) in jobs.iter().zip(results).enumerate() {
        let p = match res {
            Ok(rep) => rep.config.p.to_string(),
            Err(_) => job.p.map(|p| p.to_string()).unwrap_or_default(),
        };
        let key = (job.method.clone(), job.lambda.clone(), job.norm.clone(), p);
        let entry = groups.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(i);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let ok: Vec<&Report> = members.iter().filter_map(|&i| results[i].as_ref().ok()).collect();
            let f = |g: &dyn Fn(&Report) -> Option<f64>| mean(ok.iter().map(|r| g(r)));
            let (method, lambda, norm, p) = key;
            vec![
                "average".into(),
                method,
                lambda,
                norm,
                p,
                f(&|r| Some(r.config.n as f64)),
                format!("average {}/{}", ok.len(), members.len()),
                f(&|r| Some(r.objective)),
                f(&|r| r.lower_bound),
                f(&|r| r.gap_percent),
                f(&|r| r.gap_root_percent),
                f(&|r| Some(r.nodes as f64)),
                f(&|r| Some(r.columns as f64)),
                f(&|r| Some(r.exact_pricer_calls as f64)),
                f(&|r| Some(r.total_pricer_calls as f64)),
                f(&|r| Some(r.time_seconds)),
                if ok.is_empty() { String::new() } else { ok.iter().all(|r| r.bound_is_exact).to_string() },
                f(&|r| r.aggregation.as_ref().map(|a| a.delta)),
                f(&|r| r.aggregation.as_ref().map(|a| a.two_delta_bound)),
                String::new(),
            ]
        })
        .collect()
}

/// Reads the manifest at `path`, runs every combination on at most `jobs`
/// threads and writes the CSV to `out`. Rows keep manifest order whatever the
/// thread count. Returns the number of failed runs.
pub fn bench(path: &Path, jobs_cap: usize, out: &mut dyn Write) -> CliResult<usize> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: shown.clone(), source })?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| CliError::Manifest(format!("{shown}: {e}")))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let list = jobs(&manifest, base)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs_cap.max(1))
        .build()
        .map_err(|e| CliError::Manifest(format!("thread pool: {e}")))?;
    let results: Vec<CliResult<Report>> = pool.install(|| list.par_iter().map(|j| run_method(&j.path, &j.settings)).collect());

    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for (job, res) in list.iter().zip(&results) {
        w.write_record(row(job, res))?;
    }
    for r in average_rows(&list, &results) {
        w.write_record(r)?;
    }
    w.flush().map_err(|source| CliError::Io { path: "<output>".into(), source })?;
    Ok(results.iter().filter(|r| r.is_err()).count())
}
