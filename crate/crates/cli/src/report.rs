//! Building one method run and its JSON report.

use std::path::Path;
use std::time::{Duration, Instant};

use mfmomp::bnp::{self, resolve_theta, SolveConfig, SolveReport};
use mfmomp::matheur::{aggregated_solve, matheur_solve, AggregationMethod};
use mfmomp::oracle::{grid_oracle, partition_oracle};
use mfmomp::{Instance, NormSpec, Point};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::instance::read_instance;
use crate::options::{norm_label, LambdaSpec, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Pricing {
    /// Heuristic pricing first, exact pricing only when it finds nothing.
    HeuristicFirst,
    /// Exact pricing in every iteration.
    ExactOnly,
}

/// Everything a single run needs besides the instance file.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub method: Method,
    pub lambda: LambdaSpec,
    pub norm: NormSpec,
    /// Overrides the facility count from the instance header.
    pub p: Option<usize>,
    pub theta: Option<f64>,
    pub time_limit: f64,
    pub seed: u64,
    pub rounds: usize,
    pub tol: f64,
    pub pricing: Pricing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Optimality proven within the tolerance.
    Optimal,
    /// A heuristic method finished normally.
    Heuristic,
    /// An exact method finished without a proof, e.g. after a node limit.
    Feasible,
    TimeLimit,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Heuristic => "heuristic",
            Status::Feasible => "feasible",
            Status::TimeLimit => "time_limit",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Status::TimeLimit => 2,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub instance: String,
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub lambda: String,
    pub norm: String,
    pub theta: f64,
    pub time_limit: f64,
    pub seed: u64,
    pub rounds: usize,
    pub tol: f64,
    pub pricing: Pricing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationEcho {
    pub representatives: usize,
    pub aggregated_objective: f64,
    pub delta: f64,
    pub two_delta_bound: f64,
}

/// The JSON document written by `solve`. Field order is the key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub objective: f64,
    pub lower_bound: Option<f64>,
    pub gap_percent: Option<f64>,
    pub gap_root_percent: Option<f64>,
    pub nodes: usize,
    pub columns: usize,
    pub exact_pricer_calls: usize,
    pub total_pricer_calls: usize,
    pub time_seconds: f64,
    pub facilities: Vec<Point>,
    pub assignment: Vec<usize>,
    pub method: String,
    pub status: Status,
    pub config: ConfigEcho,
    pub bound_is_exact: bool,
    pub aggregation: Option<AggregationEcho>,
}

/// Gap in percent, snapped to zero once a proven bound meets the objective
/// within `tol`.
pub fn reported_gap(objective: f64, bound: f64, exact: bool, tol: f64) -> f64 {
    if exact && (objective - bound).abs() <= tol * objective.abs() {
        0.0
    } else {
        bnp::gap_percent(objective, bound)
    }
}

impl Report {
    fn from_bnp(r: SolveReport, status: Status, tol: f64, config: ConfigEcho, method: Method) -> Self {
        Report {
            objective: r.incumbent.objective,
            lower_bound: Some(r.lower_bound),
            gap_percent: Some(reported_gap(r.incumbent.objective, r.lower_bound, r.bound_is_exact, tol)),
            gap_root_percent: Some(reported_gap(r.incumbent.objective, r.root_lower_bound, r.bound_is_exact, tol)),
            nodes: r.nodes,
            columns: r.columns,
            exact_pricer_calls: r.exact_pricer_calls,
            total_pricer_calls: r.total_pricer_calls,
            time_seconds: 0.0,
            facilities: r.incumbent.facilities,
            assignment: r.incumbent.assignment,
            method: method.to_string(),
            status,
            config,
            bound_is_exact: r.bound_is_exact,
            aggregation: None,
        }
    }

    fn plain(objective: f64, facilities: Vec<Point>, assignment: Vec<usize>, status: Status, config: ConfigEcho, method: Method) -> Self {
        Report {
            objective,
            lower_bound: None,
            gap_percent: None,
            gap_root_percent: None,
            nodes: 0,
            columns: 0,
            exact_pricer_calls: 0,
            total_pricer_calls: 0,
            time_seconds: 0.0,
            facilities,
            assignment,
            method: method.to_string(),
            status,
            config,
            bound_is_exact: false,
            aggregation: None,
        }
    }
}

fn bnp_status(r: &SolveReport) -> Status {
    if r.timed_out {
        Status::TimeLimit
    } else if r.bound_is_exact {
        Status::Optimal
    } else {
        Status::Feasible
    }
}

/// Loads `path`, builds the instance and runs the configured method.
pub fn run_method(path: &Path, s: &RunSettings) -> CliResult<Report> {
    let file = read_instance(path)?;
    let n = file.n();
    let p = s.p.unwrap_or(file.p);
    let lambda = s.lambda.build(n, path.parent())?;
    let kind = lambda.kind();
    let inst = Instance::new(file.points, p, s.norm, lambda)?;

    let cfg = SolveConfig {
        theta: s.theta,
        time_limit: Some(Duration::from_secs_f64(s.time_limit.max(0.0))),
        seed: s.seed,
        heuristic_first: s.pricing == Pricing::HeuristicFirst,
        exact_pricing: true,
        rounds: s.rounds,
        tol: s.tol,
        max_nodes: None,
    };
    let echo = ConfigEcho {
        instance: path.display().to_string(),
        n,
        d: inst.d(),
        p,
        lambda: s.lambda.to_string(),
        norm: norm_label(s.norm),
        theta: resolve_theta(s.theta, kind),
        time_limit: s.time_limit,
        seed: s.seed,
        rounds: s.rounds,
        tol: s.tol,
        pricing: s.pricing,
    };

    let start = Instant::now();
    let mut report = match s.method {
        Method::Bnp => {
            let r = bnp::solve(&inst, &cfg)?;
            let status = bnp_status(&r);
            Report::from_bnp(r, status, s.tol, echo, s.method)
        }
        Method::Matheur => {
            let r = matheur_solve(&inst, &cfg)?;
            let status = if r.timed_out { Status::TimeLimit } else { Status::Heuristic };
            let mut rep = Report::from_bnp(r, status, s.tol, echo, s.method);
            rep.bound_is_exact = false;
            rep
        }
        Method::KMean(m) | Method::Ptf(m) => {
            let how = if matches!(s.method, Method::KMean(_)) { AggregationMethod::KMean } else { AggregationMethod::Ptf };
            let r = aggregated_solve(&inst, how, m, &cfg)?;
            let status = if r.inner.timed_out { Status::TimeLimit } else { Status::Heuristic };
            let mut rep = Report::plain(r.solution.objective, r.solution.facilities, r.solution.assignment, status, echo, s.method);
            rep.nodes = r.inner.nodes;
            rep.columns = r.inner.columns;
            rep.exact_pricer_calls = r.inner.exact_pricer_calls;
            rep.total_pricer_calls = r.inner.total_pricer_calls;
            rep.aggregation = Some(AggregationEcho {
                representatives: m.min(n),
                aggregated_objective: r.aggregated_objective,
                delta: r.delta,
                two_delta_bound: r.two_delta_bound,
            });
            rep
        }
        Method::GridOracle(res) => {
            let sol = grid_oracle(&inst, res)?;
            Report::plain(sol.objective, sol.facilities, sol.assignment, Status::Heuristic, echo, s.method)
        }
        Method::PartitionOracle => {
            let r = partition_oracle(&inst)?;
            let obj = r.solution.objective;
            let mut rep = Report::plain(obj, r.solution.facilities, r.solution.assignment, Status::Optimal, echo, s.method);
            rep.lower_bound = Some(r.lower_bound);
            rep.gap_percent = Some(reported_gap(obj, r.lower_bound, true, s.tol));
            rep.bound_is_exact = true;
            rep
        }
    };
    report.time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
