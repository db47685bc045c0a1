//! Two-stage solve: routing candidates over models and team counts, schedules
//! per candidate, Monte Carlo selection, then Route Fracture. Also the
//! experiment harness that tabulates costs per scheduling model.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::generate_case_study;
use crate::metaheuristic::{route_fracture, LevelRecord};
use crate::model::{
    CancellationModel, CostBreakdown, Instance, Provenance, RoutingModel, ScheduleKind, SchedulingModel,
    Solution, SolverConfig,
};
use crate::routing::{sweep_team_counts, TeamCandidate};
use crate::scheduling::{baseline_schedule, mc_scheduler};
use crate::simulation::simulate_solution;
use crate::stochastic::derive_seed;

/// Seed every candidate, and the final report, is scored under.
pub fn evaluation_seed(config: &SolverConfig) -> u64 {
    derive_seed(config.master_seed, "evaluation", 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub model: RoutingModel,
    pub teams: usize,
    pub kind: ScheduleKind,
    pub solution: Solution,
    pub report: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub model: RoutingModel,
    pub teams: usize,
    pub kind: ScheduleKind,
    pub total: f64,
}

impl From<&Candidate> for CandidateSummary {
    fn from(c: &Candidate) -> Self {
        CandidateSummary {
            model: c.model,
            teams: c.teams,
            kind: c.kind,
            total: c.report.total,
        }
    }
}

/// Everything a solve produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: Solution,
    pub report: CostBreakdown,
    pub candidates: Vec<CandidateSummary>,
    /// Total and team count before the metaheuristic.
    pub initial_total: f64,
    pub initial_teams: usize,
    pub fracture: Vec<LevelRecord>,
}

fn schedule_candidate(
    cand: &TeamCandidate,
    kind: ScheduleKind,
    instance: &Instance,
    config: &SolverConfig,
) -> Result<Candidate> {
    let baseline: Vec<_> = cand.routes.iter().map(|r| baseline_schedule(r, instance)).collect();
    let schedules = match kind {
        ScheduleKind::Baseline => baseline,
        ScheduleKind::Simulated => {
            let cfg = SolverConfig {
                master_seed: derive_seed(
                    config.master_seed,
                    "candidate-scheduler",
                    (cand.model as u64) << 32 | cand.teams as u64,
                ),
                ..config.clone()
            };
            mc_scheduler(&cand.routes, &baseline, &cfg, instance)?
        }
    };
    let solution = Solution::new(
        cand.routes.clone(),
        schedules,
        Provenance {
            routing_models: vec![cand.model],
            schedule_kinds: vec![kind],
            cancellation_lambda: Some(config.cancellation_lambda.lambda()),
            fracture_steps: 0,
        },
    );
    let report = simulate_solution(
        &solution,
        instance,
        config.cancellation_lambda,
        config.mc_replications,
        evaluation_seed(config),
    )?;
    Ok(Candidate {
        model: cand.model,
        teams: cand.teams,
        kind,
        solution,
        report,
    })
}

/// Every scored candidate in (routing model, team count, schedule kind) order.
pub fn solve_candidates(instance: &Instance, config: &SolverConfig) -> Result<Vec<Candidate>> {
    config.validate()?;
    let mut routings: Vec<TeamCandidate> = config
        .routing_models_canonical()
        .into_iter()
        .flat_map(|m| sweep_team_counts(instance, m))
        .collect();
    routings.sort_by_key(|c| (c.model, c.teams));
    let jobs: Vec<(&TeamCandidate, ScheduleKind)> = routings
        .iter()
        .flat_map(|c| config.scheduling_model.kinds().iter().map(move |&k| (c, k)))
        .collect();
    if jobs.is_empty() {
        return Err(Error::NoCandidate);
    }
    jobs.par_iter()
        .map(|(c, k)| schedule_candidate(c, *k, instance, config))
        .collect()
}

/// Cheapest candidate; earlier candidates win ties.
pub fn select(candidates: &[Candidate]) -> Result<&Candidate> {
    candidates
        .iter()
        .reduce(|best, c| if c.report.total < best.report.total { c } else { best })
        .ok_or(Error::NoCandidate)
}

/// Candidate generation and selection only (no metaheuristic).
pub fn solve_candidates_only(instance: &Instance, config: &SolverConfig) -> Result<(Solution, CostBreakdown)> {
    let candidates = solve_candidates(instance, config)?;
    let best = select(&candidates)?;
    Ok((best.solution.clone(), best.report.clone()))
}

pub fn solve_detailed(instance: &Instance, config: &SolverConfig) -> Result<SolveOutcome> {
    let candidates = solve_candidates(instance, config)?;
    let best = select(&candidates)?;
    let summaries = candidates.iter().map(CandidateSummary::from).collect();
    let mut outcome = SolveOutcome {
        solution: best.solution.clone(),
        report: best.report.clone(),
        candidates: summaries,
        initial_total: best.report.total,
        initial_teams: best.solution.n_teams(),
        fracture: Vec::new(),
    };
    if config.metaheuristic_level > 0 {
        let run = route_fracture(&best.solution, instance, config)?;
        outcome.solution = run.solution;
        outcome.report = run.report;
        outcome.fracture = run.history;
    }
    Ok(outcome)
}

/// Solution and its report under [`evaluation_seed`].
pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<(Solution, CostBreakdown)> {
    let o = solve_detailed(instance, config)?;
    Ok((o.solution, o.report))
}

/// Experiment grid. Each trial draws one case-study layout per `N`, shared by
/// every `p_C` and `lambda` so cells are compared on matched instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSpec {
    pub n_values: Vec<usize>,
    pub p_c_values: Vec<f64>,
    pub lambdas: Vec<CancellationModel>,
    pub trials: usize,
    pub replications: usize,
    pub scheduler_iterations: usize,
    pub routing_models: Vec<RoutingModel>,
    /// When positive, adds `Both` and `Both+RF` rows.
    pub metaheuristic_level: usize,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            n_values: vec![20, 30, 40, 50],
            p_c_values: vec![0.01, 0.1, 0.5],
            lambdas: vec![CancellationModel::LastMinute, CancellationModel::Notified],
            trials: 10,
            replications: 200,
            scheduler_iterations: 10,
            routing_models: RoutingModel::ALL.to_vec(),
            metaheuristic_level: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: String,
    pub n: usize,
    pub p_c: f64,
    pub lambda: u8,
    pub waiting: f64,
    pub idling: f64,
    pub overtime: f64,
    pub scheduling_cost: f64,
    pub routing_cost: f64,
    pub total: f64,
    pub teams: f64,
    /// `None` on aggregate rows.
    pub trial: Option<usize>,
}

impl BenchmarkRow {
    fn from_report(model: &str, n: usize, p_c: f64, lambda: u8, trial: usize, r: &CostBreakdown, teams: usize) -> Self {
        BenchmarkRow {
            model: model.to_string(),
            n,
            p_c,
            lambda,
            waiting: r.waiting,
            idling: r.idling,
            overtime: r.overtime,
            scheduling_cost: r.scheduling_cost(),
            routing_cost: r.routing_cost(),
            total: r.total,
            teams: teams as f64,
            trial: Some(trial),
        }
    }
}

pub fn benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkRow>> {
    if spec.trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let mut cells = Vec::new();
    for &n in &spec.n_values {
        for &p_c in &spec.p_c_values {
            for &lambda in &spec.lambdas {
                for trial in 0..spec.trials {
                    cells.push((n, p_c, lambda, trial));
                }
            }
        }
    }
    let per_trial: Vec<Vec<BenchmarkRow>> = cells
        .par_iter()
        .map(|&(n, p_c, lambda, trial)| benchmark_trial(spec, n, p_c, lambda, trial))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for chunk in per_trial.chunks(spec.trials) {
        let flat: Vec<&BenchmarkRow> = chunk.iter().flatten().collect();
        rows.extend(flat.iter().map(|r| (*r).clone()));
        let mut models: Vec<&str> = Vec::new();
        for r in &flat {
            if !models.contains(&r.model.as_str()) {
                models.push(&r.model);
            }
        }
        for m in models {
            let group: Vec<&&BenchmarkRow> = flat.iter().filter(|r| r.model == m).collect();
            let k = group.len() as f64;
            let mean = |f: fn(&BenchmarkRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / k;
            let first = group[0];
            rows.push(BenchmarkRow {
                model: m.to_string(),
                n: first.n,
                p_c: first.p_c,
                lambda: first.lambda,
                waiting: mean(|r| r.waiting),
                idling: mean(|r| r.idling),
                overtime: mean(|r| r.overtime),
                scheduling_cost: mean(|r| r.scheduling_cost),
                routing_cost: mean(|r| r.routing_cost),
                total: mean(|r| r.total),
                teams: mean(|r| r.teams),
                trial: None,
            });
        }
    }
    Ok(rows)
}

fn benchmark_trial(
    spec: &BenchmarkSpec,
    n: usize,
    p_c: f64,
    lambda: CancellationModel,
    trial: usize,
) -> Result<Vec<BenchmarkRow>> {
    let layout_seed = derive_seed(spec.seed, "benchmark-instance", (n as u64) << 32 | trial as u64);
    let instance = generate_case_study(n, p_c, layout_seed)?;
    let base = SolverConfig {
        routing_models: spec.routing_models.clone(),
        scheduling_model: SchedulingModel::Both,
        cancellation_lambda: lambda,
        metaheuristic_level: 0,
        mc_replications: spec.replications,
        scheduler_iterations: spec.scheduler_iterations,
        master_seed: derive_seed(spec.seed, "benchmark-solve", (n as u64) << 32 | trial as u64),
    };
    let eval_seed = derive_seed(spec.seed, "benchmark-eval", (n as u64) << 32 | trial as u64);
    let evaluate = |s: &Solution| simulate_solution(s, &instance, lambda, spec.replications, eval_seed);
    let lam = lambda.lambda();

    let mut rows = Vec::new();
    let mut runs = vec![("Baseline", SchedulingModel::Baseline), ("Simulated", SchedulingModel::Simulated)];
    if spec.metaheuristic_level > 0 {
        runs.push(("Both", SchedulingModel::Both));
    }
    for (name, model) in runs {
        let cfg = SolverConfig {
            scheduling_model: model,
            ..base.clone()
        };
        let (sol, _) = solve_candidates_only(&instance, &cfg)?;
        let r = evaluate(&sol)?;
        rows.push(BenchmarkRow::from_report(name, n, p_c, lam, trial, &r, sol.n_teams()));
        if model == SchedulingModel::Both {
            let cfg = SolverConfig {
                metaheuristic_level: spec.metaheuristic_level,
                ..cfg
            };
            let run = route_fracture(&sol, &instance, &cfg)?;
            let r = evaluate(&run.solution)?;
            rows.push(BenchmarkRow::from_report("Both+RF", n, p_c, lam, trial, &r, run.solution.n_teams()));
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "model,N,p_C,lambda,waiting,idling,overtime,scheduling_cost,routing_cost,total,M,trial";

/// Delimited text with one header row; aggregate rows carry `mean` as trial.
pub fn rows_to_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let trial = r.trial.map_or("mean".to_string(), |t| t.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.model, r.n, r.p_c, r.lambda, r.waiting, r.idling, r.overtime, r.scheduling_cost, r.routing_cost, r.total, r.teams, trial
        )
        .unwrap();
    }
    out
}
