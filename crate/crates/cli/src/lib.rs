//! Shared request handling for the `hsara` command line and HTTP service.
//!
//! Both front ends go through [`solve_request`] and [`simulate_request`], so a
//! given document and seed yields the same output whichever way it arrives.

pub mod server;

use hsara::io::{InstanceDocument, ReportDocument, SolutionDocument};
use hsara::metaheuristic::LevelRecord;
use hsara::pipeline::{solve_detailed, CandidateSummary};
use hsara::simulation::{simulate_solution, trace_replication, TeamTrace};
use hsara::{CancellationModel, Instance, SolverConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_REPLICATIONS: usize = 500;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRequest {
    pub instance: InstanceDocument,
    #[serde(default)]
    pub config: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResponse {
    pub solution: SolutionDocument,
    pub report: ReportDocument,
    pub candidates: Vec<CandidateSummary>,
    pub fracture: Vec<LevelRecord>,
}

pub fn solve_request(instance: &Instance, config: &SolverConfig) -> hsara::Result<SolveResponse> {
    let outcome = solve_detailed(instance, config)?;
    Ok(SolveResponse {
        solution: SolutionDocument::from(&outcome.solution),
        report: ReportDocument::from(&outcome.report),
        candidates: outcome.candidates,
        fracture: outcome.fracture,
    })
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_model() -> CancellationModel {
    CancellationModel::LastMinute
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateRequest {
    pub instance: InstanceDocument,
    pub solution: SolutionDocument,
    #[serde(default = "default_model")]
    pub cancellation_lambda: CancellationModel,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Report, plus the traces of one replication when `trace` is given.
pub fn simulate_request(
    req: SimulateRequest,
    trace: Option<usize>,
) -> hsara::Result<(ReportDocument, Option<Vec<TeamTrace>>)> {
    if req.replications == 0 {
        return Err(hsara::Error::InvalidParameter {
            field: "replications",
            reason: "must be at least 1".into(),
        });
    }
    let instance = req.instance.into_instance()?;
    let solution = req.solution.into_solution()?;
    solution.validate(&instance)?;
    let report = simulate_solution(&solution, &instance, req.cancellation_lambda, req.replications, req.seed)?;
    let traces = trace
        .map(|rep| trace_replication(&solution, &instance, req.cancellation_lambda, req.seed, rep))
        .transpose()?;
    Ok((ReportDocument::from(&report), traces))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomInstanceResponse {
    pub instance: InstanceDocument,
    pub config: SolverConfig,
}

pub fn random_instance(seed: u64) -> RandomInstanceResponse {
    let (instance, config) = hsara::io::generate_random(seed);
    RandomInstanceResponse {
        instance: InstanceDocument::from(&instance),
        config,
    }
}
