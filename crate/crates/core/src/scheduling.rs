//! Appointment schedules: the deterministic baseline plan and its Monte Carlo refinement.

use crate::error::{Error, Result};
use crate::model::{CancellationModel, Instance, Route, Schedule, SolverConfig};
use crate::simulation::estimate_arrivals;
use crate::stochastic::RngStream;

/// Early stop once no appointment moves by more than this many minutes.
pub const CONVERGENCE_MINUTES: f64 = 0.5;

/// Plan with service times replaced by their mean `(1 - p_C) mu_S`.
pub fn baseline_schedule(route: &Route, instance: &Instance) -> Schedule {
    let service = instance.params().expected_service();
    let mut appointments = Vec::with_capacity(route.len());
    let mut here = 0;
    let mut clock = 0.0;
    for (k, &c) in route.stops.iter().enumerate() {
        if k > 0 {
            clock += service;
        }
        clock += instance.expected_travel(here, c);
        appointments.push(clock);
        here = c;
    }
    Schedule {
        team: route.team,
        appointments,
    }
}

/// Result of the iterative refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerRun {
    pub schedules: Vec<Schedule>,
    pub iterations: usize,
    /// Largest appointment change in each round.
    pub max_changes: Vec<f64>,
}

/// Repeatedly sets each appointment to the mean simulated arrival time under
/// the current schedules.
pub fn mc_scheduler(
    routes: &[Route],
    schedules: &[Schedule],
    config: &SolverConfig,
    instance: &Instance,
) -> Result<Vec<Schedule>> {
    Ok(mc_scheduler_run(routes, schedules, config, instance)?.schedules)
}

pub fn mc_scheduler_run(
    routes: &[Route],
    schedules: &[Schedule],
    config: &SolverConfig,
    instance: &Instance,
) -> Result<SchedulerRun> {
    config.validate()?;
    if routes.len() != schedules.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} routes but {} schedules",
            routes.len(),
            schedules.len()
        )));
    }
    let mut current = schedules.to_vec();
    let mut max_changes = Vec::new();
    for iteration in 0..config.scheduler_iterations {
        let root = RngStream::derive(config.master_seed, "scheduler", iteration as u64);
        let mut change = 0.0f64;
        for (route, schedule) in routes.iter().zip(current.iter_mut()) {
            let updated = refine_once(route, schedule, instance, config.cancellation_lambda, config.mc_replications, &root)?;
            for (a, b) in schedule.appointments.iter().zip(&updated.appointments) {
                change = change.max((a - b).abs());
            }
            *schedule = updated;
        }
        max_changes.push(change);
        if change < CONVERGENCE_MINUTES {
            break;
        }
    }
    Ok(SchedulerRun {
        schedules: current,
        iterations: max_changes.len(),
        max_changes,
    })
}

fn refine_once(
    route: &Route,
    schedule: &Schedule,
    instance: &Instance,
    model: CancellationModel,
    replications: usize,
    root: &RngStream,
) -> Result<Schedule> {
    let est = estimate_arrivals(route, schedule, instance, model, replications, root)?;
    // Stops never reached (always skipped) keep their previous time; the running
    // max keeps the plan ordered when skips thin out some estimates.
    let mut floor = 0.0f64;
    let appointments = est
        .mean
        .iter()
        .zip(&schedule.appointments)
        .map(|(m, &old)| {
            floor = floor.max(m.unwrap_or(old));
            floor
        })
        .collect();
    Schedule::new(route.team, appointments)
}
