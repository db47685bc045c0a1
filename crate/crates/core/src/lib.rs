//! Solver for home-service assignment, routing and appointment scheduling
//! under stochastic travel times, service durations and cancellations.
//!
//! The solve is two-staged: [`routing`] builds team routes for a range of team
//! counts, [`scheduling`] turns each route into appointment times, and
//! [`simulation`] scores every candidate by Monte Carlo. [`pipeline`] selects
//! the cheapest candidate and [`metaheuristic`] then replaces the worst teams.

pub mod error;
pub mod io;
pub mod metaheuristic;
pub mod model;
pub mod pipeline;
pub mod routing;
pub mod scheduling;
pub mod simulation;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{
    CancellationModel, CostBreakdown, Instance, Parameters, Point, Provenance, Route,
    RoutingModel, Schedule, ScheduleKind, SchedulingModel, Solution, SolverConfig, TeamCost,
};
