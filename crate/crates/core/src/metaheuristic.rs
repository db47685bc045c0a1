//! Route Fracture: re-solve the customers of the costliest teams and splice
//! the result back in when simulation says it is cheaper.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostBreakdown, Instance, Route, Schedule, Solution, SolverConfig};
use crate::pipeline::{evaluation_seed, solve_candidates_only};
use crate::simulation::{simulate_replications, simulate_solution};
use crate::stochastic::derive_seed;

/// Teams ordered by decreasing simulated total cost, ties to the lower index;
/// the first `i` of them.
pub fn worst_teams(report: &CostBreakdown, i: usize) -> Result<Vec<usize>> {
    let m = report.per_team.len();
    if i == 0 || i > m {
        return Err(Error::param("i", format!("must lie in 1..={m}, got {i}")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        report.per_team[b]
            .total
            .total_cmp(&report.per_team[a].total)
            .then(a.cmp(&b))
    });
    order.truncate(i);
    Ok(order)
}

/// Removes `teams` from `solution` and appends `routes`/`schedules`, renumbering.
pub fn replace(solution: &Solution, teams: &[usize], routes: Vec<Route>, schedules: Vec<Schedule>) -> Solution {
    let mut out = Solution::new(Vec::new(), Vec::new(), solution.provenance.clone());
    for (k, (r, s)) in solution.routes.iter().zip(&solution.schedules).enumerate() {
        if !teams.contains(&k) {
            out.routes.push(r.clone());
            out.schedules.push(s.clone());
        }
    }
    out.routes.extend(routes);
    out.schedules.extend(schedules);
    out.renumber();
    out
}

/// One level of the metaheuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Number of worst teams replaced, when a replacement was accepted.
    pub replaced: Option<usize>,
    pub total: f64,
    pub teams: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractureRun {
    pub solution: Solution,
    pub report: CostBreakdown,
    pub initial_total: f64,
    pub initial_teams: usize,
    pub history: Vec<LevelRecord>,
}

impl FractureRun {
    /// Relative improvement of each accepted level over the previous total.
    pub fn level_improvements(&self) -> Vec<f64> {
        let mut prev = self.initial_total;
        self.history
            .iter()
            .map(|h| {
                let gain = (prev - h.total) / prev;
                prev = h.total;
                gain
            })
            .collect()
    }
}

struct Proposal {
    replaced: usize,
    solution: Solution,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 {
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, v)
}

/// Candidate splices for each `i` whose sub-solution beats the replaced
/// teams by more than the standard error of the difference.
fn proposals(solution: &Solution, instance: &Instance, config: &SolverConfig, level: usize) -> Result<Vec<Proposal>> {
    let model = config.cancellation_lambda;
    let reps = config.mc_replications;
    let inc_seed = derive_seed(config.master_seed, "fracture-incumbent", level as u64);
    let sub_seed = derive_seed(config.master_seed, "fracture-candidate", level as u64);
    let incumbent = simulate_replications(solution, instance, model, reps, inc_seed)?;
    let order = worst_teams(&incumbent.breakdown(), solution.n_teams())?;

    let found: Vec<Option<Proposal>> = (1..=solution.n_teams())
        .into_par_iter()
        .map(|i| -> Result<Option<Proposal>> {
            let mut teams = order[..i].to_vec();
            teams.sort_unstable();
            let mut customers: Vec<usize> = teams.iter().flat_map(|&t| solution.routes[t].stops.iter().copied()).collect();
            customers.sort_unstable();
            if customers.is_empty() {
                return Ok(None);
            }
            let (sub, ids) = instance.sub_instance(&customers)?;
            let sub_config = SolverConfig {
                metaheuristic_level: 0,
                master_seed: derive_seed(config.master_seed, "fracture-subsolve", (level as u64) << 32 | i as u64),
                ..config.clone()
            };
            let (sub_solution, _) = match solve_candidates_only(&sub, &sub_config) {
                Ok(found) => found,
                Err(Error::NoCandidate) | Err(Error::Infeasible { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let routes: Vec<Route> = sub_solution
                .routes
                .iter()
                .map(|r| Route::new(r.team, r.stops.iter().map(|&c| ids[c]).collect()))
                .collect();
            let mapped = Solution::new(routes.clone(), sub_solution.schedules.clone(), Default::default());
            let candidate = simulate_replications(&mapped, instance, model, reps, sub_seed)?;
            let (inc_mean, inc_var) = mean_var(&incumbent.subset_totals(&teams));
            let (sub_mean, sub_var) = mean_var(&candidate.totals());
            let se = ((inc_var + sub_var) / reps as f64).sqrt();
            if inc_mean - sub_mean > se {
                Ok(Some(Proposal {
                    replaced: i,
                    solution: replace(solution, &teams, routes, sub_solution.schedules),
                }))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// One step: returns the best improving splice and its report under the
/// shared evaluation seed, or `None` when no splice improves on `current`.
pub fn route_fracture_step_at(
    solution: &Solution,
    current: &CostBreakdown,
    instance: &Instance,
    config: &SolverConfig,
    level: usize,
) -> Result<Option<(Solution, CostBreakdown, usize)>> {
    let eval = evaluation_seed(config);
    let mut best: Option<(Solution, CostBreakdown, usize)> = None;
    for p in proposals(solution, instance, config, level)? {
        let report = simulate_solution(&p.solution, instance, config.cancellation_lambda, config.mc_replications, eval)?;
        let bar = best.as_ref().map_or(current.total, |b| b.1.total);
        if report.total < bar {
            best = Some((p.solution, report, p.replaced));
        }
    }
    Ok(best.map(|(mut s, r, i)| {
        s.provenance.fracture_steps += 1;
        (s, r, i)
    }))
}

pub fn route_fracture_step(solution: &Solution, instance: &Instance, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let current = simulate_solution(solution, instance, config.cancellation_lambda, config.mc_replications, evaluation_seed(config))?;
    Ok(route_fracture_step_at(solution, &current, instance, config, 0)?
        .map_or_else(|| solution.clone(), |(s, _, _)| s))
}

/// Up to `metaheuristic_level` steps, stopping at the first one without improvement.
pub fn route_fracture(solution: &Solution, instance: &Instance, config: &SolverConfig) -> Result<FractureRun> {
    config.validate()?;
    solution.validate(instance)?;
    let report = simulate_solution(solution, instance, config.cancellation_lambda, config.mc_replications, evaluation_seed(config))?;
    let mut run = FractureRun {
        solution: solution.clone(),
        initial_total: report.total,
        initial_teams: solution.n_teams(),
        report,
        history: Vec::new(),
    };
    for level in 0..config.metaheuristic_level {
        match route_fracture_step_at(&run.solution, &run.report, instance, config, level)? {
            Some((s, r, i)) => {
                run.history.push(LevelRecord {
                    level: level + 1,
                    replaced: Some(i),
                    total: r.total,
                    teams: s.n_teams(),
                });
                run.solution = s;
                run.report = r;
            }
            None => break,
        }
    }
    Ok(run)
}
