//! Event-driven replay of a team's day and Monte Carlo aggregation.
//!
//! A team leaves the depot at time 0, travels each leg with a sampled travel
//! time, idles until the appointment when early, makes the customer wait when
//! late, serves, and finally returns to the depot where time past `L` is
//! overtime. Under last-minute cancellation a cancelled customer is still
//! visited, but the team learns of it on arrival and leaves at once: no
//! service, no waiting customer, no idle time. Under notified cancellation a cancellation
//! becomes visible once its notification time has passed, and the team may
//! then skip the stop (see [`reroute_decision`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    inter_schedule, recursion_costs, CancellationModel, CostBreakdown, Instance, RecursionCosts, Route,
    Schedule, Solution, TeamCost,
};
use crate::stochastic::{DistributionSpec, RngStream};

/// Mini-replications used by the reroute test.
pub const LOOKAHEAD_REPLICATIONS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopOutcome {
    Served,
    /// Cancelled; discovered on arrival.
    CancelledOnSite,
    /// Known cancelled but still routed through (skip was not cheaper).
    PassedThrough,
    Skipped,
}

/// Inputs and result of one reroute comparison, kept for audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerouteDecision {
    pub position: usize,
    pub clock: f64,
    pub visit_routing: f64,
    pub visit_scheduling: f64,
    pub skip_routing: f64,
    pub skip_scheduling: f64,
    pub skip: bool,
}

/// One team's realized day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamTrace {
    pub team: usize,
    /// Arrival per stop; `None` when the stop was skipped.
    pub arrival_times: Vec<Option<f64>>,
    pub outcomes: Vec<StopOutcome>,
    pub waits: Vec<f64>,
    pub idles: Vec<f64>,
    pub service_times: Vec<f64>,
    pub travel_minutes: f64,
    pub return_time: f64,
    pub overtime_minutes: f64,
    pub travel_cost: f64,
    pub waiting_cost: f64,
    pub idling_cost: f64,
    pub overtime_cost: f64,
    pub reroutes: Vec<RerouteDecision>,
}

impl TeamTrace {
    pub fn skipped_stops(&self) -> Vec<usize> {
        self.outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == StopOutcome::Skipped)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn variable_cost(&self) -> f64 {
        self.travel_cost + self.waiting_cost + self.idling_cost + self.overtime_cost
    }
}

/// Source of the random quantities a traversal consumes.
pub trait SampleSource {
    /// Travel time of the leg into stop position `leg` (`leg == n` is the
    /// return to the depot) over `distance`.
    fn travel(&mut self, leg: usize, distance: f64) -> f64;
    /// Unmasked service time at stop position `position`.
    fn service(&mut self, position: usize) -> f64;
    fn cancelled(&mut self, position: usize) -> bool;
    /// Notification time as a fraction of the appointment, in `[0, 1)`.
    fn cancel_fraction(&mut self, position: usize) -> f64;
    fn lookahead(&mut self) -> &mut RngStream;
}

#[derive(Debug, Clone, Copy)]
struct StopDraw {
    service: f64,
    cancelled: bool,
    cancel_fraction: f64,
    travel_normal: f64,
}

/// Samples drawn from a team stream. Every per-stop quantity, including the
/// standard normal behind the leg into the stop, is drawn up front so a skip
/// never shifts later samples; reroute lookahead continues on the same stream.
pub struct StreamSamples {
    stops: Vec<StopDraw>,
    return_normal: f64,
    rng: RngStream,
    dist: DistributionSpec,
}

impl StreamSamples {
    pub fn new(mut team_stream: RngStream, n_stops: usize, dist: &DistributionSpec) -> Self {
        let rng = &mut team_stream;
        let stops = (0..n_stops)
            .map(|_| StopDraw {
                service: dist.service.sample(rng),
                cancelled: dist.cancel.sample_cancelled(rng),
                cancel_fraction: rng.unit(),
                travel_normal: rng.standard_normal(),
            })
            .collect();
        let return_normal = team_stream.standard_normal();
        StreamSamples {
            stops,
            return_normal,
            rng: team_stream,
            dist: *dist,
        }
    }
}

impl SampleSource for StreamSamples {
    fn travel(&mut self, leg: usize, distance: f64) -> f64 {
        let n = self.stops.get(leg).map_or(self.return_normal, |s| s.travel_normal);
        self.dist.travel.scale(distance, n)
    }

    fn service(&mut self, position: usize) -> f64 {
        self.stops[position].service
    }

    fn cancelled(&mut self, position: usize) -> bool {
        self.stops[position].cancelled
    }

    fn cancel_fraction(&mut self, position: usize) -> f64 {
        self.stops[position].cancel_fraction
    }

    fn lookahead(&mut self) -> &mut RngStream {
        &mut self.rng
    }
}

/// Pre-drawn samples: `travel[k]` is the leg into stop `k`, `travel[n]` the return.
pub struct FixedSamples {
    pub travel: Vec<f64>,
    pub service: Vec<f64>,
    pub cancelled: Vec<bool>,
    pub cancel_fraction: Vec<f64>,
    lookahead_rng: RngStream,
}

impl FixedSamples {
    /// No cancellations.
    pub fn new(travel: Vec<f64>, service: Vec<f64>) -> Self {
        let n = service.len();
        FixedSamples {
            travel,
            service,
            cancelled: vec![false; n],
            cancel_fraction: vec![1.0; n],
            lookahead_rng: RngStream::derive(0, "fixed-lookahead", 0),
        }
    }

    pub fn with_cancellations(mut self, cancelled: Vec<bool>, cancel_fraction: Vec<f64>) -> Self {
        self.cancelled = cancelled;
        self.cancel_fraction = cancel_fraction;
        self
    }
}

impl SampleSource for FixedSamples {
    fn travel(&mut self, leg: usize, _distance: f64) -> f64 {
        self.travel[leg]
    }

    fn service(&mut self, position: usize) -> f64 {
        self.service[position]
    }

    fn cancelled(&mut self, position: usize) -> bool {
        self.cancelled[position]
    }

    fn cancel_fraction(&mut self, position: usize) -> f64 {
        self.cancel_fraction[position]
    }

    fn lookahead(&mut self) -> &mut RngStream {
        &mut self.lookahead_rng
    }
}

/// Skip-or-visit test for a known-cancelled stop.
///
/// `from` is the current location and `clock` the departure time. `cancelled`
/// is the known-cancelled customer and `following` the next location with its
/// appointment, or `None` when the cancelled stop is the last one (the
/// comparison then targets the depot and prices overtime instead).
#[allow(clippy::too_many_arguments)]
pub fn reroute_decision(
    from: usize,
    cancelled: usize,
    following: Option<(usize, f64)>,
    clock: f64,
    instance: &Instance,
    dist: &DistributionSpec,
    rng: &mut RngStream,
    position: usize,
) -> RerouteDecision {
    let p = instance.params();
    let next = following.map_or(0, |(loc, _)| loc);
    let penalty = |t: f64| match following {
        Some((_, a)) => p.lambda_w * (t - a).max(0.0) + p.lambda_i * (a - t).max(0.0),
        None => p.lambda_o * (t - p.end_time).max(0.0),
    };
    let visit_routing = p.lambda_t * (instance.expected_travel(from, cancelled) + instance.expected_travel(cancelled, next));
    let skip_routing = p.lambda_t * instance.expected_travel(from, next);

    let (mut s_visit, mut s_skip) = (0.0, 0.0);
    for _ in 0..LOOKAHEAD_REPLICATIONS {
        let t1 = clock
            + dist.travel.sample(instance.dist(from, cancelled), rng)
            + dist.travel.sample(instance.dist(cancelled, next), rng);
        let t2 = clock + dist.travel.sample(instance.dist(from, next), rng);
        s_visit += penalty(t1);
        s_skip += penalty(t2);
    }
    let visit_scheduling = s_visit / LOOKAHEAD_REPLICATIONS as f64;
    let skip_scheduling = s_skip / LOOKAHEAD_REPLICATIONS as f64;
    RerouteDecision {
        position,
        clock,
        visit_routing,
        visit_scheduling,
        skip_routing,
        skip_scheduling,
        skip: skip_routing + skip_scheduling < visit_routing + visit_scheduling,
    }
}

/// Replays one team's day with samples from `source`.
pub fn simulate_route_with<S: SampleSource>(
    route: &Route,
    schedule: &Schedule,
    instance: &Instance,
    dist: &DistributionSpec,
    model: CancellationModel,
    source: &mut S,
) -> TeamTrace {
    let p = instance.params();
    let n = route.len();
    let stops = &route.stops;
    let appts = &schedule.appointments;

    let cancelled: Vec<bool> = (0..n).map(|i| source.cancelled(i)).collect();
    let cancel_at: Vec<f64> = (0..n).map(|i| appts[i] * source.cancel_fraction(i)).collect();

    let mut trace = TeamTrace {
        team: route.team,
        arrival_times: vec![None; n],
        outcomes: vec![StopOutcome::Skipped; n],
        waits: vec![0.0; n],
        idles: vec![0.0; n],
        service_times: vec![0.0; n],
        travel_minutes: 0.0,
        return_time: 0.0,
        overtime_minutes: 0.0,
        travel_cost: 0.0,
        waiting_cost: 0.0,
        idling_cost: 0.0,
        overtime_cost: 0.0,
        reroutes: Vec::new(),
    };

    let mut clock = 0.0;
    let mut here = 0usize;
    let mut pos = 0usize;
    let (mut wait_sum, mut idle_sum) = (0.0, 0.0);
    while pos < n {
        let known = |i: usize, clock: f64| {
            model == CancellationModel::Notified && cancelled[i] && cancel_at[i] <= clock
        };
        if n > 0 && known(pos, clock) {
            let following = (pos + 1 < n).then(|| (stops[pos + 1], appts[pos + 1]));
            let decision = reroute_decision(here, stops[pos], following, clock, instance, dist, source.lookahead(), pos);
            trace.reroutes.push(decision);
            if decision.skip {
                trace.outcomes[pos] = StopOutcome::Skipped;
                pos += 1;
                continue;
            }
        }
        let pass_through = known(pos, clock);
        let target = stops[pos];
        let t = source.travel(pos, instance.dist(here, target));
        trace.travel_minutes += t;
        clock += t;
        trace.arrival_times[pos] = Some(clock);
        let z = source.service(pos);
        if pass_through {
            trace.outcomes[pos] = StopOutcome::PassedThrough;
        } else if cancelled[pos] {
            // Learned on the doorstep: nobody waits and the team moves on.
            trace.outcomes[pos] = StopOutcome::CancelledOnSite;
        } else {
            let a = appts[pos];
            if clock < a {
                trace.idles[pos] = a - clock;
                idle_sum += a - clock;
                clock = a;
            }
            let w = (clock - a).max(0.0);
            trace.waits[pos] = w;
            wait_sum += w;
            trace.outcomes[pos] = StopOutcome::Served;
            trace.service_times[pos] = z;
            clock += z;
        }
        here = target;
        pos += 1;
    }
    if n > 0 {
        let t = source.travel(n, instance.dist(here, 0));
        trace.travel_minutes += t;
        clock += t;
    }
    trace.return_time = clock;
    trace.overtime_minutes = (clock - p.end_time).max(0.0);
    trace.travel_cost = p.lambda_t * trace.travel_minutes;
    trace.waiting_cost = p.lambda_w * wait_sum;
    trace.idling_cost = p.lambda_i * idle_sum;
    trace.overtime_cost = p.lambda_o * trace.overtime_minutes;
    trace
}

/// Replays one team's day drawing from `rng` as the team stream.
pub fn simulate_route(
    route: &Route,
    schedule: &Schedule,
    instance: &Instance,
    model: CancellationModel,
    rng: &mut RngStream,
) -> Result<TeamTrace> {
    if route.len() != schedule.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} stops but {} appointments",
            route.len(),
            schedule.len()
        )));
    }
    let dist = DistributionSpec::from_params(instance.params())?;
    let mut source = StreamSamples::new(rng.clone(), route.len(), &dist);
    Ok(simulate_route_with(route, schedule, instance, &dist, model, &mut source))
}

/// Key of a route's streams. Derived from the stops so a team sees the same
/// samples in every solution that contains its route.
pub fn route_key(root: &RngStream, route: &Route) -> RngStream {
    let key: Vec<u64> = route.stops.iter().map(|&c| c as u64).collect();
    root.child_path("route", &key)
}

/// Stream of one team in replication `rep`.
pub fn team_stream(route_key: &RngStream, rep: usize) -> RngStream {
    route_key.lane(rep as u64)
}

fn replication_root(master_seed: u64) -> RngStream {
    RngStream::derive(master_seed, "replication", 0)
}

/// Per-replication, per-team costs of a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSet {
    /// `costs[rep][team]`, assignment included.
    pub costs: Vec<Vec<TeamCost>>,
    pub assignment_cost: f64,
}

impl ReplicationSet {
    pub fn replications(&self) -> usize {
        self.costs.len()
    }

    /// Per-replication totals of the given teams, their assignment included.
    pub fn subset_totals(&self, teams: &[usize]) -> Vec<f64> {
        self.costs
            .iter()
            .map(|rep| teams.iter().map(|&t| rep[t].total).sum())
            .collect()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.costs.iter().map(|rep| rep.iter().map(|c| c.total).sum()).collect()
    }

    pub fn breakdown(&self) -> CostBreakdown {
        let reps = self.costs.len();
        let n_teams = self.costs.first().map_or(0, |r| r.len());
        let mut per_team = Vec::with_capacity(n_teams);
        for team in 0..n_teams {
            let mut acc = [Neumaier::default(); 4];
            for rep in &self.costs {
                let c = &rep[team];
                acc[0].add(c.travel);
                acc[1].add(c.waiting);
                acc[2].add(c.idling);
                acc[3].add(c.overtime);
            }
            let mean = |a: &Neumaier| if reps == 0 { 0.0 } else { a.value() / reps as f64 };
            let (travel, waiting, idling, overtime) = (mean(&acc[0]), mean(&acc[1]), mean(&acc[2]), mean(&acc[3]));
            per_team.push(TeamCost {
                team,
                assignment: self.assignment_cost,
                travel,
                waiting,
                idling,
                overtime,
                total: self.assignment_cost + travel + waiting + idling + overtime,
            });
        }
        let sum = |f: fn(&TeamCost) -> f64| {
            let mut a = Neumaier::default();
            per_team.iter().for_each(|c| a.add(f(c)));
            a.value()
        };
        let assignment = sum(|c| c.assignment);
        let travel = sum(|c| c.travel);
        let waiting = sum(|c| c.waiting);
        let idling = sum(|c| c.idling);
        let overtime = sum(|c| c.overtime);
        CostBreakdown {
            assignment,
            travel,
            waiting,
            idling,
            overtime,
            total: assignment + travel + waiting + idling + overtime,
            per_team,
            replications: reps,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Runs `replications` independent days of every team.
pub fn simulate_replications(
    solution: &Solution,
    instance: &Instance,
    model: CancellationModel,
    replications: usize,
    master_seed: u64,
) -> Result<ReplicationSet> {
    if solution.routes.len() != solution.schedules.len() {
        return Err(Error::InvalidSolution("routes and schedules are not aligned".into()));
    }
    let dist = DistributionSpec::from_params(instance.params())?;
    let f = instance.params().assignment_cost;
    let root = replication_root(master_seed);
    let keys: Vec<RngStream> = solution.routes.iter().map(|r| route_key(&root, r)).collect();
    let costs = (0..replications)
        .into_par_iter()
        .map(|rep| {
            solution
                .routes
                .iter()
                .zip(&solution.schedules)
                .enumerate()
                .map(|(team, (route, schedule))| {
                    let mut source = StreamSamples::new(team_stream(&keys[team], rep), route.len(), &dist);
                    let tr = simulate_route_with(route, schedule, instance, &dist, model, &mut source);
                    TeamCost {
                        team,
                        assignment: f,
                        travel: tr.travel_cost,
                        waiting: tr.waiting_cost,
                        idling: tr.idling_cost,
                        overtime: tr.overtime_cost,
                        total: f + tr.variable_cost(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(ReplicationSet {
        costs,
        assignment_cost: f,
    })
}

/// Mean cost breakdown over `replications` seeded days.
pub fn simulate_solution(
    solution: &Solution,
    instance: &Instance,
    model: CancellationModel,
    replications: usize,
    master_seed: u64,
) -> Result<CostBreakdown> {
    Ok(simulate_replications(solution, instance, model, replications, master_seed)?.breakdown())
}

/// Traces of every team for one replication, as used by [`simulate_solution`].
pub fn trace_replication(
    solution: &Solution,
    instance: &Instance,
    model: CancellationModel,
    master_seed: u64,
    rep: usize,
) -> Result<Vec<TeamTrace>> {
    let dist = DistributionSpec::from_params(instance.params())?;
    let root = replication_root(master_seed);
    Ok(solution
        .routes
        .iter()
        .zip(&solution.schedules)
        .map(|(route, schedule)| {
            let mut source = StreamSamples::new(team_stream(&route_key(&root, route), rep), route.len(), &dist);
            simulate_route_with(route, schedule, instance, &dist, model, &mut source)
        })
        .collect())
}

/// Mean arrival time per stop, over the replications in which the stop was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalEstimate {
    pub mean: Vec<Option<f64>>,
    pub visits: Vec<usize>,
}

pub fn estimate_arrivals(
    route: &Route,
    schedule: &Schedule,
    instance: &Instance,
    model: CancellationModel,
    replications: usize,
    root: &RngStream,
) -> Result<ArrivalEstimate> {
    let dist = DistributionSpec::from_params(instance.params())?;
    let n = route.len();
    let key = route_key(root, route);
    let traces: Vec<Vec<Option<f64>>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut source = StreamSamples::new(team_stream(&key, rep), n, &dist);
            simulate_route_with(route, schedule, instance, &dist, model, &mut source).arrival_times
        })
        .collect();
    let mut sums = vec![Neumaier::default(); n];
    let mut visits = vec![0usize; n];
    for arrivals in &traces {
        for (i, a) in arrivals.iter().enumerate() {
            if let Some(t) = a {
                sums[i].add(*t);
                visits[i] += 1;
            }
        }
    }
    let mean = sums
        .iter()
        .zip(&visits)
        .map(|(s, &v)| (v > 0).then(|| s.value() / v as f64))
        .collect();
    Ok(ArrivalEstimate { mean, visits })
}

/// Both evaluations of one sample path.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionCheck {
    pub recursion: RecursionCosts,
    pub simulation: RecursionCosts,
}

impl RecursionCheck {
    pub fn max_discrepancy(&self) -> f64 {
        let a = &self.recursion;
        let b = &self.simulation;
        a.waits
            .iter()
            .zip(&b.waits)
            .chain(a.idles.iter().zip(&b.idles))
            .map(|(x, y)| (x - y).abs())
            .fold((a.overtime - b.overtime).abs(), f64::max)
    }
}

/// Feeds the same realized service times `z` and leg times `t` (|t| = |z| + 1)
/// to the closed recursion and to the event simulation (last-minute model).
pub fn recursion_check(
    route: &Route,
    schedule: &Schedule,
    instance: &Instance,
    z: &[f64],
    t: &[f64],
) -> Result<RecursionCheck> {
    let x = inter_schedule(&schedule.appointments)?;
    let recursion = recursion_costs(&x, z, t, instance.params().end_time)?;
    if route.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} stops but {} service samples",
            route.len(),
            z.len()
        )));
    }
    let dist = DistributionSpec::from_params(instance.params())?;
    let mut source = FixedSamples::new(t.to_vec(), z.to_vec());
    let tr = simulate_route_with(route, schedule, instance, &dist, CancellationModel::LastMinute, &mut source);
    let overtime = if route.is_empty() {
        (t[0] - instance.params().end_time).max(0.0)
    } else {
        tr.overtime_minutes
    };
    Ok(RecursionCheck {
        recursion,
        simulation: RecursionCosts {
            waits: tr.waits,
            idles: tr.idles,
            overtime,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tests::params, Point, Provenance};
    use crate::scheduling::baseline_schedule;

    fn deterministic(mut p: crate::model::Parameters) -> crate::model::Parameters {
        p.travel_sigma = 0.0;
        p.sigma_s = 0.0;
        p.p_c = 0.0;
        p
    }

    fn line_instance(p: crate::model::Parameters, xs: &[f64]) -> Instance {
        let mut p = p;
        p.n_customers = xs.len();
        Instance::new(p, xs.iter().map(|&x| Point::new(x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn deterministic_baseline_has_no_wait_or_idle() {
        let inst = Instance::new(
            deterministic(params(3)),
            vec![Point::new(3.0, 4.0), Point::new(6.0, 8.0), Point::new(-2.0, 1.0)],
        )
        .unwrap();
        let route = Route::new(0, vec![1, 2, 3]);
        let sched = baseline_schedule(&route, &inst);
        let mut rng = RngStream::derive(1, "t", 0);
        let tr = simulate_route(&route, &sched, &inst, CancellationModel::LastMinute, &mut rng).unwrap();
        assert!(tr.waits.iter().all(|w| *w == 0.0));
        assert!(tr.idles.iter().all(|i| i.abs() < 1e-12));
        let expected = inst.params().lambda_t * route.distance(&inst);
        assert!((tr.travel_cost - expected).abs() < 1e-9);
    }

    #[test]
    fn overtime_after_late_arrival() {
        let mut p = deterministic(params(1));
        p.mu_s = 1.0;
        p.sigma_s = 0.0;
        // Service ends at 500 at the customer, which sits on the depot's doorstep.
        let inst = line_instance(p, &[1e-9]);
        let route = Route::new(0, vec![1]);
        let sched = Schedule::new(0, vec![499.0]).unwrap();
        let mut rng = RngStream::derive(2, "t", 0);
        let tr = simulate_route(&route, &sched, &inst, CancellationModel::LastMinute, &mut rng).unwrap();
        assert!((tr.return_time - 500.0).abs() < 1e-6);
        assert!((tr.overtime_cost - 300.0).abs() < 1e-4);
    }

    #[test]
    fn overtime_with_fixed_samples() {
        let inst = line_instance(params(1), &[10.0]);
        let route = Route::new(0, vec![1]);
        let sched = Schedule::new(0, vec![100.0]).unwrap();
        let dist = DistributionSpec::from_params(inst.params()).unwrap();
        let mut src = FixedSamples::new(vec![10.0, 10.0], vec![390.0]);
        let tr = simulate_route_with(&route, &sched, &inst, &dist, CancellationModel::LastMinute, &mut src);
        assert_eq!(tr.return_time, 500.0);
        assert_eq!(tr.overtime_cost, 15.0 * 20.0);
        assert_eq!(tr.idling_cost, 5.0 * 90.0);
    }

    #[test]
    fn full_cancellation_lowers_overtime_pathwise() {
        let xs = [5.0, 12.0, -8.0, 20.0, -15.0, 3.0, 9.0];
        let mut p0 = params(xs.len());
        p0.p_c = 0.0;
        let mut p1 = p0;
        p1.p_c = 1.0;
        let i0 = line_instance(p0, &xs);
        let i1 = line_instance(p1, &xs);
        let route = Route::new(0, (1..=xs.len()).collect());
        let sched = baseline_schedule(&route, &i0);
        for rep in 0..200 {
            let mut a = RngStream::derive(9, "pathwise", rep);
            let mut b = a.clone();
            let t0 = simulate_route(&route, &sched, &i0, CancellationModel::LastMinute, &mut a).unwrap();
            let t1 = simulate_route(&route, &sched, &i1, CancellationModel::LastMinute, &mut b).unwrap();
            assert!(t1.service_times.iter().all(|z| *z == 0.0));
            assert!(t1.overtime_minutes <= t0.overtime_minutes);
            assert_eq!(t0.travel_minutes, t1.travel_minutes);
        }
    }

    #[test]
    fn last_minute_visits_every_stop() {
        let inst = line_instance(params(4), &[4.0, 8.0, 12.0, 16.0]);
        let route = Route::new(0, vec![1, 2, 3, 4]);
        let sched = baseline_schedule(&route, &inst);
        let dist = DistributionSpec::from_params(inst.params()).unwrap();
        let mut src = FixedSamples::new(vec![4.0; 5], vec![50.0; 4])
            .with_cancellations(vec![false, true, true, false], vec![0.0; 4]);
        let tr = simulate_route_with(&route, &sched, &inst, &dist, CancellationModel::LastMinute, &mut src);
        assert!(tr.arrival_times.iter().all(Option::is_some));
        assert_eq!(tr.outcomes[1], StopOutcome::CancelledOnSite);
        assert_eq!(tr.service_times, vec![50.0, 0.0, 0.0, 50.0]);
        assert!(tr.skipped_stops().is_empty());
    }

    #[test]
    fn notified_cancellation_can_skip() {
        // Detour: stop 2 sits far off the line between 1 and 3.
        let mut p = params(3);
        p.lambda_w = 0.0;
        p.lambda_i = 0.0;
        p.travel_sigma = 0.0;
        let inst = Instance::new(
            p,
            vec![Point::new(5.0, 0.0), Point::new(10.0, 20.0), Point::new(15.0, 0.0)],
        )
        .unwrap();
        let route = Route::new(0, vec![1, 2, 3]);
        let sched = baseline_schedule(&route, &inst);
        let dist = DistributionSpec::from_params(inst.params()).unwrap();
        let mut src = FixedSamples::new(vec![5.0, 99.0, 10.0, 15.0], vec![30.0; 3])
            .with_cancellations(vec![false, true, false], vec![0.0, 0.0, 0.0]);
        let tr = simulate_route_with(&route, &sched, &inst, &dist, CancellationModel::Notified, &mut src);
        assert_eq!(tr.skipped_stops(), vec![1]);
        assert_eq!(tr.arrival_times[1], None);
        assert_eq!(tr.reroutes.len(), 1);
        let d = tr.reroutes[0];
        assert!(d.skip && d.skip_routing + d.skip_scheduling < d.visit_routing + d.visit_scheduling);

        // Under the last-minute model the same path visits everything.
        let mut src = FixedSamples::new(vec![5.0, 22.36, 22.36, 15.0], vec![30.0; 3])
            .with_cancellations(vec![false, true, false], vec![0.0, 0.0, 0.0]);
        let tr = simulate_route_with(&route, &sched, &inst, &dist, CancellationModel::LastMinute, &mut src);
        assert!(tr.skipped_stops().is_empty());
    }

    #[test]
    fn reroute_collinear_tie_visits() {
        let mut p = params(3);
        p.travel_sigma = 0.0;
        let inst = line_instance(p, &[5.0, 10.0, 15.0]);
        let dist = DistributionSpec::from_params(inst.params()).unwrap();
        let mut rng = RngStream::derive(0, "r", 0);
        let d = reroute_decision(1, 2, Some((3, 100.0)), 20.0, &inst, &dist, &mut rng, 1);
        assert_eq!(d.skip_routing, d.visit_routing);
        assert_eq!(d.skip_scheduling, d.visit_scheduling);
        assert!(!d.skip);
    }

    #[test]
    fn reroute_detour_skips_without_schedule_prices() {
        let mut p = params(3);
        p.lambda_w = 0.0;
        p.lambda_i = 0.0;
        let inst = Instance::new(
            p,
            vec![Point::new(5.0, 0.0), Point::new(10.0, 3.0), Point::new(15.0, 0.0)],
        )
        .unwrap();
        let dist = DistributionSpec::from_params(inst.params()).unwrap();
        let mut rng = RngStream::derive(0, "r", 1);
        let d = reroute_decision(1, 2, Some((3, 60.0)), 30.0, &inst, &dist, &mut rng, 1);
        assert!(d.skip);
        assert_eq!(d.skip_scheduling, 0.0);
    }

    #[test]
    fn reroute_huge_idle_price_visits() {
        // Direct leg arrives at 30 + 10 = 40 against an appointment at 200;
        // the detour via the cancelled stop arrives at 30 + 2 * sqrt(5^2 + 30^2).
        let mut p = params(3);
        p.lambda_i = 1e4;
        p.lambda_w = 10.0;
        p.travel_sigma = 0.0;
        let inst = Instance::new(
            p,
            vec![Point::new(5.0, 0.0), Point::new(10.0, 30.0), Point::new(15.0, 0.0)],
        )
        .unwrap();
        let dist = DistributionSpec::from_params(inst.params()).unwrap();
        let mut rng = RngStream::derive(0, "r", 2);
        let d = reroute_decision(1, 2, Some((3, 200.0)), 30.0, &inst, &dist, &mut rng, 1);
        // R1 + S1 = 2 * 60.83 + 1e4 * (200 - 90.83); R2 + S2 = 2 * 10 + 1e4 * 160.
        assert!(!d.skip);
        assert!((d.skip_scheduling - 1e4 * 160.0).abs() < 1e-6);
    }

    #[test]
    fn reroute_last_stop_prices_overtime() {
        let mut p = params(2);
        p.travel_sigma = 0.0;
        p.lambda_t = 0.0;
        let inst = line_instance(p, &[10.0, 40.0]);
        let dist = DistributionSpec::from_params(inst.params()).unwrap();
        let mut rng = RngStream::derive(0, "r", 3);
        // From customer 1 at clock 470: detour via 2 returns at 470+30+40 = 540,
        // direct return at 480.
        let d = reroute_decision(1, 2, None, 470.0, &inst, &dist, &mut rng, 1);
        assert!((d.visit_scheduling - 15.0 * 60.0).abs() < 1e-9);
        assert_eq!(d.skip_scheduling, 0.0);
        assert!(d.skip);
    }

    #[test]
    fn single_replication_matches_route_sum() {
        let inst = Instance::new(
            params(4),
            vec![Point::new(3.0, 4.0), Point::new(6.0, 8.0), Point::new(-2.0, 1.0), Point::new(-9.0, -3.0)],
        )
        .unwrap();
        let routes = vec![Route::new(0, vec![1, 2]), Route::new(1, vec![3, 4])];
        let schedules: Vec<_> = routes.iter().map(|r| baseline_schedule(r, &inst)).collect();
        let sol = Solution::new(routes, schedules, Provenance::default());
        let report = simulate_solution(&sol, &inst, CancellationModel::LastMinute, 1, 42).unwrap();
        let traces = trace_replication(&sol, &inst, CancellationModel::LastMinute, 42, 0).unwrap();
        let var: f64 = traces.iter().map(TeamTrace::variable_cost).sum();
        assert!((report.total - (var + 2.0 * 250.0)).abs() < 1e-9);
        assert_eq!(report.replications, 1);
        assert!(report.identity_holds(1e-9));
    }

    #[test]
    fn deterministic_regime_report_has_no_wait_or_idle() {
        let inst = Instance::new(
            deterministic(params(3)),
            vec![Point::new(3.0, 4.0), Point::new(6.0, 8.0), Point::new(-2.0, 1.0)],
        )
        .unwrap();
        let routes = vec![Route::new(0, vec![1, 2]), Route::new(1, vec![3])];
        let schedules: Vec<_> = routes.iter().map(|r| baseline_schedule(r, &inst)).collect();
        let sol = Solution::new(routes, schedules, Provenance::default());
        let r = simulate_solution(&sol, &inst, CancellationModel::LastMinute, 50, 1).unwrap();
        assert_eq!(r.waiting, 0.0);
        assert!(r.idling.abs() < 1e-9);
    }

    #[test]
    fn masked_service_load_matches_expectation() {
        let inst = line_instance(params(1), &[5.0]);
        let route = Route::new(0, vec![1]);
        let sched = Schedule::new(0, vec![5.0]).unwrap();
        let dist = DistributionSpec::from_params(inst.params()).unwrap();
        let reps = 200_000;
        let mut total = 0.0;
        let key = route_key(&RngStream::derive(5, "mask", 0), &route);
        for rep in 0..reps {
            let mut src = StreamSamples::new(team_stream(&key, rep), 1, &dist);
            let tr = simulate_route_with(&route, &sched, &inst, &dist, CancellationModel::LastMinute, &mut src);
            total += tr.service_times[0];
        }
        let mean = total / reps as f64;
        // sd of masked service is about 37, so the MC standard error is ~0.08.
        assert!((mean - 54.0).abs() < 0.4, "mean {mean}");
    }

    #[test]
    fn seeded_reports_are_reproducible_under_any_thread_count() {
        let inst = Instance::new(
            params(5),
            (0..5).map(|k| Point::new(k as f64 * 3.0 - 6.0, (k * k) as f64 - 4.0)).collect(),
        )
        .unwrap();
        let routes = vec![Route::new(0, vec![1, 2, 3]), Route::new(1, vec![4, 5])];
        let schedules: Vec<_> = routes.iter().map(|r| baseline_schedule(r, &inst)).collect();
        let sol = Solution::new(routes, schedules, Provenance::default());
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_solution(&sol, &inst, CancellationModel::Notified, 300, 17).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn recursion_check_edge_cases() {
        let inst = line_instance(params(1), &[7.0]);
        let empty = recursion_check(
            &Route::new(0, vec![]),
            &Schedule::new(0, vec![]).unwrap(),
            &inst,
            &[],
            &[0.0],
        )
        .unwrap();
        assert_eq!(empty.recursion, RecursionCosts::default());
        assert_eq!(empty.simulation, RecursionCosts::default());

        let c = recursion_check(
            &Route::new(0, vec![1]),
            &Schedule::new(0, vec![5.0]).unwrap(),
            &inst,
            &[30.0],
            &[9.0, 6.0],
        )
        .unwrap();
        assert_eq!(c.recursion.waits, vec![4.0]);
        assert_eq!(c.simulation.waits, vec![4.0]);
        assert_eq!(c.max_discrepancy(), 0.0);
    }

    #[test]
    fn arrival_times_are_nondecreasing() {
        let inst = line_instance(params(5), &[3.0, -7.0, 11.0, -2.0, 6.0]);
        let route = Route::new(0, vec![1, 2, 3, 4, 5]);
        let sched = baseline_schedule(&route, &inst);
        for model in [CancellationModel::LastMinute, CancellationModel::Notified] {
            for rep in 0..100 {
                let mut rng = RngStream::derive(3, "mono", rep);
                let tr = simulate_route(&route, &sched, &inst, model, &mut rng).unwrap();
                let seen: Vec<f64> = tr.arrival_times.iter().flatten().copied().collect();
                assert!(seen.windows(2).all(|w| w[0] <= w[1]));
                for (w, i) in tr.waits.iter().zip(&tr.idles) {
                    assert_eq!(w * i, 0.0);
                }
                if model == CancellationModel::LastMinute {
                    assert!(tr.skipped_stops().is_empty());
                }
                for d in &tr.reroutes {
                    if d.skip {
                        assert!(d.skip_routing + d.skip_scheduling < d.visit_routing + d.visit_scheduling);
                    }
                }
            }
        }
    }
}
