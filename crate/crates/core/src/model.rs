//! Domain types and the deterministic cost algebra.
//!
//! Index conventions: location `0` is the depot, customers are `1..=N`.
//! Team indices are zero based and follow the order of `Solution::routes`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit prices, horizon and distribution moments of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// May be omitted in documents; it is then taken from the customer list.
    #[serde(default)]
    pub n_customers: usize,
    /// End of standard service hours `L`, minutes.
    #[serde(rename = "end_time_L")]
    pub end_time: f64,
    #[serde(rename = "mu_S")]
    pub mu_s: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    /// Mean travel speed, km per minute.
    #[serde(rename = "mu_V")]
    pub mu_v: f64,
    #[serde(rename = "assignment_cost_f")]
    pub assignment_cost: f64,
    #[serde(rename = "lambda_T")]
    pub lambda_t: f64,
    #[serde(rename = "lambda_W")]
    pub lambda_w: f64,
    #[serde(rename = "lambda_I")]
    pub lambda_i: f64,
    #[serde(rename = "lambda_O")]
    pub lambda_o: f64,
    #[serde(rename = "p_C")]
    pub p_c: f64,
    #[serde(default = "default_travel_sigma")]
    pub travel_sigma: f64,
}

fn default_travel_sigma() -> f64 {
    0.5
}

impl Parameters {
    pub fn validate(&self) -> Result<()> {
        fn finite(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(field, format!("{v} is not finite")))
            }
        }
        finite("end_time_L", self.end_time)?;
        finite("mu_S", self.mu_s)?;
        finite("sigma_S", self.sigma_s)?;
        finite("mu_V", self.mu_v)?;
        finite("travel_sigma", self.travel_sigma)?;
        if self.end_time <= 0.0 {
            return Err(Error::param("end_time_L", "must be positive"));
        }
        if self.mu_s <= 0.0 {
            return Err(Error::param("mu_S", "must be positive"));
        }
        if self.sigma_s < 0.0 {
            return Err(Error::param("sigma_S", "must be non-negative"));
        }
        // Uniform service law needs non-negative support.
        if self.mu_s - self.sigma_s * 3f64.sqrt() < 0.0 {
            return Err(Error::param(
                "sigma_S",
                "uniform service time with this mean and deviation has negative support",
            ));
        }
        if self.mu_v <= 0.0 {
            return Err(Error::param("mu_V", "must be positive"));
        }
        if self.travel_sigma < 0.0 {
            return Err(Error::param("travel_sigma", "must be non-negative"));
        }
        for (field, v) in [
            ("assignment_cost_f", self.assignment_cost),
            ("lambda_T", self.lambda_t),
            ("lambda_W", self.lambda_w),
            ("lambda_I", self.lambda_i),
            ("lambda_O", self.lambda_o),
        ] {
            finite(field, v)?;
            if v < 0.0 {
                return Err(Error::param(field, "unit costs must be non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.p_c) {
            return Err(Error::param("p_C", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Expected service load per customer, `(1 - p_C) * mu_S`.
    pub fn expected_service(&self) -> f64 {
        (1.0 - self.p_c) * self.mu_s
    }
}

/// A planar location in kilometres, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Dense symmetric matrix over depot + customers.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn euclidean(points: &[Point]) -> Self {
        let size = points.len();
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = points[i].distance(&points[j]);
                data[i * size + j] = d;
                data[j * size + i] = d;
            }
        }
        DistanceMatrix { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }
}

/// Customer locations plus parameters. The depot sits at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    params: Parameters,
    customers: Vec<Point>,
    distance: DistanceMatrix,
}

impl Instance {
    pub fn new(params: Parameters, customers: Vec<Point>) -> Result<Self> {
        params.validate()?;
        if params.n_customers != customers.len() {
            return Err(Error::param(
                "n_customers",
                format!(
                    "declares {} customers but {} coordinates were given",
                    params.n_customers,
                    customers.len()
                ),
            ));
        }
        if let Some(p) = customers.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::param(
                "customers",
                format!("non-finite coordinate ({}, {})", p.x, p.y),
            ));
        }
        let mut points = Vec::with_capacity(customers.len() + 1);
        points.push(Point::ORIGIN);
        points.extend_from_slice(&customers);
        let distance = DistanceMatrix::euclidean(&points);
        Ok(Instance {
            params,
            customers,
            distance,
        })
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    /// Same customers under different parameters.
    pub fn with_params(&self, mut params: Parameters) -> Result<Self> {
        params.n_customers = self.customers.len();
        Instance::new(params, self.customers.clone())
    }

    pub fn n_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn customers(&self) -> &[Point] {
        &self.customers
    }

    /// Location `i`; `0` is the depot.
    pub fn location(&self, i: usize) -> Point {
        if i == 0 {
            Point::ORIGIN
        } else {
            self.customers[i - 1]
        }
    }

    pub fn distance_matrix(&self) -> &DistanceMatrix {
        &self.distance
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.distance.get(i, j)
    }

    /// Mean travel time of a leg, `d / mu_V`.
    #[inline]
    pub fn expected_travel(&self, i: usize, j: usize) -> f64 {
        self.distance.get(i, j) / self.params.mu_v
    }

    /// Instance restricted to the given customers (1-based ids of `self`).
    /// Returns the new instance and the map `new id -> old id` (index 0 is the depot).
    pub fn sub_instance(&self, customers: &[usize]) -> Result<(Instance, Vec<usize>)> {
        let mut ids = Vec::with_capacity(customers.len() + 1);
        ids.push(0);
        let mut points = Vec::with_capacity(customers.len());
        for &c in customers {
            if c == 0 || c > self.n_customers() {
                return Err(Error::InvalidSolution(format!("customer {c} out of range")));
            }
            ids.push(c);
            points.push(self.customers[c - 1]);
        }
        let mut params = self.params;
        params.n_customers = points.len();
        Ok((Instance::new(params, points)?, ids))
    }
}

/// Team route; the depot endpoints are implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    pub team: usize,
    pub stops: Vec<usize>,
}

impl Route {
    pub fn new(team: usize, stops: Vec<usize>) -> Self {
        Route { team, stops }
    }

    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    /// Legs `(from, to)` including the two depot legs.
    pub fn legs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.stops.len();
        (0..=n).filter(move |_| n > 0).map(move |k| {
            let from = if k == 0 { 0 } else { self.stops[k - 1] };
            let to = if k == n { 0 } else { self.stops[k] };
            (from, to)
        })
    }

    pub fn distance(&self, instance: &Instance) -> f64 {
        self.legs().map(|(a, b)| instance.dist(a, b)).sum()
    }
}

/// Appointment times for a route; `a_0 = 0` at the depot is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub team: usize,
    pub appointments: Vec<f64>,
}

impl Schedule {
    pub fn new(team: usize, appointments: Vec<f64>) -> Result<Self> {
        check_appointments(&appointments)?;
        Ok(Schedule { team, appointments })
    }

    pub fn len(&self) -> usize {
        self.appointments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.appointments.is_empty()
    }
}

fn check_appointments(appointments: &[f64]) -> Result<()> {
    let mut previous = 0.0;
    for (index, &a) in appointments.iter().enumerate() {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::param("appointments", format!("{a} at position {index}")));
        }
        if a < previous {
            return Err(Error::DecreasingAppointments {
                index,
                previous,
                current: a,
            });
        }
        previous = a;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingModel {
    Distance,
    Capacity,
    TimeWindows,
}

impl RoutingModel {
    pub const ALL: [RoutingModel; 3] = [
        RoutingModel::Distance,
        RoutingModel::Capacity,
        RoutingModel::TimeWindows,
    ];
}

impl fmt::Display for RoutingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoutingModel::Distance => "distance",
            RoutingModel::Capacity => "capacity",
            RoutingModel::TimeWindows => "time_windows",
        })
    }
}

/// Which appointment schedules the pipeline builds for each routing candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulingModel {
    Baseline,
    Simulated,
    Both,
}

impl SchedulingModel {
    pub fn kinds(self) -> &'static [ScheduleKind] {
        match self {
            SchedulingModel::Baseline => &[ScheduleKind::Baseline],
            SchedulingModel::Simulated => &[ScheduleKind::Simulated],
            SchedulingModel::Both => &[ScheduleKind::Baseline, ScheduleKind::Simulated],
        }
    }
}

/// How a concrete schedule was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Baseline,
    Simulated,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Baseline => "Baseline",
            ScheduleKind::Simulated => "Simulated",
        })
    }
}

/// Cancellation extremes: last-minute (0) or notified in advance (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum CancellationModel {
    LastMinute,
    Notified,
}

impl CancellationModel {
    pub fn lambda(self) -> u8 {
        match self {
            CancellationModel::LastMinute => 0,
            CancellationModel::Notified => 1,
        }
    }
}

impl TryFrom<u8> for CancellationModel {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(CancellationModel::LastMinute),
            1 => Ok(CancellationModel::Notified),
            other => Err(format!("cancellation model must be 0 or 1, got {other}")),
        }
    }
}

impl From<CancellationModel> for u8 {
    fn from(m: CancellationModel) -> u8 {
        m.lambda()
    }
}

/// Which models produced a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub routing_models: Vec<RoutingModel>,
    pub schedule_kinds: Vec<ScheduleKind>,
    pub cancellation_lambda: Option<u8>,
    /// Number of accepted route-fracture steps.
    pub fracture_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub schedules: Vec<Schedule>,
    pub provenance: Provenance,
}

impl Solution {
    pub fn new(routes: Vec<Route>, schedules: Vec<Schedule>, provenance: Provenance) -> Self {
        Solution {
            routes,
            schedules,
            provenance,
        }
    }

    pub fn n_teams(&self) -> usize {
        self.routes.len()
    }

    /// Renumber teams to match their position.
    pub fn renumber(&mut self) {
        for (k, r) in self.routes.iter_mut().enumerate() {
            r.team = k;
        }
        for (k, s) in self.schedules.iter_mut().enumerate() {
            s.team = k;
        }
    }

    /// Checks the customer partition and route/schedule alignment.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.routes.len() != self.schedules.len() {
            return Err(Error::InvalidSolution(format!(
                "{} routes but {} schedules",
                self.routes.len(),
                self.schedules.len()
            )));
        }
        let n = instance.n_customers();
        let mut seen = vec![false; n + 1];
        for (route, schedule) in self.routes.iter().zip(&self.schedules) {
            if route.team != schedule.team {
                return Err(Error::InvalidSolution(format!(
                    "route team {} paired with schedule team {}",
                    route.team, schedule.team
                )));
            }
            if route.len() != schedule.len() {
                return Err(Error::InvalidSolution(format!(
                    "team {} has {} stops but {} appointments",
                    route.team,
                    route.len(),
                    schedule.len()
                )));
            }
            check_appointments(&schedule.appointments)?;
            for &c in &route.stops {
                if c == 0 || c > n {
                    return Err(Error::InvalidSolution(format!("customer {c} out of range")));
                }
                if seen[c] {
                    return Err(Error::InvalidSolution(format!("customer {c} visited twice")));
                }
                seen[c] = true;
            }
        }
        if let Some(c) = (1..=n).find(|&c| !seen[c]) {
            return Err(Error::InvalidSolution(format!("customer {c} not visited")));
        }
        Ok(())
    }
}

/// Checks that `routes` partition customers `1..=n`, ignoring schedules.
pub fn check_partition(routes: &[Route], n: usize) -> Result<()> {
    let mut set = BTreeSet::new();
    for r in routes {
        for &c in &r.stops {
            if c == 0 || c > n || !set.insert(c) {
                return Err(Error::InvalidSolution(format!("customer {c} repeated or out of range")));
            }
        }
    }
    if set.len() != n {
        return Err(Error::InvalidSolution(format!(
            "{} of {n} customers routed",
            set.len()
        )));
    }
    Ok(())
}

/// Mean costs of one team.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct TeamCost {
    pub team: usize,
    pub assignment: f64,
    pub travel: f64,
    pub waiting: f64,
    pub idling: f64,
    pub overtime: f64,
    pub total: f64,
}

/// Empirical mean costs of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CostBreakdown {
    pub assignment: f64,
    pub travel: f64,
    pub waiting: f64,
    pub idling: f64,
    pub overtime: f64,
    pub total: f64,
    pub per_team: Vec<TeamCost>,
    pub replications: usize,
}

impl CostBreakdown {
    pub fn routing_cost(&self) -> f64 {
        self.assignment + self.travel
    }

    pub fn scheduling_cost(&self) -> f64 {
        self.waiting + self.idling + self.overtime
    }

    /// `|total - sum(components)| <= tol * max(1, |total|)`.
    pub fn identity_holds(&self, tol: f64) -> bool {
        let sum = self.assignment + self.travel + self.waiting + self.idling + self.overtime;
        (self.total - sum).abs() <= tol * self.total.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub routing_models: Vec<RoutingModel>,
    pub scheduling_model: SchedulingModel,
    pub cancellation_lambda: CancellationModel,
    pub metaheuristic_level: usize,
    pub mc_replications: usize,
    pub scheduler_iterations: usize,
    pub master_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            routing_models: RoutingModel::ALL.to_vec(),
            scheduling_model: SchedulingModel::Both,
            cancellation_lambda: CancellationModel::LastMinute,
            metaheuristic_level: 0,
            mc_replications: 500,
            scheduler_iterations: 10,
            master_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.routing_models.is_empty() {
            return Err(Error::param("routing_models", "at least one routing model is required"));
        }
        if self.mc_replications == 0 {
            return Err(Error::param("mc_replications", "must be at least 1"));
        }
        if self.scheduler_iterations == 0 {
            return Err(Error::param("scheduler_iterations", "must be at least 1"));
        }
        Ok(())
    }

    /// Routing models deduplicated in canonical order.
    pub fn routing_models_canonical(&self) -> Vec<RoutingModel> {
        let set: BTreeSet<_> = self.routing_models.iter().copied().collect();
        set.into_iter().collect()
    }
}

/// Gaps between consecutive appointments, with the implicit `a_0 = 0`.
pub fn inter_schedule(appointments: &[f64]) -> Result<Vec<f64>> {
    check_appointments(appointments)?;
    let mut previous = 0.0;
    Ok(appointments
        .iter()
        .map(|&a| {
            let x = a - previous;
            previous = a;
            x
        })
        .collect())
}

/// Expected routing cost: `M f + lambda_T * sum of expected leg travel times`.
pub fn routing_cost(routes: &[Route], instance: &Instance) -> f64 {
    let p = instance.params();
    let travel: f64 = routes.iter().map(|r| r.distance(instance)).sum::<f64>() / p.mu_v;
    routes.len() as f64 * p.assignment_cost + p.lambda_t * travel
}

/// Per-stop waits and idles plus overtime, all in minutes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecursionCosts {
    pub waits: Vec<f64>,
    pub idles: Vec<f64>,
    pub overtime: f64,
}

/// Waiting/idling/overtime recursion for one route.
///
/// `x` are inter-schedule times, `z` realized service times and `t` realized
/// leg travel times (one more than stops: the last leg returns to the depot).
pub fn recursion_costs(x: &[f64], z: &[f64], t: &[f64], end_time: f64) -> Result<RecursionCosts> {
    let n = x.len();
    if z.len() != n || t.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "|x| = {n}, |z| = {}, |t| = {} (expected |z| = |x|, |t| = |x| + 1)",
            z.len(),
            t.len()
        )));
    }
    if n == 0 {
        return Ok(RecursionCosts {
            overtime: (t[0] - end_time).max(0.0),
            ..Default::default()
        });
    }
    let mut waits = Vec::with_capacity(n);
    let mut idles = Vec::with_capacity(n);
    // Depot: W_0 = Z_0 = 0.
    let mut w_prev = 0.0;
    let mut z_prev = 0.0;
    for i in 0..n {
        let slack = w_prev + z_prev + t[i];
        let w = (slack - x[i]).max(0.0);
        let idle = (x[i] - slack).max(0.0);
        waits.push(w);
        idles.push(idle);
        w_prev = w;
        z_prev = z[i];
    }
    let sum_x: f64 = x.iter().sum();
    let overtime = (w_prev + z_prev + sum_x + t[n] - end_time).max(0.0);
    Ok(RecursionCosts {
        waits,
        idles,
        overtime,
    })
}
