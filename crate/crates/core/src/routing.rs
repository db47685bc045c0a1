//! First stage: team routes for a fixed team count, under three route models.
//!
//! Construction is a parallel Clarke-Wright savings pass that stops merging
//! once exactly `M` routes remain. It is followed by a first-improvement local
//! search (intra-route 2-opt, segment relocation, inter-route swap and tail
//! exchange) that keeps every route feasible and nonempty.

use crate::error::{Error, Result};
use crate::model::{routing_cost, Instance, Route, RoutingModel};

const EPS: f64 = 1e-9;
const MAX_SEGMENT: usize = 3;

/// Per-route feasibility rule of a routing model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteConstraint {
    pub model: RoutingModel,
    /// Expected service load per stop, `(1 - p_C) mu_S`.
    pub demand: f64,
    pub limit: f64,
    pub mu_v: f64,
}

impl RouteConstraint {
    pub fn new(model: RoutingModel, instance: &Instance) -> Self {
        let p = instance.params();
        RouteConstraint {
            model,
            demand: p.expected_service(),
            limit: p.end_time,
            mu_v: p.mu_v,
        }
    }

    /// `stops` customers with a closed tour of `length` km.
    #[inline]
    pub fn allows(&self, stops: usize, length: f64) -> bool {
        let slack = self.limit * (1.0 + 1e-12);
        match self.model {
            RoutingModel::Distance => true,
            RoutingModel::Capacity => stops as f64 * self.demand <= slack,
            RoutingModel::TimeWindows => length / self.mu_v + stops as f64 * self.demand <= slack,
        }
    }

    pub fn allows_route(&self, route: &Route, instance: &Instance) -> bool {
        self.allows(route.len(), route.distance(instance))
    }
}

/// `ceil(N (1 - p_C) mu_S / L)`, at least 1.
pub fn min_teams_capacity(instance: &Instance) -> usize {
    let p = instance.params();
    let ratio = instance.n_customers() as f64 * p.expected_service() / p.end_time;
    // Absorb rounding when the load is an exact multiple of L.
    ((ratio - 1e-9).ceil() as usize).max(1)
}

pub fn solve_distance(instance: &Instance, teams: usize) -> Result<Vec<Route>> {
    solve(instance, teams, RoutingModel::Distance)
}

pub fn solve_capacity(instance: &Instance, teams: usize) -> Result<Vec<Route>> {
    let bound = min_teams_capacity(instance);
    if teams < bound {
        return Err(Error::Infeasible {
            model: RoutingModel::Capacity,
            teams,
            reason: format!("total expected load needs at least {bound} teams"),
        });
    }
    solve(instance, teams, RoutingModel::Capacity)
}

pub fn solve_time_windows(instance: &Instance, teams: usize) -> Result<Vec<Route>> {
    solve(instance, teams, RoutingModel::TimeWindows)
}

/// Exactly `teams` nonempty routes covering every customer.
pub fn solve(instance: &Instance, teams: usize, model: RoutingModel) -> Result<Vec<Route>> {
    let n = instance.n_customers();
    if teams == 0 || teams > n {
        return Err(Error::Infeasible {
            model,
            teams,
            reason: format!("team count must lie in 1..={n}"),
        });
    }
    let constraint = RouteConstraint::new(model, instance);
    if let Some(c) = (1..=n).find(|&c| !constraint.allows(1, 2.0 * instance.dist(0, c))) {
        return Err(Error::Infeasible {
            model,
            teams,
            reason: format!("customer {c} alone exceeds the route limit"),
        });
    }
    let routes = savings(instance, teams, &constraint)?;
    let mut search = LocalSearch::new(instance, constraint, routes);
    search.run(200 * n);
    Ok(search
        .routes
        .into_iter()
        .enumerate()
        .map(|(team, stops)| Route::new(team, stops))
        .collect())
}

/// Candidate from the team-count sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamCandidate {
    pub model: RoutingModel,
    pub teams: usize,
    pub routes: Vec<Route>,
    pub routing_cost: f64,
}

/// Team counts the sweep visits for `model`.
pub fn sweep_range(instance: &Instance, model: RoutingModel) -> std::ops::RangeInclusive<usize> {
    let n = instance.n_customers();
    let upper = if n >= 3 { n / 3 } else { n };
    let lower = match model {
        RoutingModel::Capacity => min_teams_capacity(instance),
        _ => 1,
    };
    lower.max(1)..=upper
}

/// Routes for every feasible team count, cheapest routing cost first.
pub fn sweep_team_counts(instance: &Instance, model: RoutingModel) -> Vec<TeamCandidate> {
    let mut out: Vec<TeamCandidate> = sweep_range(instance, model)
        .filter_map(|m| {
            let routes = solve(instance, m, model).ok()?;
            let cost = routing_cost(&routes, instance);
            Some(TeamCandidate {
                model,
                teams: m,
                routes,
                routing_cost: cost,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.routing_cost
            .total_cmp(&b.routing_cost)
            .then(a.teams.cmp(&b.teams))
    });
    out
}

fn depot_tour(instance: &Instance, stops: &[usize]) -> f64 {
    if stops.is_empty() {
        return 0.0;
    }
    let mut len = instance.dist(0, stops[0]) + instance.dist(*stops.last().unwrap(), 0);
    for w in stops.windows(2) {
        len += instance.dist(w[0], w[1]);
    }
    len
}

fn savings(instance: &Instance, teams: usize, cons: &RouteConstraint) -> Result<Vec<Vec<usize>>> {
    let n = instance.n_customers();
    let d = |i: usize, j: usize| instance.dist(i, j);

    let mut routes: Vec<Option<Vec<usize>>> = (0..=n)
        .map(|c| if c == 0 { None } else { Some(vec![c]) })
        .collect();
    let mut lengths: Vec<f64> = (0..=n).map(|c| 2.0 * d(0, c)).collect();
    let mut owner: Vec<usize> = (0..=n).collect();
    let mut count = n;

    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 1..=n {
        for j in (i + 1)..=n {
            pairs.push((d(0, i) + d(0, j) - d(i, j), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    for &(s, i, j) in &pairs {
        if count == teams {
            break;
        }
        let (ri, rj) = (owner[i], owner[j]);
        if ri == rj {
            continue;
        }
        let a = routes[ri].as_ref().unwrap();
        let b = routes[rj].as_ref().unwrap();
        let i_end = *a.first().unwrap() == i || *a.last().unwrap() == i;
        let j_end = *b.first().unwrap() == j || *b.last().unwrap() == j;
        if !i_end || !j_end {
            continue;
        }
        let len = lengths[ri] + lengths[rj] - s;
        if !cons.allows(a.len() + b.len(), len) {
            continue;
        }
        let mut a = routes[ri].take().unwrap();
        let mut b = routes[rj].take().unwrap();
        if *a.last().unwrap() != i {
            a.reverse();
        }
        if *b.first().unwrap() != j {
            b.reverse();
        }
        for &c in &b {
            owner[c] = ri;
        }
        a.extend(b);
        routes[ri] = Some(a);
        lengths[ri] = len;
        count -= 1;
    }

    let mut routes: Vec<Vec<usize>> = routes.into_iter().flatten().collect();
    while routes.len() > teams {
        if !merge_cheapest(instance, cons, &mut routes) && !dissolve_one(instance, cons, &mut routes) {
            return Err(Error::Infeasible {
                model: cons.model,
                teams,
                reason: format!("cannot reduce below {} feasible routes", routes.len()),
            });
        }
    }
    Ok(routes)
}

/// Concatenates the pair of routes whose union is shortest.
fn merge_cheapest(instance: &Instance, cons: &RouteConstraint, routes: &mut Vec<Vec<usize>>) -> bool {
    let lengths: Vec<f64> = routes.iter().map(|r| depot_tour(instance, r)).collect();
    let mut best: Option<(f64, usize, usize, bool, bool)> = None;
    for a in 0..routes.len() {
        for b in (a + 1)..routes.len() {
            let (ra, rb) = (&routes[a], &routes[b]);
            // Join tail(a') to head(b'), with optional reversal of each.
            for rev_a in [false, true] {
                for rev_b in [false, true] {
                    let tail = if rev_a { ra[0] } else { *ra.last().unwrap() };
                    let head = if rev_b { *rb.last().unwrap() } else { rb[0] };
                    let len = lengths[a] + lengths[b] - instance.dist(tail, 0) - instance.dist(0, head)
                        + instance.dist(tail, head);
                    if !cons.allows(ra.len() + rb.len(), len) {
                        continue;
                    }
                    if best.is_none_or(|(bl, ..)| len < bl - EPS) {
                        best = Some((len, a, b, rev_a, rev_b));
                    }
                }
            }
        }
    }
    let Some((_, a, b, rev_a, rev_b)) = best else {
        return false;
    };
    let mut rb = routes.remove(b);
    let ra = &mut routes[a];
    if rev_a {
        ra.reverse();
    }
    if rev_b {
        rb.reverse();
    }
    ra.extend(rb);
    true
}

/// Removes one route by inserting its customers elsewhere at least cost.
fn dissolve_one(instance: &Instance, cons: &RouteConstraint, routes: &mut Vec<Vec<usize>>) -> bool {
    let mut order: Vec<usize> = (0..routes.len()).collect();
    order.sort_by_key(|&r| (routes[r].len(), r));
    'victim: for victim in order {
        let mut trial = routes.clone();
        let moved = trial.remove(victim);
        for c in moved {
            let mut best: Option<(f64, usize, usize)> = None;
            for (r, stops) in trial.iter().enumerate() {
                let len = depot_tour(instance, stops);
                for pos in 0..=stops.len() {
                    let u = if pos == 0 { 0 } else { stops[pos - 1] };
                    let v = if pos == stops.len() { 0 } else { stops[pos] };
                    let add = instance.dist(u, c) + instance.dist(c, v) - instance.dist(u, v);
                    if cons.allows(stops.len() + 1, len + add) && best.is_none_or(|(b, ..)| add < b - EPS) {
                        best = Some((add, r, pos));
                    }
                }
            }
            match best {
                Some((_, r, pos)) => trial[r].insert(pos, c),
                None => continue 'victim,
            }
        }
        *routes = trial;
        return true;
    }
    false
}

struct LocalSearch<'a> {
    instance: &'a Instance,
    cons: RouteConstraint,
    routes: Vec<Vec<usize>>,
    lengths: Vec<f64>,
}

impl<'a> LocalSearch<'a> {
    fn new(instance: &'a Instance, cons: RouteConstraint, routes: Vec<Vec<usize>>) -> Self {
        let lengths = routes.iter().map(|r| depot_tour(instance, r)).collect();
        LocalSearch {
            instance,
            cons,
            routes,
            lengths,
        }
    }

    #[inline]
    fn d(&self, i: usize, j: usize) -> f64 {
        self.instance.dist(i, j)
    }

    /// Location at tour position `k` of route `r`; positions 0 and n+1 are the depot.
    #[inline]
    fn node(&self, r: usize, k: usize) -> usize {
        let s = &self.routes[r];
        if k == 0 || k > s.len() {
            0
        } else {
            s[k - 1]
        }
    }

    #[cfg(test)]
    fn total(&self) -> f64 {
        self.lengths.iter().sum()
    }

    fn run(&mut self, budget: usize) -> usize {
        let mut moves = 0;
        while moves < budget {
            let improved = self.two_opt() || self.relocate() || self.swap() || self.tail_exchange();
            if !improved {
                break;
            }
            moves += 1;
        }
        moves
    }

    fn two_opt(&mut self) -> bool {
        for r in 0..self.routes.len() {
            let n = self.routes[r].len();
            for i in 0..n {
                for j in (i + 2)..=n {
                    let (a, b) = (self.node(r, i), self.node(r, i + 1));
                    let (c, e) = (self.node(r, j), self.node(r, j + 1));
                    let delta = self.d(a, c) + self.d(b, e) - self.d(a, b) - self.d(c, e);
                    if delta < -EPS {
                        self.routes[r][i..j].reverse();
                        self.lengths[r] += delta;
                        return true;
                    }
                }
            }
        }
        false
    }

    fn relocate(&mut self) -> bool {
        let m = self.routes.len();
        for r in 0..m {
            let n = self.routes[r].len();
            for k in 1..=MAX_SEGMENT.min(n) {
                for p in 0..=(n - k) {
                    if self.try_relocate(r, p, k) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Moves `routes[r][p..p+k]` to its best improving slot, if any.
    fn try_relocate(&mut self, r: usize, p: usize, k: usize) -> bool {
        let m = self.routes.len();
        let n = self.routes[r].len();
        let first = self.routes[r][p];
        let last = self.routes[r][p + k - 1];
        let prev = self.node(r, p);
        let next = self.node(r, p + k + 1);
        let gain = self.d(prev, first) + self.d(last, next) - self.d(prev, next);
        // Internal edges travel with the segment.
        let inner: f64 = self.routes[r][p..p + k].windows(2).map(|w| self.d(w[0], w[1])).sum();

        for q in 0..m {
            if q == r {
                let mut rest = self.routes[r].clone();
                let seg: Vec<usize> = rest.drain(p..p + k).collect();
                for pos in 0..=rest.len() {
                    if pos == p {
                        continue;
                    }
                    for reversed in [false, true] {
                        let mut cand = rest.clone();
                        let mut s = seg.clone();
                        if reversed {
                            s.reverse();
                        }
                        cand.splice(pos..pos, s);
                        let len = depot_tour(self.instance, &cand);
                        if len < self.lengths[r] - EPS && self.cons.allows(cand.len(), len) {
                            self.routes[r] = cand;
                            self.lengths[r] = len;
                            return true;
                        }
                    }
                }
                continue;
            }
            if n == k {
                // Source route must stay nonempty.
                continue;
            }
            let nq = self.routes[q].len();
            for slot in 0..=nq {
                let u = self.node(q, slot);
                let v = self.node(q, slot + 1);
                for reversed in [false, true] {
                    let (h, t) = if reversed { (last, first) } else { (first, last) };
                    let add = self.d(u, h) + self.d(t, v) - self.d(u, v);
                    if add - gain < -EPS && self.cons.allows(nq + k, self.lengths[q] + add + inner) {
                        let mut seg: Vec<usize> = self.routes[r].drain(p..p + k).collect();
                        if reversed {
                            seg.reverse();
                        }
                        self.routes[q].splice(slot..slot, seg);
                        self.lengths[r] -= gain + inner;
                        self.lengths[q] += add + inner;
                        return true;
                    }
                }
            }
        }
        false
    }

    fn swap(&mut self) -> bool {
        let m = self.routes.len();
        for r in 0..m {
            for q in (r + 1)..m {
                for p in 1..=self.routes[r].len() {
                    for s in 1..=self.routes[q].len() {
                        let (pa, a, na) = (self.node(r, p - 1), self.node(r, p), self.node(r, p + 1));
                        let (pb, b, nb) = (self.node(q, s - 1), self.node(q, s), self.node(q, s + 1));
                        let dr = self.d(pa, b) + self.d(b, na) - self.d(pa, a) - self.d(a, na);
                        let dq = self.d(pb, a) + self.d(a, nb) - self.d(pb, b) - self.d(b, nb);
                        if dr + dq < -EPS
                            && self.cons.allows(self.routes[r].len(), self.lengths[r] + dr)
                            && self.cons.allows(self.routes[q].len(), self.lengths[q] + dq)
                        {
                            self.routes[r][p - 1] = b;
                            self.routes[q][s - 1] = a;
                            self.lengths[r] += dr;
                            self.lengths[q] += dq;
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// 2-opt*: exchange the tails of two routes.
    fn tail_exchange(&mut self) -> bool {
        let m = self.routes.len();
        for r in 0..m {
            for q in (r + 1)..m {
                let (nr, nq) = (self.routes[r].len(), self.routes[q].len());
                for p in 0..=nr {
                    for s in 0..=nq {
                        // New routes: r[..p] + q[s..] and q[..s] + r[p..].
                        let new_r = p + (nq - s);
                        let new_q = s + (nr - p);
                        if new_r == 0 || new_q == 0 {
                            continue;
                        }
                        let (xr, yr) = (self.node(r, p), self.node(r, p + 1));
                        let (xq, yq) = (self.node(q, s), self.node(q, s + 1));
                        let delta = self.d(xr, yq) + self.d(xq, yr) - self.d(xr, yr) - self.d(xq, yq);
                        if delta >= -EPS {
                            continue;
                        }
                        let mut a: Vec<usize> = self.routes[r][..p].to_vec();
                        a.extend_from_slice(&self.routes[q][s..]);
                        let mut b: Vec<usize> = self.routes[q][..s].to_vec();
                        b.extend_from_slice(&self.routes[r][p..]);
                        let (la, lb) = (depot_tour(self.instance, &a), depot_tour(self.instance, &b));
                        if self.cons.allows(a.len(), la) && self.cons.allows(b.len(), lb) {
                            self.routes[r] = a;
                            self.routes[q] = b;
                            self.lengths[r] = la;
                            self.lengths[q] = lb;
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Total distance of `routes`.
pub fn total_distance(routes: &[Route], instance: &Instance) -> f64 {
    routes.iter().map(|r| r.distance(instance)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_partition, tests::params, Point};
    use crate::stochastic::RngStream;
    use proptest::prelude::*;

    fn random_instance(n: usize, seed: u64) -> Instance {
        let mut rng = RngStream::derive(seed, "routing-test", 0);
        let pts = (0..n)
            .map(|_| Point::new(rng.unit() * 50.0 - 25.0, rng.unit() * 50.0 - 25.0))
            .collect();
        Instance::new(params(n), pts).unwrap()
    }

    #[test]
    fn single_customer() {
        let inst = Instance::new(params(1), vec![Point::new(2.0, 1.0)]).unwrap();
        let routes = solve_distance(&inst, 1).unwrap();
        assert_eq!(routes, vec![Route::new(0, vec![1])]);
    }

    #[test]
    fn square_corners_give_perimeter_tour() {
        let pts = vec![
            Point::new(1.0, 1.0),
            Point::new(-1.0, -1.0),
            Point::new(1.0, -1.0),
            Point::new(-1.0, 1.0),
        ];
        let inst = Instance::new(params(4), pts).unwrap();
        let routes = solve_distance(&inst, 1).unwrap();
        // Best over the three distinct tours through depot + 4 corners: the
        // depot is inside, so the optimum detours from the perimeter once.
        let mut best = f64::INFINITY;
        let ids = [1, 2, 3, 4];
        for perm in itertools::Itertools::permutations(ids.iter().copied(), 4) {
            best = best.min(depot_tour(&inst, &perm));
        }
        assert!((total_distance(&routes, &inst) - best).abs() < 1e-9);
        // The corner order must follow the perimeter.
        let s = &routes[0].stops;
        for w in s.windows(2) {
            assert!((inst.dist(w[0], w[1]) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_team_counts() {
        let inst = random_instance(5, 1);
        assert!(solve_distance(&inst, 0).is_err());
        assert!(solve_distance(&inst, 6).is_err());
        assert_eq!(solve_distance(&inst, 5).unwrap().len(), 5);
    }

    #[test]
    fn min_teams_examples() {
        let inst = random_instance(50, 3);
        assert_eq!(min_teams_capacity(&inst), 6);

        let mut p = params(50);
        p.p_c = 1.0;
        assert_eq!(min_teams_capacity(&inst.with_params(p).unwrap()), 1);

        // 8 * (1 - 0.25) * 80 = 480 = L exactly.
        let mut p = params(8);
        p.p_c = 0.25;
        p.mu_s = 80.0;
        p.sigma_s = 40.0;
        let inst = random_instance(8, 4).with_params(p).unwrap();
        assert_eq!(min_teams_capacity(&inst), 1);
    }

    #[test]
    fn capacity_limits_stops_per_route() {
        let inst = random_instance(50, 5);
        let lo = *sweep_range(&inst, RoutingModel::Capacity).start();
        assert_eq!(lo, 6);
        // 6 teams * 8 stops < 50 customers, so 6 is infeasible; 7 is the first feasible.
        assert!(solve_capacity(&inst, 5).is_err());
        for m in 7..=16 {
            let routes = solve_capacity(&inst, m).unwrap();
            assert_eq!(routes.len(), m);
            check_partition(&routes, 50).unwrap();
            for r in &routes {
                assert!(r.len() <= 8, "route with {} stops", r.len());
                assert!(!r.is_empty());
            }
        }
    }

    #[test]
    fn zero_demand_capacity_matches_distance() {
        let mut p = params(25);
        p.p_c = 1.0;
        let inst = random_instance(25, 6).with_params(p).unwrap();
        for m in 1..=8 {
            assert_eq!(solve_capacity(&inst, m).unwrap(), solve_distance(&inst, m).unwrap());
        }
    }

    #[test]
    fn long_horizon_time_windows_match_distance() {
        let mut p = params(25);
        p.end_time = 1e9;
        let inst = random_instance(25, 7).with_params(p).unwrap();
        for m in 1..=8 {
            assert_eq!(solve_time_windows(&inst, m).unwrap(), solve_distance(&inst, m).unwrap());
        }
    }

    #[test]
    fn time_windows_split_far_clusters() {
        // Two clusters 100 km apart on either side of the depot: one tour needs
        // about 220 min of travel plus 4 * 54 of service > 300.
        let mut p = params(4);
        p.end_time = 300.0;
        let pts = vec![
            Point::new(50.0, 0.0),
            Point::new(51.0, 0.0),
            Point::new(-50.0, 0.0),
            Point::new(-51.0, 0.0),
        ];
        let inst = Instance::new(p, pts).unwrap();
        assert!(matches!(
            solve_time_windows(&inst, 1),
            Err(Error::Infeasible { teams: 1, .. })
        ));
        let routes = solve_time_windows(&inst, 2).unwrap();
        let cons = RouteConstraint::new(RoutingModel::TimeWindows, &inst);
        for r in &routes {
            assert!(cons.allows_route(r, &inst));
        }
        assert!(solve_distance(&inst, 1).is_ok());
    }

    #[test]
    fn sweep_bounds() {
        let inst = random_instance(20, 8);
        let c = sweep_team_counts(&inst, RoutingModel::Distance);
        assert!(c.len() <= 6);
        assert!(c.windows(2).all(|w| w[0].routing_cost <= w[1].routing_cost));

        let inst = random_instance(50, 9);
        let c = sweep_team_counts(&inst, RoutingModel::Capacity);
        assert!(c.iter().all(|k| k.teams >= 6 && k.teams <= 16));

        let mut p = params(20);
        p.assignment_cost = 1e9;
        let inst = random_instance(20, 10).with_params(p).unwrap();
        let c = sweep_team_counts(&inst, RoutingModel::Distance);
        assert_eq!(c[0].teams, 1);

        let inst = random_instance(2, 11);
        let ms: Vec<usize> = sweep_team_counts(&inst, RoutingModel::Distance)
            .iter()
            .map(|k| k.teams)
            .collect();
        assert_eq!(ms.len(), 2);
    }

    #[test]
    fn local_search_is_monotone() {
        let inst = random_instance(30, 12);
        let cons = RouteConstraint::new(RoutingModel::Distance, &inst);
        let start = savings(&inst, 4, &cons).unwrap();
        let mut ls = LocalSearch::new(&inst, cons, start);
        let mut prev = ls.total();
        for _ in 0..200 {
            if ls.run(1) == 0 {
                break;
            }
            let now = ls.total();
            assert!(now <= prev + 1e-9);
            let exact: f64 = ls.routes.iter().map(|r| depot_tour(&inst, r)).sum();
            assert!((exact - now).abs() < 1e-6);
            prev = now;
        }
    }

    #[test]
    fn segment_relocation_keeps_route_lengths_exact() {
        // Moving a multi-stop segment between routes once mis-booked its
        // internal edges, letting a time-window route overrun the day.
        let inst = random_instance(29, 583);
        let cons = RouteConstraint::new(RoutingModel::TimeWindows, &inst);
        let routes = savings(&inst, 9, &cons).unwrap();
        let mut search = LocalSearch::new(&inst, cons, routes);
        while search.run(1) == 1 {
            for (stops, &len) in search.routes.iter().zip(&search.lengths) {
                assert!((depot_tour(&inst, stops) - len).abs() < 1e-6);
                assert!(cons.allows(stops.len(), depot_tour(&inst, stops)));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn outputs_partition_and_are_deterministic(n in 1usize..30, seed in 0u64..1000, model_ix in 0usize..3) {
            let inst = random_instance(n, seed);
            let model = RoutingModel::ALL[model_ix];
            let cons = RouteConstraint::new(model, &inst);
            for m in [1, (n / 3).max(1), n] {
                if let Ok(routes) = solve(&inst, m, model) {
                    prop_assert_eq!(routes.len(), m);
                    check_partition(&routes, n).unwrap();
                    prop_assert!(routes.iter().all(|r| !r.is_empty() && cons.allows_route(r, &inst)));
                    prop_assert_eq!(solve(&inst, m, model).unwrap(), routes);
                }
            }
        }
    }
}
