//! Routes, solutions, cost evaluation and feasibility checking.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::instance::{Instance, NodeKind};

/// Tolerance on the duration cap and on cost comparisons.
pub const EPS: f64 = 1e-6;

/// One stop of a route. The depot at either end is implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Visit {
    Demand(usize),
    KeyPickup(usize),
    KeyDelivery(usize),
}

impl Visit {
    /// Physical node the visit takes place at.
    #[inline]
    pub fn loc(self) -> usize {
        match self {
            Visit::Demand(i) | Visit::KeyPickup(i) | Visit::KeyDelivery(i) => i,
        }
    }

    #[inline]
    pub fn is_key(self) -> bool {
        !matches!(self, Visit::Demand(_))
    }

    fn encode(self, out: &mut Vec<u8>) {
        let (tag, id) = match self {
            Visit::Demand(i) => (0u8, i),
            Visit::KeyPickup(c) => (1, c),
            Visit::KeyDelivery(c) => (2, c),
        };
        out.push(tag);
        out.extend_from_slice(&(id as u64).to_le_bytes());
    }
}

impl fmt::Display for Visit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Visit::Demand(i) => write!(f, "{i}"),
            Visit::KeyPickup(c) => write!(f, "P{c}"),
            Visit::KeyDelivery(c) => write!(f, "D{c}"),
        }
    }
}

/// Duration of a visit sequence that starts and ends at the depot: travel
/// plus service at every stop.
pub fn route_duration(instance: &Instance, visits: &[Visit]) -> f64 {
    let depot = instance.depot();
    let mut prev = depot;
    let mut total = 0.0;
    for v in visits {
        let loc = v.loc();
        total += instance.c(prev, loc) + instance.service(loc);
        prev = loc;
    }
    total + instance.c(prev, depot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub visits: Vec<Visit>,
    pub duration: f64,
}

impl Route {
    pub fn new(instance: &Instance, visits: Vec<Visit>) -> Self {
        let duration = route_duration(instance, &visits);
        Self { visits, duration }
    }

    pub fn empty() -> Self {
        Self { visits: Vec::new(), duration: 0.0 }
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn demand_count(&self) -> usize {
        self.visits.iter().filter(|v| !v.is_key()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
    /// Total duration.
    pub z: f64,
    /// Longest route duration.
    pub l: f64,
}

impl Solution {
    pub fn from_routes(routes: Vec<Route>) -> Self {
        let (z, l) = cost_of_routes(&routes);
        Self { routes, z, l }
    }

    pub fn from_visits(instance: &Instance, routes: Vec<Vec<Visit>>) -> Self {
        Self::from_routes(routes.into_iter().map(|v| Route::new(instance, v)).collect())
    }

    pub fn empty(instance: &Instance) -> Self {
        Self::from_routes(vec![Route::empty(); instance.num_vehicles()])
    }

    /// Recompute cached route durations and totals.
    pub fn refresh(&mut self, instance: &Instance) {
        for r in &mut self.routes {
            r.duration = route_duration(instance, &r.visits);
        }
        let (z, l) = cost_of_routes(&self.routes);
        self.z = z;
        self.l = l;
    }

    /// Refresh the totals only (route durations assumed current).
    pub fn refresh_totals(&mut self) {
        let (z, l) = cost_of_routes(&self.routes);
        self.z = z;
        self.l = l;
    }

    /// Lexicographic (z, l) improvement test with tolerance.
    pub fn better_than(&self, other: &Solution) -> bool {
        self.z < other.z - EPS || (self.z <= other.z + EPS && self.l < other.l - EPS)
    }
}

fn cost_of_routes(routes: &[Route]) -> (f64, f64) {
    routes.iter().fold((0.0, 0.0), |(z, l), r| (z + r.duration, f64::max(l, r.duration)))
}

/// (z, l) recomputed from scratch, ignoring any cached values.
pub fn solution_cost(instance: &Instance, solution: &Solution) -> (f64, f64) {
    solution.routes.iter().map(|r| route_duration(instance, &r.visits)).fold((0.0, 0.0), |(z, l), d| (z + d, l.max(d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyRole {
    Pickup,
    Delivery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrecedenceBreach {
    BeforePickup,
    AfterDelivery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    MissingDemand {
        node: usize,
    },
    DuplicateDemand {
        node: usize,
        count: usize,
    },
    PrecedenceViolation {
        route: usize,
        well: usize,
        center: usize,
        breach: PrecedenceBreach,
    },
    DuplicateKeyVisit {
        route: usize,
        center: usize,
        role: KeyRole,
    },
    OrphanKeyVisit {
        route: usize,
        center: usize,
        role: KeyRole,
    },
    MissingKeyVisit {
        route: usize,
        well: usize,
        center: usize,
        role: KeyRole,
    },
    DurationExceeded {
        route: usize,
        amount: f64,
    },
    WrongRouteCount {
        expected: usize,
        found: usize,
    },
    /// A visit references a node of the wrong kind or an unknown id.
    InvalidVisit {
        route: usize,
        visit: Visit,
    },
}

impl Violation {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Violation::MissingDemand { .. } => "MissingDemand",
            Violation::DuplicateDemand { .. } => "DuplicateDemand",
            Violation::PrecedenceViolation { .. } => "PrecedenceViolation",
            Violation::DuplicateKeyVisit { .. } => "DuplicateKeyVisit",
            Violation::OrphanKeyVisit { .. } => "OrphanKeyVisit",
            Violation::MissingKeyVisit { .. } => "MissingKeyVisit",
            Violation::DurationExceeded { .. } => "DurationExceeded",
            Violation::WrongRouteCount { .. } => "WrongRouteCount",
            Violation::InvalidVisit { .. } => "InvalidVisit",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingDemand { node } => write!(f, "MissingDemand: node {node} is not visited"),
            Violation::DuplicateDemand { node, count } => {
                write!(f, "DuplicateDemand: node {node} visited {count} times")
            }
            Violation::PrecedenceViolation { route, well, center, breach } => {
                let what = match breach {
                    PrecedenceBreach::BeforePickup => "before the key pickup",
                    PrecedenceBreach::AfterDelivery => "after the key delivery",
                };
                write!(f, "PrecedenceViolation: route {route} visits well {well} {what} at center {center}")
            }
            Violation::DuplicateKeyVisit { route, center, role } => {
                write!(f, "DuplicateKeyVisit: route {route} repeats {role:?} at center {center}")
            }
            Violation::OrphanKeyVisit { route, center, role } => {
                write!(f, "OrphanKeyVisit: route {route} has {role:?} at center {center} without a matching well")
            }
            Violation::MissingKeyVisit { route, well, center, role } => {
                write!(f, "MissingKeyVisit: route {route} serves well {well} without {role:?} at center {center}")
            }
            Violation::DurationExceeded { route, amount } => {
                write!(f, "DurationExceeded: route {route} exceeds the cap by {amount:.6}")
            }
            Violation::WrongRouteCount { expected, found } => {
                write!(f, "WrongRouteCount: expected {expected} routes, found {found}")
            }
            Violation::InvalidVisit { route, visit } => write!(f, "InvalidVisit: route {route} has bad visit {visit}"),
        }
    }
}

/// Every constraint violation of `solution`, in a deterministic order. An
/// empty list means the solution is feasible.
pub fn validate(instance: &Instance, solution: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let count = instance.node_count();
    if solution.routes.len() != instance.num_vehicles() {
        out.push(Violation::WrongRouteCount { expected: instance.num_vehicles(), found: solution.routes.len() });
    }

    let mut seen = vec![0usize; count];
    for (r, route) in solution.routes.iter().enumerate() {
        let mut bad = false;
        for &visit in &route.visits {
            let loc = visit.loc();
            let ok = loc < count
                && match visit {
                    Visit::Demand(_) => instance.kind(loc).is_demand(),
                    _ => instance.kind(loc) == NodeKind::KeyCenter,
                };
            if !ok {
                out.push(Violation::InvalidVisit { route: r, visit });
                bad = true;
            } else if let Visit::Demand(i) = visit {
                seen[i] += 1;
            }
        }
        if bad {
            continue;
        }
        check_route_keys(instance, r, &route.visits, &mut out);
        let duration = route_duration(instance, &route.visits);
        if duration > instance.max_duration() + EPS {
            out.push(Violation::DurationExceeded { route: r, amount: duration - instance.max_duration() });
        }
    }
    for &node in instance.demand_nodes() {
        match seen[node] {
            0 => out.push(Violation::MissingDemand { node }),
            1 => {}
            n => out.push(Violation::DuplicateDemand { node, count: n }),
        }
    }
    out
}

fn check_route_keys(instance: &Instance, r: usize, visits: &[Visit], out: &mut Vec<Violation>) {
    // First occurrence positions of pickups/deliveries per center.
    let mut pickups: Vec<(usize, usize)> = Vec::new();
    let mut deliveries: Vec<(usize, usize)> = Vec::new();
    for (pos, v) in visits.iter().enumerate() {
        let (list, role, c) = match *v {
            Visit::KeyPickup(c) => (&mut pickups, KeyRole::Pickup, c),
            Visit::KeyDelivery(c) => (&mut deliveries, KeyRole::Delivery, c),
            Visit::Demand(_) => continue,
        };
        if list.iter().any(|&(cc, _)| cc == c) {
            out.push(Violation::DuplicateKeyVisit { route: r, center: c, role });
        } else {
            list.push((c, pos));
        }
    }
    let find = |list: &[(usize, usize)], c: usize| list.iter().find(|&&(cc, _)| cc == c).map(|&(_, p)| p);

    let mut served: Vec<usize> = Vec::new();
    for (pos, v) in visits.iter().enumerate() {
        let Visit::Demand(w) = *v else { continue };
        let Some(c) = instance.center_of(w) else { continue };
        served.push(c);
        match find(&pickups, c) {
            None => out.push(Violation::MissingKeyVisit { route: r, well: w, center: c, role: KeyRole::Pickup }),
            Some(p) if p > pos => out.push(Violation::PrecedenceViolation { route: r, well: w, center: c, breach: PrecedenceBreach::BeforePickup }),
            _ => {}
        }
        match find(&deliveries, c) {
            None => out.push(Violation::MissingKeyVisit { route: r, well: w, center: c, role: KeyRole::Delivery }),
            Some(d) if d < pos => out.push(Violation::PrecedenceViolation { route: r, well: w, center: c, breach: PrecedenceBreach::AfterDelivery }),
            _ => {}
        }
    }
    for (list, role) in [(&pickups, KeyRole::Pickup), (&deliveries, KeyRole::Delivery)] {
        for &(c, _) in list {
            if !served.contains(&c) {
                out.push(Violation::OrphanKeyVisit { route: r, center: c, role });
            }
        }
    }
}

/// 128-bit digest of a solution's route set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SolutionDigest(pub u128);

impl fmt::Display for SolutionDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

/// SHA-256 (truncated to 128 bits) of the sorted per-route byte encodings.
/// Independent of route order, dependent on visit order.
pub fn canonical_hash(solution: &Solution) -> SolutionDigest {
    let mut encoded: Vec<Vec<u8>> = solution
        .routes
        .iter()
        .map(|r| {
            let mut bytes = Vec::with_capacity(r.visits.len() * 9);
            for v in &r.visits {
                v.encode(&mut bytes);
            }
            bytes
        })
        .collect();
    encoded.sort();
    let mut hasher = Sha256::new();
    hasher.update((encoded.len() as u64).to_le_bytes());
    for bytes in &encoded {
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    let out = hasher.finalize();
    let mut head = [0u8; 16];
    head.copy_from_slice(&out[..16]);
    SolutionDigest(u128::from_le_bytes(head))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::{line_instance, node};
    use crate::instance::TravelSource;
    use std::collections::BTreeMap;

    use Visit::{Demand as N, KeyDelivery as D, KeyPickup as P};

    fn two_node_instance() -> Instance {
        // c(0,a) = 5, v_a = 30; b at distance 10, v_b = 0.
        let nodes = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0), node(1, NodeKind::TypeI, 3.0, 4.0, 30.0), node(2, NodeKind::TypeI, 0.0, 10.0, 0.0)];
        Instance::new("two", nodes, BTreeMap::new(), 2, 45.0, TravelSource::RoundedEuclidean).unwrap()
    }

    #[test]
    fn durations() {
        let inst = two_node_instance();
        assert_eq!(route_duration(&inst, &[]), 0.0);
        assert_eq!(route_duration(&inst, &[N(1)]), 40.0);
        let line = line_instance();
        assert_eq!(route_duration(&line, &[P(1), N(2), D(1)]), 20.0);
    }

    #[test]
    fn costs() {
        let inst = two_node_instance();
        let empty = Solution::empty(&inst);
        assert_eq!(solution_cost(&inst, &empty), (0.0, 0.0));
        let s = Solution::from_visits(&inst, vec![vec![N(1)], vec![N(2)]]);
        assert_eq!((s.z, s.l), (60.0, 40.0));
        assert_eq!(solution_cost(&inst, &s), (60.0, 40.0));
    }

    #[test]
    fn validate_feasible_and_precedence() {
        let line = line_instance();
        let ok = Solution::from_visits(&line, vec![vec![P(1), N(2), D(1)]]);
        assert!(validate(&line, &ok).is_empty());

        let bad = Solution::from_visits(&line, vec![vec![N(2), P(1), D(1)]]);
        let v = validate(&line, &bad);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::PrecedenceViolation { breach: PrecedenceBreach::BeforePickup, .. }));
    }

    #[test]
    fn validate_reports_everything() {
        let line = line_instance();
        let s = Solution::from_visits(&line, vec![vec![P(1), P(1)], vec![]]);
        let kinds: Vec<_> = validate(&line, &s).iter().map(|v| v.kind_name()).collect();
        assert_eq!(kinds, vec!["WrongRouteCount", "DuplicateKeyVisit", "OrphanKeyVisit", "MissingDemand"]);

        let s = Solution::from_visits(&line, vec![vec![N(2), D(1), N(2)]]);
        let kinds: Vec<_> = validate(&line, &s).iter().map(|v| v.kind_name()).collect();
        assert!(kinds.contains(&"MissingKeyVisit"));
        assert!(kinds.contains(&"DuplicateDemand"));
        assert!(kinds.contains(&"PrecedenceViolation"));

        let s = Solution::from_visits(&line, vec![vec![N(1)]]);
        assert!(matches!(validate(&line, &s)[0], Violation::InvalidVisit { .. }));
    }

    #[test]
    fn duration_cap() {
        // Route [a] lasts 40; pad with b (0,10): 5 + 30 + c(a,b) + 0 + 10.
        let inst = two_node_instance();
        let padded = vec![N(1), N(2)];
        let expected = 5.0 + 30.0 + crate::instance::rounded_euclidean((3.0, 4.0), (0.0, 10.0)) + 10.0;
        assert!((route_duration(&inst, &padded) - expected).abs() < 1e-9);
        let s = Solution::from_visits(&inst, vec![padded, vec![]]);
        let v = validate(&inst, &s);
        assert_eq!(v.len(), 1);
        match v[0] {
            Violation::DurationExceeded { route, amount } => {
                assert_eq!(route, 0);
                assert!((amount - (expected - 45.0)).abs() < 1e-9);
            }
            ref other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hash_properties() {
        let inst = two_node_instance();
        let s = Solution::from_visits(&inst, vec![vec![N(1), N(2)], vec![]]);
        let swapped = Solution::from_visits(&inst, vec![vec![], vec![N(1), N(2)]]);
        let reversed = Solution::from_visits(&inst, vec![vec![N(2), N(1)], vec![]]);
        assert_eq!(canonical_hash(&s), canonical_hash(&swapped));
        assert_ne!(canonical_hash(&s), canonical_hash(&reversed));
        assert_eq!(canonical_hash(&s), canonical_hash(&s.clone()));
    }
}
