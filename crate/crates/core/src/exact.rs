//! Exhaustive search for tiny instances, used as ground truth for the
//! heuristic and the MILP checks.
//!
//! Routes are built one visit at a time: any unserved demand node, the
//! pickup of a center that still has unserved wells, or the delivery of a
//! center whose key is on board and has served a well since. Vehicles are
//! interchangeable, so each new route must contain the lowest unserved
//! demand node.

use thiserror::Error;

use crate::instance::{Instance, TRIANGLE_TOLERANCE};
use crate::solution::{Route, Solution, Visit, EPS};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactLimits {
    pub max_demand_nodes: usize,
    pub max_vehicles: usize,
    /// Cap on partial sequences explored.
    pub node_budget: u64,
    /// Cut partial routes by the duration cap and by the best total found.
    pub prune: bool,
}

impl Default for ExactLimits {
    fn default() -> Self {
        Self { max_demand_nodes: 8, max_vehicles: 2, node_budget: 50_000_000, prune: true }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("instance has {demand} demand nodes and {vehicles} vehicles, limits are {max_demand} and {max_vehicles}")]
    TooLarge { demand: usize, vehicles: usize, max_demand: usize, max_vehicles: usize },
    #[error("no assignment respects the duration cap")]
    Infeasible,
    #[error("node budget of {0} spent before any feasible solution was found")]
    BudgetExhausted(u64),
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub solution: Solution,
    /// The whole search space was covered within the node budget.
    pub proven_optimal: bool,
    pub explored: u64,
}

/// Minimum total duration solution, ties broken by the longest route.
pub fn exact_solve(inst: &Instance, limits: &ExactLimits) -> Result<ExactResult, ExactError> {
    let demand = inst.demand_nodes().to_vec();
    if demand.len() > limits.max_demand_nodes || inst.num_vehicles() > limits.max_vehicles || demand.len() > 31 {
        return Err(ExactError::TooLarge {
            demand: demand.len(),
            vehicles: inst.num_vehicles(),
            max_demand: limits.max_demand_nodes,
            max_vehicles: limits.max_vehicles,
        });
    }
    let centers = inst.key_centers().to_vec();
    let center_idx = |c: usize| centers.iter().position(|&x| x == c).unwrap();
    let mut search = Search {
        inst,
        limits,
        well_center: demand.iter().map(|&d| inst.center_of(d).map(center_idx)).collect(),
        demand,
        centers,
        done: Vec::new(),
        done_z: 0.0,
        route: Vec::new(),
        cost: 0.0,
        keys: Vec::new(),
        best: None,
        explored: 0,
        stopped: false,
    };
    search.keys = vec![KeyState::default(); search.centers.len()];
    if search.demand.is_empty() {
        return Ok(ExactResult { solution: Solution::empty(inst), proven_optimal: true, explored: 0 });
    }
    search.open_route((1u32 << search.demand.len()) - 1);
    match search.best {
        Some(solution) => Ok(ExactResult { solution, proven_optimal: !search.stopped, explored: search.explored }),
        None if search.stopped => Err(ExactError::BudgetExhausted(limits.node_budget)),
        None => Err(ExactError::Infeasible),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct KeyState {
    picked: bool,
    delivered: bool,
    served: u32,
}

struct Search<'a> {
    inst: &'a Instance,
    limits: &'a ExactLimits,
    demand: Vec<usize>,
    centers: Vec<usize>,
    /// Center index of each demand node that is a well.
    well_center: Vec<Option<usize>>,
    done: Vec<Route>,
    done_z: f64,
    route: Vec<Visit>,
    /// Duration of the current route so far, without the way back.
    cost: f64,
    keys: Vec<KeyState>,
    best: Option<Solution>,
    explored: u64,
    stopped: bool,
}

impl Search<'_> {
    fn last(&self) -> usize {
        self.route.last().map_or(self.inst.depot(), |v| v.loc())
    }

    fn tick(&mut self) -> bool {
        self.explored += 1;
        if self.explored > self.limits.node_budget {
            self.stopped = true;
        }
        !self.stopped
    }

    /// Lower bound on the final total given the current partial route.
    fn bound(&self, open: u32) -> f64 {
        let unserved: f64 = (0..self.demand.len()).filter(|&i| open >> i & 1 == 1).map(|i| self.inst.service(self.demand[i])).sum();
        let remaining = open.count_ones() as f64 + 2.0 * self.centers.len() as f64;
        let back = self.inst.c(self.last(), self.inst.depot()) - TRIANGLE_TOLERANCE * remaining;
        self.done_z + self.cost + unserved.max(back).max(0.0)
    }

    fn pruned(&self, open: u32) -> bool {
        if !self.limits.prune {
            return false;
        }
        if self.cost > self.inst.max_duration() + EPS {
            return true;
        }
        self.best.as_ref().is_some_and(|b| self.bound(open) > b.z + EPS)
    }

    /// Start a new route anchored at the lowest unserved node; `open` holds
    /// the unserved demand indices.
    fn open_route(&mut self, open: u32) {
        let anchor = open.trailing_zeros() as usize;
        self.extend(open, anchor);
    }

    fn push(&mut self, v: Visit) {
        let from = self.last();
        self.cost += self.inst.c(from, v.loc()) + self.inst.service(v.loc());
        self.route.push(v);
    }

    fn pop(&mut self, saved_cost: f64) {
        self.route.pop();
        self.cost = saved_cost;
    }

    fn extend(&mut self, open: u32, anchor: usize) {
        if self.stopped {
            return;
        }
        let anchored = open >> anchor & 1 == 0;
        let keys_closed = self.keys.iter().all(|k| !k.picked || k.delivered);
        if anchored && keys_closed {
            self.close_route(open);
        }

        let saved = self.cost;
        for i in 0..self.demand.len() {
            if open >> i & 1 == 0 {
                continue;
            }
            if let Some(c) = self.well_center[i] {
                if !self.keys[c].picked || self.keys[c].delivered {
                    continue;
                }
            }
            if !self.tick() {
                return;
            }
            self.push(Visit::Demand(self.demand[i]));
            let rest = open & !(1 << i);
            if !self.pruned(rest) {
                if let Some(c) = self.well_center[i] {
                    self.keys[c].served += 1;
                    self.extend(rest, anchor);
                    self.keys[c].served -= 1;
                } else {
                    self.extend(rest, anchor);
                }
            }
            self.pop(saved);
        }

        for c in 0..self.centers.len() {
            let k = self.keys[c];
            let visit = if !k.picked {
                let needed = (0..self.demand.len()).any(|i| open >> i & 1 == 1 && self.well_center[i] == Some(c));
                if !needed {
                    continue;
                }
                Visit::KeyPickup(self.centers[c])
            } else if !k.delivered && k.served > 0 {
                Visit::KeyDelivery(self.centers[c])
            } else {
                continue;
            };
            if !self.tick() {
                return;
            }
            self.push(visit);
            if !self.pruned(open) {
                let before = self.keys[c];
                match visit {
                    Visit::KeyPickup(_) => self.keys[c].picked = true,
                    _ => self.keys[c].delivered = true,
                }
                self.extend(open, anchor);
                self.keys[c] = before;
            }
            self.pop(saved);
        }
    }

    fn close_route(&mut self, open: u32) {
        let duration = self.cost + self.inst.c(self.last(), self.inst.depot());
        if duration > self.inst.max_duration() + EPS {
            return;
        }
        let last_route = self.done.len() + 1 == self.inst.num_vehicles();
        if open != 0 && last_route {
            return;
        }
        let route = Route { visits: std::mem::take(&mut self.route), duration };
        let (saved_cost, saved_keys) = (self.cost, std::mem::take(&mut self.keys));
        self.done_z += duration;
        self.done.push(route);
        self.keys = vec![KeyState::default(); self.centers.len()];
        self.cost = 0.0;

        if open == 0 {
            let mut routes = self.done.clone();
            routes.resize(self.inst.num_vehicles(), Route::empty());
            let candidate = Solution::from_routes(routes);
            if self.best.as_ref().is_none_or(|b| candidate.better_than(b)) {
                self.best = Some(candidate);
            }
        } else if !self.pruned(open) {
            self.open_route(open);
        }

        let route = self.done.pop().unwrap();
        self.done_z -= duration;
        self.route = route.visits;
        self.cost = saved_cost;
        self.keys = saved_keys;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, GenSpec};
    use crate::instance::tests::{line_instance, node};
    use crate::instance::{NodeKind, TravelSource};
    use crate::solution::validate;
    use std::collections::BTreeMap;

    fn points(points: &[(f64, f64, f64)], k: usize) -> Instance {
        let mut nodes = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0)];
        for (i, &(x, y, v)) in points.iter().enumerate() {
            nodes.push(node(i + 1, NodeKind::TypeI, x, y, v));
        }
        Instance::new("p", nodes, BTreeMap::new(), k, 10_000.0, TravelSource::RoundedEuclidean).unwrap()
    }

    #[test]
    fn single_node_closed_form() {
        let inst = points(&[(3.0, 4.0, 30.0)], 1);
        let r = exact_solve(&inst, &ExactLimits::default()).unwrap();
        assert!(r.proven_optimal);
        assert!((r.solution.z - 40.0).abs() < 1e-9);
    }

    #[test]
    fn forced_key_order() {
        let inst = line_instance();
        let r = exact_solve(&inst, &ExactLimits::default()).unwrap();
        assert!((r.solution.z - 20.0).abs() < 1e-9);
        assert_eq!(r.solution.routes[0].visits, vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)]);
    }

    #[test]
    fn two_nodes_take_the_shorter_order() {
        let inst = points(&[(10.0, 0.0, 1.0), (10.0, 5.0, 2.0)], 1);
        let order = |v: &[usize]| crate::solution::route_duration(&inst, &v.iter().map(|&i| Visit::Demand(i)).collect::<Vec<_>>());
        let want = order(&[1, 2]).min(order(&[2, 1]));
        let r = exact_solve(&inst, &ExactLimits::default()).unwrap();
        assert!((r.solution.z - want).abs() < 1e-9);
    }

    #[test]
    fn refuses_large_instances() {
        let inst = generate(&GenSpec::uniform(9, 1, 1, 2, 1)).unwrap();
        assert!(matches!(exact_solve(&inst, &ExactLimits::default()), Err(ExactError::TooLarge { .. })));
    }

    #[test]
    fn reports_infeasible_caps() {
        let mut nodes = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0)];
        nodes.push(node(1, NodeKind::TypeI, 50.0, 0.0, 0.0));
        let inst = Instance::new("far", nodes, BTreeMap::new(), 1, 10.0, TravelSource::RoundedEuclidean).unwrap();
        assert_eq!(exact_solve(&inst, &ExactLimits::default()).unwrap_err(), ExactError::Infeasible);
    }

    #[test]
    fn budget_stops_the_search() {
        let inst = generate(&GenSpec::uniform(7, 2, 1, 2, 3)).unwrap();
        let limits = ExactLimits { node_budget: 50, ..ExactLimits::default() };
        match exact_solve(&inst, &limits) {
            Ok(r) => assert!(!r.proven_optimal),
            Err(e) => assert_eq!(e, ExactError::BudgetExhausted(50)),
        }
    }

    #[test]
    fn pruning_keeps_the_optimum() {
        for seed in 0..15 {
            let n = 3 + (seed as usize % 3);
            let inst = generate(&GenSpec::uniform(n, seed as usize % 3, 1, 1 + seed as usize % 2, seed)).unwrap();
            let pruned = exact_solve(&inst, &ExactLimits::default());
            let full = exact_solve(&inst, &ExactLimits { prune: false, ..ExactLimits::default() });
            match (pruned, full) {
                (Ok(a), Ok(b)) => {
                    assert!((a.solution.z - b.solution.z).abs() < 1e-9, "seed {seed}");
                    assert!(a.explored <= b.explored);
                    assert!(validate(&inst, &a.solution).is_empty());
                }
                (Err(a), Err(b)) => assert_eq!(a, b),
                other => panic!("seed {seed}: {other:?}"),
            }
        }
    }
}
