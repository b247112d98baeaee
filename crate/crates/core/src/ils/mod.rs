//! Iterated local search.
//!
//! A run builds a solution with randomized cheapest insertion, descends with
//! five neighborhoods (segment swap and relocate inside and across routes,
//! then 3-opt on single routes) and alternates random perturbation with
//! descent. Phase 1 keeps the incumbent and a small set of the best distinct
//! solutions; phase 2 restarts the perturbation loop from each of them and
//! falls back to phase 1 whenever the total duration improves.

mod ops;
mod search;
mod three_opt;

use std::time::Instant;

use rand_core::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, NodeKind};
use crate::rng::{coin, derive_seed, index, roulette, seeded, shuffle, Rng64};
use crate::solution::{canonical_hash, Route, Solution, SolutionDigest, Visit, EPS};

pub use ops::{apply_insertion, best_insertion, repair_keys, Insertion, Placement, Segment};
pub use search::{MoveChoice, MoveKind, Neighborhood};
pub use three_opt::RECONNECTIONS;

use search::Engine;
use three_opt::DescentMemo;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IlsError {
    #[error("no feasible initial solution after {0} attempts")]
    InitExhausted(usize),
    #[error("no feasible position for node {0}")]
    NoFeasibleInsertion(usize),
    #[error("could not rebuild a feasible solution after {0} insertion orders")]
    RebuildFailed(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlsParams {
    pub alpha: f64,
    /// Capacity of the best-known set.
    pub beta: usize,
    /// 3-opt scans LS5 may spend per call.
    pub gamma: usize,
    /// Consecutive non-improving iterations before a loop ends.
    pub max_iter: usize,
    pub seed: u64,
    pub init_retry_cap: usize,
    pub runs: usize,
}

impl Default for IlsParams {
    fn default() -> Self {
        Self { alpha: 0.10, beta: 5, gamma: 50, max_iter: 1000, seed: 0, init_retry_cap: 100, runs: 5 }
    }
}

impl IlsParams {
    pub fn check(&self) -> Result<(), IlsError> {
        let bad = |m: &str| Err(IlsError::InvalidParams(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie strictly between 0 and 1");
        }
        if self.beta == 0 || self.gamma == 0 || self.max_iter == 0 || self.init_retry_cap == 0 || self.runs == 0 {
            return bad("beta, gamma, max_iter, init_retry_cap and runs must be positive");
        }
        Ok(())
    }

    /// The full tuning grid, in alpha, beta, gamma, max_iter order.
    pub fn tuning_grid(base: &IlsParams) -> Vec<IlsParams> {
        let mut grid = Vec::new();
        for alpha in [0.05, 0.10, 0.15, 0.25] {
            for beta in [2, 5, 10, 20] {
                for gamma in [50, 100] {
                    for max_iter in [200, 500, 1000, 5000] {
                        grid.push(IlsParams { alpha, beta, gamma, max_iter, ..base.clone() });
                    }
                }
            }
        }
        grid
    }
}

/// The β best distinct solutions seen, sorted by (z, l).
#[derive(Debug, Clone)]
pub struct BkSet {
    capacity: usize,
    entries: Vec<(Solution, SolutionDigest)>,
}

impl BkSet {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, entries: Vec::with_capacity(capacity + 1) }
    }

    /// Returns whether the solution was kept.
    pub fn insert(&mut self, solution: &Solution) -> bool {
        let digest = canonical_hash(solution);
        if self.entries.iter().any(|(_, d)| *d == digest) {
            return false;
        }
        let key = (solution.z, solution.l);
        let at = self.entries.partition_point(|(s, _)| (s.z, s.l) <= key);
        if at >= self.capacity {
            return false;
        }
        self.entries.insert(at, (solution.clone(), digest));
        self.entries.truncate(self.capacity);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn solutions(&self) -> impl Iterator<Item = &Solution> {
        self.entries.iter().map(|(s, _)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub z: f64,
    pub l: f64,
    pub seconds: f64,
    pub phase1_iterations: u64,
    pub phase2_iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: String,
    pub seed: u64,
    pub best: Solution,
    pub z: f64,
    pub l: f64,
    pub z_avg: f64,
    pub z_worst: f64,
    pub sigma_z: f64,
    pub runs: Vec<RunRecord>,
    pub wall_seconds: f64,
    pub phase1_iterations: u64,
    pub phase2_iterations: u64,
}

impl SolveReport {
    pub fn run_z(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.z).collect()
    }
}

/// Population standard deviation. Deviations are taken from the first value
/// so that identical inputs give exactly zero.
pub fn population_sd(values: &[f64]) -> f64 {
    let Some(&shift) = values.first() else { return 0.0 };
    let n = values.len() as f64;
    let mean = values.iter().map(|v| v - shift).sum::<f64>() / n;
    (values.iter().map(|v| (v - shift - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Insert a demand node at its cheapest feasible position.
pub fn cheapest_insertion(instance: &Instance, solution: &Solution, node: usize) -> Result<Solution, IlsError> {
    let mut out = solution.clone();
    insert_node(instance, &mut out.routes, node)?;
    out.refresh_totals();
    Ok(out)
}

fn insert_node(inst: &Instance, routes: &mut [Route], node: usize) -> Result<(), IlsError> {
    let ins = best_insertion(inst, routes, node).ok_or(IlsError::NoFeasibleInsertion(node))?;
    apply_insertion(inst, routes, node, ins);
    Ok(())
}

fn seed_visits(inst: &Instance, node: usize) -> Vec<Visit> {
    match inst.center_of(node) {
        Some(c) if inst.kind(node) == NodeKind::TypeII => {
            vec![Visit::KeyPickup(c), Visit::Demand(node), Visit::KeyDelivery(c)]
        }
        _ => vec![Visit::Demand(node)],
    }
}

/// Randomized construction: one random demand node per route, then the
/// rest in random order by cheapest insertion, restarting on failure.
pub fn initialize<R: RngCore + ?Sized>(instance: &Instance, rng: &mut R, retry_cap: usize) -> Result<Solution, IlsError> {
    let limit = instance.max_duration() + EPS;
    'attempt: for _ in 0..retry_cap {
        let mut open: Vec<usize> = instance.demand_nodes().to_vec();
        let mut routes = vec![Route::empty(); instance.num_vehicles()];
        for route in routes.iter_mut() {
            if open.is_empty() {
                break;
            }
            let node = open.remove(index(rng, open.len()));
            *route = Route::new(instance, seed_visits(instance, node));
        }
        if routes.iter().any(|r| r.duration > limit) {
            continue;
        }
        while !open.is_empty() {
            let node = open.remove(index(rng, open.len()));
            if insert_node(instance, &mut routes, node).is_err() {
                continue 'attempt;
            }
        }
        return Ok(Solution::from_routes(routes));
    }
    Err(IlsError::InitExhausted(retry_cap))
}

/// Removal weight of each demand visit: its bypass saving, averaged with the
/// savings of its key visits for a well.
fn removal_weights(inst: &Instance, routes: &[Route]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for (r, route) in routes.iter().enumerate() {
        let v = &route.visits;
        for (p, visit) in v.iter().enumerate() {
            let Visit::Demand(i) = *visit else { continue };
            let own = ops::bypass_saving(inst, v, p);
            let weight = match inst.center_of(i) {
                Some(c) => {
                    let at = |key: Visit| v.iter().position(|&x| x == key);
                    let sp = at(Visit::KeyPickup(c)).map_or(0.0, |q| ops::bypass_saving(inst, v, q));
                    let sd = at(Visit::KeyDelivery(c)).map_or(0.0, |q| ops::bypass_saving(inst, v, q));
                    (own + sp + sd) / 3.0
                }
                None => own,
            };
            out.push((r, p, weight));
        }
    }
    out
}

/// S2: savings-guided removal of at least ⌈α·n⌉ demand nodes, then
/// randomized cheapest reinsertion.
pub fn shake2<R: RngCore + ?Sized>(instance: &Instance, solution: &Solution, alpha: f64, retry_cap: usize, rng: &mut R) -> Result<Solution, IlsError> {
    let n = instance.demand_nodes().len();
    let target = ((alpha * n as f64).ceil() as usize).clamp(1, n.max(1));
    let mut routes = solution.routes.clone();
    let mut removed = Vec::with_capacity(target);
    while removed.len() < target {
        let cands = removal_weights(instance, &routes);
        if cands.is_empty() {
            break;
        }
        let weights: Vec<f64> = cands.iter().map(|c| c.2).collect();
        let (r, p, _) = cands[roulette(rng, &weights).expect("non-empty")];
        let visits = &mut routes[r].visits;
        let Visit::Demand(node) = visits.remove(p) else { unreachable!() };
        if let Some(c) = instance.center_of(node) {
            let shared = visits.iter().any(|v| matches!(*v, Visit::Demand(j) if instance.center_of(j) == Some(c)));
            if !shared {
                visits.retain(|&v| v != Visit::KeyPickup(c) && v != Visit::KeyDelivery(c));
            }
        }
        routes[r].duration = crate::solution::route_duration(instance, visits);
        removed.push(node);
    }
    for _ in 0..retry_cap {
        let mut order = removed.clone();
        shuffle(rng, &mut order);
        let mut trial = routes.clone();
        if order.iter().all(|&node| insert_node(instance, &mut trial, node).is_ok()) {
            return Ok(Solution::from_routes(trial));
        }
    }
    Err(IlsError::RebuildFailed(retry_cap))
}

/// S1: random 3-opt exchanges on random routes while the total stays within
/// `(1 + α)` times the incumbent. Bounded by max(n, K) exchanges.
pub fn shake1<R: RngCore + ?Sized>(instance: &Instance, solution: &Solution, incumbent_z: f64, alpha: f64, rng: &mut R) -> Solution {
    let mut out = solution.clone();
    let cap = instance.demand_nodes().len().max(instance.num_vehicles()).max(1);
    let band = (1.0 + alpha) * incumbent_z + EPS;
    for _ in 0..cap {
        three_opt::random_exchange(instance, &mut out, rng);
        if out.z > band {
            break;
        }
    }
    out
}

/// Per-run search state: the memoized neighborhood engine and 3-opt memo.
pub struct LocalSearch<'a> {
    engine: Engine<'a>,
    memo: DescentMemo,
    gamma: usize,
}

impl<'a> LocalSearch<'a> {
    pub fn new(instance: &'a Instance, gamma: usize) -> Self {
        Self { engine: Engine::new(instance), memo: DescentMemo::default(), gamma }
    }

    pub fn best_move(&mut self, solution: &Solution, neighborhood: Neighborhood) -> Option<MoveChoice> {
        self.engine.best_move(solution, neighborhood)
    }

    /// Apply the single best improving move of a neighborhood, if any.
    pub fn improve(&mut self, solution: &mut Solution, neighborhood: Neighborhood) -> bool {
        self.engine.improve(solution, neighborhood)
    }

    /// LS5. Returns whether an attempt improved a route.
    pub fn three_opt<R: RngCore + ?Sized>(&mut self, solution: &mut Solution, rng: &mut R) -> bool {
        let ctx = &self.engine.ctx;
        three_opt::three_opt_attempts(ctx.inst, &ctx.near, solution, rng, self.gamma, &mut self.memo)
    }

    /// LS1 to LS5 in turn, each to its own local optimum, until a full pass
    /// changes nothing.
    pub fn descend<R: RngCore + ?Sized>(&mut self, solution: &mut Solution, rng: &mut R) {
        loop {
            let mut improved = false;
            for n in Neighborhood::ALL {
                while self.improve(solution, n) {
                    improved = true;
                }
            }
            improved |= self.three_opt(solution, rng);
            if !improved {
                break;
            }
        }
    }
}

pub fn local_search<R: RngCore + ?Sized>(instance: &Instance, solution: &Solution, gamma: usize, rng: &mut R) -> Solution {
    let mut out = solution.clone();
    LocalSearch::new(instance, gamma).descend(&mut out, rng);
    out
}

/// LS1 (intra) or LS2 (inter).
pub fn ls_swap(instance: &Instance, solution: &Solution, intra: bool) -> Solution {
    let n = if intra { Neighborhood::IntraSwap } else { Neighborhood::InterSwap };
    let mut out = solution.clone();
    LocalSearch::new(instance, 1).improve(&mut out, n);
    out
}

/// LS3 (intra) or LS4 (inter).
pub fn ls_relocate(instance: &Instance, solution: &Solution, intra: bool) -> Solution {
    let n = if intra { Neighborhood::IntraRelocate } else { Neighborhood::InterRelocate };
    let mut out = solution.clone();
    LocalSearch::new(instance, 1).improve(&mut out, n);
    out
}

/// LS5 with a fresh memo.
pub fn ls_three_opt<R: RngCore + ?Sized>(instance: &Instance, solution: &Solution, rng: &mut R, gamma: usize) -> Solution {
    let mut out = solution.clone();
    LocalSearch::new(instance, gamma).three_opt(&mut out, rng);
    out
}

fn shake<R: RngCore + ?Sized>(inst: &Instance, x: &Solution, z_star: f64, p: &IlsParams, rng: &mut R) -> Solution {
    if coin(rng) {
        shake1(inst, x, z_star, p.alpha, rng)
    } else {
        // A failed rebuild leaves the solution unperturbed.
        shake2(inst, x, p.alpha, p.init_retry_cap, rng).unwrap_or_else(|_| x.clone())
    }
}

/// Outcome of one seeded run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Solution,
    pub phase1_iterations: u64,
    pub phase2_iterations: u64,
    /// Incumbent z after every iteration, when tracing is on.
    pub trace: Vec<f64>,
}

/// One run of the two-phase search from `seed`.
pub fn solve_once(instance: &Instance, params: &IlsParams, seed: u64, trace: bool) -> Result<RunOutcome, IlsError> {
    let mut rng: Rng64 = seeded(seed);
    let mut ls = LocalSearch::new(instance, params.gamma);
    let mut x = initialize(instance, &mut rng, params.init_retry_cap)?;
    ls.descend(&mut x, &mut rng);
    let mut best = x.clone();
    let mut bk = BkSet::new(params.beta);
    bk.insert(&best);
    let mut out = RunOutcome { best: best.clone(), phase1_iterations: 0, phase2_iterations: 0, trace: Vec::new() };

    'phase1: loop {
        let mut idle = 0;
        while idle < params.max_iter {
            x = shake(instance, &x, best.z, params, &mut rng);
            ls.descend(&mut x, &mut rng);
            bk.insert(&x);
            out.phase1_iterations += 1;
            if x.better_than(&best) {
                best = x.clone();
                idle = 0;
            } else {
                x = best.clone();
                idle += 1;
            }
            if trace {
                out.trace.push(best.z);
            }
        }

        let snapshot: Vec<Solution> = bk.solutions().cloned().collect();
        for start in snapshot {
            x = start;
            let mut idle = 0;
            while idle < params.max_iter {
                x = shake(instance, &x, best.z, params, &mut rng);
                ls.descend(&mut x, &mut rng);
                out.phase2_iterations += 1;
                if x.z < best.z - EPS {
                    best = x.clone();
                    bk.insert(&best);
                    if trace {
                        out.trace.push(best.z);
                    }
                    continue 'phase1;
                }
                idle += 1;
                if trace {
                    out.trace.push(best.z);
                }
            }
        }
        break;
    }
    out.best = best;
    Ok(out)
}

/// `params.runs` independent runs with seeds derived from `params.seed`.
pub fn ils_run(instance: &Instance, params: &IlsParams) -> Result<SolveReport, IlsError> {
    params.check()?;
    let started = Instant::now();
    let results: Vec<Result<(RunOutcome, u64, f64), IlsError>> = (0..params.runs)
        .into_par_iter()
        .map(|run| {
            let seed = derive_seed(params.seed, &[run as u64]);
            let t = Instant::now();
            solve_once(instance, params, seed, false).map(|o| (o, seed, t.elapsed().as_secs_f64()))
        })
        .collect();
    let mut runs = Vec::with_capacity(params.runs);
    let mut best: Option<Solution> = None;
    for (run, res) in results.into_iter().enumerate() {
        let (outcome, seed, seconds) = res?;
        runs.push(RunRecord {
            run,
            seed,
            z: outcome.best.z,
            l: outcome.best.l,
            seconds,
            phase1_iterations: outcome.phase1_iterations,
            phase2_iterations: outcome.phase2_iterations,
        });
        if best.as_ref().is_none_or(|b| outcome.best.better_than(b)) {
            best = Some(outcome.best);
        }
    }
    let mut best = best.expect("at least one run");
    best.refresh(instance);
    let zs: Vec<f64> = runs.iter().map(|r| r.z).collect();
    Ok(SolveReport {
        instance: instance.name().to_string(),
        seed: params.seed,
        z: best.z,
        l: best.l,
        z_avg: zs.iter().sum::<f64>() / zs.len() as f64,
        z_worst: zs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sigma_z: population_sd(&zs),
        phase1_iterations: runs.iter().map(|r| r.phase1_iterations).sum(),
        phase2_iterations: runs.iter().map(|r| r.phase2_iterations).sum(),
        runs,
        best,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
