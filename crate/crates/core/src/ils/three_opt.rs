//! 3-opt on single routes: the LS5 descent and the S1 random perturbation.
//!
//! Before a route is reordered, up to three non-adjacent key visits are
//! taken out by roulette over their bypass savings. The remaining sequence
//! is reordered by 3-opt exchanges and the key visits are repaired after
//! every exchange.

use std::collections::HashMap;

use rand_core::RngCore;

use super::ops::{bypass_saving, repaired_cost};
use super::search::fingerprint;
use crate::instance::Instance;
use crate::rng::{index, roulette};
use crate::solution::{Route, Solution, Visit, EPS};

/// Reconnection patterns of three removed edges, with segments B and C
/// between the cuts: B reversed, C reversed, both reversed, then the four
/// orders with C in front.
pub const RECONNECTIONS: usize = 7;

/// Cost change of a 3-opt exchange on `locs` (depot, sequence, depot), cutting
/// edges `t1 < t2 < t3`.
#[cfg(test)]
fn exchange_delta(inst: &Instance, locs: &[usize], t1: usize, t2: usize, t3: usize, case: usize) -> f64 {
    let (a, b1, b2, c1, c2, d) = (locs[t1], locs[t1 + 1], locs[t2], locs[t2 + 1], locs[t3], locs[t3 + 1]);
    let c = |x, y| inst.c(x, y);
    let removed = c(a, b1) + c(b2, c1) + c(c2, d);
    let added = match case {
        0 => c(a, b2) + c(b1, c1) + c(c2, d),
        1 => c(a, b1) + c(b2, c2) + c(c1, d),
        2 => c(a, b2) + c(b1, c2) + c(c1, d),
        3 => c(a, c1) + c(c2, b1) + c(b2, d),
        4 => c(a, c1) + c(c2, b2) + c(b1, d),
        5 => c(a, c2) + c(c1, b1) + c(b2, d),
        6 => c(a, c2) + c(c1, b2) + c(b1, d),
        _ => unreachable!("reconnection {case}"),
    };
    added - removed
}

/// Sequence after the exchange priced by [`exchange_delta`].
pub(crate) fn apply_exchange<T: Copy>(seq: &[T], t1: usize, t2: usize, t3: usize, case: usize) -> Vec<T> {
    let b = &seq[t1..t2];
    let cc = &seq[t2..t3];
    let mut out = Vec::with_capacity(seq.len());
    out.extend_from_slice(&seq[..t1]);
    let push = |out: &mut Vec<T>, part: &[T], rev: bool| {
        if rev {
            out.extend(part.iter().rev().copied());
        } else {
            out.extend_from_slice(part);
        }
    };
    let (first, first_rev, second, second_rev) = match case {
        0 => (b, true, cc, false),
        1 => (b, false, cc, true),
        2 => (b, true, cc, true),
        3 => (cc, false, b, false),
        4 => (cc, false, b, true),
        5 => (cc, true, b, false),
        6 => (cc, true, b, true),
        _ => unreachable!("reconnection {case}"),
    };
    push(&mut out, first, first_rev);
    push(&mut out, second, second_rev);
    out.extend_from_slice(&seq[t3..]);
    out
}

fn locations(inst: &Instance, seq: &[Visit]) -> Vec<usize> {
    let depot = inst.depot();
    let mut locs = Vec::with_capacity(seq.len() + 2);
    locs.push(depot);
    locs.extend(seq.iter().map(|v| v.loc()));
    locs.push(depot);
    locs
}

/// Roulette-pick up to three pairwise non-adjacent key visits, weighted by
/// their bypass savings. Returns sorted positions.
pub(crate) fn pick_keys<R: RngCore + ?Sized>(inst: &Instance, visits: &[Visit], rng: &mut R) -> Vec<usize> {
    let keys: Vec<usize> = (0..visits.len()).filter(|&p| visits[p].is_key()).collect();
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < 3 {
        let eligible: Vec<usize> = keys.iter().copied().filter(|&p| chosen.iter().all(|&q| p.abs_diff(q) > 1)).collect();
        if eligible.is_empty() {
            break;
        }
        let weights: Vec<f64> = eligible.iter().map(|&p| bypass_saving(inst, visits, p)).collect();
        let pick = roulette(rng, &weights).expect("non-empty");
        chosen.push(eligible[pick]);
    }
    chosen.sort_unstable();
    chosen
}

fn without(visits: &[Visit], removed: &[usize]) -> Vec<Visit> {
    visits.iter().enumerate().filter(|(p, _)| !removed.contains(p)).map(|(_, v)| *v).collect()
}

/// Trajectory of a best-improvement 3-opt descent: how many scans it took
/// to reach a local optimum and every repaired route that improved on the
/// best so far, tagged with the number of exchanges made before it.
#[derive(Debug, Clone, Default)]
pub(crate) struct Descent {
    pub scans: usize,
    pub improvements: Vec<(usize, Route)>,
}

impl Descent {
    /// Best route reachable within `budget` scans.
    pub fn within(&self, budget: usize) -> Option<&Route> {
        self.improvements.iter().rev().find(|(at, _)| *at < budget.max(1)).map(|(_, r)| r)
    }
}

/// Best-improvement 3-opt to a local optimum, repairing after each exchange.
/// Only repaired routes that are feasible and beat `reference` by more than
/// the tolerance are recorded.
pub(crate) fn descend(inst: &Instance, near: &Near, mut seq: Vec<Visit>, reference: f64) -> Descent {
    let limit = inst.max_duration() + EPS;
    let mut out = Descent::default();
    let mut best_cost = reference - EPS;
    let mut consider = |seq: &[Visit], at: usize, out: &mut Descent| {
        let mut cand = seq.to_vec();
        let cost = repaired_cost(inst, &mut cand);
        if cost <= limit && cost < best_cost {
            best_cost = cost;
            out.improvements.push((at, Route { visits: cand, duration: cost }));
        }
    };
    consider(&seq, 0, &mut out);
    let mut scan = Scan::new(inst, near, &seq);
    let mut order: Vec<usize> = (0..seq.len() + 2).collect();
    loop {
        out.scans += 1;
        let Some((t1, t2, t3, case)) = scan.best(&order) else { break };
        seq = apply_exchange(&seq, t1, t2, t3, case);
        let inner = apply_exchange(&order[1..order.len() - 1], t1, t2, t3, case);
        order[1..=inner.len()].copy_from_slice(&inner);
        consider(&seq, out.scans, &mut out);
    }
    out
}

/// Added edges of each reconnection as pairs of cut ends; a cut end is
/// `2 * cut + side`, side 0 being the left node of the removed edge.
const ADDED: [[(u8, u8); 3]; RECONNECTIONS] = [
    [(0, 2), (1, 3), (5, 4)],
    [(2, 4), (3, 5), (1, 0)],
    [(0, 2), (1, 4), (3, 5)],
    [(0, 3), (4, 1), (2, 5)],
    [(0, 3), (4, 2), (1, 5)],
    [(0, 4), (3, 1), (2, 5)],
    [(0, 4), (3, 2), (1, 5)],
];

fn partner(case: usize, end: u8) -> u8 {
    ADDED[case]
        .iter()
        .find_map(|&(p, q)| {
            if p == end {
                Some(q)
            } else if q == end {
                Some(p)
            } else {
                None
            }
        })
        .unwrap()
}

/// Every location's other locations, nearest first.
pub(crate) struct Near {
    n: usize,
    lists: Vec<u16>,
}

impl Near {
    pub(crate) fn new(inst: &Instance) -> Self {
        let n = inst.node_count();
        let mut lists = Vec::with_capacity(n * n.saturating_sub(1));
        let mut row: Vec<u16> = Vec::with_capacity(n);
        for u in 0..n {
            row.clear();
            row.extend((0..n as u16).filter(|&v| v as usize != u));
            row.sort_by(|&a, &b| inst.c(u, a as usize).total_cmp(&inst.c(u, b as usize)).then(a.cmp(&b)));
            lists.extend_from_slice(&row);
        }
        Self { n, lists }
    }

    fn of(&self, u: usize) -> &[u16] {
        &self.lists[u * (self.n - 1)..(u + 1) * (self.n - 1)]
    }
}

/// Best-improvement 3-opt scan for one descent.
///
/// Works on elements (the two depot copies and the visits) rather than
/// positions: elements keep their locations while exchanges permute them,
/// so each element's list of the others, nearest first, is built once.
///
/// Every exchange is a cycle alternating removed and added edges. If it
/// gains in total, some rotation of the cycle has all partial gains
/// positive, so searching from every cut end, over nearest elements only
/// while the running gain stays positive, finds every improving exchange.
/// Reversals (two-edge cycles) are searched the same way and reported as B
/// reversed, or as C reversed when the reversed part ends at the last visit.
pub(crate) struct Scan<'a> {
    inst: &'a Instance,
    loc: Vec<usize>,
    /// Per element, the other elements and their distances, nearest first.
    nbrs: Vec<(u32, f64)>,
    pos: Vec<usize>,
    edge: Vec<f64>,
}

impl<'a> Scan<'a> {
    pub(crate) fn new(inst: &'a Instance, near: &Near, seq: &[Visit]) -> Self {
        let loc = locations(inst, seq);
        let n = loc.len();
        // Elements at each location, as a linked list.
        let mut head = vec![u32::MAX; inst.node_count()];
        let mut next = vec![u32::MAX; n];
        for el in (0..n).rev() {
            next[el] = head[loc[el]];
            head[loc[el]] = el as u32;
        }
        let mut nbrs = Vec::with_capacity(n * (n - 1));
        for (el, &here) in loc.iter().enumerate() {
            let start = nbrs.len();
            let push_at = |l: usize, d: f64, nbrs: &mut Vec<(u32, f64)>| {
                let mut o = head[l];
                while o != u32::MAX {
                    if o as usize != el {
                        nbrs.push((o, d));
                    }
                    o = next[o as usize];
                }
            };
            push_at(here, 0.0, &mut nbrs);
            for &v in near.of(here) {
                if nbrs.len() - start == n - 1 {
                    break;
                }
                push_at(v as usize, inst.c(here, v as usize), &mut nbrs);
            }
        }
        Self { inst, loc, nbrs, pos: vec![0; n], edge: vec![0.0; n - 1] }
    }

    #[inline]
    fn d(&self, u: usize, v: usize) -> f64 {
        self.inst.c(self.loc[u], self.loc[v])
    }

    /// Calls `f(element, distance)` for every other element strictly closer
    /// to `el` than `bound`.
    #[inline]
    fn closer(&self, el: usize, bound: f64, mut f: impl FnMut(usize, f64)) {
        let k = self.loc.len() - 1;
        for &(o, d) in &self.nbrs[el * k..(el + 1) * k] {
            if d >= bound {
                break;
            }
            f(o as usize, d);
        }
    }

    /// `order` holds the elements at positions 0..=m+1. Returns the best
    /// `(t1, t2, t3, case)` with delta below `-EPS`, ties going to the
    /// smallest tuple.
    pub(crate) fn best(&mut self, order: &[usize]) -> Option<(usize, usize, usize, usize)> {
        let n = order.len();
        let m = n - 2;
        if m < 2 {
            return None;
        }
        for (p, &el) in order.iter().enumerate() {
            self.pos[el] = p;
        }
        for t in 0..=m {
            self.edge[t] = self.d(order[t], order[t + 1]);
        }
        let mut best = (-EPS, None::<(usize, usize, usize, usize)>);
        let mut offer = |delta: f64, tuple: (usize, usize, usize, usize)| {
            if delta < best.0 || (delta == best.0 && best.1.is_some_and(|b| tuple < b)) {
                best = (delta, Some(tuple));
            }
        };
        let e = &self.edge;
        let dp = |p: usize, q: usize| self.d(order[p], order[q]);

        // Reversals: cuts ti and tj joined left-left and right-right.
        for ti in 0..=m {
            for side in 0..2 {
                self.closer(order[ti + side], e[ti], |v, _| {
                    let q = self.pos[v];
                    if q < side || q - side > m || q - side == ti {
                        return;
                    }
                    let (p, r) = (ti.min(q - side), ti.max(q - side));
                    let delta = dp(p, r) + dp(p + 1, r + 1) - e[p] - e[r];
                    if r < m {
                        offer(delta, (p, r, r + 1, 0));
                    } else if p >= 1 {
                        offer(delta, (0, p, m, 1));
                    }
                });
            }
        }

        // Three-edge cycles.
        for case in 2..6 {
            for u in 0..6u8 {
                let v = partner(case, u);
                let w = v ^ 1;
                let z = partner(case, w);
                let (ci, cj, ck) = ((u >> 1) as usize, (v >> 1) as usize, (z >> 1) as usize);
                let (su, sv, sw, sz) = ((u & 1) as usize, (v & 1) as usize, (w & 1) as usize, (z & 1) as usize);
                for ti in 0..=m {
                    self.closer(order[ti + su], e[ti], |ev, dv| {
                        let q = self.pos[ev];
                        if q < sv || q - sv > m {
                            return;
                        }
                        let tj = q - sv;
                        if (ci < cj) != (ti < tj) || ti == tj {
                            return;
                        }
                        let gain = e[ti] - dv + e[tj];
                        self.closer(order[tj + sw], gain, |ez, _| {
                            let r = self.pos[ez];
                            if r < sz || r - sz > m {
                                return;
                            }
                            let mut t = [0usize; 3];
                            t[ci] = ti;
                            t[cj] = tj;
                            t[ck] = r - sz;
                            if t[0] < t[1] && t[1] < t[2] {
                                offer(self.delta(order, t, case), (t[0], t[1], t[2], case));
                            }
                        });
                    });
                }
            }
        }
        best.1
    }

    fn delta(&self, order: &[usize], t: [usize; 3], case: usize) -> f64 {
        let end = |x: u8| order[t[(x >> 1) as usize] + (x & 1) as usize];
        let added: f64 = ADDED[case].iter().map(|&(p, q)| self.d(end(p), end(q))).sum();
        let removed: f64 = (0..3u8).map(|c| self.d(end(2 * c), end(2 * c + 1))).sum();
        added - removed
    }
}

/// Results of [`descend`] per (route content, removed positions).
#[derive(Default)]
pub(crate) struct DescentMemo {
    map: HashMap<(u128, [u16; 3]), Descent>,
}

const MEMO_CAP: usize = 200_000;

impl DescentMemo {
    fn run(&mut self, inst: &Instance, near: &Near, route: &Route, removed: &[usize]) -> &Descent {
        let mut tag = [u16::MAX; 3];
        for (slot, &p) in tag.iter_mut().zip(removed) {
            *slot = p as u16;
        }
        let key = (fingerprint(&route.visits), tag);
        if self.map.len() >= MEMO_CAP && !self.map.contains_key(&key) {
            self.map.clear();
        }
        self.map.entry(key).or_insert_with(|| descend(inst, near, without(&route.visits, removed), route.duration))
    }
}

/// LS5: random attempts sharing a budget of `gamma` 3-opt scans; stops at
/// the first attempt that yields a better route.
pub(crate) fn three_opt_attempts<R: RngCore + ?Sized>(
    inst: &Instance,
    near: &Near,
    solution: &mut Solution,
    rng: &mut R,
    gamma: usize,
    memo: &mut DescentMemo,
) -> bool {
    let used: Vec<usize> = (0..solution.routes.len()).filter(|&r| !solution.routes[r].is_empty()).collect();
    if used.is_empty() {
        return false;
    }
    let mut budget = gamma;
    while budget > 0 {
        let r = used[index(rng, used.len())];
        let removed = pick_keys(inst, &solution.routes[r].visits, rng);
        let descent = memo.run(inst, near, &solution.routes[r], &removed);
        if let Some(better) = descent.within(budget) {
            solution.routes[r] = better.clone();
            solution.refresh_totals();
            return true;
        }
        budget = budget.saturating_sub(descent.scans);
    }
    false
}

/// One random 3-opt exchange on a random non-empty route. Exchanges that
/// would break the duration cap are discarded. Returns whether the solution
/// changed.
pub(crate) fn random_exchange<R: RngCore + ?Sized>(inst: &Instance, solution: &mut Solution, rng: &mut R) -> bool {
    let used: Vec<usize> = (0..solution.routes.len()).filter(|&r| !solution.routes[r].is_empty()).collect();
    if used.is_empty() {
        return false;
    }
    let r = used[index(rng, used.len())];
    let route = &solution.routes[r];
    let removed = pick_keys(inst, &route.visits, rng);
    let seq = without(&route.visits, &removed);
    let m = seq.len();
    if m < 2 {
        return false;
    }
    let mut cuts = [0usize; 3];
    loop {
        for cut in cuts.iter_mut() {
            *cut = index(rng, m + 1);
        }
        cuts.sort_unstable();
        if cuts[0] < cuts[1] && cuts[1] < cuts[2] {
            break;
        }
    }
    let case = index(rng, RECONNECTIONS);
    let mut next = apply_exchange(&seq, cuts[0], cuts[1], cuts[2], case);
    let duration = repaired_cost(inst, &mut next);
    if duration > inst.max_duration() + EPS || next == route.visits {
        return false;
    }
    solution.routes[r] = Route { visits: next, duration };
    solution.refresh_totals();
    true
}
