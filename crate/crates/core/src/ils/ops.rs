//! Route-level primitives shared by the neighborhoods: key repair, move
//! builders and cheapest insertion.

use crate::instance::{Instance, NodeKind};
use crate::solution::{route_duration, Route, Visit, EPS};

/// Travel from the location before gap `g` to the one after it, where gap
/// `g` sits in front of `visits[g]`.
#[inline]
pub(crate) fn gap_ends(inst: &Instance, visits: &[Visit], g: usize) -> (usize, usize) {
    let depot = inst.depot();
    let u = if g == 0 { depot } else { visits[g - 1].loc() };
    let w = if g == visits.len() { depot } else { visits[g].loc() };
    (u, w)
}

/// Extra duration of putting location `x` between `u` and `w`.
#[inline]
pub(crate) fn detour(inst: &Instance, u: usize, x: usize, w: usize) -> f64 {
    inst.c(u, x) + inst.service(x) + inst.c(x, w) - inst.c(u, w)
}

/// Saving from bypassing the visit at position `pos`.
pub(crate) fn bypass_saving(inst: &Instance, visits: &[Visit], pos: usize) -> f64 {
    let (u, _) = gap_ends(inst, visits, pos);
    let (_, w) = gap_ends(inst, visits, pos + 1);
    detour(inst, u, visits[pos].loc(), w)
}

#[derive(Clone, Copy)]
struct CenterState {
    center: usize,
    first: usize,
    last: usize,
    pickup: bool,
    delivery: bool,
}

/// Make the key visits of a route consistent with its wells.
///
/// Orphaned, duplicated and misplaced key visits are dropped. Each missing
/// pickup is then inserted at its cheapest gap before the first well of its
/// center (centers in ascending id), followed by each missing delivery at
/// its cheapest gap after the last well. Ties go to the earliest gap.
pub fn repair_keys(inst: &Instance, visits: &mut Vec<Visit>) {
    let mut states: Vec<CenterState> = Vec::new();
    let well_spans = |visits: &[Visit], states: &mut Vec<CenterState>| {
        states.clear();
        for (pos, v) in visits.iter().enumerate() {
            if let Visit::Demand(i) = *v {
                if let Some(c) = inst.center_of(i) {
                    match states.iter_mut().find(|s| s.center == c) {
                        Some(s) => s.last = pos,
                        None => states.push(CenterState { center: c, first: pos, last: pos, pickup: false, delivery: false }),
                    }
                }
            }
        }
    };
    well_spans(visits, &mut states);

    let mut pos = 0;
    visits.retain(|v| {
        let here = pos;
        pos += 1;
        let keep = match *v {
            Visit::Demand(_) => return true,
            Visit::KeyPickup(c) => match states.iter_mut().find(|s| s.center == c) {
                Some(s) if !s.pickup && here < s.first => {
                    s.pickup = true;
                    true
                }
                _ => false,
            },
            Visit::KeyDelivery(c) => match states.iter_mut().find(|s| s.center == c) {
                Some(s) if !s.delivery && here > s.last => {
                    s.delivery = true;
                    true
                }
                _ => false,
            },
        };
        keep
    });
    if states.iter().all(|s| s.pickup && s.delivery) {
        return;
    }

    let missing: Vec<(usize, bool, bool)> = {
        let mut m: Vec<_> = states.iter().map(|s| (s.center, s.pickup, s.delivery)).collect();
        m.sort_unstable();
        m
    };
    well_spans(visits, &mut states);
    for &(c, has_pickup, _) in &missing {
        if has_pickup {
            continue;
        }
        let first = states.iter().find(|s| s.center == c).map(|s| s.first).unwrap_or(0);
        let g = cheapest_gap(inst, visits, c, 0, first);
        visits.insert(g, Visit::KeyPickup(c));
        for s in states.iter_mut() {
            if s.first >= g {
                s.first += 1;
            }
            if s.last >= g {
                s.last += 1;
            }
        }
    }
    for &(c, _, has_delivery) in &missing {
        if has_delivery {
            continue;
        }
        let last = states.iter().find(|s| s.center == c).map(|s| s.last).unwrap_or(0);
        let g = cheapest_gap(inst, visits, c, last + 1, visits.len());
        visits.insert(g, Visit::KeyDelivery(c));
        for s in states.iter_mut() {
            if s.first >= g {
                s.first += 1;
            }
            if s.last >= g {
                s.last += 1;
            }
        }
    }
}

fn cheapest_gap(inst: &Instance, visits: &[Visit], loc: usize, lo: usize, hi: usize) -> usize {
    let mut best = lo;
    let mut best_cost = f64::INFINITY;
    for g in lo..=hi {
        let (u, w) = gap_ends(inst, visits, g);
        let cost = inst.c(u, loc) + inst.c(loc, w) - inst.c(u, w);
        if cost < best_cost {
            best_cost = cost;
            best = g;
        }
    }
    best
}

/// Repair a candidate route and return its duration.
pub(crate) fn repaired_cost(inst: &Instance, visits: &mut Vec<Visit>) -> f64 {
    repair_keys(inst, visits);
    route_duration(inst, visits)
}

/// Positions of the demand visits of a route.
pub(crate) fn demand_positions(visits: &[Visit]) -> Vec<usize> {
    visits.iter().enumerate().filter(|(_, v)| !v.is_key()).map(|(p, _)| p).collect()
}

/// A run of 1-3 consecutive demand visits of a route, counted in demand
/// order: demand indices `start..start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

pub(crate) const MAX_SEGMENT: usize = 3;

/// All segments of a route with `demand_count` demand visits, ordered by
/// start then length.
pub(crate) fn segments(demand_count: usize) -> impl Iterator<Item = Segment> {
    (0..demand_count).flat_map(move |start| (1..=MAX_SEGMENT.min(demand_count - start)).map(move |len| Segment { start, len }))
}

/// Visit positions `a..=b` covered by a segment, including key visits lying
/// between its demand visits.
#[inline]
pub(crate) fn span(dpos: &[usize], s: Segment) -> (usize, usize) {
    (dpos[s.start], dpos[s.start + s.len - 1])
}

fn seg_demands(visits: &[Visit], a: usize, b: usize) -> impl Iterator<Item = Visit> + '_ {
    visits[a..=b].iter().copied().filter(|v| !v.is_key())
}

/// Route with the demand visits of `s2` moved in front and those of `s1`
/// moved behind; key visits inside both spans are dropped. `s1` must come
/// first.
pub(crate) fn build_intra_swap(visits: &[Visit], dpos: &[usize], s1: Segment, s2: Segment, out: &mut Vec<Visit>) {
    let (a1, b1) = span(dpos, s1);
    let (a2, b2) = span(dpos, s2);
    out.clear();
    out.extend_from_slice(&visits[..a1]);
    out.extend(seg_demands(visits, a2, b2));
    out.extend_from_slice(&visits[b1 + 1..a2]);
    out.extend(seg_demands(visits, a1, b1));
    out.extend_from_slice(&visits[b2 + 1..]);
}

/// Route without the span of `s`. Returns the gap where the span was.
pub(crate) fn build_removal(visits: &[Visit], dpos: &[usize], s: Segment, out: &mut Vec<Visit>) -> usize {
    let (a, b) = span(dpos, s);
    out.clear();
    out.extend_from_slice(&visits[..a]);
    out.extend_from_slice(&visits[b + 1..]);
    a
}

/// Route with the span of `s` replaced by the demand visits of `other`'s span.
pub(crate) fn build_replace(visits: &[Visit], dpos: &[usize], s: Segment, other: &[Visit], other_dpos: &[usize], t: Segment, out: &mut Vec<Visit>) {
    let (a, b) = span(dpos, s);
    let (ta, tb) = span(other_dpos, t);
    out.clear();
    out.extend_from_slice(&visits[..a]);
    out.extend(seg_demands(other, ta, tb));
    out.extend_from_slice(&visits[b + 1..]);
}

/// `target` with the demand visits of `source`'s segment inserted at gap `g`.
pub(crate) fn build_insert(target: &[Visit], g: usize, source: &[Visit], source_dpos: &[usize], s: Segment, out: &mut Vec<Visit>) {
    let (a, b) = span(source_dpos, s);
    out.clear();
    out.extend_from_slice(&target[..g]);
    out.extend(seg_demands(source, a, b));
    out.extend_from_slice(&target[g..]);
}

/// Intra-route relocation: span of `s` removed and its demand visits put at
/// gap `g` of the remaining route.
pub(crate) fn build_intra_relocate(visits: &[Visit], dpos: &[usize], s: Segment, g: usize, out: &mut Vec<Visit>) {
    let (a, b) = span(dpos, s);
    let mut rest = Vec::with_capacity(visits.len());
    rest.extend_from_slice(&visits[..a]);
    rest.extend_from_slice(&visits[b + 1..]);
    out.clear();
    out.extend_from_slice(&rest[..g]);
    out.extend(seg_demands(visits, a, b));
    out.extend_from_slice(&rest[g..]);
}

/// Where a demand node goes in `cheapest_insertion`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Insert the node alone before position `g`.
    Single(usize),
    /// Insert pickup, well and delivery at gaps `qp <= qi <= qd` of the
    /// original route.
    Triple(usize, usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub route: usize,
    pub placement: Placement,
    pub delta: f64,
}

/// Best feasible placement of an unrouted demand node. Ties go to the
/// lowest route index, then the earliest position.
pub fn best_insertion(inst: &Instance, routes: &[Route], node: usize) -> Option<Insertion> {
    let limit = inst.max_duration() + EPS;
    let mut best: Option<Insertion> = None;
    let center = match inst.kind(node) {
        NodeKind::TypeII => inst.center_of(node),
        _ => None,
    };
    for (r, route) in routes.iter().enumerate() {
        let visits = &route.visits;
        let mut consider = |placement: Placement, delta: f64| {
            if route.duration + delta <= limit && best.is_none_or(|b| delta < b.delta) {
                best = Some(Insertion { route: r, placement, delta });
            }
        };
        match center {
            None => {
                for g in 0..=visits.len() {
                    let (u, w) = gap_ends(inst, visits, g);
                    consider(Placement::Single(g), detour(inst, u, node, w));
                }
            }
            Some(c) => {
                let p = visits.iter().position(|&v| v == Visit::KeyPickup(c));
                let d = visits.iter().position(|&v| v == Visit::KeyDelivery(c));
                match (p, d) {
                    (Some(p), Some(d)) if p < d => {
                        for g in p + 1..=d {
                            let (u, w) = gap_ends(inst, visits, g);
                            consider(Placement::Single(g), detour(inst, u, node, w));
                        }
                    }
                    (None, None) => {
                        let m = visits.len();
                        for qp in 0..=m {
                            for qi in qp..=m {
                                for qd in qi..=m {
                                    consider(Placement::Triple(qp, qi, qd), triple_delta(inst, visits, c, node, qp, qi, qd));
                                }
                            }
                        }
                    }
                    // A route holding only one alias of the center cannot take the well.
                    _ => {}
                }
            }
        }
    }
    best
}

fn triple_delta(inst: &Instance, visits: &[Visit], c: usize, well: usize, qp: usize, qi: usize, qd: usize) -> f64 {
    let chain = |locs: &[usize], g: usize| -> f64 {
        let (u, w) = gap_ends(inst, visits, g);
        let mut total = inst.c(u, locs[0]) - inst.c(u, w);
        for pair in locs.windows(2) {
            total += inst.c(pair[0], pair[1]);
        }
        for &l in locs {
            total += inst.service(l);
        }
        total + inst.c(locs[locs.len() - 1], w)
    };
    match (qp == qi, qi == qd) {
        (true, true) => chain(&[c, well, c], qp),
        (true, false) => chain(&[c, well], qp) + chain(&[c], qd),
        (false, true) => chain(&[c], qp) + chain(&[well, c], qi),
        (false, false) => chain(&[c], qp) + chain(&[well], qi) + chain(&[c], qd),
    }
}

/// Apply an insertion found by [`best_insertion`].
pub fn apply_insertion(inst: &Instance, routes: &mut [Route], node: usize, ins: Insertion) {
    let route = &mut routes[ins.route];
    match ins.placement {
        Placement::Single(g) => route.visits.insert(g, Visit::Demand(node)),
        Placement::Triple(qp, qi, qd) => {
            let c = inst.center_of(node).expect("triple placement of a well");
            // Insert from the back so earlier gaps stay valid.
            route.visits.insert(qd, Visit::KeyDelivery(c));
            route.visits.insert(qi, Visit::Demand(node));
            route.visits.insert(qp, Visit::KeyPickup(c));
        }
    }
    route.duration = route_duration(inst, &route.visits);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::{line_instance, node};
    use crate::instance::{Instance, NodeKind, TravelSource};
    use std::collections::BTreeMap;

    fn two_centers() -> Instance {
        let nodes = vec![
            node(0, NodeKind::Depot, 0.0, 0.0, 0.0),
            node(1, NodeKind::KeyCenter, 10.0, 0.0, 5.0),
            node(2, NodeKind::TypeII, 20.0, 0.0, 10.0),
            node(3, NodeKind::TypeII, 20.0, 10.0, 10.0),
            node(4, NodeKind::KeyCenter, 0.0, 10.0, 5.0),
            node(5, NodeKind::TypeII, 10.0, 20.0, 10.0),
            node(6, NodeKind::TypeI, 5.0, 5.0, 3.0),
        ];
        let key_of = BTreeMap::from([(2, 1), (3, 1), (5, 4)]);
        Instance::new("t", nodes, key_of, 2, 1000.0, TravelSource::RoundedEuclidean).unwrap()
    }

    #[test]
    fn repair_adds_and_drops_keys() {
        let inst = two_centers();
        let mut r = vec![Visit::KeyDelivery(4), Visit::Demand(2), Visit::KeyPickup(1), Visit::Demand(6)];
        repair_keys(&inst, &mut r);
        assert_eq!(r, vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1), Visit::Demand(6)]);

        let mut r = vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::Demand(3), Visit::KeyDelivery(1)];
        let before = r.clone();
        repair_keys(&inst, &mut r);
        assert_eq!(r, before);

        let mut r = vec![Visit::KeyPickup(1), Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1), Visit::KeyDelivery(1)];
        repair_keys(&inst, &mut r);
        assert_eq!(r, vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)]);
    }

    #[test]
    fn repair_keeps_wells_between_keys() {
        let inst = two_centers();
        let mut r = vec![Visit::Demand(5), Visit::Demand(3), Visit::Demand(2), Visit::Demand(6)];
        repair_keys(&inst, &mut r);
        let pos = |v: Visit| r.iter().position(|&x| x == v).unwrap();
        assert!(pos(Visit::KeyPickup(4)) < pos(Visit::Demand(5)));
        assert!(pos(Visit::KeyDelivery(4)) > pos(Visit::Demand(5)));
        assert!(pos(Visit::KeyPickup(1)) < pos(Visit::Demand(3)));
        assert!(pos(Visit::KeyDelivery(1)) > pos(Visit::Demand(2)));
        assert_eq!(r.len(), 8);
    }

    #[test]
    fn insertion_into_empty_route() {
        let inst = two_centers();
        let routes = vec![Route::empty(), Route::empty()];
        let ins = best_insertion(&inst, &routes, 6).unwrap();
        assert_eq!(ins.route, 0);
        assert_eq!(ins.placement, Placement::Single(0));
        let expected = inst.c(0, 6) + 3.0 + inst.c(6, 0);
        assert!((ins.delta - expected).abs() < 1e-9);
    }

    #[test]
    fn well_goes_between_existing_keys() {
        let inst = two_centers();
        let mut routes = vec![Route::new(&inst, vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)]), Route::empty()];
        let ins = best_insertion(&inst, &routes, 3).unwrap();
        assert_eq!(ins.route, 0);
        apply_insertion(&inst, &mut routes, 3, ins);
        assert_eq!(routes[0].visits.len(), 4);
        assert_eq!(routes[0].visits[0], Visit::KeyPickup(1));
        assert_eq!(routes[0].visits[3], Visit::KeyDelivery(1));
    }

    #[test]
    fn triple_into_empty_route_matches_closed_form() {
        let inst = line_instance();
        let mut routes = vec![Route::empty()];
        let ins = best_insertion(&inst, &routes, 2).unwrap();
        assert_eq!(ins.placement, Placement::Triple(0, 0, 0));
        assert!((ins.delta - 20.0).abs() < 1e-9);
        apply_insertion(&inst, &mut routes, 2, ins);
        assert_eq!(routes[0].visits, vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)]);
    }

    #[test]
    fn segments_enumerate_in_order() {
        let segs: Vec<_> = segments(4).map(|s| (s.start, s.len)).collect();
        assert_eq!(segs, vec![(0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)]);
        assert_eq!(segments(0).count(), 0);
    }
}
