//! Best-improvement search over the swap and relocate neighborhoods.
//!
//! Moves whose segments contain no well and no key visit are priced in O(1)
//! from the route's edges. Other moves build the candidate routes, repair
//! their key visits and cost them from scratch, unless a lower bound already
//! rules them out. The bound drops every key visit of the centers a move
//! touches and charges each such center at least twice its cheapest possible
//! insertion.
//!
//! Results are memoized per route (intra) and per ordered route pair
//! (inter), keyed by the content of the routes, so a local search pass only
//! re-examines routes that changed.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::ops::{
    build_insert, build_intra_relocate, build_intra_swap, build_removal, build_replace, demand_positions, repaired_cost, segments, span, Segment,
};
use crate::instance::Instance;
use crate::solution::{route_duration, Route, Solution, Visit, EPS};

/// Float noise allowed between a bound and the exact cost it bounds.
const SLACK: f64 = 1e-9;
const CACHE_CAP: usize = 400_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Neighborhood {
    /// LS1
    IntraSwap,
    /// LS2
    InterSwap,
    /// LS3
    IntraRelocate,
    /// LS4
    InterRelocate,
}

impl Neighborhood {
    pub const ALL: [Neighborhood; 4] = [Neighborhood::IntraSwap, Neighborhood::InterSwap, Neighborhood::IntraRelocate, Neighborhood::InterRelocate];

    pub fn is_intra(self) -> bool {
        matches!(self, Neighborhood::IntraSwap | Neighborhood::IntraRelocate)
    }
}

/// A move relative to the routes it touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    /// Exchange two segments; in the intra case the first comes first.
    Swap(Segment, Segment),
    /// Move a segment to a gap: of the route with the segment removed
    /// (intra), or of the destination route (inter).
    Relocate(Segment, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveChoice {
    pub neighborhood: Neighborhood,
    pub from: usize,
    pub to: usize,
    pub kind: MoveKind,
    pub delta: f64,
}

pub(crate) struct Ctx<'a> {
    pub inst: &'a Instance,
    pub limit: f64,
    /// Lower bound on the extra duration of one key visit at each center.
    pub ins_lb: Vec<f64>,
    pub near: super::three_opt::Near,
    /// Bit of each key center in the center masks, when there are few
    /// enough centers for them; `None` falls back to list scans.
    bit: Option<Vec<u8>>,
    /// Twice `ins_lb`, per bit.
    key2: Vec<f64>,
}

impl<'a> Ctx<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        let n = inst.node_count();
        let mut ins_lb = vec![0.0; n];
        for &c in inst.key_centers() {
            let mut best = f64::INFINITY;
            for u in 0..n {
                let cu = inst.c(u, c);
                for w in 0..n {
                    best = best.min(cu + inst.c(c, w) - inst.c(u, w));
                }
            }
            ins_lb[c] = inst.service(c) + best;
        }
        let centers = inst.key_centers();
        let bit = (centers.len() <= 128).then(|| {
            let mut bit = vec![u8::MAX; n];
            for (b, &c) in centers.iter().enumerate() {
                bit[c] = b as u8;
            }
            bit
        });
        let key2 = centers.iter().map(|&c| 2.0 * ins_lb[c]).collect();
        Self { inst, limit: inst.max_duration() + EPS, ins_lb, near: super::three_opt::Near::new(inst), bit, key2 }
    }

    fn mask(&self, centers: impl IntoIterator<Item = usize>) -> u128 {
        match &self.bit {
            Some(bit) => centers.into_iter().fold(0, |m, c| m | 1u128 << bit[c]),
            None => 0,
        }
    }
}

pub(crate) fn fingerprint(visits: &[Visit]) -> u128 {
    let mut h1 = 0x243F_6A88_85A3_08D3u64;
    let mut h2 = 0x1319_8A2E_0370_7344u64;
    for v in visits {
        let code = match *v {
            Visit::Demand(i) => i as u64,
            Visit::KeyPickup(c) => (1 << 60) | c as u64,
            Visit::KeyDelivery(c) => (2 << 60) | c as u64,
        };
        h1 = crate::rng::splitmix64(h1 ^ code);
        h2 = crate::rng::splitmix64(h2.rotate_left(17) ^ code);
    }
    ((h1 as u128) << 64) | (h2 ^ visits.len() as u64) as u128
}

struct SegInfo {
    seg: Segment,
    a: usize,
    b: usize,
    pure: bool,
    first: usize,
    last: usize,
    /// Service of the demand visits plus travel between consecutive ones.
    int: f64,
    pred: usize,
    succ: usize,
    /// Travel from `pred` through the span to `succ`, plus service inside it.
    span_cost: f64,
    /// Centers of the wells in the segment, with counts.
    wells: Vec<(usize, u32)>,
    /// Centers whose key visits the removal may disturb.
    affected: Vec<usize>,
    /// Affected centers that lose their keys in the removal: keys inside the
    /// span, or no wells left in the rest of the route. Keys of the other
    /// affected centers sit around the gap and stay valid whatever is put
    /// there, so they are kept in `rem_base`.
    loose: Vec<usize>,
    /// Duration with the span and every key visit of `loose` removed,
    /// and the neighbors of the gap left behind.
    rem_base: f64,
    gp: usize,
    gs: usize,
    /// Exact duration after removing the span and repairing.
    src_cost: f64,
    /// No key visit inside the span, and the detour bound of those that are.
    keyless: bool,
    span_keys_lb: f64,
    /// Neighbors and span cost of the segment in the demand-only sequence.
    dpred: usize,
    dsucc: usize,
    dspan: f64,
    /// Center masks: wells in the segment; key centers of the route the
    /// segment does not affect; affected centers whose wells outside the
    /// segment keep their keys in the route.
    well_mask: u128,
    locked_mask: u128,
    kept_mask: u128,
    /// `rem_base` with the gap closed, plus key detours of `kept_mask`.
    head: f64,
}

struct RouteInfo {
    visits: Vec<Visit>,
    dpos: Vec<usize>,
    /// Depot, visit locations, depot.
    locs: Vec<usize>,
    cost: f64,
    segs: Vec<SegInfo>,
    wells: Vec<(usize, u32)>,
    key_centers: Vec<usize>,
    /// Depot, demand locations in route order, depot.
    dlocs: Vec<usize>,
    /// Lower bound on any reordering of the route's demand visits: the
    /// demand-only duration plus two cheapest key detours per center.
    dcost: f64,
    key_lb: f64,
    /// Positions of the pickup and delivery of each key center.
    keys: Vec<(usize, usize, usize)>,
    well_mask: u128,
}

impl RouteInfo {
    fn build(ctx: &Ctx, visits: &[Visit]) -> Self {
        let inst = ctx.inst;
        let depot = inst.depot();
        let dpos = demand_positions(visits);
        let mut locs = Vec::with_capacity(visits.len() + 2);
        locs.push(depot);
        locs.extend(visits.iter().map(|v| v.loc()));
        locs.push(depot);
        let cost = route_duration(inst, visits);
        let mut wells: Vec<(usize, u32)> = Vec::new();
        let mut key_centers = Vec::new();
        for v in visits {
            match *v {
                Visit::Demand(i) => {
                    if let Some(c) = inst.center_of(i) {
                        bump(&mut wells, c);
                    }
                }
                Visit::KeyPickup(c) | Visit::KeyDelivery(c) => {
                    if !key_centers.contains(&c) {
                        key_centers.push(c);
                    }
                }
            }
        }

        let mut dlocs = Vec::with_capacity(dpos.len() + 2);
        dlocs.push(depot);
        dlocs.extend(dpos.iter().map(|&p| visits[p].loc()));
        dlocs.push(depot);
        let dcost = dlocs.windows(2).map(|w| inst.c(w[0], w[1]) + inst.service(w[1])).sum::<f64>();
        // Removing key visits one at a time, each saves at least the
        // cheapest detour between two locations the route can contain.
        let mut sites: Vec<usize> = dlocs[..dlocs.len() - 1].to_vec();
        sites.extend(wells.iter().map(|&(c, _)| c));
        let key_lb = wells
            .iter()
            .map(|&(c, _)| {
                let mut best = f64::INFINITY;
                for &u in &sites {
                    let cu = inst.c(u, c);
                    for &w in &sites {
                        best = best.min(cu + inst.c(c, w) - inst.c(u, w));
                    }
                }
                2.0 * (inst.service(c) + best)
            })
            .sum::<f64>();

        let mut keys: Vec<(usize, usize, usize)> = Vec::new();
        for (p, v) in visits.iter().enumerate() {
            match *v {
                Visit::KeyPickup(c) => match keys.iter_mut().find(|k| k.0 == c) {
                    Some(k) => k.1 = p,
                    None => keys.push((c, p, usize::MAX)),
                },
                Visit::KeyDelivery(c) => match keys.iter_mut().find(|k| k.0 == c) {
                    Some(k) => k.2 = p,
                    None => keys.push((c, usize::MAX, p)),
                },
                Visit::Demand(_) => {}
            }
        }

        let mut buf = Vec::with_capacity(visits.len());
        let mut segs = Vec::new();
        for seg in segments(dpos.len()) {
            let (a, b) = span(&dpos, seg);
            let mut seg_wells = Vec::new();
            let mut affected = Vec::new();
            let mut loose = Vec::new();
            let mut int = 0.0;
            let mut prev: Option<usize> = None;
            let mut has_key = false;
            for v in &visits[a..=b] {
                match *v {
                    Visit::Demand(i) => {
                        if let Some(c) = inst.center_of(i) {
                            bump(&mut seg_wells, c);
                            if !affected.contains(&c) {
                                affected.push(c);
                            }
                        }
                        int += inst.service(i);
                        if let Some(p) = prev {
                            int += inst.c(p, i);
                        }
                        prev = Some(i);
                    }
                    Visit::KeyPickup(c) | Visit::KeyDelivery(c) => {
                        has_key = true;
                        if !affected.contains(&c) {
                            affected.push(c);
                        }
                        if !loose.contains(&c) {
                            loose.push(c);
                        }
                    }
                }
            }
            let pred = locs[a];
            let succ = locs[b + 2];
            let mut span_cost = inst.c(pred, locs[a + 1]);
            for t in a + 1..=b + 1 {
                span_cost += inst.service(locs[t]) + inst.c(locs[t], locs[t + 1]);
            }

            for &c in &affected {
                if count_of(&wells, c) == count_of(&seg_wells, c) && !loose.contains(&c) {
                    loose.push(c);
                }
            }
            // Route without the span and without the loose keys. With no
            // loose keys, every key visit left stays valid and repair keeps
            // the route as it is.
            let (rem_base, gp, gs, src_cost) = if loose.is_empty() {
                let rem = cost - span_cost + inst.c(pred, succ);
                (rem, pred, succ, rem)
            } else {
                buf.clear();
                let mut gap = 0;
                for (p, v) in visits.iter().enumerate() {
                    if p == a {
                        gap = buf.len();
                    }
                    if (a..=b).contains(&p) {
                        continue;
                    }
                    if v.is_key() && loose.contains(&v.loc()) {
                        continue;
                    }
                    buf.push(*v);
                }
                let rem_base = route_duration(inst, &buf);
                let gp = if gap == 0 { depot } else { buf[gap - 1].loc() };
                let gs = if gap == buf.len() { depot } else { buf[gap].loc() };
                build_removal(visits, &dpos, seg, &mut buf);
                (rem_base, gp, gs, repaired_cost(inst, &mut buf))
            };
            let (dpred, dsucc) = (dlocs[seg.start], dlocs[seg.start + seg.len + 1]);
            let dspan = inst.c(dpred, visits[a].loc()) + int + inst.c(visits[b].loc(), dsucc);
            let span_keys_lb: f64 = visits[a..=b].iter().filter(|v| v.is_key()).map(|v| ctx.ins_lb[v.loc()]).sum();
            let kept: Vec<usize> = affected.iter().copied().filter(|&c| count_of(&wells, c) > count_of(&seg_wells, c)).collect();
            let head = rem_base - inst.c(gp, gs) + kept.iter().filter(|c| loose.contains(c)).map(|&c| 2.0 * ctx.ins_lb[c]).sum::<f64>();
            let well_mask = ctx.mask(seg_wells.iter().map(|&(c, _)| c));
            let locked_mask = ctx.mask(key_centers.iter().copied().filter(|c| !affected.contains(c)));
            let kept_mask = ctx.mask(kept);

            segs.push(SegInfo {
                seg,
                a,
                b,
                pure: !has_key && seg_wells.is_empty(),
                first: visits[a].loc(),
                last: visits[b].loc(),
                int,
                pred,
                succ,
                span_cost,
                wells: seg_wells,
                affected,
                loose,
                rem_base,
                gp,
                gs,
                src_cost,
                keyless: !has_key,
                span_keys_lb,
                dpred,
                dsucc,
                dspan,
                well_mask,
                locked_mask,
                kept_mask,
                head,
            });
        }
        let well_mask = ctx.mask(wells.iter().map(|&(c, _)| c));
        Self { visits: visits.to_vec(), dpos, locs, cost, segs, wells, key_centers, dlocs, dcost, key_lb, keys, well_mask }
    }

    /// Whether an intra move that changes the demand-only duration by `dd`
    /// can be skipped: too long, or no better than `best`.
    fn pruned(&self, ctx: &Ctx, dd: f64, best: f64) -> bool {
        pruned_by(ctx, self.cost, self.dcost + dd + self.key_lb - self.cost, best)
    }

    fn key_pos(&self, c: usize) -> (usize, usize) {
        self.keys.iter().find(|k| k.0 == c).map_or((usize::MAX, usize::MAX), |k| (k.1, k.2))
    }

    /// Whether every key visit outside the spans stays valid when `s1` and
    /// `s2` (in route order) trade places.
    fn swap_keeps_keys(&self, s1: &SegInfo, s2: &SegInfo) -> bool {
        let inside = |p: usize| (s1.a..=s1.b).contains(&p) || (s2.a..=s2.b).contains(&p);
        s1.wells.iter().all(|&(c, _)| {
            let d = self.key_pos(c).1;
            d != usize::MAX && (inside(d) || d > s2.b)
        }) && s2.wells.iter().all(|&(c, _)| {
            let p = self.key_pos(c).0;
            p != usize::MAX && (inside(p) || p < s1.a)
        })
    }

    /// Same for moving `s` to gap `g` of the route without its span.
    fn relocate_keeps_keys(&self, s: &SegInfo, g: usize) -> bool {
        let width = s.b - s.a + 1;
        let rest = |p: usize| if p < s.a { p } else { p - width };
        s.wells.iter().all(|&(c, _)| {
            let (p, d) = self.key_pos(c);
            p != usize::MAX && d != usize::MAX && ((s.a..=s.b).contains(&p) || rest(p) < g) && ((s.a..=s.b).contains(&d) || rest(d) >= g)
        })
    }

    fn well_count(&self, c: usize) -> u32 {
        count_of(&self.wells, c)
    }
}

fn bump(list: &mut Vec<(usize, u32)>, c: usize) {
    match list.iter_mut().find(|e| e.0 == c) {
        Some(e) => e.1 += 1,
        None => list.push((c, 1)),
    }
}

fn count_of(list: &[(usize, u32)], c: usize) -> u32 {
    list.iter().find(|e| e.0 == c).map_or(0, |e| e.1)
}

/// Lower bound on the duration of route `r` after its segment `s` is
/// replaced by the demand visits of segment `x` from another route.
fn replace_lb(ctx: &Ctx, r: &RouteInfo, s: &SegInfo, x: &SegInfo) -> Option<f64> {
    let inst = ctx.inst;
    if ctx.bit.is_some() {
        if x.well_mask & s.locked_mask != 0 {
            return None;
        }
        let mut lb = s.head + inst.c(s.gp, x.first) + x.int + inst.c(x.last, s.gs);
        let mut extra = x.well_mask & !s.kept_mask;
        while extra != 0 {
            lb += ctx.key2[extra.trailing_zeros() as usize];
            extra &= extra - 1;
        }
        return Some(lb);
    }
    for &(c, _) in &x.wells {
        if r.key_centers.contains(&c) && !s.affected.contains(&c) {
            return None;
        }
    }
    let mut lb = s.rem_base - inst.c(s.gp, s.gs) + inst.c(s.gp, x.first) + x.int + inst.c(x.last, s.gs);
    let keep = |c: usize| r.well_count(c) - count_of(&s.wells, c) + count_of(&x.wells, c) > 0;
    for &c in &s.affected {
        if keep(c) && s.loose.contains(&c) {
            lb += 2.0 * ctx.ins_lb[c];
        }
    }
    for &(c, _) in &x.wells {
        if !s.affected.contains(&c) {
            lb += 2.0 * ctx.ins_lb[c];
        }
    }
    Some(lb)
}

/// Weaker bound for the same replacement that holds even when key visits
/// already in `r` end up on the wrong side of the new wells: the demand-only
/// duration plus two cheapest key detours per center with wells. Needs the
/// center masks.
fn replace_demand_lb(ctx: &Ctx, r: &RouteInfo, s: &SegInfo, x: &SegInfo) -> Option<f64> {
    ctx.bit.as_ref()?;
    let inst = ctx.inst;
    let mut lb = r.dcost - s.dspan + inst.c(s.dpred, x.first) + x.int + inst.c(x.last, s.dsucc);
    let mut centers = (r.well_mask & !(s.well_mask & !s.kept_mask)) | x.well_mask;
    while centers != 0 {
        lb += ctx.key2[centers.trailing_zeros() as usize];
        centers &= centers - 1;
    }
    Some(lb)
}

#[derive(Clone, Copy)]
struct Cand {
    delta: f64,
    kind: MoveKind,
}

struct Best {
    delta: f64,
    kind: Option<MoveKind>,
}

impl Best {
    fn new() -> Self {
        Self { delta: -EPS, kind: None }
    }

    #[inline]
    fn offer(&mut self, delta: f64, kind: MoveKind) {
        if delta < self.delta {
            self.delta = delta;
            self.kind = Some(kind);
        }
    }

    fn into_cand(self) -> Option<Cand> {
        self.kind.map(|kind| Cand { delta: self.delta, kind })
    }
}

// Intra moves first price the route with the spans moved and only the key
// visits inside them taken out. When no key visit outside the spans is
// invalidated, repair keeps that route and just reinserts the extracted key
// visits, so its cost is exact for key-free spans and a bound otherwise.

fn intra_swap(ctx: &Ctx, r: &RouteInfo, buf: &mut Vec<Visit>) -> Option<Cand> {
    let inst = ctx.inst;
    let mut best = Best::new();
    for (i, s1) in r.segs.iter().enumerate() {
        for s2 in &r.segs[i + 1..] {
            if s2.seg.start < s1.seg.start + s1.seg.len {
                continue;
            }
            let kind = MoveKind::Swap(s1.seg, s2.seg);
            let delta = if s1.b + 1 == s2.a {
                inst.c(s1.pred, s2.first) + s2.int + inst.c(s2.last, s1.first) + s1.int + inst.c(s1.last, s2.succ)
                    - (s1.span_cost + s2.span_cost - inst.c(s1.last, s2.first))
            } else {
                inst.c(s1.pred, s2.first) + s2.int + inst.c(s2.last, s1.succ) - s1.span_cost + inst.c(s2.pred, s1.first) + s1.int + inst.c(s1.last, s2.succ)
                    - s2.span_cost
            };
            let keeps = (s1.pure && s2.pure) || r.swap_keeps_keys(s1, s2);
            if keeps && s1.keyless && s2.keyless {
                if r.cost + delta <= ctx.limit {
                    best.offer(delta, kind);
                }
                continue;
            }
            let dd = if s1.seg.start + s1.seg.len == s2.seg.start {
                inst.c(s1.dpred, s2.first) + s2.int + inst.c(s2.last, s1.first) + s1.int + inst.c(s1.last, s2.dsucc)
                    - (s1.dspan + s2.dspan - inst.c(s1.last, s2.first))
            } else {
                inst.c(s1.dpred, s2.first) + s2.int + inst.c(s2.last, s1.dsucc) - s1.dspan + inst.c(s2.dpred, s1.first) + s1.int + inst.c(s1.last, s2.dsucc)
                    - s2.dspan
            };
            if r.pruned(ctx, dd, best.delta) {
                continue;
            }
            if keeps && pruned_by(ctx, r.cost, delta + s1.span_keys_lb + s2.span_keys_lb, best.delta) {
                continue;
            }
            build_intra_swap(&r.visits, &r.dpos, s1.seg, s2.seg, buf);
            let cost = repaired_cost(inst, buf);
            if cost <= ctx.limit {
                best.offer(cost - r.cost, kind);
            }
        }
    }
    best.into_cand()
}

fn intra_relocate(ctx: &Ctx, r: &RouteInfo, rest: &mut Vec<Visit>, buf: &mut Vec<Visit>) -> Option<Cand> {
    let inst = ctx.inst;
    let mut best = Best::new();
    for s in &r.segs {
        let width = s.b - s.a + 1;
        let rest_len = r.visits.len() - width;
        let removal = inst.c(s.pred, s.succ) - s.span_cost;
        let dremoval = inst.c(s.dpred, s.dsucc) - s.dspan;
        let nd = r.dpos.len() - s.seg.len;
        // Location of the j-th demand visit once the segment is out.
        let dloc = |j: usize| if j < s.seg.start { r.dlocs[j + 1] } else { r.dlocs[j + 1 + s.seg.len] };
        let mut built = false;
        let mut j = 0;
        for g in 0..=rest_len {
            if g > 0 {
                let prev = if g - 1 < s.a { g - 1 } else { g - 1 + width };
                if !r.visits[prev].is_key() {
                    j += 1;
                }
            }
            if g == s.a {
                continue;
            }
            let kind = MoveKind::Relocate(s.seg, g);
            let shift = if g < s.a { 0 } else { width };
            let (u, w) = (r.locs[g + shift], r.locs[g + shift + 1]);
            let delta = removal + inst.c(u, s.first) + s.int + inst.c(s.last, w) - inst.c(u, w);
            let keeps = s.pure || r.relocate_keeps_keys(s, g);
            if keeps && s.keyless {
                if r.cost + delta <= ctx.limit {
                    best.offer(delta, kind);
                }
                continue;
            }
            let (du, dw) = (if j == 0 { r.dlocs[0] } else { dloc(j - 1) }, if j == nd { r.dlocs[0] } else { dloc(j) });
            let dd = dremoval + inst.c(du, s.first) + s.int + inst.c(s.last, dw) - inst.c(du, dw);
            if r.pruned(ctx, dd, best.delta) {
                continue;
            }
            if keeps && pruned_by(ctx, r.cost, delta + s.span_keys_lb, best.delta) {
                continue;
            }
            if !built {
                build_removal(&r.visits, &r.dpos, s.seg, rest);
                built = true;
            }
            buf.clear();
            buf.extend_from_slice(&rest[..g]);
            buf.extend(r.visits[s.a..=s.b].iter().copied().filter(|v| !v.is_key()));
            buf.extend_from_slice(&rest[g..]);
            let cost = repaired_cost(inst, buf);
            if cost <= ctx.limit {
                best.offer(cost - r.cost, kind);
            }
        }
    }
    best.into_cand()
}

/// Whether a move whose cost change is at least `lb` can be skipped.
fn pruned_by(ctx: &Ctx, cost: f64, lb: f64, best: f64) -> bool {
    cost + lb > ctx.limit + SLACK || lb >= best + SLACK
}

fn inter_swap(ctx: &Ctx, ra: &RouteInfo, rb: &RouteInfo, buf: &mut Vec<Visit>) -> Option<Cand> {
    let inst = ctx.inst;
    let mut best = Best::new();
    let base = ra.cost + rb.cost;
    for sa in &ra.segs {
        for sb in &rb.segs {
            let kind = MoveKind::Swap(sa.seg, sb.seg);
            if sa.pure && sb.pure {
                let da = inst.c(sa.pred, sb.first) + sb.int + inst.c(sb.last, sa.succ) - sa.span_cost;
                let db = inst.c(sb.pred, sa.first) + sa.int + inst.c(sa.last, sb.succ) - sb.span_cost;
                if ra.cost + da <= ctx.limit && rb.cost + db <= ctx.limit {
                    best.offer(da + db, kind);
                }
                continue;
            }
            let x1 = replace_lb(ctx, ra, sa, sb).or_else(|| replace_demand_lb(ctx, ra, sa, sb));
            let x2 = replace_lb(ctx, rb, sb, sa).or_else(|| replace_demand_lb(ctx, rb, sb, sa));
            if let (Some(la), Some(lb)) = (x1, x2) {
                if la > ctx.limit + SLACK || lb > ctx.limit + SLACK || la + lb - base >= best.delta + SLACK {
                    continue;
                }
            }
            build_replace(&ra.visits, &ra.dpos, sa.seg, &rb.visits, &rb.dpos, sb.seg, buf);
            let ca = repaired_cost(inst, buf);
            if ca > ctx.limit {
                continue;
            }
            build_replace(&rb.visits, &rb.dpos, sb.seg, &ra.visits, &ra.dpos, sa.seg, buf);
            let cb = repaired_cost(inst, buf);
            if cb > ctx.limit {
                continue;
            }
            best.offer(ca + cb - base, kind);
        }
    }
    best.into_cand()
}

fn inter_relocate(ctx: &Ctx, ra: &RouteInfo, rb: &RouteInfo, buf: &mut Vec<Visit>) -> Option<Cand> {
    let inst = ctx.inst;
    let mut best = Best::new();
    for sa in &ra.segs {
        if sa.src_cost > ctx.limit {
            continue;
        }
        let dsrc = sa.src_cost - ra.cost;
        let conflict = sa.wells.iter().any(|&(c, _)| rb.key_centers.contains(&c));
        let key_lb: f64 = sa.wells.iter().map(|&(c, _)| 2.0 * ctx.ins_lb[c]).sum();
        for g in 0..=rb.visits.len() {
            let (u, w) = (rb.locs[g], rb.locs[g + 1]);
            let direct = inst.c(u, sa.first) + sa.int + inst.c(sa.last, w) - inst.c(u, w);
            let kind = MoveKind::Relocate(sa.seg, g);
            if sa.wells.is_empty() {
                if rb.cost + direct <= ctx.limit {
                    best.offer(dsrc + direct, kind);
                }
                continue;
            }
            if !conflict {
                let lb = direct + key_lb;
                if rb.cost + lb > ctx.limit + SLACK || dsrc + lb >= best.delta + SLACK {
                    continue;
                }
            }
            build_insert(&rb.visits, g, &ra.visits, &ra.dpos, sa.seg, buf);
            let cb = repaired_cost(inst, buf);
            if cb <= ctx.limit {
                best.offer(dsrc + cb - rb.cost, kind);
            }
        }
    }
    best.into_cand()
}

/// Route contents after applying `kind` of `neighborhood` to routes
/// `from`/`to` (`to` ignored for intra moves).
pub(crate) fn apply_move(inst: &Instance, routes: &mut [Route], neighborhood: Neighborhood, from: usize, to: usize, kind: MoveKind) {
    let va = routes[from].visits.clone();
    let da = demand_positions(&va);
    let mut out = Vec::with_capacity(va.len() + 6);
    match (neighborhood, kind) {
        (Neighborhood::IntraSwap, MoveKind::Swap(s1, s2)) => {
            build_intra_swap(&va, &da, s1, s2, &mut out);
            repair_into(inst, &mut routes[from], out);
        }
        (Neighborhood::IntraRelocate, MoveKind::Relocate(s, g)) => {
            build_intra_relocate(&va, &da, s, g, &mut out);
            repair_into(inst, &mut routes[from], out);
        }
        (Neighborhood::InterSwap, MoveKind::Swap(sa, sb)) => {
            let vb = routes[to].visits.clone();
            let db = demand_positions(&vb);
            build_replace(&va, &da, sa, &vb, &db, sb, &mut out);
            repair_into(inst, &mut routes[from], out);
            let mut out_b = Vec::new();
            build_replace(&vb, &db, sb, &va, &da, sa, &mut out_b);
            repair_into(inst, &mut routes[to], out_b);
        }
        (Neighborhood::InterRelocate, MoveKind::Relocate(s, g)) => {
            let vb = routes[to].visits.clone();
            build_insert(&vb, g, &va, &da, s, &mut out);
            repair_into(inst, &mut routes[to], out);
            let mut out_a = Vec::new();
            build_removal(&va, &da, s, &mut out_a);
            repair_into(inst, &mut routes[from], out_a);
        }
        _ => panic!("move kind does not belong to the neighborhood"),
    }
}

fn repair_into(inst: &Instance, route: &mut Route, mut visits: Vec<Visit>) {
    let duration = repaired_cost(inst, &mut visits);
    *route = Route { visits, duration };
}

/// Memoized best-move search shared across the local search calls of a run.
pub(crate) struct Engine<'a> {
    pub ctx: Ctx<'a>,
    infos: HashMap<u128, Rc<RouteInfo>>,
    intra: HashMap<(Neighborhood, u128), Option<Cand>>,
    inter: HashMap<(Neighborhood, u128, u128), Option<Cand>>,
    buf: Vec<Visit>,
    rest: Vec<Visit>,
}

impl<'a> Engine<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self { ctx: Ctx::new(inst), infos: HashMap::new(), intra: HashMap::new(), inter: HashMap::new(), buf: Vec::new(), rest: Vec::new() }
    }

    fn info(&mut self, visits: &[Visit]) -> (u128, Rc<RouteInfo>) {
        let fp = fingerprint(visits);
        if let Some(info) = self.infos.get(&fp) {
            return (fp, info.clone());
        }
        if self.infos.len() >= CACHE_CAP / 8 {
            self.infos.clear();
        }
        let info = Rc::new(RouteInfo::build(&self.ctx, visits));
        self.infos.insert(fp, info.clone());
        (fp, info)
    }

    /// Best improving move of a neighborhood, or `None` at a local optimum.
    pub fn best_move(&mut self, solution: &Solution, neighborhood: Neighborhood) -> Option<MoveChoice> {
        let infos: Vec<(u128, Rc<RouteInfo>)> = solution.routes.iter().map(|r| self.info(&r.visits)).collect();
        let mut best: Option<MoveChoice> = None;
        let mut offer = |from: usize, to: usize, cand: Option<Cand>| {
            if let Some(c) = cand {
                if best.is_none_or(|b| c.delta < b.delta) {
                    best = Some(MoveChoice { neighborhood, from, to, kind: c.kind, delta: c.delta });
                }
            }
        };
        if self.intra.len() + self.inter.len() > CACHE_CAP {
            self.intra.clear();
            self.inter.clear();
        }
        match neighborhood {
            Neighborhood::IntraSwap | Neighborhood::IntraRelocate => {
                for (r, (fp, info)) in infos.iter().enumerate() {
                    let cand = match self.intra.get(&(neighborhood, *fp)) {
                        Some(c) => *c,
                        None => {
                            let c = if neighborhood == Neighborhood::IntraSwap {
                                intra_swap(&self.ctx, info, &mut self.buf)
                            } else {
                                intra_relocate(&self.ctx, info, &mut self.rest, &mut self.buf)
                            };
                            self.intra.insert((neighborhood, *fp), c);
                            c
                        }
                    };
                    offer(r, r, cand);
                }
            }
            Neighborhood::InterSwap | Neighborhood::InterRelocate => {
                for a in 0..infos.len() {
                    let others: Box<dyn Iterator<Item = usize>> = if neighborhood == Neighborhood::InterSwap {
                        Box::new(a + 1..infos.len())
                    } else {
                        Box::new((0..infos.len()).filter(move |&b| b != a))
                    };
                    for b in others {
                        let (fa, ia) = &infos[a];
                        let (fb, ib) = &infos[b];
                        if ia.dpos.is_empty() || (neighborhood == Neighborhood::InterSwap && ib.dpos.is_empty()) {
                            continue;
                        }
                        let key = (neighborhood, *fa, *fb);
                        let cand = match self.inter.get(&key) {
                            Some(c) => *c,
                            None => {
                                let c = if neighborhood == Neighborhood::InterSwap {
                                    inter_swap(&self.ctx, ia, ib, &mut self.buf)
                                } else {
                                    inter_relocate(&self.ctx, ia, ib, &mut self.buf)
                                };
                                self.inter.insert(key, c);
                                c
                            }
                        };
                        offer(a, b, cand);
                    }
                }
            }
        }
        best
    }

    /// Apply the best move of a neighborhood. Returns whether one was found.
    pub fn improve(&mut self, solution: &mut Solution, neighborhood: Neighborhood) -> bool {
        match self.best_move(solution, neighborhood) {
            Some(m) => {
                apply_move(self.ctx.inst, &mut solution.routes, neighborhood, m.from, m.to, m.kind);
                solution.refresh_totals();
                true
            }
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::node;
    use crate::instance::{NodeKind, TravelSource};
    use std::collections::BTreeMap;

    fn line(points: &[(f64, f64)], k: usize) -> Instance {
        let mut nodes = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0)];
        for (i, &(x, y)) in points.iter().enumerate() {
            nodes.push(node(i + 1, NodeKind::TypeI, x, y, 1.0));
        }
        Instance::new("l", nodes, BTreeMap::new(), k, 10_000.0, TravelSource::RoundedEuclidean).unwrap()
    }

    #[test]
    fn intra_swap_uncrosses_two_nodes() {
        let inst = line(&[(10.0, 0.0), (20.0, 0.0), (30.0, 0.0)], 1);
        let sol = Solution::from_visits(&inst, vec![[2, 1, 3].map(Visit::Demand).to_vec()]);
        let mut engine = Engine::new(&inst);
        let m = engine.best_move(&sol, Neighborhood::IntraSwap).unwrap();
        assert_eq!(m.kind, MoveKind::Swap(Segment { start: 0, len: 1 }, Segment { start: 1, len: 1 }));
        assert!((m.delta + 20.0).abs() < 1e-9);
    }

    #[test]
    fn inter_relocate_empties_a_route() {
        let inst = line(&[(10.0, 0.0), (20.0, 0.0)], 2);
        let mut sol = Solution::from_visits(&inst, vec![vec![Visit::Demand(2)], vec![Visit::Demand(1)]]);
        let mut engine = Engine::new(&inst);
        assert!(engine.improve(&mut sol, Neighborhood::InterRelocate));
        assert!((sol.z - 42.0).abs() < 1e-9);
        assert!(sol.routes.iter().any(|r| r.is_empty()));
        assert!(!engine.improve(&mut sol, Neighborhood::InterRelocate));
    }

    #[test]
    fn relocating_only_well_drops_its_keys() {
        let nodes = vec![
            node(0, NodeKind::Depot, 0.0, 0.0, 0.0),
            node(1, NodeKind::KeyCenter, 50.0, 0.0, 0.0),
            node(2, NodeKind::TypeII, 50.0, 10.0, 0.0),
            node(3, NodeKind::TypeI, 0.0, 50.0, 0.0),
            node(4, NodeKind::TypeI, 50.0, 5.0, 0.0),
        ];
        let inst = Instance::new("w", nodes, BTreeMap::from([(2, 1)]), 2, 10_000.0, TravelSource::RoundedEuclidean).unwrap();
        let mut sol =
            Solution::from_visits(&inst, vec![vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)], vec![Visit::Demand(3), Visit::Demand(4)]]);
        let mut engine = Engine::new(&inst);
        assert!(engine.improve(&mut sol, Neighborhood::InterRelocate));
        assert!(crate::solution::validate(&inst, &sol).is_empty());
        assert!(sol.routes[0].is_empty());
    }

    #[test]
    fn fingerprints_separate_roles() {
        assert_ne!(fingerprint(&[Visit::KeyPickup(3)]), fingerprint(&[Visit::KeyDelivery(3)]));
        assert_ne!(fingerprint(&[Visit::Demand(1), Visit::Demand(2)]), fingerprint(&[Visit::Demand(2), Visit::Demand(1)]));
    }
}
