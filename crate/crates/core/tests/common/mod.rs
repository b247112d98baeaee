#![allow(dead_code)]

use vrpwdn::ils::{repair_keys, Neighborhood};
use vrpwdn::instance::Instance;
use vrpwdn::solution::{route_duration, Solution, Visit, EPS};

/// Demand positions split into segments of one to three consecutive visits.
fn segments(visits: &[Visit]) -> Vec<(usize, usize)> {
    let dpos: Vec<usize> = (0..visits.len()).filter(|&p| !visits[p].is_key()).collect();
    let mut out = Vec::new();
    for s in 0..dpos.len() {
        for len in 1..=3.min(dpos.len() - s) {
            out.push((dpos[s], dpos[s + len - 1]));
        }
    }
    out
}

fn demands(visits: &[Visit], (a, b): (usize, usize)) -> Vec<Visit> {
    visits[a..=b].iter().copied().filter(|v| !v.is_key()).collect()
}

fn priced(inst: &Instance, mut visits: Vec<Visit>) -> f64 {
    repair_keys(inst, &mut visits);
    route_duration(inst, &visits)
}

/// Lowest duration change over every move of the neighborhood that keeps
/// all routes within the cap, by building and pricing each result.
pub fn brute_best(inst: &Instance, x: &Solution, n: Neighborhood) -> Option<f64> {
    let cap = inst.max_duration() + EPS;
    let mut best: Option<f64> = None;
    let mut offer = |d: f64| {
        if best.is_none_or(|b| d < b) {
            best = Some(d);
        }
    };
    let routes: Vec<&Vec<Visit>> = x.routes.iter().map(|r| &r.visits).collect();
    let cost: Vec<f64> = routes.iter().map(|v| route_duration(inst, v)).collect();
    for (ia, va) in routes.iter().enumerate() {
        let segs = segments(va);
        match n {
            Neighborhood::IntraSwap => {
                for &s1 in &segs {
                    for &s2 in &segs {
                        if s2.0 <= s1.1 {
                            continue;
                        }
                        let mut v = va[..s1.0].to_vec();
                        v.extend(demands(va, s2));
                        v.extend_from_slice(&va[s1.1 + 1..s2.0]);
                        v.extend(demands(va, s1));
                        v.extend_from_slice(&va[s2.1 + 1..]);
                        let c = priced(inst, v);
                        if c <= cap {
                            offer(c - cost[ia]);
                        }
                    }
                }
            }
            Neighborhood::IntraRelocate => {
                for &s in &segs {
                    let mut rest = va[..s.0].to_vec();
                    rest.extend_from_slice(&va[s.1 + 1..]);
                    for g in 0..=rest.len() {
                        if g == s.0 {
                            continue;
                        }
                        let mut v = rest[..g].to_vec();
                        v.extend(demands(va, s));
                        v.extend_from_slice(&rest[g..]);
                        let c = priced(inst, v);
                        if c <= cap {
                            offer(c - cost[ia]);
                        }
                    }
                }
            }
            Neighborhood::InterSwap => {
                for (ib, vb) in routes.iter().enumerate().skip(ia + 1) {
                    for &sa in &segs {
                        for &sb in &segments(vb) {
                            let mut na = va[..sa.0].to_vec();
                            na.extend(demands(vb, sb));
                            na.extend_from_slice(&va[sa.1 + 1..]);
                            let mut nb = vb[..sb.0].to_vec();
                            nb.extend(demands(va, sa));
                            nb.extend_from_slice(&vb[sb.1 + 1..]);
                            let (ca, cb) = (priced(inst, na), priced(inst, nb));
                            if ca <= cap && cb <= cap {
                                offer(ca + cb - cost[ia] - cost[ib]);
                            }
                        }
                    }
                }
            }
            Neighborhood::InterRelocate => {
                for (ib, vb) in routes.iter().enumerate() {
                    if ib == ia {
                        continue;
                    }
                    for &s in &segs {
                        let mut na = va[..s.0].to_vec();
                        na.extend_from_slice(&va[s.1 + 1..]);
                        let ca = priced(inst, na);
                        if ca > cap {
                            continue;
                        }
                        for g in 0..=vb.len() {
                            let mut nb = vb[..g].to_vec();
                            nb.extend(demands(va, s));
                            nb.extend_from_slice(&vb[g..]);
                            let cb = priced(inst, nb);
                            if cb <= cap {
                                offer(ca + cb - cost[ia] - cost[ib]);
                            }
                        }
                    }
                }
            }
        }
    }
    best
}
