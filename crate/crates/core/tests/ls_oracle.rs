mod common;

use vrpwdn::generator::{generate, GenSpec};
use vrpwdn::ils::{initialize, shake1, shake2, LocalSearch, Neighborhood};
use vrpwdn::rng::seeded;
use vrpwdn::solution::{validate, Solution, EPS};

/// Compares each operator's chosen move with the enumeration. Returns the
/// number of solutions that had an improving move.
fn check(inst: &vrpwdn::Instance, x: &Solution) -> usize {
    let mut improving = 0;
    for n in Neighborhood::ALL {
        let want = common::brute_best(inst, x, n);
        let got = LocalSearch::new(inst, 10).best_move(x, n);
        match got {
            Some(m) => {
                let w = want.expect("enumeration found no feasible move");
                assert!((m.delta - w).abs() < 1e-6, "{n:?}: chose {} but best is {w}", m.delta);
                let mut y = x.clone();
                assert!(LocalSearch::new(inst, 10).improve(&mut y, n));
                assert!(validate(inst, &y).is_empty());
                assert!((y.z - x.z - m.delta).abs() < 1e-6);
                improving += 1;
            }
            None => assert!(want.is_none_or(|w| w >= -EPS - 1e-6), "{n:?} missed a move of {want:?}"),
        }
    }
    improving
}

fn perturbed(spec: GenSpec, rounds: usize) -> (vrpwdn::Instance, Vec<Solution>) {
    let inst = generate(&spec).unwrap();
    let mut rng = seeded(spec.seed);
    let mut out = Vec::new();
    let Ok(mut x) = initialize(&inst, &mut rng, 100) else { return (inst, out) };
    for _ in 0..rounds {
        out.push(x.clone());
        x = if out.len() % 2 == 0 { shake1(&inst, &x, x.z, 0.3, &mut rng) } else { shake2(&inst, &x, 0.3, 50, &mut rng).unwrap_or(x) };
    }
    (inst, out)
}

#[test]
fn operators_match_enumeration_on_short_routes() {
    let mut improving = 0;
    for seed in 0..40 {
        let (inst, xs) = perturbed(GenSpec::uniform(6, 3, 2, 3, seed), 6);
        for x in xs.iter().filter(|x| x.routes.iter().all(|r| r.visits.len() <= 6)) {
            improving += check(&inst, x);
        }
    }
    assert!(improving > 50, "only {improving} improving cases");
}

#[test]
fn operators_match_enumeration_on_longer_routes() {
    let mut improving = 0;
    for seed in 0..12 {
        let (inst, xs) = perturbed(GenSpec::uniform(16, 8, 4, 2, 100 + seed), 4);
        for x in &xs {
            improving += check(&inst, x);
        }
    }
    assert!(improving > 20, "only {improving} improving cases");
}

#[test]
fn operators_match_enumeration_with_many_wells() {
    let mut improving = 0;
    for seed in 0..6 {
        let (inst, xs) = perturbed(GenSpec::uniform(24, 16, 5, 3, 300 + seed), 4);
        for x in &xs {
            improving += check(&inst, x);
        }
    }
    assert!(improving > 10, "only {improving} improving cases");
}
