use crate::instance::Instance;
use crate::solution::{validate, Solution, Visit};

use super::{Assignment, Formulation, MilpError, ModelGraph};

/// Variable values describing a feasible solution in `formulation`.
pub fn encode_solution(inst: &Instance, solution: &Solution, formulation: Formulation) -> Result<Assignment, MilpError> {
    if let Some(v) = validate(inst, solution).first() {
        return Err(MilpError::InfeasibleSolution(v.to_string()));
    }
    let routes: Vec<Vec<Visit>> = solution.routes.iter().map(|r| r.visits.clone()).collect();
    encode_routes(inst, &routes, formulation)
}

/// Encodes visit sequences without checking feasibility, so broken
/// solutions can be fed to the checker. Each model node may appear at most
/// once per route and there may be at most K routes.
pub fn encode_routes(inst: &Instance, routes: &[Vec<Visit>], formulation: Formulation) -> Result<Assignment, MilpError> {
    let g = ModelGraph::new(inst);
    let k_count = inst.num_vehicles();
    if routes.len() > k_count {
        return Err(MilpError::InfeasibleSolution(format!("{} routes for {k_count} vehicles", routes.len())));
    }
    let mut a = Assignment::new();
    let end = g.end();
    for k in 0..k_count {
        for (i, j) in g.arcs() {
            a.insert(format!("x_{i}_{j}_{k}"), 0.0);
            if formulation == Formulation::FlowBased {
                a.insert(format!("f_{i}_{j}_{k}"), 0.0);
            }
        }
        for i in 0..g.node_count() {
            match formulation {
                Formulation::TimeBased => {
                    a.insert(format!("y_{i}_{k}"), 0.0);
                    a.insert(format!("t_{i}_{k}"), 0.0);
                }
                Formulation::FlowBased => {}
                Formulation::NodeBased => {
                    a.insert(format!("u_{i}_{k}"), 0.0);
                }
            }
        }
    }

    let empty = Vec::new();
    for k in 0..k_count {
        let visits = routes.get(k).unwrap_or(&empty);
        let mut seq = vec![0];
        for &v in visits {
            let idx = match v {
                Visit::Demand(d) => g.demand_index(d),
                Visit::KeyPickup(c) => g.pickup_index(c),
                Visit::KeyDelivery(c) => g.delivery_index(c),
            }
            .ok_or_else(|| MilpError::InfeasibleSolution(format!("{v:?} has no model node")))?;
            if seq.contains(&idx) {
                return Err(MilpError::InfeasibleSolution(format!("route {k} visits {v:?} twice")));
            }
            seq.push(idx);
        }
        seq.push(end);

        let mut time = 0.0;
        for (pos, w) in seq.windows(2).enumerate() {
            let (i, j) = (w[0], w[1]);
            a.insert(format!("x_{i}_{j}_{k}"), 1.0);
            time += g.service(inst, i) + g.cost(inst, i, j);
            match formulation {
                Formulation::TimeBased => {
                    a.insert(format!("t_{j}_{k}"), time);
                }
                // pos counts the intermediate nodes left before (i, j).
                Formulation::FlowBased => {
                    a.insert(format!("f_{i}_{j}_{k}"), pos as f64);
                }
                Formulation::NodeBased => {
                    a.insert(format!("u_{j}_{k}"), (pos + 1) as f64);
                }
            }
        }
        if formulation == Formulation::TimeBased {
            for &i in &seq {
                a.insert(format!("y_{i}_{k}"), 1.0);
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::{line_instance, node};
    use crate::instance::{NodeKind, TravelSource};
    use crate::milp::{build, build_flow_based, build_node_based, build_time_based, BreachKind, BuildOptions};
    use std::collections::BTreeMap;

    fn one_node() -> Instance {
        let nodes = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0), node(1, NodeKind::TypeI, 3.0, 4.0, 30.0)];
        Instance::new("one", nodes, BTreeMap::new(), 2, 100.0, TravelSource::RoundedEuclidean).unwrap()
    }

    #[test]
    fn cumulative_times() {
        let inst = one_node();
        let sol = Solution::from_visits(&inst, vec![vec![Visit::Demand(1)], vec![]]);
        let a = encode_solution(&inst, &sol, Formulation::TimeBased).unwrap();
        assert_eq!(a["t_1_0"], 5.0);
        assert_eq!(a["t_2_0"], 40.0);
        // second vehicle stays home
        assert_eq!(a["x_0_2_1"], 1.0);
        assert_eq!(a["t_2_1"], 0.0);
    }

    #[test]
    fn load_into_end_counts_arcs() {
        let inst = line_instance();
        let sol = Solution::from_visits(&inst, vec![vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)]]);
        let a = encode_solution(&inst, &sol, Formulation::FlowBased).unwrap();
        let arcs_used = a.iter().filter(|(k, &v)| k.starts_with("x_") && v == 1.0).count();
        let into_end: f64 = (0..4).filter_map(|i| a.get(&format!("f_{i}_4_0"))).sum();
        assert_eq!(into_end, arcs_used as f64 - 1.0);
        let m = build_flow_based(&inst, true);
        assert!(m.check(&a).unwrap().is_empty());
    }

    #[test]
    fn encodings_satisfy_their_models() {
        let inst = line_instance();
        let sol = Solution::from_visits(&inst, vec![vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)]]);
        for f in Formulation::ALL {
            for with_vi in [false, true] {
                let m = build(&inst, f, BuildOptions { with_vi, ..Default::default() });
                let a = encode_solution(&inst, &sol, f).unwrap();
                assert_eq!(m.check(&a).unwrap(), vec![], "{f} vi={with_vi}");
                assert!((m.objective_value(&a).unwrap() - sol.z).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zeros_break_the_start_rows() {
        let inst = one_node();
        let m = build_time_based(&inst, false);
        let a: Assignment = m.variables.iter().map(|v| (v.name.clone(), 0.0)).collect();
        let broken = m.check(&a).unwrap();
        assert!(broken.iter().any(|v| v.name == "start3_0"));
    }

    #[test]
    fn late_time_breaks_propagation() {
        let inst = line_instance();
        let sol = Solution::from_visits(&inst, vec![vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)]]);
        let m = build_time_based(&inst, false);
        let mut a = encode_solution(&inst, &sol, Formulation::TimeBased).unwrap();
        *a.get_mut("t_1_0").unwrap() += inst.max_duration();
        let broken = m.check(&a).unwrap();
        assert!(broken.iter().any(|v| v.name.starts_with("time9_")), "{broken:?}");
    }

    #[test]
    fn well_before_pickup_breaks_precedence() {
        let inst = line_instance();
        let bad = vec![vec![Visit::Demand(2), Visit::KeyPickup(1), Visit::KeyDelivery(1)]];
        for f in Formulation::ALL {
            let m = build(&inst, f, BuildOptions::default());
            let a = encode_routes(&inst, &bad, f).unwrap();
            let broken = m.check(&a).unwrap();
            assert!(broken.iter().any(|v| f.precedence_families().contains(&v.name.split('_').next().unwrap())), "{f}");
        }
    }

    #[test]
    fn two_cycle_breaks_lifted_rows() {
        let inst = line_instance();
        let m = build_node_based(&inst, true);
        let sol = Solution::from_visits(&inst, vec![vec![Visit::KeyPickup(1), Visit::Demand(2), Visit::KeyDelivery(1)]]);
        let mut a = encode_solution(&inst, &sol, Formulation::NodeBased).unwrap();
        a.insert("x_1_2_0".into(), 1.0);
        a.insert("x_2_1_0".into(), 1.0);
        let broken = m.check(&a).unwrap();
        assert!(broken.iter().any(|v| v.name.starts_with("vi50_1_2_") || v.name.starts_with("vi50_2_1_")));
    }

    #[test]
    fn fractional_binaries_are_reported() {
        let inst = one_node();
        let m = build_flow_based(&inst, false);
        let sol = Solution::from_visits(&inst, vec![vec![Visit::Demand(1)], vec![]]);
        let mut a = encode_solution(&inst, &sol, Formulation::FlowBased).unwrap();
        a.insert("x_0_1_1".into(), 0.5);
        assert!(m.check(&a).unwrap().iter().any(|v| v.kind == BreachKind::Integrality));
        a.remove("x_0_1_1");
        assert!(matches!(m.check(&a), Err(MilpError::MissingVariable(_))));
    }

    #[test]
    fn rejects_infeasible_solutions() {
        let inst = line_instance();
        let sol = Solution::from_visits(&inst, vec![vec![Visit::Demand(2)]]);
        assert!(matches!(encode_solution(&inst, &sol, Formulation::TimeBased), Err(MilpError::InfeasibleSolution(_))));
    }
}
