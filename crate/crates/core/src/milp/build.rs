use crate::instance::Instance;

use super::{Formulation, LinExpr, LpModel, ModelGraph, Sense};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub with_vi: bool,
    /// Emit the printed pickup-load row `u_p >= sum over j in {0} of x_ijk`,
    /// which has no arcs and reduces to `u_p >= 0`, instead of summing over
    /// every arc out of the well.
    pub vacuous_pickup_load: bool,
    /// Use the printed big-M constants `M_ij = L + v_i + c_ij - c_j,n+1` and
    /// `M'_i = L + v_p + c_pi - c_i,n+1`. They can be too small: a late visit
    /// to `i` followed by an unused node `j` far from the depot makes row (9)
    /// bind. The default subtracts the tail from the tail node instead
    /// (`c_i,n+1` and `c_p,n+1`), which is always large enough.
    pub printed_big_m: bool,
}

pub fn build(inst: &Instance, formulation: Formulation, opts: BuildOptions) -> LpModel {
    match formulation {
        Formulation::TimeBased => time_based(inst, opts),
        Formulation::FlowBased => build_flow_based(inst, opts.with_vi),
        Formulation::NodeBased => node_based(inst, opts),
    }
}

pub fn build_time_based(inst: &Instance, with_vi: bool) -> LpModel {
    time_based(inst, BuildOptions { with_vi, ..Default::default() })
}

fn time_based(inst: &Instance, opts: BuildOptions) -> LpModel {
    let with_vi = opts.with_vi;
    let mut b = Builder::new(inst, Formulation::TimeBased, with_vi);
    b.declare();
    b.objective();
    b.assignment_rows();
    b.start_rows();
    b.degree_rows_with_y();
    b.end_rows();
    b.time_rows(opts.printed_big_m);
    if with_vi {
        b.time_valid_inequalities();
    }
    b.model
}

pub fn build_flow_based(inst: &Instance, with_vi: bool) -> LpModel {
    let mut b = Builder::new(inst, Formulation::FlowBased, with_vi);
    b.declare();
    b.objective();
    b.assignment_rows();
    b.start_rows();
    b.conservation_rows();
    b.duration_rows();
    b.flow_rows();
    if with_vi {
        b.pairing_rows();
        b.flow_valid_inequalities();
    }
    b.model
}

pub fn build_node_based(inst: &Instance, with_vi: bool) -> LpModel {
    node_based(inst, BuildOptions { with_vi, ..Default::default() })
}

fn node_based(inst: &Instance, opts: BuildOptions) -> LpModel {
    let mut b = Builder::new(inst, Formulation::NodeBased, opts.with_vi);
    b.declare();
    b.objective();
    b.assignment_rows();
    b.start_rows();
    b.conservation_rows();
    b.duration_rows();
    b.load_rows(opts.vacuous_pickup_load);
    if opts.with_vi {
        b.pairing_rows();
        b.load_valid_inequalities();
    }
    b.model
}

/// A well with the model indices of its pickup and delivery nodes.
#[derive(Debug, Clone, Copy)]
struct Well {
    i: usize,
    p: usize,
    d: usize,
}

struct Builder<'a> {
    inst: &'a Instance,
    g: ModelGraph,
    k: usize,
    model: LpModel,
    wells: Vec<Well>,
    /// Arc variable index per `(k, i, j)`, flattened.
    x: Vec<Option<usize>>,
    f: Vec<Option<usize>>,
    /// Node variable index per `(k, i)`.
    y: Vec<usize>,
    t: Vec<usize>,
    u: Vec<usize>,
}

impl<'a> Builder<'a> {
    fn new(inst: &'a Instance, formulation: Formulation, with_vi: bool) -> Self {
        let g = ModelGraph::new(inst);
        let wells = inst
            .wells()
            .iter()
            .map(|&w| {
                let c = inst.center_of(w).expect("well without key center");
                Well { i: g.demand_index(w).unwrap(), p: g.pickup_index(c).unwrap(), d: g.delivery_index(c).unwrap() }
            })
            .collect();
        Self {
            inst,
            k: inst.num_vehicles(),
            model: LpModel::new(inst.name(), formulation, with_vi),
            wells,
            g,
            x: Vec::new(),
            f: Vec::new(),
            y: Vec::new(),
            t: Vec::new(),
            u: Vec::new(),
        }
    }

    fn size(&self) -> usize {
        self.g.node_count()
    }

    fn ai(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.size() + i) * self.size() + j
    }

    fn x(&self, k: usize, i: usize, j: usize) -> usize {
        self.x[self.ai(k, i, j)].expect("no such arc")
    }

    fn f(&self, k: usize, i: usize, j: usize) -> usize {
        self.f[self.ai(k, i, j)].expect("no such arc")
    }

    fn node_var(&self, vars: &[usize], k: usize, i: usize) -> usize {
        vars[k * self.size() + i]
    }

    fn n(&self) -> f64 {
        self.g.n() as f64
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        self.g.cost(self.inst, i, j)
    }

    fn service(&self, i: usize) -> f64 {
        self.g.service(self.inst, i)
    }

    fn big_l(&self) -> f64 {
        self.inst.max_duration()
    }

    /// `sum over j != 0 of x_ijk`
    fn out_x(&self, k: usize, i: usize, coef: f64) -> LinExpr {
        (1..self.size()).filter(|&j| j != i).map(|j| (self.x(k, i, j), coef)).collect()
    }

    /// `sum over j != n+1 of x_jik`
    fn in_x(&self, k: usize, i: usize, coef: f64) -> LinExpr {
        (0..self.g.end()).filter(|&j| j != i).map(|j| (self.x(k, j, i), coef)).collect()
    }

    fn out_f(&self, k: usize, i: usize, coef: f64) -> LinExpr {
        (1..self.size()).filter(|&j| j != i).map(|j| (self.f(k, i, j), coef)).collect()
    }

    fn in_f(&self, k: usize, i: usize, coef: f64) -> LinExpr {
        (0..self.g.end()).filter(|&j| j != i).map(|j| (self.f(k, j, i), coef)).collect()
    }

    fn all_x(&self, k: usize, coef: impl Fn(usize, usize) -> f64) -> LinExpr {
        self.g.arcs().map(|(i, j)| (self.x(k, i, j), coef(i, j))).collect()
    }

    /// Wells sharing the pickup node of `w`, including `w`.
    fn siblings(&self, w: Well) -> Vec<usize> {
        self.wells.iter().filter(|o| o.p == w.p).map(|o| o.i).collect()
    }

    fn row(&mut self, name: String, expr: LinExpr, sense: Sense, rhs: f64) {
        self.model.add_row(name, expr, sense, rhs);
    }

    fn declare(&mut self) {
        let (size, formulation) = (self.size(), self.model.formulation);
        let arcs: Vec<(usize, usize)> = self.g.arcs().collect();
        self.x = vec![None; self.k * size * size];
        for k in 0..self.k {
            for &(i, j) in &arcs {
                let id = self.model.add_variable(format!("x_{i}_{j}_{k}"), 0.0, 1.0, true).unwrap();
                let at = self.ai(k, i, j);
                self.x[at] = Some(id);
            }
        }
        match formulation {
            Formulation::TimeBased => {
                self.y = self.node_vars("y", 1.0, true);
                self.t = self.node_vars("t", f64::INFINITY, false);
            }
            Formulation::FlowBased => {
                self.f = vec![None; self.k * size * size];
                for k in 0..self.k {
                    for &(i, j) in &arcs {
                        let id = self.model.add_variable(format!("f_{i}_{j}_{k}"), 0.0, f64::INFINITY, false).unwrap();
                        let at = self.ai(k, i, j);
                        self.f[at] = Some(id);
                    }
                }
            }
            Formulation::NodeBased => {
                self.u = self.node_vars("u", f64::INFINITY, false);
            }
        }
    }

    fn node_vars(&mut self, prefix: &str, upper: f64, integer: bool) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.k * self.size());
        for k in 0..self.k {
            for i in 0..self.size() {
                out.push(self.model.add_variable(format!("{prefix}_{i}_{k}"), 0.0, upper, integer).unwrap());
            }
        }
        out
    }

    fn objective(&mut self) {
        let mut obj = Vec::new();
        for k in 0..self.k {
            obj.extend(self.all_x(k, |i, j| self.cost(i, j) + self.service(i)));
        }
        self.model.objective = super::merge_terms(obj);
    }

    /// Each demand node is left exactly once.
    fn assignment_rows(&mut self) {
        for i in 1..=self.inst.demand_nodes().len() {
            let expr = (0..self.k).flat_map(|k| self.out_x(k, i, 1.0)).collect();
            self.row(format!("deg2_{i}"), expr, Sense::Eq, 1.0);
        }
    }

    fn start_rows(&mut self) {
        for k in 0..self.k {
            let expr = self.out_x(k, 0, 1.0);
            self.row(format!("start3_{k}"), expr, Sense::Eq, 1.0);
        }
    }

    /// Visit flags equal out- and in-degree. The start node has no
    /// incoming arcs and the end node no outgoing ones, so only the
    /// meaningful half is written there.
    fn degree_rows_with_y(&mut self) {
        let end = self.g.end();
        for k in 0..self.k {
            for i in 0..self.size() {
                let y = self.node_var(&self.y, k, i);
                if i != end {
                    let mut expr = vec![(y, 1.0)];
                    expr.extend(self.out_x(k, i, -1.0));
                    self.row(format!("out6_{i}_{k}"), expr, Sense::Eq, 0.0);
                }
                if i != 0 {
                    let mut expr = vec![(y, 1.0)];
                    expr.extend(self.in_x(k, i, -1.0));
                    self.row(format!("in6_{i}_{k}"), expr, Sense::Eq, 0.0);
                }
            }
        }
    }

    fn end_rows(&mut self) {
        let end = self.g.end();
        for k in 0..self.k {
            let expr = self.in_x(k, end, 1.0);
            self.row(format!("end5_{k}"), expr, Sense::Eq, 1.0);
        }
    }

    fn time_rows(&mut self, printed_big_m: bool) {
        let big_l = self.big_l();
        let end = self.g.end();
        let expr = (0..self.k).map(|k| (self.node_var(&self.t, k, 0), 1.0)).collect();
        self.row("tzero7".into(), expr, Sense::Eq, 0.0);
        for k in 0..self.k {
            for i in 0..self.size() {
                let (t, y) = (self.node_var(&self.t, k, i), self.node_var(&self.y, k, i));
                self.row(format!("tcap8_{i}_{k}"), vec![(t, 1.0), (y, -big_l)], Sense::Le, 0.0);
            }
        }
        let arcs: Vec<_> = self.g.arcs().collect();
        for k in 0..self.k {
            for &(i, j) in &arcs {
                // t_j >= t_i + v_i + c_ij - M_ij (1 - x_ijk)
                let tail = if printed_big_m { self.cost(j, end) } else { self.cost(i, end) };
                let m = big_l + self.service(i) + self.cost(i, j) - tail;
                let expr = vec![(self.node_var(&self.t, k, j), 1.0), (self.node_var(&self.t, k, i), -1.0), (self.x(k, i, j), -m)];
                self.row(format!("time9_{i}_{j}_{k}"), expr, Sense::Ge, self.service(i) + self.cost(i, j) - m);
            }
        }
        for k in 0..self.k {
            for w in self.wells.clone() {
                let (y, yp, yd) = (self.node_var(&self.y, k, w.i), self.node_var(&self.y, k, w.p), self.node_var(&self.y, k, w.d));
                self.row(format!("pair11_{}_{k}", w.i), vec![(yp, 1.0), (yd, 1.0), (y, -2.0)], Sense::Ge, 0.0);
            }
        }
        for k in 0..self.k {
            for w in self.wells.clone() {
                let (t, tp, td) = (self.node_var(&self.t, k, w.i), self.node_var(&self.t, k, w.p), self.node_var(&self.t, k, w.d));
                let y = self.node_var(&self.y, k, w.i);
                // t_p + v_p + c_pi - M'_i (1 - y_ik) <= t_i
                let lead = self.service(w.p) + self.cost(w.p, w.i);
                let m = big_l + lead - if printed_big_m { self.cost(w.i, end) } else { self.cost(w.p, end) };
                self.row(format!("prec12_{}_{k}", w.i), vec![(t, 1.0), (tp, -1.0), (y, -m)], Sense::Ge, lead - m);
                // t_i <= t_d - (c_id + v_i) y_ik
                let tail = self.cost(w.i, w.d) + self.service(w.i);
                self.row(format!("prec13_{}_{k}", w.i), vec![(td, 1.0), (t, -1.0), (y, -tail)], Sense::Ge, 0.0);
            }
        }
    }

    fn time_valid_inequalities(&mut self) {
        for k in 0..self.k {
            for w in self.wells.clone() {
                let (t, td, y) = (self.node_var(&self.t, k, w.i), self.node_var(&self.t, k, w.d), self.node_var(&self.y, k, w.i));
                let reach = self.cost(0, w.p) + self.service(w.p) + self.cost(w.p, w.i);
                self.row(format!("vi14_{}_{k}", w.i), vec![(t, 1.0), (y, -reach)], Sense::Ge, 0.0);
                let reach_d = reach + self.service(w.i) + self.cost(w.i, w.d);
                self.row(format!("vi15_{}_{k}", w.i), vec![(td, 1.0), (y, -reach_d)], Sense::Ge, 0.0);
            }
        }
        let arcs: Vec<_> = self.g.arcs().collect();
        for k in 0..self.k {
            for &(i, j) in &arcs {
                let reach = self.cost(0, i) + self.service(i) + self.cost(i, j);
                let expr = vec![(self.node_var(&self.t, k, j), 1.0), (self.x(k, i, j), -reach)];
                self.row(format!("vi16_{i}_{j}_{k}"), expr, Sense::Ge, 0.0);
            }
        }
    }

    /// In-degree equals out-degree at every intermediate node. The printed
    /// rows also cover the start and end nodes, where they would contradict
    /// the start row.
    fn conservation_rows(&mut self) {
        for k in 0..self.k {
            for i in 1..self.g.end() {
                let mut expr = self.out_x(k, i, 1.0);
                expr.extend(self.in_x(k, i, -1.0));
                self.row(format!("cons22_{i}_{k}"), expr, Sense::Eq, 0.0);
            }
        }
    }

    fn duration_rows(&mut self) {
        for k in 0..self.k {
            let expr = self.all_x(k, |i, j| self.cost(i, j) + self.service(i));
            self.row(format!("dur24_{k}"), expr, Sense::Le, self.big_l());
        }
    }

    fn flow_rows(&mut self) {
        let (n, end) = (self.n(), self.g.end());
        for k in 0..self.k {
            let expr = self.out_f(k, 0, 1.0);
            self.row(format!("fstart25_{k}"), expr, Sense::Eq, 0.0);
            let mut expr = self.in_f(k, end, 1.0);
            expr.extend(self.all_x(k, |_, _| -1.0));
            self.row(format!("fend26_{k}"), expr, Sense::Eq, -1.0);
        }
        for k in 0..self.k {
            for i in 1..end {
                let mut expr = self.out_f(k, i, 1.0);
                expr.extend(self.in_f(k, i, -1.0));
                expr.extend(self.in_x(k, i, -1.0));
                self.row(format!("load27_{i}_{k}"), expr, Sense::Ge, 0.0);
            }
        }
        // Arcs into n+1 may carry a load of n when every node is visited.
        let arcs: Vec<_> = self.g.arcs().collect();
        for k in 0..self.k {
            for &(i, j) in &arcs {
                let cap = if j == end { n } else { n - 1.0 };
                self.row(format!("cap28_{i}_{j}_{k}"), vec![(self.f(k, i, j), 1.0), (self.x(k, i, j), -cap)], Sense::Le, 0.0);
            }
        }
        for k in 0..self.k {
            for w in self.wells.clone() {
                // sum_j (f_pj - f_ij + x_ij) <= (n - 1)(1 - sum_j x_ij)
                let mut expr = self.out_f(k, w.p, 1.0);
                expr.extend(self.out_f(k, w.i, -1.0));
                expr.extend(self.out_x(k, w.i, n));
                self.row(format!("prec29_{}_{k}", w.i), expr, Sense::Le, n - 1.0);
                let mut expr = self.out_f(k, w.p, 1.0);
                expr.extend(self.out_x(k, w.i, -1.0));
                self.row(format!("prec30_{}_{k}", w.i), expr, Sense::Ge, 0.0);
                let mut expr = self.out_f(k, w.d, 1.0);
                expr.extend(self.out_f(k, w.i, -1.0));
                expr.extend(self.out_x(k, w.i, -1.0));
                self.row(format!("prec31_{}_{k}", w.i), expr, Sense::Ge, 0.0);
            }
        }
    }

    fn pairing_rows(&mut self) {
        for k in 0..self.k {
            for w in self.wells.clone() {
                let mut expr = self.in_x(k, w.p, 1.0);
                expr.extend(self.out_x(k, w.d, 1.0));
                expr.extend(self.in_x(k, w.i, -2.0));
                self.row(format!("pair32_{}_{k}", w.i), expr, Sense::Ge, 0.0);
            }
        }
    }

    fn flow_valid_inequalities(&mut self) {
        let n = self.n();
        for k in 0..self.k {
            for w in self.wells.clone() {
                let mut expr = self.out_f(k, w.d, 1.0);
                expr.extend(self.out_f(k, w.p, -1.0));
                for l in self.siblings(w) {
                    expr.extend(self.out_x(k, l, -1.0));
                }
                self.row(format!("vi33_{}_{k}", w.i), expr, Sense::Ge, 0.0);
            }
        }
        let end = self.g.end();
        for k in 0..self.k {
            for i in 1..end {
                for j in (1..end).filter(|&j| j != i) {
                    let mut expr = self.in_f(k, i, 1.0);
                    expr.extend(self.in_f(k, j, -1.0));
                    expr.push((self.x(k, i, j), n));
                    expr.push((self.x(k, j, i), n - 2.0));
                    self.row(format!("vi34_{i}_{j}_{k}"), expr, Sense::Le, n - 1.0);
                }
            }
        }
    }

    fn load_rows(&mut self, vacuous_pickup_load: bool) {
        let (n, end) = (self.n(), self.g.end());
        for k in 0..self.k {
            let u0 = self.node_var(&self.u, k, 0);
            self.row(format!("ustart41_{k}"), vec![(u0, 1.0)], Sense::Eq, 0.0);
            let mut expr = vec![(self.node_var(&self.u, k, end), 1.0)];
            expr.extend(self.all_x(k, |_, _| -1.0));
            self.row(format!("uend42_{k}"), expr, Sense::Eq, 0.0);
        }
        let arcs: Vec<_> = self.g.arcs().collect();
        for k in 0..self.k {
            for &(i, j) in &arcs {
                let expr = vec![(self.node_var(&self.u, k, i), 1.0), (self.node_var(&self.u, k, j), -1.0), (self.x(k, i, j), n)];
                self.row(format!("mtz43_{i}_{j}_{k}"), expr, Sense::Le, n - 1.0);
            }
        }
        // The end node has no outgoing arcs; its load is fixed by uend42.
        for k in 0..self.k {
            for i in 0..end {
                let mut expr = vec![(self.node_var(&self.u, k, i), 1.0)];
                expr.extend(self.out_x(k, i, -n));
                self.row(format!("cap44_{i}_{k}"), expr, Sense::Le, 0.0);
            }
        }
        for k in 0..self.k {
            for w in self.wells.clone() {
                let (u, up, ud) = (self.node_var(&self.u, k, w.i), self.node_var(&self.u, k, w.p), self.node_var(&self.u, k, w.d));
                let mut expr = vec![(up, 1.0), (u, -1.0)];
                expr.extend(self.out_x(k, w.i, n + 1.0));
                self.row(format!("prec45_{}_{k}", w.i), expr, Sense::Le, n);
                let mut expr = vec![(up, 1.0)];
                if !vacuous_pickup_load {
                    expr.extend(self.out_x(k, w.i, -1.0));
                }
                self.row(format!("prec46_{}_{k}", w.i), expr, Sense::Ge, 0.0);
                let mut expr = vec![(ud, 1.0), (u, -1.0)];
                expr.extend(self.out_x(k, w.i, -1.0));
                self.row(format!("prec47_{}_{k}", w.i), expr, Sense::Ge, 0.0);
            }
        }
    }

    fn load_valid_inequalities(&mut self) {
        let n = self.n();
        for k in 0..self.k {
            for w in self.wells.clone() {
                let mut expr = vec![(self.node_var(&self.u, k, w.d), 1.0), (self.node_var(&self.u, k, w.p), -1.0)];
                for l in self.siblings(w) {
                    expr.extend(self.out_x(k, l, -1.0));
                }
                self.row(format!("vi49_{}_{k}", w.i), expr, Sense::Ge, 0.0);
            }
        }
        let end = self.g.end();
        for k in 0..self.k {
            for i in 1..end {
                for j in (1..end).filter(|&j| j != i) {
                    let expr =
                        vec![(self.node_var(&self.u, k, i), 1.0), (self.node_var(&self.u, k, j), -1.0), (self.x(k, i, j), n), (self.x(k, j, i), n - 2.0)];
                    self.row(format!("vi50_{i}_{j}_{k}"), expr, Sense::Le, n - 1.0);
                }
            }
        }
    }
}
