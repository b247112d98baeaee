//! Time-, flow- and node-based MILP formulations over the expanded node set
//! `0, demand nodes, p_c, d_c, n+1`, plus encoders, an assignment checker
//! and LP/MPS file support.
//!
//! Names use model node indices: `x_i_j_k`, `y_i_k`, `t_i_k`, `f_i_j_k`,
//! `u_i_k`, with vehicles counted from 0. Rows are named `<family>_<indices>`
//! where the family names the constraint group, e.g. `prec12_5_0`.

mod build;
mod encode;
mod file;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::instance::Instance;

pub use build::{build, build_flow_based, build_node_based, build_time_based, BuildOptions};
pub use encode::{encode_routes, encode_solution};
pub use file::{format_lp, format_mps, parse_lp, parse_mps, parse_values, read_model, read_values, write_model, FileFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formulation {
    TimeBased,
    FlowBased,
    NodeBased,
}

impl Formulation {
    pub const ALL: [Formulation; 3] = [Formulation::TimeBased, Formulation::FlowBased, Formulation::NodeBased];

    pub fn label(self) -> &'static str {
        match self {
            Formulation::TimeBased => "time-based",
            Formulation::FlowBased => "flow-based",
            Formulation::NodeBased => "node-based",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.label() == label || f.label().split('-').next() == Some(label))
    }

    /// Row families that encode the pickup, well, delivery order.
    pub fn precedence_families(self) -> &'static [&'static str] {
        match self {
            Formulation::TimeBased => &["prec12", "prec13"],
            Formulation::FlowBased => &["prec29", "prec30", "prec31"],
            Formulation::NodeBased => &["prec45", "prec46", "prec47"],
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Role of a node in the expanded model graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelNode {
    Start,
    Demand(usize),
    Pickup(usize),
    Delivery(usize),
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.integer && self.lower == 0.0 && self.upper == 1.0
    }
}

/// Sparse linear expression over variable indices.
pub type LinExpr = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn family(&self) -> &str {
        self.name.split('_').next().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub name: String,
    pub formulation: Formulation,
    pub with_vi: bool,
    pub variables: Vec<Variable>,
    pub objective: LinExpr,
    pub rows: Vec<Row>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("assignment has no value for variable {0}")]
    MissingVariable(String),
    #[error("solution is infeasible: {0}")]
    InfeasibleSolution(String),
    #[error("variable {0} is declared twice")]
    DuplicateVariable(String),
    #[error("row {row} references undeclared variable {var}")]
    UnknownVariable { row: String, var: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Assignment = BTreeMap<String, f64>;

/// Row residuals this far beyond the bound count as violations.
pub const CHECK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreachKind {
    Row,
    Bound,
    Integrality,
}

/// A row, bound or integrality requirement the assignment breaks. For
/// bounds `lhs` is the value and `rhs` the broken bound; `slack` is
/// negative by the amount of the breach.
#[derive(Debug, Clone, PartialEq)]
pub struct RowViolation {
    pub kind: BreachKind,
    pub name: String,
    pub lhs: f64,
    pub sense: Sense,
    pub rhs: f64,
    pub slack: f64,
}

impl LpModel {
    pub fn new(name: impl Into<String>, formulation: Formulation, with_vi: bool) -> Self {
        Self { name: name.into(), formulation, with_vi, variables: Vec::new(), objective: Vec::new(), rows: Vec::new(), index: HashMap::new() }
    }

    pub fn add_variable(&mut self, name: String, lower: f64, upper: f64, integer: bool) -> Result<usize, MilpError> {
        if self.index.contains_key(&name) {
            return Err(MilpError::DuplicateVariable(name));
        }
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable { name, lower, upper, integer });
        Ok(id)
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn add_row(&mut self, name: String, expr: LinExpr, sense: Sense, rhs: f64) {
        self.rows.push(Row { name, expr: merge_terms(expr), sense, rhs });
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Number of rows in each family.
    pub fn family_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for row in &self.rows {
            *counts.entry(row.family().to_string()).or_insert(0) += 1;
        }
        counts
    }

    pub fn objective_value(&self, a: &Assignment) -> Result<f64, MilpError> {
        self.eval(&self.objective, a)
    }

    fn eval(&self, expr: &LinExpr, a: &Assignment) -> Result<f64, MilpError> {
        expr.iter()
            .map(|&(v, coef)| {
                let name = &self.variables[v].name;
                a.get(name).map(|x| coef * x).ok_or_else(|| MilpError::MissingVariable(name.clone()))
            })
            .sum()
    }

    /// Every row, bound and integrality requirement the assignment breaks.
    pub fn check(&self, a: &Assignment) -> Result<Vec<RowViolation>, MilpError> {
        let mut out = Vec::new();
        for var in &self.variables {
            let value = *a.get(&var.name).ok_or_else(|| MilpError::MissingVariable(var.name.clone()))?;
            let bound = |sense, rhs: f64, slack| RowViolation { kind: BreachKind::Bound, name: var.name.clone(), lhs: value, sense, rhs, slack };
            if value < var.lower - CHECK_TOLERANCE {
                out.push(bound(Sense::Ge, var.lower, value - var.lower));
            }
            if value > var.upper + CHECK_TOLERANCE {
                out.push(bound(Sense::Le, var.upper, var.upper - value));
            }
            if var.integer && (value - value.round()).abs() > CHECK_TOLERANCE {
                out.push(RowViolation {
                    kind: BreachKind::Integrality,
                    name: var.name.clone(),
                    lhs: value,
                    sense: Sense::Eq,
                    rhs: value.round(),
                    slack: -(value - value.round()).abs(),
                });
            }
        }
        for row in &self.rows {
            let lhs = self.eval(&row.expr, a)?;
            let slack = match row.sense {
                Sense::Le => row.rhs - lhs,
                Sense::Ge => lhs - row.rhs,
                Sense::Eq => -(lhs - row.rhs).abs(),
            };
            if slack < -CHECK_TOLERANCE {
                out.push(RowViolation { kind: BreachKind::Row, name: row.name.clone(), lhs, sense: row.sense, rhs: row.rhs, slack });
            }
        }
        Ok(out)
    }

    /// Consistency of the name index with the variable list, and of rows
    /// with declared variables.
    pub fn audit(&self) -> Result<(), MilpError> {
        let mut seen = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if seen.insert(v.name.as_str(), i).is_some() {
                return Err(MilpError::DuplicateVariable(v.name.clone()));
            }
        }
        for row in &self.rows {
            if let Some(&(v, _)) = row.expr.iter().find(|&&(v, _)| v >= self.variables.len()) {
                return Err(MilpError::UnknownVariable { row: row.name.clone(), var: format!("#{v}") });
            }
        }
        Ok(())
    }
}

/// Violations of `assignment` against `model`.
pub fn check_assignment(model: &LpModel, assignment: &Assignment) -> Result<Vec<RowViolation>, MilpError> {
    model.check(assignment)
}

/// Sums duplicate variables and drops zero coefficients, keeping first
/// appearance order.
fn merge_terms(expr: LinExpr) -> LinExpr {
    let mut out: LinExpr = Vec::with_capacity(expr.len());
    let mut at: HashMap<usize, usize> = HashMap::new();
    for (v, c) in expr {
        match at.get(&v) {
            Some(&i) => out[i].1 += c,
            None => {
                at.insert(v, out.len());
                out.push((v, c));
            }
        }
    }
    out.retain(|&(_, c)| c != 0.0);
    out
}

/// Expanded node set of an instance.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    pub nodes: Vec<ModelNode>,
    pickup: BTreeMap<usize, usize>,
    delivery: BTreeMap<usize, usize>,
    demand: BTreeMap<usize, usize>,
}

impl ModelGraph {
    pub fn new(inst: &Instance) -> Self {
        let mut nodes = vec![ModelNode::Start];
        nodes.extend(inst.demand_nodes().iter().map(|&d| ModelNode::Demand(d)));
        nodes.extend(inst.key_centers().iter().map(|&c| ModelNode::Pickup(c)));
        nodes.extend(inst.key_centers().iter().map(|&c| ModelNode::Delivery(c)));
        nodes.push(ModelNode::End);
        let mut g = Self { nodes, pickup: BTreeMap::new(), delivery: BTreeMap::new(), demand: BTreeMap::new() };
        for (i, n) in g.nodes.iter().enumerate() {
            match *n {
                ModelNode::Demand(d) => g.demand.insert(d, i),
                ModelNode::Pickup(c) => g.pickup.insert(c, i),
                ModelNode::Delivery(c) => g.delivery.insert(c, i),
                _ => None,
            };
        }
        g
    }

    /// |Ṽ|
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn end(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of intermediate nodes, the `n` of the load bounds.
    pub fn n(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn demand_index(&self, node: usize) -> Option<usize> {
        self.demand.get(&node).copied()
    }

    pub fn pickup_index(&self, center: usize) -> Option<usize> {
        self.pickup.get(&center).copied()
    }

    pub fn delivery_index(&self, center: usize) -> Option<usize> {
        self.delivery.get(&center).copied()
    }

    pub fn location(&self, inst: &Instance, i: usize) -> usize {
        match self.nodes[i] {
            ModelNode::Start | ModelNode::End => inst.depot(),
            ModelNode::Demand(d) => d,
            ModelNode::Pickup(c) | ModelNode::Delivery(c) => c,
        }
    }

    pub fn service(&self, inst: &Instance, i: usize) -> f64 {
        match self.nodes[i] {
            ModelNode::Start | ModelNode::End => 0.0,
            _ => inst.service(self.location(inst, i)),
        }
    }

    pub fn cost(&self, inst: &Instance, i: usize, j: usize) -> f64 {
        inst.c(self.location(inst, i), self.location(inst, j))
    }

    /// Arcs `(i, j)` with `i != n+1`, `j != 0` and `i != j`.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let end = self.end();
        (0..end).flat_map(move |i| (1..=end).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    pub fn arc_count(&self) -> usize {
        let n = self.nodes.len();
        (n - 1) * (n - 1) - (n - 2)
    }

    pub fn label(&self, i: usize) -> String {
        match self.nodes[i] {
            ModelNode::Start => "depot start".into(),
            ModelNode::End => "depot end".into(),
            ModelNode::Demand(d) => format!("demand node {d}"),
            ModelNode::Pickup(c) => format!("key pickup at center {c}"),
            ModelNode::Delivery(c) => format!("key delivery at center {c}"),
        }
    }
}
