//! Physical network description: nodes, key centers, travel times, fleet and
//! the route duration cap.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the service-augmented triangle inequality. Rounding each
/// leg to two decimals moves it by at most 0.005.
pub const TRIANGLE_TOLERANCE: f64 = 0.015;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Depot,
    TypeI,
    TypeII,
    KeyCenter,
}

impl NodeKind {
    pub fn is_demand(self) -> bool {
        matches!(self, NodeKind::TypeI | NodeKind::TypeII)
    }

    pub(crate) fn tag(self) -> &'static str {
        match self {
            NodeKind::Depot => "DEPOT",
            NodeKind::TypeI => "TYPE1",
            NodeKind::TypeII => "TYPE2",
            NodeKind::KeyCenter => "KEY",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalNode {
    pub id: usize,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
    pub service_time: f64,
}

/// How travel times are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TravelSource {
    /// Euclidean distance rounded half away from zero to two decimals.
    RoundedEuclidean,
    /// Row-major square matrix over the physical nodes.
    Explicit(Vec<Vec<f64>>),
}

/// A location a vehicle can travel to or from. Key aliases resolve to the
/// coordinates of their center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Node(usize),
    Pickup(usize),
    Delivery(usize),
}

impl Site {
    pub fn location(self) -> usize {
        match self {
            Site::Node(i) | Site::Pickup(i) | Site::Delivery(i) => i,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("instance has {0} depot nodes, expected exactly one")]
    DepotCount(usize),
    #[error("node ids must be 0..{expected} in order, found {found} at position {position}")]
    NodeIdOrder { position: usize, found: usize, expected: usize },
    #[error("node {0} has a non-finite coordinate")]
    NonFiniteCoordinate(usize),
    #[error("node {node} has invalid service time {value}")]
    InvalidServiceTime { node: usize, value: f64 },
    #[error("type-II node {0} has no key center")]
    MissingKeyCenter(usize),
    #[error("node {node} references {center} as key center, which is not a key center")]
    NotAKeyCenter { node: usize, center: usize },
    #[error("key assignment given for node {0}, which is not type II")]
    UnexpectedKeyAssignment(usize),
    #[error("fleet size must be at least 1")]
    NoVehicles,
    #[error("maximum duration must be positive and finite, got {0}")]
    InvalidMaxDuration(f64),
    #[error("travel matrix must be {expected}x{expected}")]
    MatrixShape { expected: usize },
    #[error("travel matrix entry ({i},{j}) = {value} is invalid")]
    MatrixEntry { i: usize, j: usize, value: f64 },
    #[error("travel matrix is not symmetric at ({i},{j})")]
    Asymmetric { i: usize, j: usize },
    #[error("triangle inequality c[{i}][{j}] <= c[{i}][{k}] + v[{k}] + c[{k}][{j}] violated by {excess}")]
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
    #[error("unknown node id {0}")]
    UnknownNode(usize),
}

/// Round half away from zero to two decimal places.
pub fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}

pub fn rounded_euclidean(a: (f64, f64), b: (f64, f64)) -> f64 {
    round2(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
}

/// Immutable problem instance. Construct through [`Instance::new`], which
/// checks every structural invariant and precomputes the travel matrix.
#[derive(Debug, Clone)]
pub struct Instance {
    name: String,
    nodes: Vec<PhysicalNode>,
    key_of: BTreeMap<usize, usize>,
    num_vehicles: usize,
    max_duration: f64,
    travel: TravelSource,
    matrix: Vec<f64>,
    depot: usize,
    demand: Vec<usize>,
    wells: Vec<usize>,
    centers: Vec<usize>,
    center_of: Vec<Option<usize>>,
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<PhysicalNode>,
        key_of: BTreeMap<usize, usize>,
        num_vehicles: usize,
        max_duration: f64,
        travel: TravelSource,
    ) -> Result<Self, InstanceError> {
        let count = nodes.len();
        for (position, node) in nodes.iter().enumerate() {
            if node.id != position {
                return Err(InstanceError::NodeIdOrder { position, found: node.id, expected: count });
            }
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(InstanceError::NonFiniteCoordinate(node.id));
            }
            if !node.service_time.is_finite() || node.service_time < 0.0 {
                return Err(InstanceError::InvalidServiceTime { node: node.id, value: node.service_time });
            }
        }
        let depots: Vec<usize> = nodes.iter().filter(|n| n.kind == NodeKind::Depot).map(|n| n.id).collect();
        if depots.len() != 1 {
            return Err(InstanceError::DepotCount(depots.len()));
        }
        let depot = depots[0];
        if nodes[depot].service_time != 0.0 {
            return Err(InstanceError::InvalidServiceTime { node: depot, value: nodes[depot].service_time });
        }
        let mut center_of = vec![None; count];
        for node in &nodes {
            if node.kind == NodeKind::TypeII {
                let center = *key_of.get(&node.id).ok_or(InstanceError::MissingKeyCenter(node.id))?;
                if center >= count || nodes[center].kind != NodeKind::KeyCenter {
                    return Err(InstanceError::NotAKeyCenter { node: node.id, center });
                }
                center_of[node.id] = Some(center);
            }
        }
        for &node in key_of.keys() {
            if node >= count || nodes[node].kind != NodeKind::TypeII {
                return Err(InstanceError::UnexpectedKeyAssignment(node));
            }
        }
        if num_vehicles == 0 {
            return Err(InstanceError::NoVehicles);
        }
        if !(max_duration.is_finite() && max_duration > 0.0) {
            return Err(InstanceError::InvalidMaxDuration(max_duration));
        }

        let mut matrix = vec![0.0; count * count];
        match &travel {
            TravelSource::RoundedEuclidean => {
                for i in 0..count {
                    for j in 0..count {
                        if i != j {
                            matrix[i * count + j] = rounded_euclidean((nodes[i].x, nodes[i].y), (nodes[j].x, nodes[j].y));
                        }
                    }
                }
            }
            TravelSource::Explicit(rows) => {
                if rows.len() != count || rows.iter().any(|r| r.len() != count) {
                    return Err(InstanceError::MatrixShape { expected: count });
                }
                for (i, row) in rows.iter().enumerate() {
                    for (j, &value) in row.iter().enumerate() {
                        if !value.is_finite() || value < 0.0 || (i == j && value != 0.0) {
                            return Err(InstanceError::MatrixEntry { i, j, value });
                        }
                        matrix[i * count + j] = value;
                    }
                }
            }
        }
        for i in 0..count {
            for j in (i + 1)..count {
                if matrix[i * count + j] != matrix[j * count + i] {
                    return Err(InstanceError::Asymmetric { i, j });
                }
            }
        }
        for k in 0..count {
            let vk = nodes[k].service_time;
            for i in 0..count {
                let cik = matrix[i * count + k];
                for j in 0..count {
                    let excess = matrix[i * count + j] - (cik + vk + matrix[k * count + j]);
                    if excess > TRIANGLE_TOLERANCE {
                        return Err(InstanceError::Triangle { i, j, k, excess });
                    }
                }
            }
        }

        let pick = |kinds: &[NodeKind]| -> Vec<usize> { nodes.iter().filter(|n| kinds.contains(&n.kind)).map(|n| n.id).collect() };
        let demand = pick(&[NodeKind::TypeI, NodeKind::TypeII]);
        let wells = pick(&[NodeKind::TypeII]);
        let centers = pick(&[NodeKind::KeyCenter]);

        Ok(Self { name: name.into(), nodes, key_of, num_vehicles, max_duration, travel, matrix, depot, demand, wells, centers, center_of })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[PhysicalNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn key_of(&self) -> &BTreeMap<usize, usize> {
        &self.key_of
    }

    pub fn num_vehicles(&self) -> usize {
        self.num_vehicles
    }

    pub fn max_duration(&self) -> f64 {
        self.max_duration
    }

    pub fn travel_source(&self) -> &TravelSource {
        &self.travel
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    /// Type-I and type-II nodes in id order.
    pub fn demand_nodes(&self) -> &[usize] {
        &self.demand
    }

    pub fn wells(&self) -> &[usize] {
        &self.wells
    }

    pub fn key_centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.nodes[node].kind
    }

    pub fn service(&self, node: usize) -> f64 {
        self.nodes[node].service_time
    }

    /// Key center of a well; `None` for every other node.
    pub fn center_of(&self, node: usize) -> Option<usize> {
        self.center_of.get(node).copied().flatten()
    }

    /// Travel time between two physical nodes. Panics on out-of-range ids.
    #[inline]
    pub fn c(&self, from: usize, to: usize) -> f64 {
        self.matrix[from * self.nodes.len() + to]
    }

    /// Checked travel time between two sites. Aliases of the same center are
    /// co-located, so the hop between them costs nothing.
    pub fn travel_time(&self, from: Site, to: Site) -> Result<f64, InstanceError> {
        let count = self.nodes.len();
        for site in [from, to] {
            let loc = site.location();
            if loc >= count {
                return Err(InstanceError::UnknownNode(loc));
            }
            if matches!(site, Site::Pickup(_) | Site::Delivery(_)) && self.nodes[loc].kind != NodeKind::KeyCenter {
                return Err(InstanceError::UnknownNode(loc));
            }
        }
        Ok(self.c(from.location(), to.location()))
    }

    /// Number of type-II nodes per key center, indexed by node id.
    pub fn wells_per_center(&self) -> Vec<usize> {
        let mut counts = vec![0; self.nodes.len()];
        for &w in &self.wells {
            if let Some(c) = self.center_of[w] {
                counts[c] += 1;
            }
        }
        counts
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} demand, {} wells, {} centers, K={}, L={:.2})",
            self.name,
            self.demand.len(),
            self.wells.len(),
            self.centers.len(),
            self.num_vehicles,
            self.max_duration
        )
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn node(id: usize, kind: NodeKind, x: f64, y: f64, v: f64) -> PhysicalNode {
        PhysicalNode { id, kind, x, y, service_time: v }
    }

    /// depot (0,0), center (5,0), well (10,0), all service 0.
    pub fn line_instance() -> Instance {
        let nodes = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0), node(1, NodeKind::KeyCenter, 5.0, 0.0, 0.0), node(2, NodeKind::TypeII, 10.0, 0.0, 0.0)];
        Instance::new("line", nodes, BTreeMap::from([(2, 1)]), 1, 100.0, TravelSource::RoundedEuclidean).unwrap()
    }

    #[test]
    fn rounded_distances() {
        assert_eq!(rounded_euclidean((0.0, 0.0), (3.0, 4.0)), 5.00);
        assert_eq!(rounded_euclidean((0.0, 0.0), (1.0, 1.0)), 1.41);
        assert_eq!(round2(0.125), 0.13);
        assert_eq!(round2(-0.125), -0.13);
    }

    #[test]
    fn aliases_are_co_located() {
        let inst = line_instance();
        assert_eq!(inst.travel_time(Site::Pickup(1), Site::Delivery(1)).unwrap(), 0.0);
        assert_eq!(inst.travel_time(Site::Node(0), Site::Pickup(1)).unwrap(), 5.0);
        assert_eq!(inst.travel_time(Site::Node(0), Site::Node(7)), Err(InstanceError::UnknownNode(7)));
        assert_eq!(inst.travel_time(Site::Pickup(2), Site::Node(0)), Err(InstanceError::UnknownNode(2)));
    }

    #[test]
    fn rejects_bad_structure() {
        let nodes = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0), node(1, NodeKind::TypeII, 1.0, 0.0, 5.0)];
        let err = Instance::new("x", nodes.clone(), BTreeMap::new(), 1, 10.0, TravelSource::RoundedEuclidean);
        assert_eq!(err.unwrap_err(), InstanceError::MissingKeyCenter(1));
        let err = Instance::new("x", nodes, BTreeMap::from([(1, 0)]), 1, 10.0, TravelSource::RoundedEuclidean);
        assert_eq!(err.unwrap_err(), InstanceError::NotAKeyCenter { node: 1, center: 0 });

        let two_depots = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0), node(1, NodeKind::Depot, 1.0, 0.0, 0.0)];
        let err = Instance::new("x", two_depots, BTreeMap::new(), 1, 10.0, TravelSource::RoundedEuclidean);
        assert_eq!(err.unwrap_err(), InstanceError::DepotCount(2));

        let ok = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0), node(1, NodeKind::TypeI, 1.0, 0.0, 5.0)];
        let err = Instance::new("x", ok.clone(), BTreeMap::new(), 0, 10.0, TravelSource::RoundedEuclidean);
        assert_eq!(err.unwrap_err(), InstanceError::NoVehicles);
        let err = Instance::new("x", ok, BTreeMap::new(), 1, 0.0, TravelSource::RoundedEuclidean);
        assert_eq!(err.unwrap_err(), InstanceError::InvalidMaxDuration(0.0));
    }

    #[test]
    fn explicit_matrix_checks() {
        let nodes = vec![node(0, NodeKind::Depot, 0.0, 0.0, 0.0), node(1, NodeKind::TypeI, 0.0, 0.0, 0.0), node(2, NodeKind::TypeI, 0.0, 0.0, 0.0)];
        let asym = vec![vec![0.0, 1.0, 1.0], vec![2.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let err = Instance::new("x", nodes.clone(), BTreeMap::new(), 1, 10.0, TravelSource::Explicit(asym));
        assert_eq!(err.unwrap_err(), InstanceError::Asymmetric { i: 0, j: 1 });

        let bad_triangle = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        let err = Instance::new("x", nodes.clone(), BTreeMap::new(), 1, 10.0, TravelSource::Explicit(bad_triangle));
        assert!(matches!(err.unwrap_err(), InstanceError::Triangle { .. }));

        let good = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let inst = Instance::new("x", nodes, BTreeMap::new(), 1, 10.0, TravelSource::Explicit(good)).unwrap();
        assert_eq!(inst.c(0, 2), 2.0);
    }
}
